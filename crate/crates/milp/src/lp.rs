//! Bounded-variable revised dual simplex.
//!
//! The LP is held in computational form
//!
//! ```text
//! minimize  c'x   subject to   A x + s = 0,   l <= (x, s) <= u
//! ```
//!
//! with one logical `s_i = -a_i x` per row, so the all-logical basis is the
//! identity. The basis inverse is kept in product form (a file of eta
//! columns) and rebuilt from scratch every few dozen pivots.
//!
//! Every column must carry at least one finite bound on the side its cost
//! pushes it towards; boxed columns keep the start dual feasible by placing
//! each nonbasic column on the bound its reduced cost prefers.

use log::trace;

const PIVOT_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-12;
/// Relative size of the dual-phase cost perturbation.
const PERTURBATION: f64 = 1e-6;
/// Substitute bound for columns that are free on the side their cost prefers.
pub(crate) const ARTIFICIAL_BOUND: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ColStatus {
    Basic,
    Lower,
    Upper,
}

/// Basis snapshot used for warm starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub(crate) status: Vec<ColStatus>,
}

/// Column-and-row compressed constraint matrix.
#[derive(Debug, Clone)]
pub(crate) struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub col_start: Vec<usize>,
    pub col_index: Vec<usize>,
    pub col_value: Vec<f64>,
    pub row_start: Vec<usize>,
    pub row_index: Vec<usize>,
    pub row_value: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from row-wise triplets `(row, col, value)`; duplicates must
    /// already be merged.
    pub fn from_rows(rows: usize, cols: usize, entries: &[Vec<(usize, f64)>]) -> Self {
        debug_assert_eq!(entries.len(), rows);
        let mut row_start = Vec::with_capacity(rows + 1);
        let mut row_index = Vec::new();
        let mut row_value = Vec::new();
        let mut col_count = vec![0usize; cols];
        row_start.push(0);
        for row in entries {
            for &(j, v) in row {
                row_index.push(j);
                row_value.push(v);
                col_count[j] += 1;
            }
            row_start.push(row_index.len());
        }
        let mut col_start = vec![0usize; cols + 1];
        for j in 0..cols {
            col_start[j + 1] = col_start[j] + col_count[j];
        }
        let mut fill = col_start.clone();
        let mut col_index = vec![0usize; row_index.len()];
        let mut col_value = vec![0.0; row_index.len()];
        for (i, row) in entries.iter().enumerate() {
            for &(j, v) in row {
                col_index[fill[j]] = i;
                col_value[fill[j]] = v;
                fill[j] += 1;
            }
        }
        Self {
            rows,
            cols,
            col_start,
            col_index,
            col_value,
            row_start,
            row_index,
            row_value,
        }
    }

    fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_start[j]..self.col_start[j + 1];
        self.col_index[r.clone()]
            .iter()
            .copied()
            .zip(self.col_value[r].iter().copied())
    }

    fn col_nnz(&self, j: usize) -> usize {
        self.col_start[j + 1] - self.col_start[j]
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LpOptions {
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub max_iterations: usize,
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_threshold: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            primal_tol: 1e-7,
            dual_tol: 1e-7,
            max_iterations: 200_000,
            refactor_interval: 64,
            stall_threshold: 300,
        }
    }
}

#[derive(Debug, Default, Clone)]
struct EtaFile {
    pos: Vec<usize>,
    pivot: Vec<f64>,
    start: Vec<usize>,
    index: Vec<usize>,
    value: Vec<f64>,
}

impl EtaFile {
    fn clear(&mut self) {
        self.pos.clear();
        self.pivot.clear();
        self.start.clear();
        self.start.push(0);
        self.index.clear();
        self.value.clear();
    }

    /// Appends the eta column for pivoting dense column `w` at position `p`.
    fn push(&mut self, p: usize, w: &[f64]) {
        self.pos.push(p);
        self.pivot.push(w[p]);
        for (i, &wi) in w.iter().enumerate() {
            if i != p && wi.abs() > ZERO_TOL {
                self.index.push(i);
                self.value.push(wi);
            }
        }
        self.start.push(self.index.len());
    }

    /// Like [`EtaFile::push`] for a vector whose nonzeros are all in `nz`.
    fn push_sparse(&mut self, p: usize, w: &[f64], nz: &[usize]) {
        self.pos.push(p);
        self.pivot.push(w[p]);
        for &i in nz {
            let wi = w[i];
            if i != p && wi.abs() > ZERO_TOL {
                self.index.push(i);
                self.value.push(wi);
            }
        }
        self.start.push(self.index.len());
    }

    /// FTRAN that records newly created nonzeros in `nz`/`mark`.
    fn ftran_sparse(&self, v: &mut [f64], nz: &mut Vec<usize>, mark: &mut [bool]) {
        for e in 0..self.pos.len() {
            let p = self.pos[e];
            let vp = v[p];
            if vp == 0.0 {
                continue;
            }
            let vp = vp / self.pivot[e];
            v[p] = vp;
            for k in self.start[e]..self.start[e + 1] {
                let i = self.index[k];
                v[i] -= self.value[k] * vp;
                if !mark[i] {
                    mark[i] = true;
                    nz.push(i);
                }
            }
        }
    }

    fn ftran(&self, v: &mut [f64]) {
        for e in 0..self.pos.len() {
            let p = self.pos[e];
            let vp = v[p];
            if vp == 0.0 {
                continue;
            }
            let vp = vp / self.pivot[e];
            v[p] = vp;
            for k in self.start[e]..self.start[e + 1] {
                v[self.index[k]] -= self.value[k] * vp;
            }
        }
    }

    fn btran(&self, v: &mut [f64]) {
        for e in (0..self.pos.len()).rev() {
            let p = self.pos[e];
            let mut acc = v[p];
            for k in self.start[e]..self.start[e + 1] {
                acc -= self.value[k] * v[self.index[k]];
            }
            v[p] = acc / self.pivot[e];
        }
    }
}

/// Dual simplex over a fixed matrix with mutable column bounds.
#[derive(Debug, Clone)]
pub(crate) struct DualSimplex {
    a: SparseMatrix,
    n: usize,
    m: usize,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    opts: LpOptions,

    status: Vec<ColStatus>,
    head: Vec<usize>,
    x: Vec<f64>,
    d: Vec<f64>,
    etas: EtaFile,
    pivots_since_invert: usize,
    /// The eta file represents the current basis.
    factored: bool,
    /// Primal and dual values match the current basis, bounds and costs.
    fresh: bool,
    pub iterations: usize,
    /// Cost perturbation active during the dual phase.
    shift: Vec<f64>,

    // scratch
    rho: Vec<f64>,
    alpha: Vec<f64>,
    alpha_touched: Vec<usize>,
    alpha_mark: Vec<bool>,
    work: Vec<f64>,
}

impl DualSimplex {
    /// `lower`/`upper` cover the `n` structural columns followed by the `m`
    /// logical columns.
    pub fn new(
        a: SparseMatrix,
        cost: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        opts: LpOptions,
    ) -> Self {
        let n = a.cols;
        let m = a.rows;
        assert_eq!(cost.len(), n);
        assert_eq!(lower.len(), n + m);
        assert_eq!(upper.len(), n + m);
        let mut lp = Self {
            a,
            n,
            m,
            cost,
            lower,
            upper,
            opts,
            status: vec![ColStatus::Lower; n + m],
            head: (n..n + m).collect(),
            x: vec![0.0; n + m],
            d: vec![0.0; n + m],
            etas: EtaFile::default(),
            pivots_since_invert: 0,
            factored: false,
            fresh: false,
            iterations: 0,
            shift: vec![0.0; n + m],
            rho: vec![0.0; m],
            alpha: vec![0.0; n + m],
            alpha_touched: Vec::new(),
            alpha_mark: vec![false; n + m],
            work: vec![0.0; m],
        };
        lp.slack_basis();
        lp
    }

    fn cost_of(&self, j: usize) -> f64 {
        let c = if j < self.n { self.cost[j] } else { 0.0 };
        c + self.shift[j]
    }

    /// Shifts the costs of nonbasic columns towards the side their bound
    /// already satisfies, breaking the dual ties that stall the dual phase.
    fn perturb(&mut self) {
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        for j in 0..self.n + self.m {
            // xorshift keeps the perturbation deterministic
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            let c = if j < self.n { self.cost[j] } else { 0.0 };
            let size = PERTURBATION * (1.0 + c.abs()) * (0.5 + u);
            self.shift[j] = match self.status[j] {
                _ if self.lower[j] == self.upper[j] => 0.0,
                ColStatus::Basic => 0.0,
                ColStatus::Lower => size,
                ColStatus::Upper => -size,
            };
        }
        self.fresh = false;
    }

    /// All-logical basis with structurals on the bound their cost prefers.
    pub fn slack_basis(&mut self) {
        for j in 0..self.n {
            self.status[j] = self.preferred_bound(j, self.cost[j]);
        }
        for i in 0..self.m {
            self.status[self.n + i] = ColStatus::Basic;
        }
        self.factored = false;
        self.fresh = false;
    }

    fn preferred_bound(&self, j: usize, dj: f64) -> ColStatus {
        let lo = self.lower[j];
        let up = self.upper[j];
        if dj < 0.0 {
            if up.is_finite() {
                ColStatus::Upper
            } else {
                ColStatus::Lower
            }
        } else if lo.is_finite() || !up.is_finite() {
            ColStatus::Lower
        } else {
            ColStatus::Upper
        }
    }

    pub fn basis(&self) -> Basis {
        Basis {
            status: self.status.clone(),
        }
    }

    pub fn load_basis(&mut self, basis: &Basis) {
        debug_assert_eq!(basis.status.len(), self.n + self.m);
        let same_basic = self
            .status
            .iter()
            .zip(&basis.status)
            .all(|(a, b)| (*a == ColStatus::Basic) == (*b == ColStatus::Basic));
        if !same_basic {
            self.factored = false;
        }
        self.status.clone_from(&basis.status);
        self.fresh = false;
    }

    pub fn lower(&self, j: usize) -> f64 {
        self.lower[j]
    }

    pub fn upper(&self, j: usize) -> f64 {
        self.upper[j]
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, up: f64) {
        self.lower[j] = lo;
        self.upper[j] = up;
        self.fresh = false;
    }

    /// Values of the structural columns.
    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            ColStatus::Upper => {
                if self.upper[j].is_finite() {
                    self.upper[j]
                } else {
                    ARTIFICIAL_BOUND
                }
            }
            _ => {
                if self.lower[j].is_finite() {
                    self.lower[j]
                } else if self.upper[j].is_finite() {
                    self.upper[j]
                } else {
                    0.0
                }
            }
        }
    }

    fn column_into(&self, j: usize, v: &mut [f64]) {
        v.iter_mut().for_each(|x| *x = 0.0);
        if j < self.n {
            for (i, a) in self.a.col(j) {
                v[i] = a;
            }
        } else {
            v[j - self.n] = 1.0;
        }
    }

    /// Rebuilds the product-form inverse from the current basic set.
    /// Returns the number of columns replaced by logicals because the
    /// basis was singular.
    fn invert(&mut self) -> usize {
        self.etas.clear();
        let mut structurals: Vec<usize> = (0..self.n)
            .filter(|&j| self.status[j] == ColStatus::Basic)
            .collect();
        let logical_basic: Vec<bool> = (0..self.m)
            .map(|i| self.status[self.n + i] == ColStatus::Basic)
            .collect();
        let mut free_pos: Vec<bool> = logical_basic.iter().map(|&b| !b).collect();
        structurals.sort_by_key(|&j| (self.a.col_nnz(j), j));

        let mut head = vec![usize::MAX; self.m];
        for i in 0..self.m {
            if logical_basic[i] {
                head[i] = self.n + i;
            }
        }
        let mut w = std::mem::take(&mut self.work);
        w.iter_mut().for_each(|v| *v = 0.0);
        let mut nz: Vec<usize> = Vec::new();
        let mut mark = vec![false; self.m];
        let mut repaired = 0;
        for &j in &structurals {
            for k in self.a.col_start[j]..self.a.col_start[j + 1] {
                let i = self.a.col_index[k];
                w[i] = self.a.col_value[k];
                if !mark[i] {
                    mark[i] = true;
                    nz.push(i);
                }
            }
            self.etas.ftran_sparse(&mut w, &mut nz, &mut mark);
            let mut best = None;
            let mut best_abs = PIVOT_TOL * 10.0;
            for &p in &nz {
                if free_pos[p]
                    && (w[p].abs() > best_abs
                        || (w[p].abs() == best_abs && best.is_some_and(|b| p < b)))
                {
                    best_abs = w[p].abs();
                    best = Some(p);
                }
            }
            if let Some(p) = best {
                self.etas.push_sparse(p, &w, &nz);
            }
            for &i in &nz {
                w[i] = 0.0;
                mark[i] = false;
            }
            nz.clear();
            match best {
                Some(p) => {
                    free_pos[p] = false;
                    head[p] = j;
                }
                None => {
                    // singular: drop the column to its nearest bound
                    let x = self.x[j];
                    self.status[j] = if self.upper[j].is_finite()
                        && (x - self.upper[j]).abs() < (x - self.lower[j]).abs()
                    {
                        ColStatus::Upper
                    } else {
                        ColStatus::Lower
                    };
                    repaired += 1;
                }
            }
        }
        self.work = w;
        for p in 0..self.m {
            if head[p] == usize::MAX {
                head[p] = self.n + p;
                self.status[self.n + p] = ColStatus::Basic;
            }
        }
        self.head = head;
        self.pivots_since_invert = 0;
        self.factored = true;
        if repaired > 0 {
            trace!("basis repair replaced {repaired} columns");
        }
        repaired
    }

    fn compute_primal(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.status[j] == ColStatus::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for (i, a) in self.a.col(j) {
                    rhs[i] -= a * v;
                }
            } else {
                rhs[j - self.n] -= v;
            }
        }
        self.etas.ftran(&mut rhs);
        for p in 0..self.m {
            self.x[self.head[p]] = rhs[p];
        }
    }

    fn compute_dual(&mut self) {
        let mut y: Vec<f64> = self.head.iter().map(|&j| self.cost_of(j)).collect();
        self.etas.btran(&mut y);
        for j in 0..self.n {
            if self.status[j] == ColStatus::Basic {
                self.d[j] = 0.0;
                continue;
            }
            let mut dj = self.cost_of(j);
            for (i, a) in self.a.col(j) {
                dj -= y[i] * a;
            }
            self.d[j] = dj;
        }
        for i in 0..self.m {
            let j = self.n + i;
            self.d[j] = if self.status[j] == ColStatus::Basic {
                0.0
            } else {
                self.shift[j] - y[i]
            };
        }
    }

    /// Moves nonbasic boxed columns to the bound their reduced cost prefers.
    /// Returns false if a column with a wrong-signed reduced cost cannot move.
    fn restore_dual_feasibility(&mut self) -> bool {
        let tol = self.opts.dual_tol;
        let mut ok = true;
        for j in 0..self.n + self.m {
            match self.status[j] {
                ColStatus::Basic => {}
                ColStatus::Lower => {
                    if self.d[j] < -tol && self.lower[j] != self.upper[j] {
                        if self.upper[j].is_finite() {
                            self.status[j] = ColStatus::Upper;
                        } else {
                            ok = false;
                        }
                    }
                }
                ColStatus::Upper => {
                    if self.d[j] > tol && self.lower[j] != self.upper[j] {
                        if self.lower[j].is_finite() {
                            self.status[j] = ColStatus::Lower;
                        } else {
                            ok = false;
                        }
                    }
                }
            }
        }
        ok
    }

    /// Refactors, then recomputes duals and primals.
    fn refresh(&mut self) {
        self.invert();
        self.recompute();
    }

    /// Recomputes duals and primals, refactoring only if the basis changed.
    fn prepare(&mut self) {
        if !self.factored {
            self.invert();
        }
        self.recompute();
    }

    fn recompute(&mut self) {
        self.compute_dual();
        if !self.restore_dual_feasibility() {
            trace!("dual infeasible column with one-sided bound");
        }
        self.compute_primal();
        self.fresh = true;
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let x = self.x[j];
        let tol = self.opts.primal_tol;
        let lo = self.lower[j];
        let up = self.upper[j];
        if x < lo - tol * (1.0 + lo.abs() * 1e-3) {
            lo - x
        } else if x > up + tol * (1.0 + up.abs() * 1e-3) {
            x - up
        } else {
            0.0
        }
    }

    fn pivot_row(&mut self, r: usize) {
        self.rho.iter_mut().for_each(|v| *v = 0.0);
        self.rho[r] = 1.0;
        self.etas.btran(&mut self.rho);
        for &j in &self.alpha_touched {
            self.alpha[j] = 0.0;
            self.alpha_mark[j] = false;
        }
        self.alpha_touched.clear();
        for i in 0..self.m {
            let ri = self.rho[i];
            if ri.abs() <= ZERO_TOL {
                continue;
            }
            let lj = self.n + i;
            if self.status[lj] != ColStatus::Basic {
                self.alpha[lj] = ri;
                self.alpha_mark[lj] = true;
                self.alpha_touched.push(lj);
            }
            for k in self.a.row_start[i]..self.a.row_start[i + 1] {
                let j = self.a.row_index[k];
                if self.status[j] == ColStatus::Basic {
                    continue;
                }
                if !self.alpha_mark[j] {
                    self.alpha_mark[j] = true;
                    self.alpha_touched.push(j);
                }
                self.alpha[j] += ri * self.a.row_value[k];
            }
        }
    }

    /// Solves from the current basis: dual simplex on perturbed costs, then
    /// primal simplex on the true costs to remove the perturbation.
    pub fn solve(&mut self) -> LpStatus {
        self.perturb();
        let status = self.dual_phase();
        self.shift.iter_mut().for_each(|s| *s = 0.0);
        if status != LpStatus::Optimal {
            return status;
        }
        for _ in 0..8 {
            if self.pivots_since_invert > 0 || !self.factored {
                self.invert();
            }
            self.compute_dual();
            self.compute_primal();
            self.fresh = true;
            if (0..self.m).any(|p| self.infeasibility(self.head[p]) > 0.0) {
                self.restore_dual_feasibility();
                self.compute_primal();
                match self.dual_phase() {
                    LpStatus::Optimal => continue,
                    other => return other,
                }
            }
            match self.primal_phase() {
                Some(status) => return status,
                None => continue,
            }
        }
        LpStatus::IterationLimit
    }

    /// Primal simplex from a primal feasible basis. `None` means feasibility
    /// was lost numerically and the caller should refactor and retry.
    fn primal_phase(&mut self) -> Option<LpStatus> {
        let tol = self.opts.dual_tol;
        let mut w = vec![0.0; self.m];
        let start_iterations = self.iterations;
        loop {
            if self.iterations - start_iterations >= self.opts.max_iterations {
                return Some(LpStatus::IterationLimit);
            }
            if self.pivots_since_invert >= self.opts.refactor_interval {
                self.invert();
                self.compute_dual();
                self.compute_primal();
                if (0..self.m).any(|p| self.infeasibility(self.head[p]) > 0.0) {
                    return None;
                }
            }
            // Dantzig pricing
            let mut q = None;
            let mut best = tol;
            for j in 0..self.n + self.m {
                let dj = self.d[j];
                let gain = match self.status[j] {
                    ColStatus::Basic => continue,
                    _ if self.lower[j] == self.upper[j] => continue,
                    ColStatus::Lower if self.lower[j].is_finite() => -dj,
                    ColStatus::Upper if self.upper[j].is_finite() => dj,
                    // free column resting at zero or an artificial bound
                    _ => dj.abs(),
                };
                if gain > best {
                    best = gain;
                    q = Some(j);
                }
            }
            let Some(q) = q else {
                return Some(LpStatus::Optimal);
            };
            let dir = if self.d[q] < 0.0 { 1.0 } else { -1.0 };
            self.column_into(q, &mut w);
            self.etas.ftran(&mut w);

            // ratio test; x_B moves by -dir * t * w
            let mut step = self.upper[q] - self.lower[q];
            let mut r = None;
            let mut r_abs = 0.0;
            for p in 0..self.m {
                let wp = w[p];
                if wp.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.head[p];
                let delta = -dir * wp;
                let room = if delta < 0.0 {
                    if !self.lower[j].is_finite() {
                        continue;
                    }
                    (self.x[j] - self.lower[j]).max(0.0) / -delta
                } else {
                    if !self.upper[j].is_finite() {
                        continue;
                    }
                    (self.upper[j] - self.x[j]).max(0.0) / delta
                };
                if room < step - 1e-12 || (room <= step + 1e-12 && r.is_some() && wp.abs() > r_abs)
                {
                    step = room;
                    r = Some(p);
                    r_abs = wp.abs();
                }
            }
            if !step.is_finite() {
                trace!("primal phase: unbounded ray");
                return Some(LpStatus::IterationLimit);
            }
            for p in 0..self.m {
                if w[p] != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= dir * step * w[p];
                }
            }
            self.x[q] += dir * step;
            let Some(r) = r else {
                // bound flip
                self.status[q] = if dir > 0.0 {
                    ColStatus::Upper
                } else {
                    ColStatus::Lower
                };
                self.x[q] = self.nonbasic_value(q);
                self.iterations += 1;
                continue;
            };
            let leaving = self.head[r];
            self.pivot_row(r);
            let alpha_q = self.alpha[q];
            if (alpha_q - w[r]).abs() > 1e-7 * (1.0 + w[r].abs()) {
                return None;
            }
            let theta = self.d[q] / alpha_q;
            for &j in &self.alpha_touched {
                self.d[j] -= theta * self.alpha[j];
            }
            self.d[q] = 0.0;
            self.d[leaving] = -theta;
            let to_lower = -dir * w[r] < 0.0;
            self.status[leaving] = if to_lower {
                ColStatus::Lower
            } else {
                ColStatus::Upper
            };
            self.x[leaving] = if to_lower {
                self.lower[leaving]
            } else {
                self.upper[leaving]
            };
            self.status[q] = ColStatus::Basic;
            self.head[r] = q;
            self.etas.push(r, &w);
            self.pivots_since_invert += 1;
            self.iterations += 1;
        }
    }

    fn dual_phase(&mut self) -> LpStatus {
        if !self.fresh {
            self.prepare();
        }
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut wcol = vec![0.0; self.m];
        let start_iterations = self.iterations;
        loop {
            if self.iterations - start_iterations >= self.opts.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.pivots_since_invert >= self.opts.refactor_interval {
                self.refresh();
            }

            // leaving row
            let mut r = None;
            let mut best = 0.0;
            for p in 0..self.m {
                let j = self.head[p];
                let inf = self.infeasibility(j);
                if inf <= 0.0 {
                    continue;
                }
                if bland {
                    if r.map_or(true, |rp: usize| j < self.head[rp]) {
                        r = Some(p);
                    }
                } else if inf > best {
                    best = inf;
                    r = Some(p);
                }
            }
            let Some(r) = r else {
                // confirm on a fresh factorization before declaring optimality
                if self.pivots_since_invert > 0 {
                    self.refresh();
                    if (0..self.m).any(|p| self.infeasibility(self.head[p]) > 0.0) {
                        continue;
                    }
                }
                return LpStatus::Optimal;
            };
            let leaving = self.head[r];
            let to_lower = self.x[leaving] < self.lower[leaving];

            self.pivot_row(r);

            // ratio test over eligible nonbasic columns
            let tol = self.opts.dual_tol;
            let eligible = |lp: &Self, j: usize| -> Option<f64> {
                let a = lp.alpha[j];
                if a.abs() <= PIVOT_TOL || lp.lower[j] == lp.upper[j] {
                    return None;
                }
                // direction in which column j may move
                let at_lower = lp.status[j] == ColStatus::Lower;
                let ok = if to_lower {
                    (at_lower && a < 0.0) || (!at_lower && a > 0.0)
                } else {
                    (at_lower && a > 0.0) || (!at_lower && a < 0.0)
                };
                ok.then_some(a)
            };
            let mut q = None;
            if bland {
                let mut best_ratio = f64::INFINITY;
                for &j in &self.alpha_touched {
                    if let Some(a) = eligible(self, j) {
                        let ratio = self.d[j].abs() / a.abs();
                        if ratio < best_ratio - 1e-12
                            || (ratio <= best_ratio + 1e-12 && q.map_or(true, |qq| j < qq))
                        {
                            if ratio < best_ratio {
                                best_ratio = ratio;
                            }
                            q = Some(j);
                        }
                    }
                }
            } else {
                // Harris two-pass
                let mut bound = f64::INFINITY;
                for &j in &self.alpha_touched {
                    if let Some(a) = eligible(self, j) {
                        let ratio = (self.d[j].abs() + tol) / a.abs();
                        if ratio < bound {
                            bound = ratio;
                        }
                    }
                }
                let mut best_abs = 0.0;
                for &j in &self.alpha_touched {
                    if let Some(a) = eligible(self, j) {
                        let ratio = self.d[j].abs() / a.abs();
                        if ratio <= bound
                            && (a.abs() > best_abs
                                || (a.abs() == best_abs && q.map_or(true, |qq| j < qq)))
                        {
                            best_abs = a.abs();
                            q = Some(j);
                        }
                    }
                }
            }
            let Some(q) = q else {
                if self.pivots_since_invert > 0 {
                    self.refresh();
                    continue;
                }
                return LpStatus::Infeasible;
            };
            let alpha_q = self.alpha[q];

            self.column_into(q, &mut wcol);
            self.etas.ftran(&mut wcol);
            let wr = wcol[r];
            if (wr - alpha_q).abs() > 1e-7 * (1.0 + wr.abs()) || wr.abs() <= PIVOT_TOL {
                if self.pivots_since_invert > 0 {
                    self.refresh();
                    continue;
                }
                if wr.abs() <= PIVOT_TOL {
                    return LpStatus::Infeasible;
                }
            }

            // dual update; clamp slight wrong-signed reduced costs left by Harris
            let theta_d = self.d[q] / wr;
            for &j in &self.alpha_touched {
                self.d[j] -= theta_d * self.alpha[j];
                let dj = self.d[j];
                match self.status[j] {
                    ColStatus::Lower if dj < 0.0 && self.lower[j] != self.upper[j] => {
                        self.d[j] = 0.0
                    }
                    ColStatus::Upper if dj > 0.0 && self.lower[j] != self.upper[j] => {
                        self.d[j] = 0.0
                    }
                    _ => {}
                }
            }
            self.d[q] = 0.0;
            self.d[leaving] = -theta_d;

            if theta_d.abs() <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > self.opts.stall_threshold && !bland {
                    trace!("switching to Bland's rule after {degenerate_run} degenerate pivots");
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }

            // primal update
            let target = if to_lower {
                self.lower[leaving]
            } else {
                self.upper[leaving]
            };
            let theta_p = (self.x[leaving] - target) / wr;
            for p in 0..self.m {
                let wp = wcol[p];
                if wp != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= theta_p * wp;
                }
            }
            self.x[q] += theta_p;
            self.x[leaving] = target;

            self.status[leaving] = if to_lower {
                ColStatus::Lower
            } else {
                ColStatus::Upper
            };
            self.status[q] = ColStatus::Basic;
            self.head[r] = q;
            self.etas.push(r, &wcol);
            self.pivots_since_invert += 1;
            self.iterations += 1;
        }
    }
}
