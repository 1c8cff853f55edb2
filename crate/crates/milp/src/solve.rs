//! Branch-and-bound over the dual simplex relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use log::debug;

use crate::error::ConfigError;
use crate::lp::{Basis, DualSimplex, LpOptions, LpStatus, SparseMatrix};
use crate::model::{MilpModel, Sense, VarId};
use crate::presolve::{presolve, Presolved, Reduced};

/// Rule for picking the branching column among fractional integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchRule {
    /// Fractional part closest to 0.5; ties go to the lowest column id.
    MostFractional,
    /// Lowest fractional column id.
    FirstFractional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative optimality gap at which search stops.
    pub rel_gap: f64,
    pub int_tol: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: usize,
    pub branching: BranchRule,
    /// Record the relaxation bound and bound changes of every node.
    pub record_nodes: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_gap: 1e-4,
            int_tol: 1e-6,
            time_limit: None,
            node_limit: 1_000_000,
            branching: BranchRule::MostFractional,
            record_nodes: false,
        }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        Self {
            rel_gap: 1e-9,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.rel_gap >= 0.0) {
            return Err(ConfigError::NegativeGap(self.rel_gap));
        }
        if !(self.int_tol > 0.0) {
            return Err(ConfigError::NonPositiveTolerance("int_tol"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// A node or time limit stopped search with an incumbent in hand.
    FeasibleGap,
    Infeasible,
    /// A limit stopped search before any incumbent was found.
    TimeLimit,
}

/// One explored node, recorded when [`SolverConfig::record_nodes`] is set.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    /// Relaxation objective in model units, `None` if the node LP was infeasible.
    pub relaxation: Option<f64>,
    /// Tightened bounds `(var, lower, upper)` relative to the root.
    pub bounds: Vec<(usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Objective in model units; NaN without an incumbent.
    pub objective: f64,
    /// Value per variable id; empty without an incumbent.
    pub values: Vec<f64>,
    /// Best proven bound in model units.
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub elapsed: Duration,
    pub node_log: Vec<NodeRecord>,
}

impl MilpSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, var: crate::model::VarId) -> f64 {
        self.values[var.0]
    }
}

struct Node {
    /// Parent relaxation objective, minimization form.
    bound: f64,
    depth: usize,
    id: usize,
    changes: Vec<(usize, f64, f64)>,
    basis: Rc<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then deeper, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

/// Nodes between diving runs.
const DIVE_INTERVAL: usize = 32;

fn gap_of(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    let diff = (incumbent - bound).max(0.0);
    if diff <= 1e-9 {
        0.0
    } else {
        diff / incumbent.abs().max(1e-10)
    }
}

/// Builds the dual simplex for a presolved model; costs are in
/// minimization form.
fn build_lp(reduced: &Reduced) -> DualSimplex {
    let cost = reduced.cost.clone();
    let n = reduced.lower.len();
    let m = reduced.rows.len();
    let entries: Vec<Vec<(usize, f64)>> = reduced.rows.iter().map(|r| r.2.clone()).collect();
    let a = SparseMatrix::from_rows(m, n, &entries);
    let mut lower = reduced.lower.clone();
    let mut upper = reduced.upper.clone();
    for (lo, hi, _) in &reduced.rows {
        lower.push(-hi);
        upper.push(-lo);
    }
    DualSimplex::new(a, cost, lower, upper, LpOptions::default())
}

struct Search<'a> {
    model: &'a MilpModel,
    reduced: &'a Reduced,
    cfg: &'a SolverConfig,
    lp: DualSimplex,
    integral: Vec<bool>,
    root_lower: Vec<f64>,
    root_upper: Vec<f64>,
    incumbent: Option<Vec<f64>>,
    /// Incumbent objective, minimization form.
    incumbent_obj: f64,
    started: Instant,
    applied: Vec<usize>,
}

enum NodeOutcome {
    Infeasible,
    Pruned,
    Integral,
    Branch(usize),
    Unsolved,
}

impl<'a> Search<'a> {
    fn sign(&self) -> f64 {
        match self.model.sense() {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        }
    }

    /// LP objective in minimization form, including the presolve offset.
    fn lp_objective(&self) -> f64 {
        self.lp.objective() + self.reduced.offset
    }

    /// Current LP point over all model columns.
    fn lp_point(&self) -> Vec<f64> {
        let mut x = self.lp.values().to_vec();
        self.reduced.postsolve(&mut x);
        x
    }

    fn apply(&mut self, changes: &[(usize, f64, f64)]) {
        for &j in &self.applied {
            self.lp
                .set_bounds(j, self.root_lower[j], self.root_upper[j]);
        }
        self.applied.clear();
        for &(j, lo, up) in changes {
            self.lp.set_bounds(j, lo, up);
            self.applied.push(j);
        }
    }

    fn fractional(&self, x: &[f64]) -> Option<usize> {
        let mut pick = None;
        let mut best = (i32::MIN, -1.0);
        for (j, &v) in x.iter().enumerate() {
            if !self.integral[j] {
                continue;
            }
            let f = v - v.floor();
            let dist = f.min(1.0 - f);
            if dist <= self.cfg.int_tol {
                continue;
            }
            let class = self.model.priority(VarId(j));
            if class < best.0 {
                continue;
            }
            let better = match self.cfg.branching {
                BranchRule::FirstFractional => class > best.0,
                BranchRule::MostFractional => class > best.0 || dist > best.1 + 1e-12,
            };
            if better {
                best = (class, dist);
                pick = Some(j);
            }
        }
        pick
    }

    fn prune_threshold(&self) -> f64 {
        if self.incumbent.is_none() {
            return f64::INFINITY;
        }
        let inc = self.incumbent_obj;
        inc - (self.cfg.rel_gap * inc.abs()).max(1e-9)
    }

    /// Evaluates the LP at the current bounds.
    fn evaluate(&mut self) -> (NodeOutcome, f64) {
        match self.lp.solve() {
            LpStatus::Infeasible => return (NodeOutcome::Infeasible, f64::INFINITY),
            LpStatus::IterationLimit => return (NodeOutcome::Unsolved, f64::NEG_INFINITY),
            LpStatus::Optimal => {}
        }
        let obj = self.lp_objective();
        if obj >= self.prune_threshold() {
            return (NodeOutcome::Pruned, obj);
        }
        match self.fractional(self.lp.values()) {
            Some(j) => (NodeOutcome::Branch(j), obj),
            None => {
                let x = self.lp_point();
                self.offer(x);
                (NodeOutcome::Integral, obj)
            }
        }
    }

    /// Polishes an integral relaxation point into an incumbent candidate
    /// by fixing the integers and re-solving for the continuous columns.
    fn offer(&mut self, x: Vec<f64>) {
        let mut candidate = x;
        for j in 0..candidate.len() {
            if self.integral[j] {
                candidate[j] = candidate[j].round();
            }
        }
        let obj = self.sign() * self.model.objective_value(&candidate);
        let viol = self.model.max_violation(&candidate);
        let candidate = if viol > 1e-6 {
            match self.repolish(&candidate) {
                Some(c) => c,
                None => return,
            }
        } else {
            candidate
        };
        let obj = if viol > 1e-6 {
            self.sign() * self.model.objective_value(&candidate)
        } else {
            obj
        };
        if obj < self.incumbent_obj {
            debug!("incumbent {:.6}", self.sign() * obj);
            self.incumbent_obj = obj;
            self.incumbent = Some(candidate);
        }
    }

    fn repolish(&mut self, rounded: &[f64]) -> Option<Vec<f64>> {
        let basis = self.lp.basis();
        let saved: Vec<(usize, f64, f64)> = (0..rounded.len())
            .filter(|&j| self.integral[j])
            .map(|j| (j, self.lp.lower(j), self.lp.upper(j)))
            .collect();
        for &(j, _, _) in &saved {
            self.lp.set_bounds(j, rounded[j], rounded[j]);
        }
        let status = self.lp.solve();
        let out = (status == LpStatus::Optimal).then(|| {
            let mut v = self.lp.values().to_vec();
            for &(j, _, _) in &saved {
                v[j] = rounded[j];
            }
            self.reduced.postsolve(&mut v);
            v
        });
        for &(j, lo, up) in &saved {
            self.lp.set_bounds(j, lo, up);
        }
        self.lp.load_basis(&basis);
        out.filter(|v| self.model.max_violation(v) <= 1e-6)
    }

    /// Fractional diving from the current LP point.
    fn dive(&mut self, base: &[(usize, f64, f64)], max_depth: usize) {
        let basis = self.lp.basis();
        for _ in 0..max_depth {
            if self.time_up() {
                break;
            }
            let x = self.lp.values();
            // least fractional column rounds first
            let mut pick: Option<(usize, f64, f64)> = None;
            let mut best = f64::INFINITY;
            for (j, &v) in x.iter().enumerate() {
                if !self.integral[j] {
                    continue;
                }
                let f = v - v.floor();
                let dist = f.min(1.0 - f);
                if dist <= self.cfg.int_tol {
                    continue;
                }
                if dist < best {
                    best = dist;
                    pick = Some((j, v.round(), v));
                }
            }
            let Some((j, target, value)) = pick else {
                let x = self.lp_point();
                self.offer(x);
                break;
            };
            let (lo, up) = (self.lp.lower(j), self.lp.upper(j));
            self.applied.push(j);
            self.lp.set_bounds(j, target, target);
            match self.lp.solve() {
                LpStatus::Optimal if self.lp_objective() < self.prune_threshold() => continue,
                LpStatus::Optimal => break,
                _ => {
                    // the other side once
                    let alt = if target >= value {
                        target - 1.0
                    } else {
                        target + 1.0
                    };
                    if alt < lo || alt > up {
                        break;
                    }
                    self.lp.set_bounds(j, alt, alt);
                    if self.lp.solve() != LpStatus::Optimal
                        || self.lp_objective() >= self.prune_threshold()
                    {
                        break;
                    }
                }
            }
        }
        self.apply(base);
        self.lp.load_basis(&basis);
    }

    fn time_up(&self) -> bool {
        self.cfg
            .time_limit
            .is_some_and(|t| self.started.elapsed() >= t)
    }
}

/// Solves `model` to the configured gap.
pub fn solve(model: &MilpModel, cfg: &SolverConfig) -> MilpSolution {
    let started = Instant::now();
    let sign = match model.sense() {
        Sense::Maximize => -1.0,
        Sense::Minimize => 1.0,
    };
    let infeasible = |nodes, iters, log| MilpSolution {
        status: SolveStatus::Infeasible,
        objective: f64::NAN,
        values: Vec::new(),
        best_bound: f64::NAN,
        gap: f64::INFINITY,
        nodes,
        lp_iterations: iters,
        elapsed: started.elapsed(),
        node_log: log,
    };

    let cost: Vec<f64> = model.vars().iter().map(|v| sign * v.obj).collect();
    let (reduced, pre) = presolve(model, cost);
    if pre == Presolved::Infeasible {
        return infeasible(0, 0, Vec::new());
    }
    let lp = build_lp(&reduced);
    let mut search = Search {
        model,
        reduced: &reduced,
        cfg,
        root_lower: reduced.lower.clone(),
        root_upper: reduced.upper.clone(),
        integral: reduced.integral.clone(),
        lp,
        incumbent: None,
        incumbent_obj: f64::INFINITY,
        started,
        applied: Vec::new(),
    };

    let mut heap = BinaryHeap::new();
    let mut node_log = Vec::new();
    let mut next_id = 1usize;
    let mut nodes = 0usize;
    let mut limit_hit = false;
    let mut unsolved = false;
    // best bound among nodes dropped without a final LP answer
    let mut lost_bound = f64::INFINITY;

    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        id: 0,
        changes: Vec::new(),
        basis: Rc::new(search.lp.basis()),
    });

    while let Some(node) = heap.pop() {
        if node.bound >= search.prune_threshold() {
            // within the gap of the incumbent: closed, but still bounds the optimum
            lost_bound = lost_bound.min(node.bound);
            continue;
        }
        if nodes >= cfg.node_limit || search.time_up() {
            lost_bound = lost_bound.min(node.bound);
            limit_hit = true;
            break;
        }
        nodes += 1;
        if nodes % 500 == 0 {
            debug!(
                "{nodes} nodes, {} open, incumbent {:.6}, bound {:.6}, depth {}",
                heap.len(),
                sign * search.incumbent_obj,
                sign * node.bound.min(lost_bound),
                node.depth
            );
        }
        search.apply(&node.changes);
        search.lp.load_basis(&node.basis);
        let (outcome, obj) = search.evaluate();
        if cfg.record_nodes {
            node_log.push(NodeRecord {
                relaxation: match outcome {
                    NodeOutcome::Infeasible | NodeOutcome::Unsolved => None,
                    _ => Some(sign * obj),
                },
                bounds: node.changes.clone(),
            });
        }
        match outcome {
            NodeOutcome::Infeasible | NodeOutcome::Integral => {}
            NodeOutcome::Pruned => lost_bound = lost_bound.min(obj),
            NodeOutcome::Unsolved => {
                unsolved = true;
                lost_bound = lost_bound.min(node.bound);
            }
            NodeOutcome::Branch(j) => {
                if nodes == 1 || nodes % DIVE_INTERVAL == 0 {
                    search.dive(&node.changes, 4 * model.num_integer_vars().max(1));
                    search.apply(&node.changes);
                    search.lp.load_basis(&node.basis);
                    if search.lp.solve() != LpStatus::Optimal {
                        continue;
                    }
                    if obj >= search.prune_threshold() {
                        lost_bound = lost_bound.min(obj);
                        continue;
                    }
                }
                let v = search.lp.values()[j];
                let basis = Rc::new(search.lp.basis());
                let (lo, up) = (search.lp.lower(j), search.lp.upper(j));
                let mut down = node.changes.clone();
                down.retain(|c| c.0 != j);
                let mut upc = down.clone();
                down.push((j, lo, v.floor()));
                upc.push((j, v.ceil(), up));
                for changes in [upc, down] {
                    heap.push(Node {
                        bound: obj,
                        depth: node.depth + 1,
                        id: next_id,
                        changes,
                        basis: Rc::clone(&basis),
                    });
                    next_id += 1;
                }
            }
        }
        if search.incumbent.is_some() {
            let open = heap
                .peek()
                .map_or(f64::INFINITY, |n| n.bound)
                .min(lost_bound);
            if gap_of(search.incumbent_obj, open) <= cfg.rel_gap && !heap.is_empty() {
                // remaining nodes cannot improve beyond the gap
                lost_bound = lost_bound.min(open);
                heap.clear();
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(lost_bound, f64::min);
    let iterations = search.lp.iterations;
    match search.incumbent {
        None if !limit_hit && !unsolved => infeasible(nodes, iterations, node_log),
        None => MilpSolution {
            status: SolveStatus::TimeLimit,
            objective: f64::NAN,
            values: Vec::new(),
            best_bound: sign * open_bound,
            gap: f64::INFINITY,
            nodes,
            lp_iterations: iterations,
            elapsed: started.elapsed(),
            node_log,
        },
        Some(values) => {
            let objective = model.objective_value(&values);
            let bound = open_bound.min(search.incumbent_obj);
            let gap = gap_of(search.incumbent_obj, bound);
            let status = if limit_hit || unsolved {
                if gap <= cfg.rel_gap {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::FeasibleGap
                }
            } else {
                SolveStatus::Optimal
            };
            MilpSolution {
                status,
                objective,
                values,
                best_bound: sign * bound,
                gap,
                nodes,
                lp_iterations: iterations,
                elapsed: started.elapsed(),
                node_log,
            }
        }
    }
}

/// Solves the root relaxation (after bound tightening) only.
pub fn solve_relaxation(model: &MilpModel) -> Option<(f64, Vec<f64>)> {
    let sign = match model.sense() {
        Sense::Maximize => -1.0,
        Sense::Minimize => 1.0,
    };
    let cost: Vec<f64> = model.vars().iter().map(|v| sign * v.obj).collect();
    let (reduced, pre) = presolve(model, cost);
    if pre == Presolved::Infeasible {
        return None;
    }
    let mut lp = build_lp(&reduced);
    match lp.solve() {
        LpStatus::Optimal => {
            let mut x = lp.values().to_vec();
            reduced.postsolve(&mut x);
            Some((model.objective_value(&x), x))
        }
        _ => None,
    }
}
