//! Reductions ahead of the LP.
//!
//! Free continuous columns defined by a single equality row are substituted
//! into the objective, singleton rows become column bounds, integral bounds
//! are rounded inward and row activities tighten column bounds for a few
//! rounds. Columns keep their indices (substituted ones are pinned at zero
//! in the LP and recovered by [`Reduced::postsolve`]); only rows that became
//! redundant are dropped.

use crate::model::{MilpModel, Relation};

const FEAS_TOL: f64 = 1e-9;
const MAX_ROUNDS: usize = 6;

#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integral: Vec<bool>,
    /// Active rows as `(lo, hi, terms)`.
    pub rows: Vec<(f64, f64, Vec<(usize, f64)>)>,
    /// Minimization costs after substitution.
    pub cost: Vec<f64>,
    /// Constant the substitutions moved out of the objective.
    pub offset: f64,
    /// `(column, coefficient, rhs, other terms)` of each substituted column.
    substituted: Vec<(usize, f64, f64, Vec<(usize, f64)>)>,
}

impl Reduced {
    /// Fills substituted columns of an LP point from their defining rows.
    pub fn postsolve(&self, x: &mut [f64]) {
        for (j, a, rhs, terms) in self.substituted.iter().rev() {
            let rest: f64 = terms.iter().map(|&(k, c)| c * x[k]).sum();
            x[*j] = (rhs - rest) / a;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Presolved {
    Ok,
    Infeasible,
}

fn round_integral(lo: f64, hi: f64) -> (f64, f64) {
    let lo = if lo.is_finite() {
        (lo - 1e-6).ceil()
    } else {
        lo
    };
    let hi = if hi.is_finite() {
        (hi + 1e-6).floor()
    } else {
        hi
    };
    (lo, hi)
}

/// `cost` is the objective in minimization form.
pub(crate) fn presolve(model: &MilpModel, mut cost: Vec<f64>) -> (Reduced, Presolved) {
    let n = model.num_vars();
    let mut lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
    let integral: Vec<bool> = model.vars().iter().map(|v| v.kind.is_integral()).collect();
    for j in 0..n {
        if integral[j] {
            let (l, u) = round_integral(lower[j], upper[j]);
            lower[j] = l;
            upper[j] = u;
        }
    }

    let mut rows: Vec<(f64, f64, Vec<(usize, f64)>)> = model
        .constraints()
        .iter()
        .map(|c| {
            let (lo, hi) = match c.relation {
                Relation::Le => (f64::NEG_INFINITY, c.rhs),
                Relation::Ge => (c.rhs, f64::INFINITY),
                Relation::Eq => (c.rhs, c.rhs),
            };
            (
                lo,
                hi,
                c.expr.terms().iter().map(|&(v, a)| (v.0, a)).collect(),
            )
        })
        .collect();

    let mut active = vec![true; rows.len()];
    let mut offset = 0.0;
    let mut substituted = Vec::new();
    {
        let mut uses = vec![0usize; n];
        for (_, _, terms) in &rows {
            for &(j, _) in terms {
                uses[j] += 1;
            }
        }
        let free: Vec<bool> = (0..n)
            .map(|j| !integral[j] && lower[j] == f64::NEG_INFINITY && upper[j] == f64::INFINITY)
            .collect();
        for (r, (lo, hi, terms)) in rows.iter().enumerate() {
            if lo != hi || !lo.is_finite() {
                continue;
            }
            let mut frees = terms.iter().filter(|&&(j, _)| free[j]);
            let (Some(&(j, a)), None) = (frees.next(), frees.next()) else {
                continue;
            };
            if uses[j] != 1 || a.abs() < 1e-9 {
                continue;
            }
            // c_j x_j = (c_j / a)(rhs - sum of the rest)
            let cj = cost[j];
            let rest: Vec<(usize, f64)> = terms.iter().copied().filter(|&(k, _)| k != j).collect();
            for &(k, c) in &rest {
                cost[k] -= cj * c / a;
            }
            offset += cj * lo / a;
            cost[j] = 0.0;
            lower[j] = 0.0;
            upper[j] = 0.0;
            active[r] = false;
            substituted.push((j, a, *lo, rest));
        }
    }

    let mut status = Presolved::Ok;
    'rounds: for _ in 0..MAX_ROUNDS {
        let mut changed = false;
        for (r, (lo, hi, terms)) in rows.iter_mut().enumerate() {
            if !active[r] {
                continue;
            }
            // drop terms over fixed columns into the row bounds
            let mut shift = 0.0;
            terms.retain(|&(j, a)| {
                if lower[j] == upper[j] {
                    shift += a * lower[j];
                    false
                } else {
                    true
                }
            });
            if shift != 0.0 {
                *lo -= shift;
                *hi -= shift;
            }
            if terms.is_empty() {
                if *lo > FEAS_TOL * (1.0 + lo.abs()) || *hi < -FEAS_TOL * (1.0 + hi.abs()) {
                    status = Presolved::Infeasible;
                    break 'rounds;
                }
                active[r] = false;
                continue;
            }
            if terms.len() == 1 {
                let (j, a) = terms[0];
                let (mut l, mut u) = if a > 0.0 {
                    (*lo / a, *hi / a)
                } else {
                    (*hi / a, *lo / a)
                };
                if integral[j] {
                    (l, u) = round_integral(l, u);
                }
                if l > lower[j] {
                    lower[j] = l;
                }
                if u < upper[j] {
                    upper[j] = u;
                }
                if lower[j] > upper[j] + FEAS_TOL * (1.0 + upper[j].abs()) {
                    status = Presolved::Infeasible;
                    break 'rounds;
                }
                if lower[j] > upper[j] {
                    upper[j] = lower[j];
                }
                active[r] = false;
                changed = true;
                continue;
            }

            // activity bounds
            let (mut min_act, mut max_act) = (0.0, 0.0);
            let (mut min_inf, mut max_inf) = (0usize, 0usize);
            for &(j, a) in terms.iter() {
                let (lb, ub) = (lower[j], upper[j]);
                let (lo_c, hi_c) = if a > 0.0 {
                    (a * lb, a * ub)
                } else {
                    (a * ub, a * lb)
                };
                if lo_c.is_finite() {
                    min_act += lo_c;
                } else {
                    min_inf += 1;
                }
                if hi_c.is_finite() {
                    max_act += hi_c;
                } else {
                    max_inf += 1;
                }
            }
            let scale = 1.0 + lo.abs().min(hi.abs());
            if min_inf == 0 && min_act > *hi + 1e-7 * scale
                || max_inf == 0 && max_act < *lo - 1e-7 * scale
            {
                status = Presolved::Infeasible;
                break 'rounds;
            }
            let hi_redundant = !hi.is_finite() || (max_inf == 0 && max_act <= *hi + FEAS_TOL);
            let lo_redundant = !lo.is_finite() || (min_inf == 0 && min_act >= *lo - FEAS_TOL);
            if hi_redundant && lo_redundant {
                active[r] = false;
                continue;
            }

            for &(j, a) in terms.iter() {
                let (lb, ub) = (lower[j], upper[j]);
                let (lo_c, hi_c) = if a > 0.0 {
                    (a * lb, a * ub)
                } else {
                    (a * ub, a * lb)
                };
                // residual activity of the other terms
                let rest_min = match (min_inf, lo_c.is_finite()) {
                    (0, _) => Some(min_act - lo_c),
                    (1, false) => Some(min_act),
                    _ => None,
                };
                let rest_max = match (max_inf, hi_c.is_finite()) {
                    (0, _) => Some(max_act - hi_c),
                    (1, false) => Some(max_act),
                    _ => None,
                };
                let mut new_lb = f64::NEG_INFINITY;
                let mut new_ub = f64::INFINITY;
                if hi.is_finite() {
                    if let Some(rm) = rest_min {
                        let bound = (*hi - rm) / a;
                        if a > 0.0 {
                            new_ub = new_ub.min(bound);
                        } else {
                            new_lb = new_lb.max(bound);
                        }
                    }
                }
                if lo.is_finite() {
                    if let Some(rm) = rest_max {
                        let bound = (*lo - rm) / a;
                        if a > 0.0 {
                            new_lb = new_lb.max(bound);
                        } else {
                            new_ub = new_ub.min(bound);
                        }
                    }
                }
                if integral[j] {
                    (new_lb, new_ub) = round_integral(new_lb, new_ub);
                }
                let step = |b: f64| 1e-6 * (1.0 + if b.is_finite() { b.abs() } else { 0.0 });
                if new_ub.is_finite() && new_ub < upper[j] - step(ub) {
                    upper[j] = new_ub;
                    changed = true;
                }
                if new_lb.is_finite() && new_lb > lower[j] + step(lb) {
                    lower[j] = new_lb;
                    changed = true;
                }
                if lower[j] > upper[j] {
                    if lower[j] > upper[j] + 1e-7 * (1.0 + upper[j].abs()) {
                        status = Presolved::Infeasible;
                        break 'rounds;
                    }
                    let mid = 0.5 * (lower[j] + upper[j]);
                    lower[j] = mid;
                    upper[j] = mid;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let rows = rows
        .into_iter()
        .zip(active)
        .filter_map(|(row, a)| a.then_some(row))
        .collect();
    (
        Reduced {
            lower,
            upper,
            integral,
            rows,
            cost,
            offset,
            substituted,
        },
        status,
    )
}
