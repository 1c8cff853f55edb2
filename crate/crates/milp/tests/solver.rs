use om_milp::{
    read_mps, solve, write_mps, LinExpr, MilpModel, Relation, Sense, SolveStatus, SolverConfig,
    VarKind,
};
use proptest::prelude::*;

fn knapsack() -> MilpModel {
    let mut m = MilpModel::named("knap", Sense::Maximize);
    let x1 = m.add_var("x1", VarKind::Binary, 5.0).unwrap();
    let x2 = m.add_var("x2", VarKind::Binary, 4.0).unwrap();
    m.add_constraint(
        "cap",
        LinExpr::new().term(x1, 6.0).term(x2, 4.0),
        Relation::Le,
        10.0,
    )
    .unwrap();
    m
}

/// Feasibility by direct substitution, independent of the solver.
fn feasible(m: &MilpModel, x: &[f64], tol: f64) -> bool {
    let bounds = m
        .vars()
        .iter()
        .zip(x)
        .all(|(v, &xv)| xv >= v.lower - tol && xv <= v.upper + tol);
    let rows = m.constraints().iter().all(|c| {
        let lhs: f64 = c.expr.terms().iter().map(|&(v, a)| a * x[v.0]).sum();
        match c.relation {
            Relation::Le => lhs <= c.rhs + tol,
            Relation::Ge => lhs >= c.rhs - tol,
            Relation::Eq => (lhs - c.rhs).abs() <= tol,
        }
    });
    bounds && rows
}

/// Exhaustive optimum over an integer box; `None` if nothing is feasible.
fn enumerate(m: &MilpModel, lo: &[i64], hi: &[i64]) -> Option<f64> {
    let n = m.num_vars();
    let mut x: Vec<i64> = lo.to_vec();
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return None;
    }
    let mut best: Option<f64> = None;
    loop {
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        if feasible(m, &xf, 1e-9) {
            let obj: f64 = m.vars().iter().zip(&xf).map(|(v, xv)| v.obj * xv).sum();
            best = Some(match (best, m.sense()) {
                (None, _) => obj,
                (Some(b), Sense::Maximize) => b.max(obj),
                (Some(b), Sense::Minimize) => b.min(obj),
            });
        }
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            if x[k] < hi[k] {
                x[k] += 1;
                break;
            }
            x[k] = lo[k];
            k += 1;
        }
    }
}

fn box_of(m: &MilpModel) -> (Vec<i64>, Vec<i64>) {
    let lo = m.vars().iter().map(|v| v.lower.ceil() as i64).collect();
    let hi = m.vars().iter().map(|v| v.upper.floor() as i64).collect();
    (lo, hi)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs()))
}

#[derive(Debug, Clone)]
struct RandomCase {
    maximize: bool,
    obj: Vec<i32>,
    ints: Vec<u8>,
    rows: Vec<(Vec<i32>, u8, i32)>,
}

fn random_case(max_vars: usize) -> impl Strategy<Value = RandomCase> {
    (2..=max_vars).prop_flat_map(|n| {
        (
            any::<bool>(),
            prop::collection::vec(-20i32..=20, n),
            prop::collection::vec(0u8..4, n),
            prop::collection::vec(
                (prop::collection::vec(-9i32..=9, n), 0u8..3, -10i32..=25),
                1..6,
            ),
        )
            .prop_map(|(maximize, obj, ints, rows)| RandomCase {
                maximize,
                obj,
                ints,
                rows,
            })
    })
}

/// `ints[j] == 0` marks a general integer in `[0, 3]`, otherwise a binary.
fn build(case: &RandomCase, allow_general: bool) -> MilpModel {
    let sense = if case.maximize {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    let mut m = MilpModel::new(sense);
    let ids: Vec<_> = case
        .obj
        .iter()
        .zip(&case.ints)
        .enumerate()
        .map(|(j, (&c, &k))| {
            if allow_general && k == 0 {
                m.add_var_bounded(format!("z{j}"), VarKind::Integer, 0.0, 3.0, c as f64)
                    .unwrap()
            } else {
                m.add_var(format!("b{j}"), VarKind::Binary, c as f64)
                    .unwrap()
            }
        })
        .collect();
    for (r, (coefs, rel, rhs)) in case.rows.iter().enumerate() {
        let expr: LinExpr = ids
            .iter()
            .zip(coefs)
            .map(|(&v, &a)| (v, a as f64))
            .collect();
        let rel = match rel {
            0 => Relation::Le,
            1 => Relation::Ge,
            _ => Relation::Eq,
        };
        m.add_constraint(format!("r{r}"), expr, rel, *rhs as f64)
            .unwrap();
    }
    m
}

#[test]
fn knapsack_optimum() {
    let m = knapsack();
    let sol = solve(&m, &SolverConfig::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(close(sol.objective, 9.0));
    assert_eq!(sol.values, vec![1.0, 1.0]);
    let (lo, hi) = box_of(&m);
    assert_eq!(enumerate(&m, &lo, &hi), Some(9.0));
}

#[test]
fn pure_lp_returns_simplex_optimum() {
    // max 3x + 2y s.t. x + y <= 4, x + 3y <= 6, x <= 3  -> (3, 1), 11
    let mut m = MilpModel::new(Sense::Maximize);
    let x = m.add_var("x", VarKind::Continuous, 3.0).unwrap();
    let y = m.add_var("y", VarKind::Continuous, 2.0).unwrap();
    m.add_constraint(
        "a",
        LinExpr::new().term(x, 1.0).term(y, 1.0),
        Relation::Le,
        4.0,
    )
    .unwrap();
    m.add_constraint(
        "b",
        LinExpr::new().term(x, 1.0).term(y, 3.0),
        Relation::Le,
        6.0,
    )
    .unwrap();
    m.add_constraint("c", LinExpr::new().term(x, 1.0), Relation::Le, 3.0)
        .unwrap();
    let sol = solve(&m, &SolverConfig::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(close(sol.objective, 11.0));
    assert!(close(sol.values[0], 3.0) && close(sol.values[1], 1.0));
    assert!(sol.nodes <= 1);
}

#[test]
fn contradiction_is_infeasible() {
    let mut m = MilpModel::new(Sense::Maximize);
    let x = m.add_var("x1", VarKind::Continuous, 1.0).unwrap();
    m.add_constraint("ge", LinExpr::new().term(x, 1.0), Relation::Ge, 1.0)
        .unwrap();
    m.add_constraint("le", LinExpr::new().term(x, 1.0), Relation::Le, 0.0)
        .unwrap();
    let sol = solve(&m, &SolverConfig::default());
    assert_eq!(sol.status, SolveStatus::Infeasible);
    assert!(!sol.has_incumbent());
}

#[test]
fn infeasible_only_after_branching() {
    // 2x1 + 2x2 = 1 has the LP point (0.5, 0) but no integer point
    let mut m = MilpModel::new(Sense::Minimize);
    let a = m.add_var("a", VarKind::Binary, 1.0).unwrap();
    let b = m.add_var("b", VarKind::Binary, 1.0).unwrap();
    m.add_constraint(
        "odd",
        LinExpr::new().term(a, 2.0).term(b, 2.0),
        Relation::Eq,
        1.0,
    )
    .unwrap();
    assert_eq!(
        solve(&m, &SolverConfig::default()).status,
        SolveStatus::Infeasible
    );
}

#[test]
fn free_and_negative_bounds() {
    // min s with s >= x - 5, s free, x integer in [-3, 2] -> s = -8
    let mut m = MilpModel::new(Sense::Minimize);
    let s = m
        .add_var_bounded(
            "s",
            VarKind::Continuous,
            f64::NEG_INFINITY,
            f64::INFINITY,
            1.0,
        )
        .unwrap();
    let x = m
        .add_var_bounded("x", VarKind::Integer, -3.0, 2.0, 0.0)
        .unwrap();
    m.add_constraint(
        "d",
        LinExpr::new().term(s, 1.0).term(x, -1.0),
        Relation::Ge,
        -5.0,
    )
    .unwrap();
    let sol = solve(&m, &SolverConfig::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(close(sol.objective, -8.0), "{}", sol.objective);
}

#[test]
fn node_limit_reports_incumbent_or_gap() {
    let case = RandomCase {
        maximize: true,
        obj: (0..12).map(|j| 7 + (j * 5) % 11).collect(),
        ints: vec![1; 12],
        rows: vec![((0..12).map(|j| 3 + (j * 7) % 9).collect(), 0, 25)],
    };
    let m = build(&case, false);
    let cfg = SolverConfig {
        node_limit: 1,
        ..SolverConfig::exact()
    };
    let sol = solve(&m, &cfg);
    assert!(matches!(
        sol.status,
        SolveStatus::FeasibleGap | SolveStatus::Optimal | SolveStatus::TimeLimit
    ));
    if sol.has_incumbent() {
        assert!(feasible(&m, &sol.values, 1e-6));
        assert!(sol.best_bound >= sol.objective - 1e-9);
    }
}

#[test]
fn knapsack_mps_round_trip() {
    let m = knapsack();
    let text = write_mps(&m);
    assert!(text.contains(" BV BND"));
    let back = read_mps(&text).unwrap();
    assert_eq!(back.sense(), m.sense());
    assert_eq!(back.num_vars(), 2);
    assert_eq!(back.vars()[0].obj, 5.0);
    assert_eq!(back.vars()[1].obj, 4.0);
    assert_eq!(back.vars()[0].kind, VarKind::Binary);
    assert_eq!(back.constraints().len(), 1);
    let c = &back.constraints()[0];
    let coefs: Vec<f64> = c.expr.terms().iter().map(|t| t.1).collect();
    assert_eq!(coefs, vec![6.0, 4.0]);
    assert_eq!(c.relation, Relation::Le);
    assert_eq!(c.rhs, 10.0);
    assert_eq!(solve(&back, &SolverConfig::default()).objective, 9.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_enumeration_on_small_binaries(case in random_case(12)) {
        let m = build(&case, false);
        let (lo, hi) = box_of(&m);
        let expect = enumerate(&m, &lo, &hi);
        let sol = solve(&m, &SolverConfig::exact());
        match expect {
            None => prop_assert_eq!(sol.status, SolveStatus::Infeasible),
            Some(opt) => {
                prop_assert_eq!(sol.status, SolveStatus::Optimal);
                prop_assert!(close(sol.objective, opt), "solver {} vs enumeration {}", sol.objective, opt);
                prop_assert!(feasible(&m, &sol.values, 1e-6));
                prop_assert!(m.max_integrality_violation(&sol.values) <= 1e-6);
                let dot: f64 = m.vars().iter().zip(&sol.values).map(|(v, x)| v.obj * x).sum();
                prop_assert!(close(dot, sol.objective));
            }
        }
    }

    #[test]
    fn matches_enumeration_with_general_integers(case in random_case(6)) {
        let m = build(&case, true);
        let (lo, hi) = box_of(&m);
        let expect = enumerate(&m, &lo, &hi);
        let sol = solve(&m, &SolverConfig::exact());
        match expect {
            None => prop_assert_eq!(sol.status, SolveStatus::Infeasible),
            Some(opt) => {
                prop_assert_eq!(sol.status, SolveStatus::Optimal);
                prop_assert!(close(sol.objective, opt), "solver {} vs enumeration {}", sol.objective, opt);
            }
        }
    }

    #[test]
    fn node_relaxations_bound_their_subtrees(case in random_case(10)) {
        let m = build(&case, false);
        let cfg = SolverConfig { record_nodes: true, ..SolverConfig::exact() };
        let sol = solve(&m, &cfg);
        let (lo0, hi0) = box_of(&m);
        for node in &sol.node_log {
            let (mut lo, mut hi) = (lo0.clone(), hi0.clone());
            for &(j, l, u) in &node.bounds {
                lo[j] = l.ceil() as i64;
                hi[j] = u.floor() as i64;
            }
            let sub = enumerate(&m, &lo, &hi);
            match (node.relaxation, sub) {
                (Some(r), Some(best)) => {
                    let ok = match m.sense() {
                        Sense::Maximize => r >= best - 1e-6 * (1.0 + best.abs()),
                        Sense::Minimize => r <= best + 1e-6 * (1.0 + best.abs()),
                    };
                    prop_assert!(ok, "node relaxation {} does not bound {}", r, best);
                }
                (None, Some(best)) => prop_assert!(false, "node declared infeasible but has {}", best),
                _ => {}
            }
        }
    }

    #[test]
    fn deterministic(case in random_case(10)) {
        let m = build(&case, true);
        let a = solve(&m, &SolverConfig::default());
        let b = solve(&m, &SolverConfig::default());
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.values, b.values);
        prop_assert_eq!(a.nodes, b.nodes);
    }

    #[test]
    fn mps_round_trip_preserves_matrix(case in random_case(10)) {
        let m = build(&case, true);
        let back = read_mps(&write_mps(&m)).unwrap();
        prop_assert_eq!(back.sense(), m.sense());
        prop_assert_eq!(back.num_vars(), m.num_vars());
        for (a, b) in m.vars().iter().zip(back.vars()) {
            prop_assert_eq!(a.kind, b.kind);
            prop_assert_eq!(a.obj, b.obj);
            prop_assert_eq!((a.lower, a.upper), (b.lower, b.upper));
        }
        prop_assert_eq!(back.num_constraints(), m.num_constraints());
        for (a, b) in m.constraints().iter().zip(back.constraints()) {
            let ta: Vec<(usize, f64)> = a.expr.terms().iter().map(|&(v, c)| (v.0, c)).collect();
            let tb: Vec<(usize, f64)> = b.expr.terms().iter().map(|&(v, c)| (v.0, c)).collect();
            prop_assert_eq!(ta, tb);
            prop_assert_eq!(a.relation, b.relation);
            prop_assert_eq!(a.rhs, b.rhs);
        }
    }
}

/// Solves `A y (rel) b` over continuous `y` in a box by enumerating vertices.
fn vertex_lp(
    maximize: bool,
    c: &[f64],
    rows: &[(Vec<f64>, Relation, f64)],
    lo: &[f64],
    hi: &[f64],
) -> Option<f64> {
    let k = c.len();
    // every hyperplane a.y = b that can be active at a vertex
    let mut planes: Vec<(Vec<f64>, f64)> = rows.iter().map(|(a, _, b)| (a.clone(), *b)).collect();
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        planes.push((e.clone(), lo[j]));
        planes.push((e, hi[j]));
    }
    let ok = |y: &[f64]| {
        (0..k).all(|j| y[j] >= lo[j] - 1e-9 && y[j] <= hi[j] + 1e-9)
            && rows.iter().all(|(a, rel, b)| {
                let lhs: f64 = a.iter().zip(y).map(|(ai, yi)| ai * yi).sum();
                match rel {
                    Relation::Le => lhs <= b + 1e-9,
                    Relation::Ge => lhs >= b - 1e-9,
                    Relation::Eq => (lhs - b).abs() <= 1e-9,
                }
            })
    };
    let mut best: Option<f64> = None;
    let p = planes.len();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        // Gaussian elimination with partial pivoting
        let mut m: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| {
                let mut r = planes[i].0.clone();
                r.push(planes[i].1);
                r
            })
            .collect();
        let mut singular = false;
        for col in 0..k {
            let piv = (col..k)
                .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
                .unwrap();
            if m[piv][col].abs() < 1e-12 {
                singular = true;
                break;
            }
            m.swap(col, piv);
            for r in 0..k {
                if r != col {
                    let f = m[r][col] / m[col][col];
                    for cc in col..=k {
                        m[r][cc] -= f * m[col][cc];
                    }
                }
            }
        }
        if !singular {
            let y: Vec<f64> = (0..k).map(|j| m[j][k] / m[j][j]).collect();
            if ok(&y) {
                let obj: f64 = c.iter().zip(&y).map(|(a, b)| a * b).sum();
                best = Some(match best {
                    None => obj,
                    Some(b) if maximize => b.max(obj),
                    Some(b) => b.min(obj),
                });
            }
        }
        // next k-combination of 0..p
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < p - k + i {
                idx[i] += 1;
                for t in i + 1..k {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct MixedCase {
    maximize: bool,
    bin_obj: Vec<i32>,
    cont_obj: Vec<i32>,
    cont_hi: Vec<u8>,
    rows: Vec<(Vec<i32>, Vec<i32>, u8, i32)>,
}

fn mixed_case() -> impl Strategy<Value = MixedCase> {
    (1usize..=6, 1usize..=3).prop_flat_map(|(nb, nc)| {
        (
            any::<bool>(),
            prop::collection::vec(-10i32..=10, nb),
            prop::collection::vec(-10i32..=10, nc),
            prop::collection::vec(1u8..=6, nc),
            prop::collection::vec(
                (
                    prop::collection::vec(-6i32..=6, nb),
                    prop::collection::vec(-6i32..=6, nc),
                    0u8..3,
                    -8i32..=15,
                ),
                1..5,
            ),
        )
            .prop_map(|(maximize, bin_obj, cont_obj, cont_hi, rows)| MixedCase {
                maximize,
                bin_obj,
                cont_obj,
                cont_hi,
                rows,
            })
    })
}

fn rel_of(r: u8) -> Relation {
    match r {
        0 => Relation::Le,
        1 => Relation::Ge,
        _ => Relation::Eq,
    }
}

fn mixed_oracle(case: &MixedCase) -> Option<f64> {
    let nb = case.bin_obj.len();
    let c: Vec<f64> = case.cont_obj.iter().map(|&v| v as f64).collect();
    let lo = vec![0.0; c.len()];
    let hi: Vec<f64> = case.cont_hi.iter().map(|&v| v as f64).collect();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << nb) {
        let b: Vec<f64> = (0..nb).map(|j| ((mask >> j) & 1) as f64).collect();
        let fixed: f64 = case
            .bin_obj
            .iter()
            .zip(&b)
            .map(|(&o, x)| o as f64 * x)
            .sum();
        let rows: Vec<(Vec<f64>, Relation, f64)> = case
            .rows
            .iter()
            .map(|(ab, ac, r, rhs)| {
                let shift: f64 = ab.iter().zip(&b).map(|(&a, x)| a as f64 * x).sum();
                (
                    ac.iter().map(|&a| a as f64).collect(),
                    rel_of(*r),
                    *rhs as f64 - shift,
                )
            })
            .collect();
        if let Some(v) = vertex_lp(case.maximize, &c, &rows, &lo, &hi) {
            let total = v + fixed;
            best = Some(match best {
                None => total,
                Some(p) if case.maximize => p.max(total),
                Some(p) => p.min(total),
            });
        }
    }
    best
}

fn build_mixed(case: &MixedCase) -> MilpModel {
    let sense = if case.maximize {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    let mut m = MilpModel::new(sense);
    let b: Vec<_> = case
        .bin_obj
        .iter()
        .enumerate()
        .map(|(j, &o)| {
            m.add_var(format!("b{j}"), VarKind::Binary, o as f64)
                .unwrap()
        })
        .collect();
    let y: Vec<_> = case
        .cont_obj
        .iter()
        .zip(&case.cont_hi)
        .enumerate()
        .map(|(j, (&o, &h))| {
            m.add_var_bounded(
                format!("y{j}"),
                VarKind::Continuous,
                0.0,
                h as f64,
                o as f64,
            )
            .unwrap()
        })
        .collect();
    for (r, (ab, ac, rel, rhs)) in case.rows.iter().enumerate() {
        let expr: LinExpr = b
            .iter()
            .zip(ab)
            .chain(y.iter().zip(ac))
            .map(|(&v, &a)| (v, a as f64))
            .collect();
        m.add_constraint(format!("r{r}"), expr, rel_of(*rel), *rhs as f64)
            .unwrap();
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn mixed_models_match_vertex_enumeration(case in mixed_case()) {
        let m = build_mixed(&case);
        let sol = solve(&m, &SolverConfig::exact());
        match mixed_oracle(&case) {
            None => prop_assert_eq!(sol.status, SolveStatus::Infeasible),
            Some(opt) => {
                prop_assert_eq!(sol.status, SolveStatus::Optimal);
                prop_assert!(close(sol.objective, opt), "solver {} vs oracle {}", sol.objective, opt);
                prop_assert!(feasible(&m, &sol.values, 1e-6));
            }
        }
    }
}
