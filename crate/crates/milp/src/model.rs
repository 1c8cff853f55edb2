//! Sparse mixed-integer linear model.

use std::fmt;

use crate::error::ModelError;

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Domain of a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    /// General integer, nonnegative unless given explicit bounds.
    Integer,
    /// Continuous, nonnegative unless given explicit bounds.
    Continuous,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

/// Dense identifier of a variable inside one [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Dense identifier of a constraint inside one [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstrId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl ConstrId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A sparse linear expression `sum coeff * var`.
///
/// Repeated variables are allowed while building; they are merged when the
/// expression is attached to a model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(VarId, f64)>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            terms: Vec::with_capacity(n),
        }
    }

    pub fn term(mut self, var: VarId, coeff: f64) -> Self {
        self.terms.push((var, coeff));
        self
    }

    pub fn add(&mut self, var: VarId, coeff: f64) {
        self.terms.push((var, coeff));
    }

    pub fn terms(&self) -> &[(VarId, f64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Evaluates the expression at `values`, indexed by variable id.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Sorts terms by variable id, sums duplicates and drops exact zeros.
    fn canonical(mut self) -> Self {
        self.terms.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match merged.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        Self { terms: merged }
    }
}

impl FromIterator<(VarId, f64)> for LinExpr {
    fn from_iter<I: IntoIterator<Item = (VarId, f64)>>(iter: I) -> Self {
        Self {
            terms: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub obj: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinExpr,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    /// Largest violation of this constraint at `values` (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.expr.eval(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A mixed-integer linear program over binary, nonnegative integer and
/// nonnegative continuous variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub name: String,
    sense: Sense,
    vars: Vec<Variable>,
    constraints: Vec<Constraint>,
    /// Branching priority per variable; higher classes branch first.
    priority: Vec<i32>,
}

impl MilpModel {
    pub fn new(sense: Sense) -> Self {
        Self::named("MODEL", sense)
    }

    pub fn named(name: impl Into<String>, sense: Sense) -> Self {
        Self {
            name: name.into(),
            sense,
            vars: Vec::new(),
            constraints: Vec::new(),
            priority: Vec::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: ConstrId) -> &Constraint {
        &self.constraints[id.0]
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_integer_vars(&self) -> usize {
        self.vars.iter().filter(|v| v.kind.is_integral()).count()
    }

    /// Adds a variable with the default bounds of its kind
    /// (`[0, 1]` for binaries, `[0, inf)` otherwise).
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        obj: f64,
    ) -> Result<VarId, ModelError> {
        let upper = match kind {
            VarKind::Binary => 1.0,
            _ => f64::INFINITY,
        };
        self.add_var_bounded(name, kind, 0.0, upper, obj)
    }

    /// Adds a variable with explicit bounds. Binary variables must stay
    /// within `[0, 1]`; other kinds accept any ordered bounds, including a
    /// `-inf` lower bound for free columns.
    pub fn add_var_bounded(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
        obj: f64,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if !obj.is_finite() {
            return Err(ModelError::NonFinite {
                what: format!("objective coefficient of `{name}`"),
                value: obj,
            });
        }
        if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY
        {
            return Err(ModelError::InvalidBounds { name, lower, upper });
        }
        if lower > upper {
            return Err(ModelError::InvalidBounds { name, lower, upper });
        }
        match kind {
            VarKind::Binary if lower < 0.0 || upper > 1.0 => {
                return Err(ModelError::InvalidBounds { name, lower, upper });
            }
            _ => {}
        }
        let id = VarId(self.vars.len());
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
            obj,
        });
        self.priority.push(0);
        Ok(id)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        expr: LinExpr,
        relation: Relation,
        rhs: f64,
    ) -> Result<ConstrId, ModelError> {
        let name = name.into();
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite {
                what: format!("right-hand side of `{name}`"),
                value: rhs,
            });
        }
        for &(v, c) in expr.terms() {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable {
                    constraint: name,
                    var: v.0,
                });
            }
            if !c.is_finite() {
                return Err(ModelError::NonFinite {
                    what: format!("coefficient of `{}` in `{name}`", self.vars[v.0].name),
                    value: c,
                });
            }
        }
        let id = ConstrId(self.constraints.len());
        self.constraints.push(Constraint {
            name,
            expr: expr.canonical(),
            relation,
            rhs,
        });
        Ok(id)
    }

    /// Fractional variables of the highest priority class are branched on
    /// first; all variables start at 0.
    pub fn set_priority(&mut self, var: VarId, priority: i32) {
        self.priority[var.0] = priority;
    }

    pub fn priority(&self, var: VarId) -> i32 {
        self.priority[var.0]
    }

    pub fn set_obj(&mut self, var: VarId, obj: f64) -> Result<(), ModelError> {
        if !obj.is_finite() {
            return Err(ModelError::NonFinite {
                what: format!("objective coefficient of `{}`", self.vars[var.0].name),
                value: obj,
            });
        }
        self.vars[var.0].obj = obj;
        Ok(())
    }

    /// Replaces the bounds of a variable, keeping the kind's domain rules.
    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) -> Result<(), ModelError> {
        let v = &self.vars[var.0];
        let ok = !(lower.is_nan() || upper.is_nan())
            && lower <= upper
            && match v.kind {
                VarKind::Binary => lower >= 0.0 && upper <= 1.0,
                _ => lower < f64::INFINITY && upper > f64::NEG_INFINITY,
            };
        if !ok {
            return Err(ModelError::InvalidBounds {
                name: v.name.clone(),
                lower,
                upper,
            });
        }
        let v = &mut self.vars[var.0];
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.vars.iter().zip(values).map(|(v, x)| v.obj * x).sum()
    }

    /// Largest constraint or bound violation at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(values))
            .fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Largest distance from an integer over the integral variables.
    pub fn max_integrality_violation(&self, values: &[f64]) -> f64 {
        self.vars
            .iter()
            .zip(values)
            .filter(|(v, _)| v.kind.is_integral())
            .map(|(_, &x)| (x - x.round()).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_counts() {
        let mut m = MilpModel::new(Sense::Maximize);
        let x = m.add_var("x", VarKind::Binary, 1.0).unwrap();
        assert_eq!(m.num_vars(), 1);
        assert_eq!(m.num_constraints(), 0);
        let y = m.add_var("y", VarKind::Binary, 0.0).unwrap();
        let c = m
            .add_constraint(
                "c",
                LinExpr::new().term(x, 1.0).term(y, 1.0),
                Relation::Le,
                1.0,
            )
            .unwrap();
        assert_eq!(c, ConstrId(0));
        assert_eq!(m.num_constraints(), 1);
        assert_eq!(m.var(x).upper, 1.0);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = MilpModel::new(Sense::Minimize);
        let x = m.add_var("x", VarKind::Binary, 1.0).unwrap();
        let err = m.add_constraint("bad", LinExpr::new().term(x, 1.0), Relation::Le, f64::NAN);
        assert!(matches!(err, Err(ModelError::NonFinite { .. })));
        let err = m.add_constraint(
            "bad2",
            LinExpr::new().term(x, f64::INFINITY),
            Relation::Le,
            1.0,
        );
        assert!(err.is_err());
        assert!(m.add_var("z", VarKind::Continuous, f64::NAN).is_err());
        assert!(m
            .add_var_bounded("b", VarKind::Binary, 0.0, 2.0, 0.0)
            .is_err());
        let err = m.add_constraint(
            "unknown",
            LinExpr::new().term(VarId(7), 1.0),
            Relation::Le,
            1.0,
        );
        assert!(matches!(err, Err(ModelError::UnknownVariable { .. })));
    }

    #[test]
    fn duplicate_terms_are_merged() {
        let mut m = MilpModel::new(Sense::Minimize);
        let x = m.add_var("x", VarKind::Continuous, 1.0).unwrap();
        let y = m.add_var("y", VarKind::Continuous, 1.0).unwrap();
        let expr = LinExpr::new()
            .term(y, 2.0)
            .term(x, 1.0)
            .term(y, -2.0)
            .term(x, 0.5);
        m.add_constraint("c", expr, Relation::Ge, 1.0).unwrap();
        assert_eq!(m.constraints()[0].expr.terms(), &[(x, 1.5)]);
    }
}
