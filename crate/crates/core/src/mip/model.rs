use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrality {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integrality: Integrality,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl LinearRow {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(v, c)| c * x[v.0]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            RowSense::Le => (a - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - a).max(0.0),
            RowSense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// Rotated second-order cone `x^2 + y^2 <= u * v`, with `u, v >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatedCone {
    pub name: String,
    pub x: VarId,
    pub y: VarId,
    pub u: VarId,
    pub v: VarId,
}

impl RotatedCone {
    /// `x^2 + y^2 - u v`, positive when violated.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let (a, b, u, v) = (x[self.x.0], x[self.y.0], x[self.u.0], x[self.v.0]);
        a * a + b * b - u * v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: ObjectiveSense,
    pub coeffs: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl Objective {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|(v, c)| c * x[v.0]).sum::<f64>()
    }
}

/// Linear expression builder; duplicate terms are merged when the row is
/// added to a model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, v: VarId, c: f64) -> Self {
        self.terms.push((v, c));
        self
    }

    pub fn add(&mut self, v: VarId, c: f64) {
        self.terms.push((v, c));
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    fn merged(self) -> (Vec<(VarId, f64)>, f64) {
        let mut acc: BTreeMap<VarId, f64> = BTreeMap::new();
        for (v, c) in self.terms {
            *acc.entry(v).or_insert(0.0) += c;
        }
        (
            acc.into_iter().filter(|(_, c)| *c != 0.0).collect(),
            self.constant,
        )
    }
}

/// Bounded-variable mixed-integer linear program with optional rotated cone
/// rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MipModel {
    pub vars: Vec<Variable>,
    pub rows: Vec<LinearRow>,
    pub cones: Vec<RotatedCone>,
    pub objective: Objective,
}

impl Default for MipModel {
    fn default() -> Self {
        MipModel::new(ObjectiveSense::Minimize)
    }
}

impl MipModel {
    pub fn new(sense: ObjectiveSense) -> Self {
        MipModel {
            vars: Vec::new(),
            rows: Vec::new(),
            cones: Vec::new(),
            objective: Objective {
                sense,
                coeffs: Vec::new(),
                constant: 0.0,
            },
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        integrality: Integrality,
    ) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            integrality,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, lower, upper, Integrality::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, 1.0, Integrality::Binary)
    }

    /// Adds `expr (sense) rhs`; the expression constant moves to the right.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        expr: LinExpr,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        let (coeffs, constant) = expr.merged();
        self.rows.push(LinearRow {
            name: name.into(),
            coeffs,
            sense,
            rhs: rhs - constant,
        });
        self.rows.len() - 1
    }

    pub fn add_cone(&mut self, name: impl Into<String>, x: VarId, y: VarId, u: VarId, v: VarId) {
        self.cones.push(RotatedCone {
            name: name.into(),
            x,
            y,
            u,
            v,
        });
    }

    pub fn set_objective(&mut self, sense: ObjectiveSense, expr: LinExpr) {
        let (coeffs, constant) = expr.merged();
        self.objective = Objective {
            sense,
            coeffs,
            constant,
        };
    }

    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) {
        self.vars[v.0].lower = lower;
        self.vars[v.0].upper = upper;
    }

    pub fn num_binaries(&self) -> usize {
        self.vars
            .iter()
            .filter(|v| v.integrality == Integrality::Binary)
            .count()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vars.len();
        for (i, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::InvalidModel(format!(
                    "variable {i} ({}) has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
            if v.integrality == Integrality::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(Error::InvalidModel(format!(
                    "binary {} bounds outside [0, 1]",
                    v.name
                )));
            }
        }
        let check = |id: &VarId, what: &str| -> Result<()> {
            if id.0 >= n {
                return Err(Error::InvalidModel(format!(
                    "{what} references unknown variable {}",
                    id.0
                )));
            }
            Ok(())
        };
        for r in &self.rows {
            for (v, c) in &r.coeffs {
                check(v, &r.name)?;
                if !c.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "row {} has non-finite coefficient",
                        r.name
                    )));
                }
            }
            if !r.rhs.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "row {} has non-finite rhs",
                    r.name
                )));
            }
        }
        for c in &self.cones {
            for v in [c.x, c.y, c.u, c.v] {
                check(&v, &c.name)?;
            }
            for v in [c.u, c.v] {
                if self.vars[v.0].lower < 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "cone {} needs u, v >= 0",
                        c.name
                    )));
                }
            }
        }
        for (v, _) in &self.objective.coeffs {
            check(v, "objective")?;
        }
        Ok(())
    }

    pub fn var_names(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|v| v.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_merge_terms_and_move_constants() {
        let mut m = MipModel::new(ObjectiveSense::Minimize);
        let x = m.add_continuous("x", 0.0, 1.0);
        let y = m.add_continuous("y", 0.0, 1.0);
        let e = LinExpr::new()
            .term(x, 1.0)
            .term(y, 2.0)
            .term(x, 0.5)
            .term(y, -2.0)
            .constant(3.0);
        m.add_row("r", e, RowSense::Le, 4.0);
        assert_eq!(m.rows[0].coeffs, vec![(x, 1.5)]);
        assert_eq!(m.rows[0].rhs, 1.0);
    }

    #[test]
    fn validation_catches_bad_bounds() {
        let mut m = MipModel::new(ObjectiveSense::Minimize);
        m.add_continuous("x", 1.0, 0.0);
        assert!(m.validate().is_err());
        let mut m = MipModel::new(ObjectiveSense::Minimize);
        m.add_var("b", 0.0, 2.0, Integrality::Binary);
        assert!(m.validate().is_err());
        let mut m = MipModel::new(ObjectiveSense::Minimize);
        let x = m.add_continuous("x", -1.0, 1.0);
        m.add_cone("c", x, x, x, x);
        assert!(m.validate().is_err());
    }
}
