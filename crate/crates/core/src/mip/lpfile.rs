//! CPLEX LP-format export for cross-checking models with external solvers.
//!
//! Cone rows are written as quadratic constraints
//! `[ x^2 + y^2 - u * v ] <= 0`, which most solvers accept as rotated cones.

use std::fmt::Write;

use super::model::{Integrality, MipModel, ObjectiveSense, RowSense, VarId};

fn sanitize(name: &str, fallback: usize, prefix: char) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.[]".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        format!("{prefix}{fallback}_{s}")
    } else {
        s
    }
}

fn term(out: &mut String, names: &[String], v: VarId, c: f64) {
    let sign = if c < 0.0 { '-' } else { '+' };
    let _ = write!(out, " {sign} {} {}", c.abs(), names[v.0]);
}

/// Renders the model in LP format.
pub fn to_lp_string(model: &MipModel) -> String {
    let names: Vec<String> = model
        .vars
        .iter()
        .enumerate()
        .map(|(i, v)| sanitize(&v.name, i, 'x'))
        .collect();
    let mut out = String::new();
    out.push_str(match model.objective.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    if model.objective.coeffs.is_empty() {
        out.push_str(" 0 ");
        out.push_str(names.first().map_or("", String::as_str));
    }
    for (v, c) in &model.objective.coeffs {
        term(&mut out, &names, *v, *c);
    }
    if model.objective.constant != 0.0 {
        let _ = write!(out, " + {}", model.objective.constant);
    }
    out.push_str("\nSubject To\n");
    for (i, r) in model.rows.iter().enumerate() {
        let _ = write!(out, " {}:", sanitize(&r.name, i, 'r'));
        if r.coeffs.is_empty() {
            let _ = write!(out, " 0 {}", names.first().map_or("", String::as_str));
        }
        for (v, c) in &r.coeffs {
            term(&mut out, &names, *v, *c);
        }
        let op = match r.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", r.rhs);
    }
    for (i, c) in model.cones.iter().enumerate() {
        let _ = writeln!(
            out,
            " {}: [ {x} ^2 + {y} ^2 - {u} * {v} ] <= 0",
            sanitize(&c.name, i, 'q'),
            x = names[c.x.0],
            y = names[c.y.0],
            u = names[c.u.0],
            v = names[c.v.0],
        );
    }
    out.push_str("Bounds\n");
    for (name, v) in names.iter().zip(&model.vars) {
        let lo = if v.lower == f64::NEG_INFINITY {
            "-inf".to_string()
        } else {
            v.lower.to_string()
        };
        let hi = if v.upper == f64::INFINITY {
            "+inf".to_string()
        } else {
            v.upper.to_string()
        };
        let _ = writeln!(out, " {lo} <= {name} <= {hi}");
    }
    let bins: Vec<&str> = names
        .iter()
        .zip(&model.vars)
        .filter(|(_, v)| v.integrality == Integrality::Binary)
        .map(|(n, _)| n.as_str())
        .collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for chunk in bins.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mip::{LinExpr, MipModel};

    #[test]
    fn knapsack_dump() {
        let mut m = MipModel::new(ObjectiveSense::Maximize);
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        m.add_row(
            "cap",
            LinExpr::new().term(a, 5.0).term(b, 4.0),
            RowSense::Le,
            8.0,
        );
        m.set_objective(
            ObjectiveSense::Maximize,
            LinExpr::new().term(a, 10.0).term(b, -6.0),
        );
        let s = to_lp_string(&m);
        assert!(s.starts_with("Maximize\n obj: + 10 a - 6 b\n"));
        assert!(s.contains(" cap: + 5 a + 4 b <= 8\n"));
        assert!(s.contains("Binaries\n a b\n"));
        assert!(s.ends_with("End\n"));
    }

    #[test]
    fn odd_names_are_sanitized() {
        assert_eq!(sanitize("p(1,2)", 0, 'x'), "p_1_2_");
        assert_eq!(sanitize("3x", 4, 'x'), "x4_3x");
    }
}
