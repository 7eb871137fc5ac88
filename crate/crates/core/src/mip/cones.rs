//! Outer approximation of rotated cones by gradient cuts.
//!
//! `x^2 + y^2 <= u v` with `u, v >= 0` is the same set as
//! `f(x, y, u, v) = |(x, y, (u - v) / 2)| - (u + v) / 2 <= 0`. `f` is convex and
//! positively homogeneous, so its linearisation at any point is `grad f . p <= 0`,
//! which is valid for the whole cone and cuts off the point whenever `f > 0`.

use super::model::{RotatedCone, VarId};

/// Linear cut `sum coeffs . x <= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeCut {
    pub coeffs: [(VarId, f64); 4],
}

impl ConeCut {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(v, c)| c * x[v.0]).sum()
    }
}

/// Gradient cut for `cone` at point `x`, or `None` when the point is the apex.
///
/// Coefficients are scaled so the largest magnitude is 1.
pub fn gradient_cut(cone: &RotatedCone, x: &[f64]) -> Option<ConeCut> {
    let (a, b, u, v) = (x[cone.x.0], x[cone.y.0], x[cone.u.0], x[cone.v.0]);
    let h = 0.5 * (u - v);
    let norm = (a * a + b * b + h * h).sqrt();
    if !(norm > 1e-12) {
        return None;
    }
    let cu = 0.5 * h - 0.5 * norm;
    let cv = -0.5 * h - 0.5 * norm;
    let scale = [a, b, cu, cv].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if !(scale > 0.0) {
        return None;
    }
    Some(ConeCut {
        coeffs: [
            (cone.x, a / scale),
            (cone.y, b / scale),
            (cone.u, cu / scale),
            (cone.v, cv / scale),
        ],
    })
}
