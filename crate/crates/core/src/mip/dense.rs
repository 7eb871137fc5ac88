//! Dense bounded-variable primal simplex.
//!
//! Revised simplex over an explicit basis inverse. Rows become equalities
//! with one bounded slack each; phase 1 minimises the sum of artificials
//! added to the initial slack-free basis, phase 2 the real cost. Dantzig
//! pricing with a switch to Bland's rule once degenerate pivots pile up, and
//! the inverse is rebuilt from scratch every [`REFACTOR_EVERY`] pivots.

use super::model::RowSense;

pub const REFACTOR_EVERY: usize = 50;
const PIVOT_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-11;
const ZERO_STEP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

/// Minimisation LP with bounded variables and sparse rows.
#[derive(Clone, Debug, Default)]
pub struct LpData {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cost: Vec<f64>,
    pub rows: Vec<(Vec<(usize, f64)>, RowSense, f64)>,
}

#[derive(Clone, Debug)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct DenseTolerances {
    pub feas: f64,
    pub opt: f64,
}

impl Default for DenseTolerances {
    fn default() -> Self {
        DenseTolerances {
            feas: 1e-7,
            opt: 1e-7,
        }
    }
}

struct Simplex {
    m: usize,
    n: usize,
    /// Dense structural columns, `cols[j][i] = A[i][j]`.
    cols: Vec<Vec<f64>>,
    art_sign: Vec<f64>,
    b: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    binv: Vec<f64>,
    pivots_since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
    bland: bool,
    degenerate_run: usize,
    tol: DenseTolerances,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    Limit,
    Numerical,
}

impl Simplex {
    fn total(&self) -> usize {
        self.n + 2 * self.m
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n + self.m
    }

    /// `binv * a_j`
    fn column(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        if j < self.n {
            let a = &self.cols[j];
            for (i, o) in out.iter_mut().enumerate() {
                let row = &self.binv[i * m..(i + 1) * m];
                *o = row.iter().zip(a).map(|(p, q)| p * q).sum();
            }
        } else {
            let (k, s) = if j < self.n + m {
                (j - self.n, 1.0)
            } else {
                (j - self.n - m, self.art_sign[j - self.n - m])
            };
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.binv[i * m + k] * s;
            }
        }
        out
    }

    fn dot_col(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            self.cols[j].iter().zip(y).map(|(a, b)| a * b).sum()
        } else if j < self.n + self.m {
            y[j - self.n]
        } else {
            let k = j - self.n - self.m;
            y[k] * self.art_sign[k]
        }
    }

    fn col_entry(&self, j: usize, i: usize) -> f64 {
        if j < self.n {
            self.cols[j][i]
        } else if j < self.n + self.m {
            if j - self.n == i {
                1.0
            } else {
                0.0
            }
        } else {
            let k = j - self.n - self.m;
            if k == i {
                self.art_sign[k]
            } else {
                0.0
            }
        }
    }

    /// Rebuilds the basis inverse and basic values from scratch.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (c, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                a[i * m + c] = self.col_entry(j, i);
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let (piv, val) =
                (col..m)
                    .map(|r| (r, a[r * m + col].abs()))
                    .fold(
                        (col, -1.0),
                        |acc, (r, v)| if v > acc.1 { (r, v) } else { acc },
                    );
            if val < SINGULAR_TOL {
                return false;
            }
            if piv != col {
                for k in 0..m {
                    a.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let p = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= p;
                inv[col * m + k] /= p;
            }
            for r in 0..m {
                if r != col {
                    let f = a[r * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[col * m + k];
                            inv[r * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.pivots_since_refactor = 0;

        // x_B = B^-1 (b - N x_N)
        let mut rhs = self.b.clone();
        for j in 0..self.total() {
            if self.position[j].is_none() && self.x[j] != 0.0 {
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r -= self.col_entry(j, i) * self.x[j];
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x[self.basis[i]] = row.iter().zip(&rhs).map(|(p, q)| p * q).sum();
        }
        true
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let p = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= p;
        }
        for i in 0..m {
            if i != r && alpha[i] != 0.0 {
                let f = alpha[i];
                for k in 0..m {
                    self.binv[i * m + k] -= f * self.binv[r * m + k];
                }
            }
        }
        self.pivots_since_refactor += 1;
    }

    fn run_phase(&mut self, cost: &[f64], allow_artificial: bool) -> PhaseEnd {
        let m = self.m;
        let total = self.total();
        let degenerate_cap = 10 * (m + self.n);
        loop {
            if self.iterations >= self.max_iterations {
                return PhaseEnd::Limit;
            }
            if self.pivots_since_refactor >= REFACTOR_EVERY && !self.refactor() {
                return PhaseEnd::Numerical;
            }
            let mut y = vec![0.0; m];
            for (i, &bj) in self.basis.iter().enumerate() {
                let c = cost[bj];
                if c != 0.0 {
                    for (k, yk) in y.iter_mut().enumerate() {
                        *yk += c * self.binv[i * m + k];
                    }
                }
            }

            // pricing
            let mut entering: Option<(usize, f64, f64)> = None; // (j, dir, |d|)
            for j in 0..total {
                if self.position[j].is_some() || (!allow_artificial && self.is_artificial(j)) {
                    continue;
                }
                if self.hi[j] - self.lo[j] <= 0.0 {
                    continue;
                }
                let d = cost[j] - self.dot_col(&y, j);
                let dir = if d < -self.tol.opt && self.x[j] < self.hi[j] - ZERO_STEP {
                    1.0
                } else if d > self.tol.opt && self.x[j] > self.lo[j] + ZERO_STEP {
                    -1.0
                } else {
                    continue;
                };
                if self.bland {
                    entering = Some((j, dir, d.abs()));
                    break;
                }
                if entering.is_none_or(|(_, _, best)| d.abs() > best) {
                    entering = Some((j, dir, d.abs()));
                }
            }
            let Some((j, dir, _)) = entering else {
                return PhaseEnd::Optimal;
            };
            self.iterations += 1;

            let alpha = self.column(j);
            let enter_step = if dir > 0.0 {
                self.hi[j] - self.x[j]
            } else {
                self.x[j] - self.lo[j]
            };
            let mut best_t = f64::INFINITY;
            let mut leave: Option<(usize, f64)> = None; // (row, bound hit)
            for (i, &a) in alpha.iter().enumerate() {
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let bj = self.basis[i];
                let rate = -dir * a;
                let (t, bound) = if rate < 0.0 {
                    if self.lo[bj] == f64::NEG_INFINITY {
                        continue;
                    }
                    (((self.x[bj] - self.lo[bj]) / -rate).max(0.0), self.lo[bj])
                } else {
                    if self.hi[bj] == f64::INFINITY {
                        continue;
                    }
                    (((self.hi[bj] - self.x[bj]) / rate).max(0.0), self.hi[bj])
                };
                let better = match leave {
                    None => true,
                    Some(_) if t < best_t - ZERO_STEP => true,
                    Some((r, _)) if t <= best_t + ZERO_STEP => {
                        if self.bland {
                            bj < self.basis[r]
                        } else {
                            a.abs() > alpha[r].abs()
                        }
                    }
                    _ => false,
                };
                if better {
                    best_t = best_t.min(t);
                    leave = Some((i, bound));
                }
            }
            let flip = best_t >= enter_step;
            let step = if flip { enter_step } else { best_t };
            if step == f64::INFINITY {
                return PhaseEnd::Unbounded;
            }

            if step < ZERO_STEP {
                self.degenerate_run += 1;
                if self.degenerate_run > degenerate_cap && !self.bland {
                    log::debug!("dense simplex: switching to Bland's rule");
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }

            self.x[j] += dir * step;
            for (i, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let bj = self.basis[i];
                    self.x[bj] -= dir * step * a;
                }
            }
            match leave.filter(|_| !flip) {
                None => {
                    self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
                }
                Some((r, bound)) => {
                    let out = self.basis[r];
                    self.x[out] = bound;
                    self.position[out] = None;
                    self.basis[r] = j;
                    self.position[j] = Some(r);
                    self.pivot(r, &alpha);
                }
            }
        }
    }
}

/// Solves `min cost.x` subject to the rows and bounds.
///
/// Fixed columns are substituted out first; degenerate blocks of them
/// otherwise leave the simplex with singular bases.
pub fn solve_dense(lp: &LpData, tol: DenseTolerances) -> LpResult {
    let n = lp.cost.len();
    let fixed: Vec<bool> = (0..n).map(|j| lp.lower[j] == lp.upper[j]).collect();
    if !fixed.iter().any(|&f| f) {
        return simplex(lp, tol);
    }
    let mut col = vec![usize::MAX; n];
    let mut keep = Vec::new();
    for j in (0..n).filter(|&j| !fixed[j]) {
        col[j] = keep.len();
        keep.push(j);
    }
    let mut reduced = LpData {
        lower: keep.iter().map(|&j| lp.lower[j]).collect(),
        upper: keep.iter().map(|&j| lp.upper[j]).collect(),
        cost: keep.iter().map(|&j| lp.cost[j]).collect(),
        rows: Vec::with_capacity(lp.rows.len()),
    };
    let constant: f64 = (0..n)
        .filter(|&j| fixed[j])
        .map(|j| lp.cost[j] * lp.lower[j])
        .sum();
    for (coeffs, sense, rhs) in &lp.rows {
        let mut r = *rhs;
        let mut kept = Vec::with_capacity(coeffs.len());
        for &(j, c) in coeffs {
            if fixed[j] {
                r -= c * lp.lower[j];
            } else {
                kept.push((col[j], c));
            }
        }
        if kept.is_empty() {
            let ok = match sense {
                RowSense::Le => r >= -tol.feas,
                RowSense::Ge => r <= tol.feas,
                RowSense::Eq => r.abs() <= tol.feas,
            };
            if !ok {
                return LpResult {
                    status: LpStatus::Infeasible,
                    x: vec![0.0; n],
                    objective: f64::NAN,
                    iterations: 0,
                };
            }
            continue;
        }
        reduced.rows.push((kept, *sense, r));
    }
    let mut out = simplex(&reduced, tol);
    let mut x: Vec<f64> = lp.lower.clone();
    for (k, &j) in keep.iter().enumerate() {
        x[j] = out.x.get(k).copied().unwrap_or(0.0);
    }
    out.x = x;
    out.objective += constant;
    out
}

fn simplex(lp: &LpData, tol: DenseTolerances) -> LpResult {
    let n = lp.cost.len();
    let m = lp.rows.len();
    let fail = |status, iterations| LpResult {
        status,
        x: vec![0.0; n],
        objective: f64::NAN,
        iterations,
    };

    let mut cols = vec![vec![0.0; m]; n];
    let mut b = vec![0.0; m];
    let mut lo = Vec::with_capacity(n + 2 * m);
    let mut hi = Vec::with_capacity(n + 2 * m);
    lo.extend_from_slice(&lp.lower);
    hi.extend_from_slice(&lp.upper);
    for (i, (coeffs, sense, rhs)) in lp.rows.iter().enumerate() {
        for &(j, c) in coeffs {
            cols[j][i] += c;
        }
        b[i] = *rhs;
        let (l, h) = match sense {
            RowSense::Le => (0.0, f64::INFINITY),
            RowSense::Ge => (f64::NEG_INFINITY, 0.0),
            RowSense::Eq => (0.0, 0.0),
        };
        lo.push(l);
        hi.push(h);
    }
    let mut x = vec![0.0; n + 2 * m];
    for j in 0..n {
        x[j] = if lo[j].is_finite() {
            lo[j]
        } else if hi[j].is_finite() {
            hi[j]
        } else {
            0.0
        };
    }
    let mut art_sign = vec![1.0; m];
    for i in 0..m {
        let mut r = b[i];
        for j in 0..n {
            r -= cols[j][i] * x[j];
        }
        art_sign[i] = if r < 0.0 { -1.0 } else { 1.0 };
        x[n + m + i] = r.abs();
        lo.push(0.0);
        hi.push(f64::INFINITY);
    }
    let total = n + 2 * m;
    let mut position = vec![None; total];
    let basis: Vec<usize> = (0..m).map(|i| n + m + i).collect();
    for (i, &j) in basis.iter().enumerate() {
        position[j] = Some(i);
    }
    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        binv[i * m + i] = art_sign[i];
    }

    let mut s = Simplex {
        m,
        n,
        cols,
        art_sign,
        b,
        lo,
        hi,
        x,
        basis,
        position,
        binv,
        pivots_since_refactor: 0,
        iterations: 0,
        max_iterations: 10_000 + 100 * (n + m),
        bland: false,
        degenerate_run: 0,
        tol,
    };

    // phase 1
    let mut cost1 = vec![0.0; total];
    for c in cost1.iter_mut().skip(n + m) {
        *c = 1.0;
    }
    match s.run_phase(&cost1, true) {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded | PhaseEnd::Numerical => {
            return fail(LpStatus::NumericalFailure, s.iterations)
        }
        PhaseEnd::Limit => return fail(LpStatus::IterationLimit, s.iterations),
    }
    if !s.refactor() {
        return fail(LpStatus::NumericalFailure, s.iterations);
    }
    let infeas: f64 = (n + m..total).map(|j| s.x[j].abs()).sum();
    let scale = 1.0 + s.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if infeas > tol.feas * scale {
        return fail(LpStatus::Infeasible, s.iterations);
    }

    // drive artificials out of the basis where possible, then pin them at 0
    for r in 0..m {
        let j_art = s.basis[r];
        if !s.is_artificial(j_art) {
            continue;
        }
        let mut row = vec![0.0; m];
        row.copy_from_slice(&s.binv[r * m..(r + 1) * m]);
        let candidate = (0..n + m)
            .filter(|&j| s.position[j].is_none())
            .find(|&j| s.dot_col(&row, j).abs() > 1e-7);
        if let Some(j) = candidate {
            let alpha = s.column(j);
            s.x[j_art] = 0.0;
            s.position[j_art] = None;
            s.basis[r] = j;
            s.position[j] = Some(r);
            s.pivot(r, &alpha);
        }
    }
    for j in n + m..total {
        s.x[j] = 0.0;
        s.hi[j] = 0.0;
    }
    if !s.refactor() {
        return fail(LpStatus::NumericalFailure, s.iterations);
    }
    s.bland = false;
    s.degenerate_run = 0;

    let mut cost2 = vec![0.0; total];
    cost2[..n].copy_from_slice(&lp.cost);
    let end = s.run_phase(&cost2, false);
    let status = match end {
        PhaseEnd::Optimal => LpStatus::Optimal,
        PhaseEnd::Unbounded => LpStatus::Unbounded,
        PhaseEnd::Limit => LpStatus::IterationLimit,
        PhaseEnd::Numerical => LpStatus::NumericalFailure,
    };
    if status != LpStatus::Optimal {
        return fail(status, s.iterations);
    }
    if !s.refactor() {
        return fail(LpStatus::NumericalFailure, s.iterations);
    }
    let mut xs: Vec<f64> = s.x[..n].to_vec();
    for (j, v) in xs.iter_mut().enumerate() {
        *v = v.clamp(lp.lower[j], lp.upper[j]);
    }
    let objective = xs.iter().zip(&lp.cost).map(|(a, c)| a * c).sum();
    LpResult {
        status,
        x: xs,
        objective,
        iterations: s.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(
        lower: Vec<f64>,
        upper: Vec<f64>,
        cost: Vec<f64>,
        rows: Vec<(Vec<(usize, f64)>, RowSense, f64)>,
    ) -> LpData {
        LpData {
            lower,
            upper,
            cost,
            rows,
        }
    }

    #[test]
    fn two_var_vertex() {
        // max 3x + 2y st x + y <= 4, x + 3y <= 6
        let p = lp(
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
            vec![-3.0, -2.0],
            vec![
                (vec![(0, 1.0), (1, 1.0)], RowSense::Le, 4.0),
                (vec![(0, 1.0), (1, 3.0)], RowSense::Le, 6.0),
            ],
        );
        let r = solve_dense(&p, DenseTolerances::default());
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 12.0).abs() < 1e-9);
        assert!((r.x[0] - 4.0).abs() < 1e-9 && r.x[1].abs() < 1e-9);
    }

    #[test]
    fn empty_rows() {
        let p = lp(vec![0.0, -1.0], vec![1.0, 2.0], vec![0.0, 1.0], vec![]);
        let r = solve_dense(&p, DenseTolerances::default());
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.x[1], -1.0);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = lp(
            vec![0.0],
            vec![1.0],
            vec![0.0],
            vec![(vec![(0, 1.0)], RowSense::Ge, 2.0)],
        );
        assert_eq!(
            solve_dense(&p, DenseTolerances::default()).status,
            LpStatus::Infeasible
        );
        let p = lp(
            vec![0.0, 0.0],
            vec![f64::INFINITY; 2],
            vec![-1.0, 0.0],
            vec![(vec![(0, 1.0), (1, -1.0)], RowSense::Le, 1.0)],
        );
        assert_eq!(
            solve_dense(&p, DenseTolerances::default()).status,
            LpStatus::Unbounded
        );
    }

    #[test]
    fn equality_and_free_vars() {
        // min x + y, x - y = 1, x free, y in [-5, 5] -> y = -5, x = -4
        let p = lp(
            vec![f64::NEG_INFINITY, -5.0],
            vec![f64::INFINITY, 5.0],
            vec![1.0, 1.0],
            vec![(vec![(0, 1.0), (1, -1.0)], RowSense::Eq, 1.0)],
        );
        let r = solve_dense(&p, DenseTolerances::default());
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0] + 4.0).abs() < 1e-9 && (r.x[1] + 5.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cycle_prone_instance_terminates() {
        // Beale's example, cycles under naive Dantzig pricing with bad tie rules
        let p = lp(
            vec![0.0; 4],
            vec![f64::INFINITY; 4],
            vec![-0.75, 150.0, -0.02, 6.0],
            vec![
                (
                    vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)],
                    RowSense::Le,
                    0.0,
                ),
                (
                    vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)],
                    RowSense::Le,
                    0.0,
                ),
                (vec![(2, 1.0)], RowSense::Le, 1.0),
            ],
        );
        let r = solve_dense(&p, DenseTolerances::default());
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 0.05).abs() < 1e-9);
    }
}
