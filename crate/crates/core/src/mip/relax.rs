//! LP relaxations of a [`MipModel`] with a shared pool of cone cuts.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::rc::Rc;

use microlp::{ComparisonOp, OptimizationDirection, Problem, Solution, SolveOutcome};

use super::cones::{gradient_cut, ConeCut};
use super::dense::{solve_dense, DenseTolerances, LpData, LpStatus};
use super::model::{MipModel, ObjectiveSense, RowSense};
use super::{LpEngine, Tolerances, AUTO_DENSE_LIMIT};

/// Solved sparse LP together with the node state it already contains.
#[derive(Clone)]
pub(crate) struct Warm {
    solution: Rc<Solution>,
    /// Pool indices of the cuts present in the LP.
    cuts: Rc<Vec<usize>>,
    fixings: usize,
}

pub(crate) enum Outcome {
    Solved {
        x: Vec<f64>,
        obj: f64,
        cones_ok: bool,
        warm: Option<Warm>,
    },
    Infeasible,
    Unbounded,
    Failed(String),
}

enum Current {
    Dense { x: Vec<f64>, obj: f64 },
    Sparse(Solution, Vec<usize>),
}

pub(crate) struct Relaxation<'m> {
    model: &'m MipModel,
    /// Minimisation costs.
    cost: Vec<f64>,
    sparse: bool,
    /// Retry a node on the dense engine when the sparse one fails.
    fallback: bool,
    pub pool: Vec<ConeCut>,
    base: LpData,
    vars: Vec<microlp::Variable>,
    root: Option<Warm>,
    tol: Tolerances,
    pub lp_solves: usize,
    pub lp_iters: usize,
}

fn op(sense: RowSense) -> ComparisonOp {
    match sense {
        RowSense::Le => ComparisonOp::Le,
        RowSense::Ge => ComparisonOp::Ge,
        RowSense::Eq => ComparisonOp::Eq,
    }
}

/// Runs a sparse-engine call, turning panics and interrupted solves into
/// [`Outcome::Failed`].
fn guarded(f: impl FnOnce() -> Result<SolveOutcome, microlp::Error>) -> Result<Solution, Outcome> {
    let r = catch_unwind(AssertUnwindSafe(f)).map_err(|e| {
        Outcome::Failed(
            e.downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| e.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "sparse LP engine panicked".into()),
        )
    })?;
    match r {
        Ok(SolveOutcome::Solution(s)) => Ok(s),
        Ok(SolveOutcome::Interrupted(i)) => Err(Outcome::Failed(format!(
            "sparse LP interrupted: {:?}",
            i.termination_reason()
        ))),
        Err(microlp::Error::Infeasible) => Err(Outcome::Infeasible),
        Err(microlp::Error::Unbounded) => Err(Outcome::Unbounded),
        Err(e) => Err(Outcome::Failed(format!("sparse LP engine: {e:?}"))),
    }
}

impl<'m> Relaxation<'m> {
    pub fn new(model: &'m MipModel, engine: LpEngine, tol: Tolerances) -> Self {
        let sign = match model.objective.sense {
            ObjectiveSense::Minimize => 1.0,
            ObjectiveSense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; model.vars.len()];
        for (v, c) in &model.objective.coeffs {
            cost[v.0] += sign * c;
        }
        let sparse = match engine {
            LpEngine::Dense => false,
            LpEngine::Sparse => true,
            LpEngine::Auto => model.vars.len() + model.rows.len() > AUTO_DENSE_LIMIT,
        };
        let base = LpData {
            lower: model.vars.iter().map(|v| v.lower).collect(),
            upper: model.vars.iter().map(|v| v.upper).collect(),
            cost: cost.clone(),
            rows: model
                .rows
                .iter()
                .map(|r| {
                    (
                        r.coeffs.iter().map(|(v, c)| (v.0, *c)).collect(),
                        r.sense,
                        r.rhs,
                    )
                })
                .collect(),
        };
        Relaxation {
            model,
            cost,
            sparse,
            fallback: engine == LpEngine::Auto,
            pool: Vec::new(),
            base,
            vars: Vec::new(),
            root: None,
            tol,
            lp_solves: 0,
            lp_iters: 0,
        }
    }

    pub fn is_sparse(&self) -> bool {
        self.sparse
    }

    pub fn internal_objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    fn solve_dense(&mut self, fixings: &[(usize, f64)]) -> Result<Current, Outcome> {
        let mut lp = self.base.clone();
        for &(j, v) in fixings {
            lp.lower[j] = v;
            lp.upper[j] = v;
        }
        for cut in &self.pool {
            lp.rows.push((
                cut.coeffs.iter().map(|(v, c)| (v.0, *c)).collect(),
                RowSense::Le,
                0.0,
            ));
        }
        let r = solve_dense(
            &lp,
            DenseTolerances {
                feas: self.tol.feas,
                opt: self.tol.opt,
            },
        );
        self.lp_solves += 1;
        self.lp_iters += r.iterations;
        match r.status {
            LpStatus::Optimal => Ok(Current::Dense {
                x: r.x,
                obj: r.objective,
            }),
            LpStatus::Infeasible => Err(Outcome::Infeasible),
            LpStatus::Unbounded => Err(Outcome::Unbounded),
            LpStatus::IterationLimit => {
                Err(Outcome::Failed("dense simplex iteration limit".into()))
            }
            LpStatus::NumericalFailure => {
                Err(Outcome::Failed("singular basis in dense simplex".into()))
            }
        }
    }

    fn cold_sparse(&mut self, fixings: &[(usize, f64)]) -> Result<Current, Outcome> {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let mut lower = self.base.lower.clone();
        let mut upper = self.base.upper.clone();
        for &(j, v) in fixings {
            lower[j] = v;
            upper[j] = v;
        }
        self.vars = (0..self.cost.len())
            .map(|j| p.add_var(self.cost[j], (lower[j], upper[j])))
            .collect();
        for r in &self.model.rows {
            let expr: Vec<(microlp::Variable, f64)> =
                r.coeffs.iter().map(|(v, c)| (self.vars[v.0], *c)).collect();
            p.add_constraint(expr, op(r.sense), r.rhs);
        }
        for cut in &self.pool {
            let expr: Vec<(microlp::Variable, f64)> = merged(cut)
                .into_iter()
                .map(|(v, c)| (self.vars[v], c))
                .collect();
            p.add_constraint(expr, ComparisonOp::Le, 0.0);
        }
        self.lp_solves += 1;
        guarded(|| p.solve()).map(|s| Current::Sparse(s, (0..self.pool.len()).collect()))
    }

    fn add_sparse_cut(&mut self, s: Solution, cut: &ConeCut) -> Result<Solution, Outcome> {
        let expr: Vec<(microlp::Variable, f64)> = merged(cut)
            .into_iter()
            .map(|(v, c)| (self.vars[v], c))
            .collect();
        self.lp_solves += 1;
        guarded(move || s.add_constraint(expr, ComparisonOp::Le, 0.0))
    }

    /// Applies the missing fixings to a warm LP. Pool cuts added since are
    /// separated lazily by the caller.
    fn warm_sparse(&mut self, fixings: &[(usize, f64)], warm: &Warm) -> Result<Current, Outcome> {
        let mut s: Solution = (*warm.solution).clone();
        for &(j, v) in &fixings[warm.fixings..] {
            let var = self.vars[j];
            self.lp_solves += 1;
            s = guarded(move || s.fix_var(var, v))?;
        }
        Ok(Current::Sparse(s, warm.cuts.as_ref().clone()))
    }

    fn values(&self, cur: &Current) -> (Vec<f64>, f64) {
        match cur {
            Current::Dense { x, obj } => (x.clone(), *obj),
            Current::Sparse(s, _) => {
                let x: Vec<f64> = self.vars.iter().map(|&v| s.var_value(v)).collect();
                let obj = self.internal_objective(&x);
                (x, obj)
            }
        }
    }

    /// Solves the relaxation with `fixings` applied, adding cone cuts for up
    /// to `rounds` rounds. `warm` must come from a node whose fixings are a
    /// prefix of `fixings`.
    pub fn solve(
        &mut self,
        fixings: &[(usize, f64)],
        warm: Option<&Warm>,
        rounds: usize,
    ) -> Outcome {
        let out = self.solve_once(fixings, warm, rounds);
        if let (Outcome::Failed(msg), true, true) = (&out, self.sparse, self.fallback) {
            log::debug!("sparse LP failed ({msg}), retrying node on the dense engine");
            self.sparse = false;
            let retry = self.solve_once(fixings, None, rounds);
            self.sparse = true;
            return retry;
        }
        out
    }

    fn solve_once(
        &mut self,
        fixings: &[(usize, f64)],
        warm: Option<&Warm>,
        rounds: usize,
    ) -> Outcome {
        let start = if !self.sparse {
            self.solve_dense(fixings)
        } else if let Some(w) = warm.or(self.root.as_ref()).cloned() {
            self.warm_sparse(fixings, &w)
        } else {
            self.cold_sparse(fixings)
        };
        let mut cur = match start {
            Ok(c) => c,
            Err(o) => return o,
        };
        let mut round = 0;
        loop {
            let (x, obj) = self.values(&cur);
            let violated: Vec<ConeCut> = self
                .model
                .cones
                .iter()
                .filter(|c| c.violation(&x) > self.tol.cone)
                .filter_map(|c| gradient_cut(c, &x))
                .collect();
            if violated.is_empty() || round >= rounds {
                let cones_ok = violated.is_empty();
                let warm = match cur {
                    Current::Sparse(s, cuts) => Some(Warm {
                        solution: Rc::new(s),
                        cuts: Rc::new(cuts),
                        fixings: fixings.len(),
                    }),
                    Current::Dense { .. } => None,
                };
                if fixings.is_empty() && self.root.is_none() {
                    self.root = warm.clone();
                }
                return Outcome::Solved {
                    x,
                    obj,
                    cones_ok,
                    warm,
                };
            }
            round += 1;
            cur = match cur {
                Current::Dense { .. } => {
                    self.pool.extend(violated);
                    match self.solve_dense(fixings) {
                        Ok(c) => c,
                        Err(o) => return o,
                    }
                }
                Current::Sparse(mut s, mut cuts) => {
                    // pooled cuts this LP lacks go in before fresh ones
                    let mut present = vec![false; self.pool.len()];
                    for &k in &cuts {
                        present[k] = true;
                    }
                    let stale: Vec<usize> = (0..self.pool.len())
                        .filter(|&k| !present[k] && self.pool[k].activity(&x) > self.tol.cone)
                        .collect();
                    if stale.is_empty() {
                        for cut in violated {
                            s = match self.add_sparse_cut(s, &cut) {
                                Ok(s) => s,
                                Err(o) => {
                                    self.pool.push(cut);
                                    return o;
                                }
                            };
                            cuts.push(self.pool.len());
                            self.pool.push(cut);
                        }
                    } else {
                        for k in stale {
                            let cut = self.pool[k].clone();
                            s = match self.add_sparse_cut(s, &cut) {
                                Ok(s) => s,
                                Err(o) => return o,
                            };
                            cuts.push(k);
                        }
                    }
                    Current::Sparse(s, cuts)
                }
            };
        }
    }
}

/// Cut terms with repeated variables summed (the sparse engine rejects duplicates).
fn merged(cut: &ConeCut) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(4);
    for (v, c) in &cut.coeffs {
        match out.iter_mut().find(|(j, _)| *j == v.0) {
            Some(e) => e.1 += c,
            None => out.push((v.0, *c)),
        }
    }
    out.retain(|(_, c)| *c != 0.0);
    out
}
