use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Instant;

use super::model::{Integrality, MipModel, ObjectiveSense};
use super::relax::{Outcome, Relaxation, Warm};
use super::{relative_gap, MipSolution, SolveOptions, SolveStats, SolveStatus, OPTIMALITY_GAP};
use crate::error::Result;

/// Extra cut rounds granted to an integral node whose cones are still violated.
const INTEGRAL_ROUND_FACTOR: usize = 20;
/// Rough budget (rows + columns summed over cached LPs) for warm-start
/// solutions kept alive on open nodes.
const WARM_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug)]
struct Key {
    bound: f64,
    id: usize,
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.id.cmp(&other.id))
    }
}

struct Node {
    fixings: Vec<(usize, f64)>,
    warm: Option<Warm>,
}

struct Search<'m> {
    model: &'m MipModel,
    opts: &'m SolveOptions,
    relax: Relaxation<'m>,
    binaries: Vec<usize>,
    incumbent: Option<(f64, Vec<f64>)>,
    nodes: usize,
    dropped: usize,
}

impl<'m> Search<'m> {
    /// Most fractional unfixed binary, ties to the smallest index.
    fn branching_var(&self, x: &[f64], fixings: &[(usize, f64)]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.binaries {
            let v = &self.model.vars[j];
            if v.lower == v.upper || fixings.iter().any(|(k, _)| *k == j) {
                continue;
            }
            let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
            if frac > self.opts.tol.int && best.is_none_or(|(_, f)| frac > f) {
                best = Some((j, frac));
            }
        }
        best.map(|(j, _)| j)
    }

    fn offer(&mut self, x: Vec<f64>) {
        let mut x = x;
        for &j in &self.binaries {
            x[j] = x[j].round();
        }
        let obj = self.relax.internal_objective(&x);
        if self
            .incumbent
            .as_ref()
            .is_none_or(|(best, _)| obj < *best - 1e-9)
        {
            log::debug!("new incumbent {obj:.6} after {} nodes", self.nodes);
            self.incumbent = Some((obj, x));
        }
    }

    /// Evaluates a node; returns the relaxation if it needs branching.
    fn evaluate(&mut self, fixings: &[(usize, f64)], warm: Option<&Warm>) -> Outcome {
        self.nodes += 1;
        let rounds = self.opts.cut_rounds;
        let mut out = self.relax.solve(fixings, warm, rounds);
        if let Outcome::Solved {
            x,
            cones_ok: false,
            warm: w,
            ..
        } = &out
        {
            if self.branching_var(x, fixings).is_none() {
                let w = w.clone();
                out = self
                    .relax
                    .solve(fixings, w.as_ref(), rounds * INTEGRAL_ROUND_FACTOR);
            }
        }
        out
    }

    fn dive(&mut self, root_x: &[f64], root_warm: Option<Warm>) {
        let mut fixings: Vec<(usize, f64)> = Vec::new();
        let mut warm = root_warm;
        let mut x = root_x.to_vec();
        for _ in 0..self.binaries.len() {
            // unfixed fractional binary closest to integral
            let mut pick: Option<(usize, f64)> = None;
            for &j in &self.binaries {
                if fixings.iter().any(|(k, _)| *k == j) {
                    continue;
                }
                let d = (x[j] - x[j].round()).abs();
                if d > self.opts.tol.int && pick.is_none_or(|(_, b)| d < b) {
                    pick = Some((j, d));
                }
            }
            let Some((j, _)) = pick else { return };
            let r = x[j].round().clamp(0.0, 1.0);
            let mut moved = false;
            for val in [r, 1.0 - r] {
                fixings.push((j, val));
                match self
                    .relax
                    .solve(&fixings, warm.as_ref(), self.opts.cut_rounds)
                {
                    Outcome::Solved {
                        x: nx,
                        cones_ok,
                        warm: w,
                        obj,
                    } => {
                        if self.incumbent.as_ref().is_some_and(|(b, _)| obj >= *b) {
                            return;
                        }
                        x = nx;
                        warm = w;
                        moved = true;
                        if cones_ok && self.branching_var(&x, &fixings).is_none() {
                            self.offer(x);
                            return;
                        }
                        break;
                    }
                    _ => {
                        fixings.pop();
                    }
                }
            }
            if !moved {
                return;
            }
        }
    }
}

fn to_model_sense(model: &MipModel, internal: f64) -> f64 {
    let sign = match model.objective.sense {
        ObjectiveSense::Minimize => 1.0,
        ObjectiveSense::Maximize => -1.0,
    };
    sign * internal + model.objective.constant
}

fn finish(
    model: &MipModel,
    status: SolveStatus,
    incumbent: Option<(f64, Vec<f64>)>,
    bound_internal: f64,
    stats: SolveStats,
    message: Option<String>,
) -> MipSolution {
    let (objective, values) = match incumbent {
        Some((o, x)) => (to_model_sense(model, o), Some(x)),
        None => (f64::NAN, None),
    };
    let bound = to_model_sense(model, bound_internal);
    let gap = if values.is_some() {
        relative_gap(objective, bound)
    } else {
        f64::INFINITY
    };
    MipSolution {
        status,
        values,
        objective,
        bound,
        gap,
        stats,
        message,
    }
}

/// Solves the continuous relaxation (integrality dropped, cones enforced by
/// cuts).
pub fn solve_lp(model: &MipModel, opts: &SolveOptions) -> Result<MipSolution> {
    model.validate()?;
    let started = Instant::now();
    let mut relax = Relaxation::new(model, opts.engine, opts.tol);
    let out = relax.solve(&[], None, opts.cut_rounds * INTEGRAL_ROUND_FACTOR);
    let mut stats = SolveStats {
        nodes: 1,
        lp_solves: relax.lp_solves,
        lp_iters: relax.lp_iters,
        cuts: relax.pool.len(),
        wall_time: started.elapsed(),
    };
    stats.wall_time = started.elapsed();
    Ok(match out {
        Outcome::Solved {
            x, obj, cones_ok, ..
        } => {
            let msg = (!cones_ok)
                .then(|| "cut budget exhausted with cone rows still violated".to_string());
            finish(model, SolveStatus::Optimal, Some((obj, x)), obj, stats, msg)
        }
        Outcome::Infeasible => finish(
            model,
            SolveStatus::Infeasible,
            None,
            f64::INFINITY,
            stats,
            None,
        ),
        Outcome::Unbounded => finish(
            model,
            SolveStatus::Unbounded,
            None,
            f64::NEG_INFINITY,
            stats,
            None,
        ),
        Outcome::Failed(m) => finish(
            model,
            SolveStatus::NumericalFailure,
            None,
            f64::NEG_INFINITY,
            stats,
            Some(m),
        ),
    })
}

/// Branch-and-bound with best-bound node selection.
///
/// Nodes are processed in order of their parent's relaxation bound, ties by
/// creation order; the most fractional binary is branched on, ties by
/// smallest index, with the down branch created first.
pub fn solve_mip(model: &MipModel, opts: &SolveOptions) -> Result<MipSolution> {
    model.validate()?;
    let started = Instant::now();
    let binaries: Vec<usize> = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.integrality == Integrality::Binary)
        .map(|(j, _)| j)
        .collect();
    let mut s = Search {
        model,
        opts,
        relax: Relaxation::new(model, opts.engine, opts.tol),
        binaries,
        incumbent: None,
        nodes: 0,
        dropped: 0,
    };
    let stats = |s: &Search| SolveStats {
        nodes: s.nodes,
        lp_solves: s.relax.lp_solves,
        lp_iters: s.relax.lp_iters,
        cuts: s.relax.pool.len(),
        wall_time: started.elapsed(),
    };

    let (root_x, root_bound, root_warm) = match s.evaluate(&[], None) {
        Outcome::Solved { x, obj, warm, .. } => (x, obj, warm),
        Outcome::Infeasible => {
            return Ok(finish(
                model,
                SolveStatus::Infeasible,
                None,
                f64::INFINITY,
                stats(&s),
                None,
            ))
        }
        Outcome::Unbounded => {
            return Ok(finish(
                model,
                SolveStatus::Unbounded,
                None,
                f64::NEG_INFINITY,
                stats(&s),
                None,
            ))
        }
        Outcome::Failed(m) => {
            return Ok(finish(
                model,
                SolveStatus::NumericalFailure,
                None,
                f64::NEG_INFINITY,
                stats(&s),
                Some(m),
            ))
        }
    };

    if let Some(start) = &opts.start {
        let mut fixings: Vec<(usize, f64)> = start.iter().map(|(v, x)| (v.0, *x)).collect();
        fixings.sort_by_key(|f| f.0);
        fixings.dedup_by_key(|f| f.0);
        if let Outcome::Solved {
            x, cones_ok: true, ..
        } = s
            .relax
            .solve(&fixings, None, opts.cut_rounds * INTEGRAL_ROUND_FACTOR)
        {
            if s.branching_var(&x, &[]).is_none() {
                s.offer(x);
            }
        }
    }

    let mut open: BTreeMap<Key, Node> = BTreeMap::new();
    let mut next_id = 0usize;
    open.insert(
        Key {
            bound: root_bound,
            id: next_id,
        },
        Node {
            fixings: Vec::new(),
            warm: None,
        },
    );
    next_id += 1;
    let size = model.vars.len() + model.rows.len();
    let warm_cap = (WARM_BUDGET / size.max(1)).clamp(8, 512);
    let mut pending_root = Some((root_x, root_warm));

    while let Some((&key, _)) = open.first_key_value() {
        if let Some((inc, _)) = &s.incumbent {
            if relative_gap(
                to_model_sense(model, *inc),
                to_model_sense(model, key.bound),
            ) <= opts.limits.gap
                || key.bound >= *inc
            {
                let bound = key.bound.min(*inc);
                let gap = relative_gap(to_model_sense(model, *inc), to_model_sense(model, bound));
                let status = if gap <= OPTIMALITY_GAP {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::GapLimit
                };
                return Ok(finish(
                    model,
                    status,
                    s.incumbent.clone(),
                    bound,
                    stats(&s),
                    dropped_msg(s.dropped),
                ));
            }
        }
        let over_nodes = opts.limits.nodes.is_some_and(|n| s.nodes >= n);
        let over_time = opts.limits.time.is_some_and(|t| started.elapsed() >= t);
        if over_nodes || over_time {
            let bound = s
                .incumbent
                .as_ref()
                .map_or(key.bound, |(i, _)| key.bound.min(*i));
            return Ok(finish(
                model,
                SolveStatus::IterationLimit,
                s.incumbent.clone(),
                bound,
                stats(&s),
                dropped_msg(s.dropped),
            ));
        }
        let node = open.remove(&key).expect("key present");

        let out = match pending_root.take() {
            Some((x, w)) => Outcome::Solved {
                x,
                obj: key.bound,
                cones_ok: true,
                warm: w,
            },
            None => s.evaluate(&node.fixings, node.warm.as_ref()),
        };
        let (x, obj, warm) = match out {
            Outcome::Solved { x, obj, warm, .. } => (x, obj, warm),
            Outcome::Infeasible => continue,
            Outcome::Unbounded | Outcome::Failed(_) => {
                s.dropped += 1;
                continue;
            }
        };
        if s.incumbent
            .as_ref()
            .is_some_and(|(inc, _)| obj >= *inc - 1e-9)
        {
            continue;
        }
        let Some(j) = s.branching_var(&x, &node.fixings) else {
            if s.model
                .cones
                .iter()
                .all(|c| c.violation(&x) <= opts.tol.cone)
            {
                s.offer(x);
            } else {
                log::warn!("dropping integral node with unresolved cone violation");
                s.dropped += 1;
            }
            continue;
        };
        if node.fixings.is_empty() && opts.dive && s.incumbent.is_none() {
            s.dive(&x, warm.clone());
        }
        let keep_warm = s.relax.is_sparse() && open.len() < warm_cap;
        for val in [0.0, 1.0] {
            let mut fixings = node.fixings.clone();
            fixings.push((j, val));
            let w = if keep_warm { warm.clone() } else { None };
            open.insert(
                Key {
                    bound: obj,
                    id: next_id,
                },
                Node { fixings, warm: w },
            );
            next_id += 1;
        }
    }

    match s.incumbent.clone() {
        Some((inc, x)) => Ok(finish(
            model,
            SolveStatus::Optimal,
            Some((inc, x)),
            inc,
            stats(&s),
            dropped_msg(s.dropped),
        )),
        None => Ok(finish(
            model,
            SolveStatus::Infeasible,
            None,
            f64::INFINITY,
            stats(&s),
            dropped_msg(s.dropped),
        )),
    }
}

fn dropped_msg(dropped: usize) -> Option<String> {
    (dropped > 0).then(|| format!("{dropped} node(s) dropped after LP failures"))
}
