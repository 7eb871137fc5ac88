use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::pf::{energized, newton_pf, select_slack, PfProblem, PfState};
use crate::error::{Error, Result};
use crate::grid::{
    connected_islands, network_at_period, ComponentRef, MultiPeriodCase, Network, RestorationPlan,
};
use crate::netio::EnsReport;

/// Resolution of the load-scale search, as a fraction of island load.
pub const LAMBDA_TOL: f64 = 1e-4;
/// Slack allowed on flow, voltage and generator limits (pu).
pub const LIMIT_TOL: f64 = 1e-6;
/// Slack-loss correction passes per evaluated load scale.
const LOSS_PASSES: usize = 3;

/// Limit that stopped the load scale from growing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Binding {
    Thermal { branch: usize },
    Voltage { bus: usize },
    QLimit { gen: usize },
    PLimit { gen: usize },
    NonConvergence,
}

/// Result for one island of a period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IslandDispatch {
    pub buses: BTreeSet<usize>,
    pub slack_gen: Option<usize>,
    /// Served fraction of loads not held higher by their floor.
    pub lambda: f64,
    pub binding: Option<Binding>,
    /// Set when even the floor could not be served.
    pub warning: Option<String>,
    pub state: Option<PfState>,
}

/// AC dispatch of one restoration period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodDispatch {
    pub islands: Vec<IslandDispatch>,
    /// Served fraction per load id, every load of the network.
    pub load_fraction: BTreeMap<usize, f64>,
}

impl PeriodDispatch {
    /// Served active power (pu).
    pub fn served(&self, net: &Network) -> f64 {
        self.load_fraction
            .iter()
            .map(|(id, f)| net.loads[id].pd * f)
            .sum()
    }

    pub fn warnings(&self) -> impl Iterator<Item = &str> {
        self.islands.iter().filter_map(|i| i.warning.as_deref())
    }
}

/// Runs the power flow at one load scale, spreading demand plus the losses
/// of the previous pass over the generators in proportion to headroom.
fn evaluate(
    net: &Network,
    island: &BTreeSet<usize>,
    slack: usize,
    floors: &BTreeMap<usize, f64>,
    lambda: f64,
) -> std::result::Result<PfState, Binding> {
    let gens: Vec<usize> = net
        .gens
        .values()
        .filter(|g| island.contains(&g.bus) && energized(net, ComponentRef::gen(g.id)))
        .map(|g| g.id)
        .collect();
    let fractions: BTreeMap<usize, f64> = floors
        .iter()
        .map(|(&id, &f)| (id, f.max(lambda).min(1.0)))
        .collect();
    let demand: f64 = fractions.iter().map(|(id, f)| net.loads[id].pd * f).sum();
    let pmin: f64 = gens.iter().map(|g| net.gens[g].pmin).sum();
    let room: f64 = gens
        .iter()
        .map(|g| net.gens[g].pmax - net.gens[g].pmin)
        .sum();

    let mut losses = 0.0;
    let mut state = None;
    for _ in 0..LOSS_PASSES {
        let alpha = if room > 0.0 {
            ((demand + losses - pmin) / room).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let gen_p = gens
            .iter()
            .filter(|&&g| g != slack)
            .map(|g| {
                let gen = &net.gens[g];
                (*g, gen.pmin + alpha * (gen.pmax - gen.pmin))
            })
            .collect();
        let problem = PfProblem {
            net,
            island,
            slack_gen: slack,
            gen_p,
            load_fraction: fractions.clone(),
            load_scale: 0.0,
        };
        let s = newton_pf(&problem).map_err(|_| Binding::NonConvergence)?;
        losses = s.total_generation() - demand;
        state = Some(s);
    }
    let state = state.expect("at least one pass");
    check_limits(net, &state).map(|()| state)
}

fn check_limits(net: &Network, s: &PfState) -> std::result::Result<(), Binding> {
    for (&id, f) in &s.branches {
        let br = &net.branches[&id];
        if br.has_thermal_limit() && f.s_fr().max(f.s_to()) > br.rate_a + LIMIT_TOL {
            return Err(Binding::Thermal { branch: id });
        }
    }
    for (&id, b) in &s.buses {
        let bus = &net.buses[&id];
        if b.vm < bus.vmin - LIMIT_TOL || b.vm > bus.vmax + LIMIT_TOL {
            return Err(Binding::Voltage { bus: id });
        }
    }
    for (&id, g) in &s.gens {
        let gen = &net.gens[&id];
        if g.pg < gen.pmin - LIMIT_TOL || g.pg > gen.pmax + LIMIT_TOL {
            return Err(Binding::PLimit { gen: id });
        }
        if g.qg < gen.qmin - LIMIT_TOL || g.qg > gen.qmax + LIMIT_TOL {
            return Err(Binding::QLimit { gen: id });
        }
    }
    Ok(())
}

/// Largest uniform load scale each island of `net` can serve in AC.
///
/// Components count as energised when active and not damaged. `prev` holds
/// each load's served fraction in the previous period; a load is never
/// served less than that. Islands without an energised generator serve
/// nothing.
pub fn max_load_delivery(net: &Network, prev: &BTreeMap<usize, f64>) -> PeriodDispatch {
    let status = BTreeMap::new();
    let islands = connected_islands(net, &status);
    let mut load_fraction: BTreeMap<usize, f64> = net.loads.keys().map(|&id| (id, 0.0)).collect();
    let mut out = Vec::with_capacity(islands.len());

    for island in islands {
        let floors: BTreeMap<usize, f64> = net
            .loads
            .values()
            .filter(|l| island.contains(&l.bus))
            .map(|l| {
                (
                    l.id,
                    prev.get(&l.id).copied().unwrap_or(0.0).clamp(0.0, 1.0),
                )
            })
            .collect();
        let Some(slack) = select_slack(net, &island) else {
            let warning = floors.values().any(|&f| f > 0.0).then(|| {
                format!(
                    "island at bus {} lost its generation",
                    island.first().unwrap()
                )
            });
            out.push(IslandDispatch {
                buses: island,
                slack_gen: None,
                lambda: 0.0,
                binding: None,
                warning,
                state: None,
            });
            continue;
        };

        let floor = floors.values().copied().fold(1.0, f64::min);
        let mut dispatch = IslandDispatch {
            buses: island.clone(),
            slack_gen: Some(slack),
            lambda: 1.0,
            binding: None,
            warning: None,
            state: None,
        };
        match evaluate(net, &island, slack, &floors, 1.0) {
            Ok(s) => dispatch.state = Some(s),
            Err(top) => match evaluate(net, &island, slack, &floors, floor) {
                Err(b) => {
                    dispatch.lambda = floor;
                    dispatch.binding = Some(b.clone());
                    let what = if floor > 0.0 {
                        "its previous load"
                    } else {
                        "any load"
                    };
                    dispatch.warning = Some(format!(
                        "island at bus {} cannot serve {what} ({b:?})",
                        island.first().unwrap()
                    ));
                }
                Ok(s) => {
                    let (mut lo, mut hi) = (floor, 1.0);
                    let mut best = s;
                    let mut binding = top;
                    while hi - lo > LAMBDA_TOL {
                        let mid = 0.5 * (lo + hi);
                        match evaluate(net, &island, slack, &floors, mid) {
                            Ok(s) => {
                                lo = mid;
                                best = s;
                            }
                            Err(b) => {
                                hi = mid;
                                binding = b;
                            }
                        }
                    }
                    dispatch.lambda = lo;
                    dispatch.binding = Some(binding);
                    dispatch.state = Some(best);
                }
            },
        }
        for (&id, &f) in &floors {
            load_fraction.insert(id, f.max(dispatch.lambda).min(1.0));
        }
        out.push(dispatch);
    }
    PeriodDispatch {
        islands: out,
        load_fraction,
    }
}

/// AC dispatch of every period of a plan, each period floored by the one
/// before.
pub fn redispatch_periods(
    case: &MultiPeriodCase,
    plan: &RestorationPlan,
) -> Result<Vec<PeriodDispatch>> {
    plan.validate(case).map_err(|e| match e {
        Error::InvalidPlan(m) => Error::PlanCaseMismatch(m),
        other => other,
    })?;
    let mut prev = BTreeMap::new();
    let mut out = Vec::with_capacity(plan.status.len());
    for n in 0..plan.status.len() {
        let net = network_at_period(case, plan, n)?;
        let d = max_load_delivery(&net, &prev);
        prev = d.load_fraction.clone();
        out.push(d);
    }
    Ok(out)
}

/// Replays a plan through the AC model and reports true against estimated
/// energy not served.
pub fn redispatch_plan(
    case: &MultiPeriodCase,
    plan: &RestorationPlan,
    count_initial_period: bool,
) -> Result<EnsReport> {
    let dispatches = redispatch_periods(case, plan)?;
    let base = case.base.base_mva;
    let served: Vec<f64> = dispatches
        .iter()
        .map(|d| d.served(&case.base) * base)
        .collect();
    let estimated: Vec<f64> = (0..plan.status.len())
        .map(|n| plan.served(case, n) * base)
        .collect();
    let warnings = dispatches
        .iter()
        .enumerate()
        .flat_map(|(n, d)| d.warnings().map(move |w| format!("period {n}: {w}")))
        .collect();
    EnsReport::new(
        case.base.total_load() * base,
        case.period_hours,
        count_initial_period,
        &served,
        Some(&estimated),
        warnings,
    )
}
