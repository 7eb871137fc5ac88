//! MRSP and ROP model builders.
//!
//! Both problems share one per-period network model: an indicator per
//! damaged component (and per undamaged branch or generator hanging off a
//! damaged bus), power-flow variables and rows for the chosen formulation,
//! and dependency rows `z_child <= z_bus`. The MRSP uses a single period with
//! fixed full demand and minimises the number of repairs; the ROP stacks
//! `K + 1` periods with shedding, adds the inter-period rows and maximises
//! delivered load.

mod common;
mod dc;
mod soc;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    Branch, ComponentRef, MrspSelection, MultiPeriodCase, Network, PlanSource, RestorationPlan,
    INDICATOR_TOL,
};
use crate::mip::{
    solve_mip, LinExpr, MipModel, MipSolution, ObjectiveSense, RowSense, SolveOptions, SolveStatus,
    VarId,
};

pub use common::Ind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Dc,
    Soc,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::Dc => "dc",
            Formulation::Soc => "soc",
        })
    }
}

impl FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dc" => Ok(Formulation::Dc),
            "soc" => Ok(Formulation::Soc),
            other => Err(Error::InvalidConfig(format!(
                "unknown formulation `{other}`"
            ))),
        }
    }
}

impl Formulation {
    pub fn plan_source(self) -> PlanSource {
        match self {
            Formulation::Dc => PlanSource::Dc,
            Formulation::Soc => PlanSource::Soc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulationOptions {
    /// Bound on every bus voltage angle in the DC model (rad).
    pub va_bound: f64,
}

impl Default for FormulationOptions {
    fn default() -> Self {
        FormulationOptions {
            va_bound: std::f64::consts::PI / 6.0,
        }
    }
}

/// Big-M for the DC on/off Ohm rows: the largest `|b' (va_f - va_t - shift)|`
/// reachable with every bus angle in `[-va_bound, va_bound]`.
pub fn bigm_for_branch(br: &Branch, va_bound: f64) -> f64 {
    br.dc_susceptance().abs() * (2.0 * va_bound + br.shift.abs())
}

/// MRSP model plus the indicator of every damaged component.
#[derive(Clone, Debug)]
pub struct MrspModel {
    pub model: MipModel,
    pub indicators: Vec<(ComponentRef, VarId)>,
}

/// Per-period handles of an ROP model.
#[derive(Clone, Debug)]
pub struct RopPeriod {
    /// Indicator per damaged component, aligned with [`MultiPeriodCase::damaged`].
    pub status: Vec<VarId>,
    /// Served fraction per load (ordered by load id); `None` for loads on
    /// inactive buses, which are never served.
    pub loads: Vec<Option<VarId>>,
}

#[derive(Clone, Debug)]
pub struct RopModel {
    pub model: MipModel,
    pub components: Vec<ComponentRef>,
    pub load_ids: Vec<usize>,
    pub periods: Vec<RopPeriod>,
}

/// Builds the minimum restoration set model: serve the full demand with as
/// few repairs as possible.
pub fn build_mrsp(
    net: &Network,
    form: Formulation,
    opts: &FormulationOptions,
) -> Result<MrspModel> {
    net.validate()?;
    let mut m = MipModel::new(ObjectiveSense::Minimize);
    let pv = common::period(&mut m, net, form, opts, common::Mode::Mrsp, "")?;
    let damaged = net.damaged_components();
    let indicators: Vec<(ComponentRef, VarId)> = damaged
        .iter()
        .map(|c| match pv.ind.get(c) {
            Some(Ind::Var(v)) => Ok((*c, *v)),
            _ => Err(Error::InvalidModel(format!("no indicator for {c}"))),
        })
        .collect::<Result<_>>()?;
    let mut obj = LinExpr::new();
    for (_, v) in &indicators {
        obj.add(*v, 1.0);
    }
    m.set_objective(ObjectiveSense::Minimize, obj);
    Ok(MrspModel {
        model: m,
        indicators,
    })
}

/// Builds the restoration ordering model over periods `0..=K`.
///
/// With `fixed` given, every damaged-component indicator is pinned to that
/// plan's statuses, leaving a pure dispatch LP.
pub fn build_rop(
    case: &MultiPeriodCase,
    form: Formulation,
    opts: &FormulationOptions,
    fixed: Option<&RestorationPlan>,
) -> Result<RopModel> {
    case.base.validate()?;
    if let Some(p) = fixed {
        p.validate(case)?;
    }
    let net = &case.base;
    let components = case.damaged();
    let load_ids: Vec<usize> = net.loads.keys().copied().collect();
    let k = case.periods;
    let mut m = MipModel::new(ObjectiveSense::Maximize);
    let mut periods: Vec<RopPeriod> = Vec::with_capacity(k + 1);

    for n in 0..=k {
        let tag = format!("_{n}");
        let pv = common::period(&mut m, net, form, opts, common::Mode::Rop, &tag)?;
        let status: Vec<VarId> = components
            .iter()
            .map(|c| match pv.ind.get(c) {
                Some(Ind::Var(v)) => Ok(*v),
                _ => Err(Error::InvalidModel(format!("no indicator for {c}"))),
            })
            .collect::<Result<_>>()?;
        for (i, &v) in status.iter().enumerate() {
            let (lo, hi) = match fixed {
                Some(p) => {
                    let z = p.status[n][i] as f64;
                    (z, z)
                }
                None if n == 0 => (0.0, 0.0),
                None if n == k => (1.0, 1.0),
                None => (0.0, 1.0),
            };
            m.set_bounds(v, lo, hi);
        }
        let loads = load_ids
            .iter()
            .map(|id| pv.loads.get(id).copied())
            .collect();
        periods.push(RopPeriod { status, loads });
    }

    for n in 1..=k {
        let (prev, cur) = (&periods[n - 1], &periods[n]);
        let mut card = LinExpr::new();
        for (i, c) in components.iter().enumerate() {
            m.add_row(
                format!("energized_{}{}_{n}", c.kind, c.id),
                LinExpr::new()
                    .term(cur.status[i], 1.0)
                    .term(prev.status[i], -1.0),
                RowSense::Ge,
                0.0,
            );
            card.add(cur.status[i], 1.0);
            card.add(prev.status[i], -1.0);
        }
        m.add_row(
            format!("cardinality_{n}"),
            card,
            RowSense::Le,
            case.repairs_per_period as f64,
        );
        for (j, id) in load_ids.iter().enumerate() {
            if let (Some(a), Some(b)) = (cur.loads[j], prev.loads[j]) {
                m.add_row(
                    format!("load_increasing_{id}_{n}"),
                    LinExpr::new().term(a, 1.0).term(b, -1.0),
                    RowSense::Ge,
                    0.0,
                );
            }
        }
    }

    let mut obj = LinExpr::new();
    for p in &periods {
        for (j, id) in load_ids.iter().enumerate() {
            if let Some(v) = p.loads[j] {
                obj.add(v, net.loads[id].pd);
            }
        }
    }
    m.set_objective(ObjectiveSense::Maximize, obj);
    Ok(RopModel {
        model: m,
        components,
        load_ids,
        periods,
    })
}

fn round_indicator(c: ComponentRef, v: f64) -> Result<u8> {
    if (v - 1.0).abs() <= INDICATOR_TOL {
        Ok(1)
    } else if v.abs() <= INDICATOR_TOL {
        Ok(0)
    } else {
        Err(Error::NonIntegralIndicator {
            component: c,
            value: v,
        })
    }
}

/// Turns an ROP solution into a plan. Load fractions are clipped to [0, 1]
/// and made non-decreasing to absorb solver noise.
pub fn decode_plan(
    case: &MultiPeriodCase,
    rop: &RopModel,
    values: &[f64],
    source: PlanSource,
) -> Result<RestorationPlan> {
    let mut status = Vec::with_capacity(rop.periods.len());
    let mut load_fraction: Vec<Vec<f64>> = Vec::with_capacity(rop.periods.len());
    for p in &rop.periods {
        let row = rop
            .components
            .iter()
            .zip(&p.status)
            .map(|(c, v)| round_indicator(*c, values[v.0]))
            .collect::<Result<Vec<u8>>>()?;
        status.push(row);
        let mut fr: Vec<f64> = p
            .loads
            .iter()
            .map(|v| v.map_or(0.0, |v| values[v.0].clamp(0.0, 1.0)))
            .collect();
        if let Some(prev) = load_fraction.last() {
            for (f, q) in fr.iter_mut().zip(prev) {
                *f = f.max(*q);
            }
        }
        load_fraction.push(fr);
    }
    let mut plan = RestorationPlan {
        source,
        periods: case.periods,
        repairs_per_period: case.repairs_per_period,
        components: rop.components.clone(),
        status,
        load_ids: rop.load_ids.clone(),
        load_fraction,
        objective_value: 0.0,
    };
    let served: f64 = (0..plan.status.len()).map(|n| plan.served(case, n)).sum();
    plan.objective_value = served * case.base.base_mva * case.period_hours;
    plan.validate(case)?;
    Ok(plan)
}

pub fn decode_mrsp(mrsp: &MrspModel, values: &[f64]) -> MrspSelection {
    MrspSelection {
        indicators: mrsp
            .indicators
            .iter()
            .map(|(c, v)| (*c, values[v.0]))
            .collect(),
    }
}

fn check_status(stage: &'static str, sol: &MipSolution) -> Result<()> {
    match sol.status {
        SolveStatus::Infeasible => Err(Error::Infeasible { stage }),
        SolveStatus::Unbounded => Err(Error::Unbounded { stage }),
        SolveStatus::NumericalFailure => Err(Error::NumericalFailure(
            sol.message.clone().unwrap_or_else(|| stage.to_string()),
        )),
        _ if !sol.has_solution() => Err(Error::NoIncumbent { stage }),
        _ => Ok(()),
    }
}

/// Solves the MRSP and returns the raw selection with the solver report.
pub fn solve_mrsp(
    net: &Network,
    form: Formulation,
    fopts: &FormulationOptions,
    sopts: &SolveOptions,
) -> Result<(MrspSelection, MipSolution)> {
    let mrsp = build_mrsp(net, form, fopts)?;
    let mut sopts = sopts.clone();
    if sopts.start.is_none() {
        // repairing everything is feasible whenever anything is
        sopts.start = Some(mrsp.indicators.iter().map(|(_, v)| (*v, 1.0)).collect());
    }
    let sol = solve_mip(&mrsp.model, &sopts)?;
    match check_status("mrsp", &sol) {
        Err(Error::Infeasible { .. }) => return Err(Error::MrspInfeasible),
        other => other?,
    }
    let values = sol.values.as_ref().expect("checked");
    Ok((decode_mrsp(&mrsp, values), sol))
}

/// Solves the ROP, optionally seeded with a known feasible plan.
pub fn solve_rop(
    case: &MultiPeriodCase,
    form: Formulation,
    fopts: &FormulationOptions,
    sopts: &SolveOptions,
    seed_plan: Option<&RestorationPlan>,
) -> Result<(RestorationPlan, MipSolution)> {
    let rop = build_rop(case, form, fopts, None)?;
    let mut sopts = sopts.clone();
    if let (None, Some(p)) = (&sopts.start, seed_plan) {
        p.validate(case)?;
        let start: Vec<(VarId, f64)> = rop
            .periods
            .iter()
            .enumerate()
            .flat_map(|(n, per)| {
                per.status
                    .iter()
                    .enumerate()
                    .map(move |(i, v)| (*v, p.status[n][i] as f64))
            })
            .collect();
        sopts.start = Some(start);
    }
    let sol = solve_mip(&rop.model, &sopts)?;
    check_status("rop", &sol)?;
    let plan = decode_plan(
        case,
        &rop,
        sol.values.as_ref().expect("checked"),
        form.plan_source(),
    )?;
    Ok((plan, sol))
}

/// Served load per period (pu) of a fixed plan under a formulation, with
/// load fractions re-optimised. `None` when the plan is infeasible in that
/// model.
pub fn score_plan(
    case: &MultiPeriodCase,
    plan: &RestorationPlan,
    form: Formulation,
    fopts: &FormulationOptions,
    sopts: &SolveOptions,
) -> Result<Option<Vec<f64>>> {
    let rop = build_rop(case, form, fopts, Some(plan))?;
    let sol = solve_mip(&rop.model, sopts)?;
    if sol.status == SolveStatus::Infeasible {
        return Ok(None);
    }
    check_status("score", &sol)?;
    let x = sol.values.as_ref().expect("checked");
    Ok(Some(
        rop.periods
            .iter()
            .map(|p| {
                rop.load_ids
                    .iter()
                    .zip(&p.loads)
                    .filter_map(|(id, v)| v.map(|v| case.base.loads[id].pd * x[v.0]))
                    .sum()
            })
            .collect(),
    ))
}

/// Whether the full demand is servable once exactly the selected components
/// are repaired (the others staying out of service).
pub fn selection_is_feasible(
    net: &Network,
    selection: &BTreeMap<ComponentRef, bool>,
    form: Formulation,
    fopts: &FormulationOptions,
    sopts: &SolveOptions,
) -> Result<bool> {
    let mut fixed = net.clone();
    for (&c, &on) in selection {
        if !fixed.contains(c) {
            return Err(Error::UnknownComponent(c));
        }
        if on {
            fixed.set_damaged(c, false);
        } else {
            fixed.set_in_service(c, false);
        }
    }
    for c in net.damaged_components() {
        if !selection.contains_key(&c) {
            fixed.set_in_service(c, false);
        }
    }
    let mrsp = build_mrsp(&fixed, form, fopts)?;
    let sol = solve_mip(&mrsp.model, sopts)?;
    Ok(sol.status == SolveStatus::Optimal || sol.has_solution())
}

#[cfg(test)]
mod tests;
