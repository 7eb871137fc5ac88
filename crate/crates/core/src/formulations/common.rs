use std::collections::BTreeMap;

use super::{dc, soc, Formulation, FormulationOptions};
use crate::error::Result;
use crate::grid::{ComponentRef, Network};
use crate::mip::{LinExpr, MipModel, RowSense, VarId};

/// On/off state of a component inside a model: always on, or a binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ind {
    One,
    Var(VarId),
}

impl Ind {
    /// Adds `coef * z` to `e`.
    pub fn add_to(self, e: &mut LinExpr, coef: f64) {
        match self {
            Ind::One => e.add_constant(coef),
            Ind::Var(v) => e.add(v, coef),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Fixed full demand.
    Mrsp,
    /// Load and shunt fractions are variables.
    Rop,
}

pub(crate) struct PeriodVars {
    pub ind: BTreeMap<ComponentRef, Ind>,
    pub loads: BTreeMap<usize, VarId>,
    pub shunts: BTreeMap<usize, VarId>,
}

impl PeriodVars {
    pub fn of(&self, c: ComponentRef) -> Ind {
        self.ind.get(&c).copied().unwrap_or(Ind::One)
    }
}

/// Active components that need an indicator: the damaged ones plus branches
/// and generators attached to a damaged bus.
fn switchable(net: &Network) -> Vec<ComponentRef> {
    let bus_damaged = |b: usize| net.buses[&b].damaged;
    let mut out = Vec::new();
    for b in net.buses.values() {
        let c = ComponentRef::bus(b.id);
        if b.damaged && net.is_active(c) {
            out.push(c);
        }
    }
    for br in net.branches.values() {
        let c = ComponentRef::branch(br.id);
        if net.is_active(c) && (br.damaged || bus_damaged(br.f_bus) || bus_damaged(br.t_bus)) {
            out.push(c);
        }
    }
    for g in net.gens.values() {
        let c = ComponentRef::gen(g.id);
        if net.is_active(c) && (g.damaged || bus_damaged(g.bus)) {
            out.push(c);
        }
    }
    out
}

/// Adds one network period: indicators, demand variables, dependency rows
/// and the formulation's power-flow model.
pub(crate) fn period(
    m: &mut MipModel,
    net: &Network,
    form: Formulation,
    opts: &FormulationOptions,
    mode: Mode,
    tag: &str,
) -> Result<PeriodVars> {
    let mut ind = BTreeMap::new();
    for c in switchable(net) {
        let v = m.add_binary(format!("z_{}{}{tag}", c.kind, c.id));
        ind.insert(c, Ind::Var(v));
    }
    let mut pv = PeriodVars {
        ind,
        loads: BTreeMap::new(),
        shunts: BTreeMap::new(),
    };

    if mode == Mode::Rop {
        for l in net.loads.values() {
            if net.buses[&l.bus].in_service {
                let v = m.add_continuous(format!("zd_{}{tag}", l.id), 0.0, 1.0);
                pv.loads.insert(l.id, v);
            }
        }
        for s in net.shunts.values() {
            if net.buses[&s.bus].in_service {
                let v = m.add_continuous(format!("zs_{}{tag}", s.id), 0.0, 1.0);
                pv.shunts.insert(s.id, v);
            }
        }
    }

    // a bus must be on if anything attached to it is on
    let dep = |m: &mut MipModel, name: String, child: Ind, bus: usize| {
        if let (Ind::Var(c), Ind::Var(b)) = (child, pv.of(ComponentRef::bus(bus))) {
            m.add_row(
                name,
                LinExpr::new().term(c, 1.0).term(b, -1.0),
                RowSense::Le,
                0.0,
            );
        }
    };
    for br in net.branches.values() {
        let c = ComponentRef::branch(br.id);
        if net.is_active(c) {
            dep(m, format!("dep_br{}_f{tag}", br.id), pv.of(c), br.f_bus);
            dep(m, format!("dep_br{}_t{tag}", br.id), pv.of(c), br.t_bus);
        }
    }
    for g in net.gens.values() {
        let c = ComponentRef::gen(g.id);
        if net.is_active(c) {
            dep(m, format!("dep_gen{}{tag}", g.id), pv.of(c), g.bus);
        }
    }
    for l in net.loads.values() {
        if let Some(&v) = pv.loads.get(&l.id) {
            dep(m, format!("dep_load{}{tag}", l.id), Ind::Var(v), l.bus);
        }
    }
    for s in net.shunts.values() {
        if let Some(&v) = pv.shunts.get(&s.id) {
            dep(m, format!("dep_shunt{}{tag}", s.id), Ind::Var(v), s.bus);
        }
    }

    match form {
        Formulation::Dc => dc::add_period(m, net, &pv, opts, mode, tag),
        Formulation::Soc => soc::add_period(m, net, &pv, mode, tag),
    }
    Ok(pv)
}
