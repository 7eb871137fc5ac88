//! Network data model, damage scenarios and restoration plans.
//!
//! All quantities are per unit on [`Network::base_mva`]; angles are radians.
//! Component ids are the ones from the source case (bus numbers, 1-based row
//! index for generators and branches) and are never renumbered.

mod damage;
mod multiperiod;
mod plan;
mod status;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use damage::{apply_damage, damage_count, random_damage, DamageScenario};
pub use multiperiod::{replicate, MultiPeriodCase};
pub use plan::{PlanSource, RestorationPlan};
pub use status::{
    apply_mrsp_selection, connected_islands, network_at_period, period_status, MrspSelection,
    StatusMap, INDICATOR_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Bus,
    Branch,
    Gen,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentKind::Bus => "bus",
            ComponentKind::Branch => "branch",
            ComponentKind::Gen => "gen",
        })
    }
}

/// Reference to a repairable component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentRef {
    pub kind: ComponentKind,
    pub id: usize,
}

impl ComponentRef {
    pub fn bus(id: usize) -> Self {
        ComponentRef {
            kind: ComponentKind::Bus,
            id,
        }
    }
    pub fn branch(id: usize) -> Self {
        ComponentRef {
            kind: ComponentKind::Branch,
            id,
        }
    }
    pub fn gen(id: usize) -> Self {
        ComponentRef {
            kind: ComponentKind::Gen,
            id,
        }
    }
}

impl fmt::Display for ComponentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusType {
    Pq,
    Pv,
    Ref,
    Isolated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub bus_type: BusType,
    /// Initial voltage magnitude from the case file.
    pub vm: f64,
    /// Initial voltage angle (rad).
    pub va: f64,
    pub base_kv: f64,
    pub vmin: f64,
    pub vmax: f64,
    pub in_service: bool,
    pub damaged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub f_bus: usize,
    pub t_bus: usize,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance.
    pub b_charge: f64,
    /// Apparent power limit; 0 means unlimited.
    pub rate_a: f64,
    pub tap: f64,
    pub shift: f64,
    pub angmin: f64,
    pub angmax: f64,
    pub in_service: bool,
    pub damaged: bool,
}

impl Branch {
    /// Series susceptance seen by the DC model, `1 / (x * tap)`.
    pub fn dc_susceptance(&self) -> f64 {
        1.0 / (self.x * self.tap)
    }

    pub fn has_thermal_limit(&self) -> bool {
        self.rate_a > 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    /// Dispatch from the case file, informational only.
    pub pg: f64,
    pub qg: f64,
    pub pmin: f64,
    pub pmax: f64,
    pub qmin: f64,
    pub qmax: f64,
    pub vg: f64,
    pub in_service: bool,
    pub damaged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub id: usize,
    pub bus: usize,
    pub pd: f64,
    pub qd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shunt {
    pub id: usize,
    pub bus: usize,
    pub gs: f64,
    pub bs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub name: String,
    pub base_mva: f64,
    pub buses: BTreeMap<usize, Bus>,
    pub branches: BTreeMap<usize, Branch>,
    pub gens: BTreeMap<usize, Generator>,
    pub loads: BTreeMap<usize, Load>,
    pub shunts: BTreeMap<usize, Shunt>,
    pub ref_buses: BTreeSet<usize>,
}

impl Network {
    pub fn empty(name: impl Into<String>, base_mva: f64) -> Self {
        Network {
            name: name.into(),
            base_mva,
            buses: BTreeMap::new(),
            branches: BTreeMap::new(),
            gens: BTreeMap::new(),
            loads: BTreeMap::new(),
            shunts: BTreeMap::new(),
            ref_buses: BTreeSet::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_mva > 0.0) {
            return Err(Error::InvalidNetwork("base_mva must be positive".into()));
        }
        for b in self.buses.values() {
            if !(b.vmin > 0.0) || b.vmin > b.vmax {
                return Err(Error::NonPositiveVoltageBounds(b.id));
            }
        }
        for br in self.branches.values() {
            for bus in [br.f_bus, br.t_bus] {
                if !self.buses.contains_key(&bus) {
                    return Err(Error::InvalidBusRef {
                        kind: "branch",
                        id: br.id,
                        bus,
                    });
                }
            }
            if br.x == 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "branch {} has zero reactance",
                    br.id
                )));
            }
            if !(br.tap > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "branch {} has non-positive tap",
                    br.id
                )));
            }
            if !(br.angmin < br.angmax) {
                return Err(Error::InvalidNetwork(format!(
                    "branch {} angle bounds inverted",
                    br.id
                )));
            }
        }
        for g in self.gens.values() {
            if !self.buses.contains_key(&g.bus) {
                return Err(Error::InvalidBusRef {
                    kind: "gen",
                    id: g.id,
                    bus: g.bus,
                });
            }
            if g.pmin > g.pmax || g.qmin > g.qmax {
                return Err(Error::InvalidNetwork(format!(
                    "gen {} has inverted limits",
                    g.id
                )));
            }
        }
        for l in self.loads.values() {
            if !self.buses.contains_key(&l.bus) {
                return Err(Error::InvalidBusRef {
                    kind: "load",
                    id: l.id,
                    bus: l.bus,
                });
            }
            if l.pd < 0.0 {
                return Err(Error::NegativeDemand(l.bus));
            }
        }
        for s in self.shunts.values() {
            if !self.buses.contains_key(&s.bus) {
                return Err(Error::InvalidBusRef {
                    kind: "shunt",
                    id: s.id,
                    bus: s.bus,
                });
            }
        }
        for r in &self.ref_buses {
            if !self.buses.contains_key(r) {
                return Err(Error::InvalidBusRef {
                    kind: "ref",
                    id: *r,
                    bus: *r,
                });
            }
        }
        if !self.ref_buses.iter().any(|r| self.buses[r].in_service) {
            return Err(Error::NoRefBus);
        }
        Ok(())
    }

    pub fn contains(&self, c: ComponentRef) -> bool {
        match c.kind {
            ComponentKind::Bus => self.buses.contains_key(&c.id),
            ComponentKind::Branch => self.branches.contains_key(&c.id),
            ComponentKind::Gen => self.gens.contains_key(&c.id),
        }
    }

    /// Whether the component takes part in models at all.
    pub fn is_active(&self, c: ComponentRef) -> bool {
        match c.kind {
            ComponentKind::Bus => self.buses.get(&c.id).is_some_and(|b| b.in_service),
            ComponentKind::Branch => self.branches.get(&c.id).is_some_and(|b| {
                b.in_service && self.buses[&b.f_bus].in_service && self.buses[&b.t_bus].in_service
            }),
            ComponentKind::Gen => self
                .gens
                .get(&c.id)
                .is_some_and(|g| g.in_service && self.buses[&g.bus].in_service),
        }
    }

    pub fn is_damaged(&self, c: ComponentRef) -> bool {
        match c.kind {
            ComponentKind::Bus => self.buses.get(&c.id).is_some_and(|b| b.damaged),
            ComponentKind::Branch => self.branches.get(&c.id).is_some_and(|b| b.damaged),
            ComponentKind::Gen => self.gens.get(&c.id).is_some_and(|g| g.damaged),
        }
    }

    pub(crate) fn set_damaged(&mut self, c: ComponentRef, value: bool) {
        match c.kind {
            ComponentKind::Bus => self.buses.get_mut(&c.id).map(|b| b.damaged = value),
            ComponentKind::Branch => self.branches.get_mut(&c.id).map(|b| b.damaged = value),
            ComponentKind::Gen => self.gens.get_mut(&c.id).map(|g| g.damaged = value),
        };
    }

    pub(crate) fn set_in_service(&mut self, c: ComponentRef, value: bool) {
        match c.kind {
            ComponentKind::Bus => self.buses.get_mut(&c.id).map(|b| b.in_service = value),
            ComponentKind::Branch => self.branches.get_mut(&c.id).map(|b| b.in_service = value),
            ComponentKind::Gen => self.gens.get_mut(&c.id).map(|g| g.in_service = value),
        };
    }

    /// Active components flagged as damaged, ordered bus, branch, gen then id.
    pub fn damaged_components(&self) -> Vec<ComponentRef> {
        let buses = self
            .buses
            .values()
            .filter(|b| b.damaged)
            .map(|b| ComponentRef::bus(b.id));
        let branches = self
            .branches
            .values()
            .filter(|b| b.damaged)
            .map(|b| ComponentRef::branch(b.id));
        let gens = self
            .gens
            .values()
            .filter(|g| g.damaged)
            .map(|g| ComponentRef::gen(g.id));
        buses
            .chain(branches)
            .chain(gens)
            .filter(|c| self.is_active(*c))
            .collect()
    }

    pub fn total_load(&self) -> f64 {
        self.loads.values().map(|l| l.pd).sum()
    }
}

#[doc(hidden)]
pub mod testutil;
