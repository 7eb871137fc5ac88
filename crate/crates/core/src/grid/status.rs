use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ComponentKind, ComponentRef, MultiPeriodCase, Network, RestorationPlan};
use crate::error::{Error, Result};

/// Distance from {0, 1} within which a solver indicator is rounded.
pub const INDICATOR_TOL: f64 = 1e-6;

/// Energisation status by component; components absent from the map are
/// energised iff they are active and undamaged.
pub type StatusMap = BTreeMap<ComponentRef, bool>;

/// Raw MRSP indicator values for the damaged components.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MrspSelection {
    pub indicators: BTreeMap<ComponentRef, f64>,
}

impl MrspSelection {
    /// Rounds indicators to booleans.
    pub fn clean(&self) -> Result<BTreeMap<ComponentRef, bool>> {
        self.indicators
            .iter()
            .map(|(&c, &v)| {
                if (v - 1.0).abs() <= INDICATOR_TOL {
                    Ok((c, true))
                } else if v.abs() <= INDICATOR_TOL {
                    Ok((c, false))
                } else {
                    Err(Error::NonIntegralIndicator {
                        component: c,
                        value: v,
                    })
                }
            })
            .collect()
    }

    pub fn repaired(&self) -> Result<Vec<ComponentRef>> {
        Ok(self
            .clean()?
            .into_iter()
            .filter_map(|(c, on)| on.then_some(c))
            .collect())
    }
}

/// Applies an MRSP result: components left unrepaired are taken out of
/// service for good, selected ones stay damaged and restorable.
pub fn apply_mrsp_selection(net: &Network, selection: &MrspSelection) -> Result<Network> {
    let cleaned = selection.clean()?;
    let mut out = net.clone();
    for (c, repaired) in cleaned {
        if !net.contains(c) {
            return Err(Error::UnknownComponent(c));
        }
        if !repaired {
            out.set_in_service(c, false);
        }
    }
    Ok(out)
}

/// Energisation map of the damaged components in period `n` of a plan.
pub fn period_status(plan: &RestorationPlan, n: usize) -> StatusMap {
    plan.components
        .iter()
        .copied()
        .zip(plan.status[n].iter().map(|&z| z == 1))
        .collect()
}

/// The network as it stands in period `n`: energised repairs become
/// undamaged, components still awaiting repair are out of service.
pub fn network_at_period(
    case: &MultiPeriodCase,
    plan: &RestorationPlan,
    n: usize,
) -> Result<Network> {
    if n >= plan.status.len() {
        return Err(Error::PlanCaseMismatch(format!("plan has no period {n}")));
    }
    let mut net = case.base.clone();
    for (c, on) in period_status(plan, n) {
        if !net.contains(c) {
            return Err(Error::UnknownComponent(c));
        }
        if on {
            net.set_damaged(c, false);
        } else {
            net.set_in_service(c, false);
        }
    }
    Ok(net)
}

fn energized(net: &Network, status: &StatusMap, c: ComponentRef) -> bool {
    net.is_active(c) && status.get(&c).copied().unwrap_or(!net.is_damaged(c))
}

/// Partitions the energised buses into islands connected by energised
/// branches, ordered by smallest bus id.
pub fn connected_islands(net: &Network, status: &StatusMap) -> Vec<BTreeSet<usize>> {
    let buses: Vec<usize> = net
        .buses
        .keys()
        .copied()
        .filter(|&b| energized(net, status, ComponentRef::bus(b)))
        .collect();
    let index: BTreeMap<usize, usize> = buses.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let mut parent: Vec<usize> = (0..buses.len()).collect();

    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    for br in net.branches.values() {
        let c = ComponentRef {
            kind: ComponentKind::Branch,
            id: br.id,
        };
        if !energized(net, status, c) {
            continue;
        }
        let (Some(&a), Some(&b)) = (index.get(&br.f_bus), index.get(&br.t_bus)) else {
            continue;
        };
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            // keep the smaller index as root for stable output
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi] = lo;
        }
    }

    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (i, &b) in buses.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().insert(b);
    }
    let mut islands: Vec<BTreeSet<usize>> = groups.into_values().collect();
    islands.sort_by_key(|s| *s.iter().next().unwrap());
    islands
}
