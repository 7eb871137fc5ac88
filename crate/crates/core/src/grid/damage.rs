use std::collections::BTreeSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ComponentKind, ComponentRef, Network};
use crate::error::{Error, Result};

/// Set of damaged components, serialised as
/// `{"bus":[ids],"branch":[ids],"gen":[ids]}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DamageScenario {
    #[serde(default)]
    pub bus: BTreeSet<usize>,
    #[serde(default)]
    pub branch: BTreeSet<usize>,
    #[serde(default)]
    pub gen: BTreeSet<usize>,
}

impl DamageScenario {
    pub fn from_components(items: impl IntoIterator<Item = ComponentRef>) -> Self {
        let mut d = DamageScenario::default();
        for c in items {
            d.insert(c);
        }
        d
    }

    /// Every branch and generator of the network, buses left intact.
    pub fn all_branches_and_gens(net: &Network) -> Self {
        DamageScenario {
            bus: BTreeSet::new(),
            branch: net.branches.keys().copied().collect(),
            gen: net.gens.keys().copied().collect(),
        }
    }

    pub fn insert(&mut self, c: ComponentRef) {
        match c.kind {
            ComponentKind::Bus => self.bus.insert(c.id),
            ComponentKind::Branch => self.branch.insert(c.id),
            ComponentKind::Gen => self.gen.insert(c.id),
        };
    }

    pub fn contains(&self, c: ComponentRef) -> bool {
        match c.kind {
            ComponentKind::Bus => self.bus.contains(&c.id),
            ComponentKind::Branch => self.branch.contains(&c.id),
            ComponentKind::Gen => self.gen.contains(&c.id),
        }
    }

    pub fn items(&self) -> Vec<ComponentRef> {
        let buses = self.bus.iter().map(|&i| ComponentRef::bus(i));
        let branches = self.branch.iter().map(|&i| ComponentRef::branch(i));
        let gens = self.gen.iter().map(|&i| ComponentRef::gen(i));
        buses.chain(branches).chain(gens).collect()
    }

    pub fn len(&self) -> usize {
        self.bus.len() + self.branch.len() + self.gen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn resolve(&self, net: &Network) -> Result<()> {
        match self.items().into_iter().find(|c| !net.contains(*c)) {
            Some(c) => Err(Error::UnknownComponent(c)),
            None => Ok(()),
        }
    }
}

/// Number of components damaged out of `n` at `fraction`: nearest integer,
/// at least one when the fraction is positive.
pub fn damage_count(n: usize, fraction: f64) -> usize {
    if n == 0 || fraction <= 0.0 {
        return 0;
    }
    ((fraction * n as f64).round() as usize).clamp(1, n)
}

/// Seeded localized damage: for each requested component class, a uniform
/// sample of [`damage_count`] in-service components. Branches qualify when
/// both ends lie in `area`, generators when their bus does; no area means
/// the whole network.
pub fn random_damage(
    net: &Network,
    area: Option<&BTreeSet<usize>>,
    fraction: f64,
    kinds: &[ComponentKind],
    seed: u64,
) -> Result<DamageScenario> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!(
            "damage fraction {fraction} outside [0, 1]"
        )));
    }
    if let Some(b) = area.and_then(|a| a.iter().find(|b| !net.buses.contains_key(b))) {
        return Err(Error::InvalidConfig(format!("area bus {b} not in network")));
    }
    let inside = |b: usize| area.is_none_or(|a| a.contains(&b));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DamageScenario::default();
    for kind in [
        ComponentKind::Bus,
        ComponentKind::Branch,
        ComponentKind::Gen,
    ] {
        if !kinds.contains(&kind) {
            continue;
        }
        let pool: Vec<ComponentRef> = match kind {
            ComponentKind::Bus => net
                .buses
                .values()
                .filter(|b| b.in_service && inside(b.id))
                .map(|b| ComponentRef::bus(b.id))
                .collect(),
            ComponentKind::Branch => net
                .branches
                .values()
                .filter(|b| b.in_service && inside(b.f_bus) && inside(b.t_bus))
                .map(|b| ComponentRef::branch(b.id))
                .collect(),
            ComponentKind::Gen => net
                .gens
                .values()
                .filter(|g| g.in_service && inside(g.bus))
                .map(|g| ComponentRef::gen(g.id))
                .collect(),
        };
        let k = damage_count(pool.len(), fraction);
        for i in index::sample(&mut rng, pool.len(), k) {
            out.insert(pool[i]);
        }
    }
    Ok(out)
}

/// Flags the scenario's components as damaged, leaving everything else as is.
pub fn apply_damage(net: &Network, dmg: &DamageScenario) -> Result<Network> {
    dmg.resolve(net)?;
    let mut out = net.clone();
    for c in dmg.items() {
        out.set_damaged(c, true);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::testutil::three_bus;

    #[test]
    fn counts_round_with_floor_of_one() {
        assert_eq!(damage_count(9, 0.25), 2);
        assert_eq!(damage_count(10, 0.35), 4);
        assert_eq!(damage_count(3, 0.01), 1);
        assert_eq!(damage_count(3, 0.0), 0);
        assert_eq!(damage_count(0, 0.5), 0);
    }

    #[test]
    fn random_damage_is_seeded_and_local() {
        let net = crate::grid::testutil::five_bus_ring();
        let area: BTreeSet<usize> = [1, 2, 3].into();
        let kinds = [ComponentKind::Branch, ComponentKind::Gen];
        let a = random_damage(&net, Some(&area), 0.35, &kinds, 7).unwrap();
        let b = random_damage(&net, Some(&area), 0.35, &kinds, 7).unwrap();
        assert_eq!(a, b);
        // branches inside {1,2,3}: 1 (1-2), 2 (2-3), 6 (1-3); gens: 1
        assert_eq!(a.branch.len(), 1);
        assert!(a.branch.iter().all(|id| [1, 2, 6].contains(id)));
        assert_eq!(a.gen, [1].into());
        assert!(random_damage(&net, None, 1.5, &kinds, 0).is_err());
    }

    #[test]
    fn empty_scenario_is_identity() {
        let net = three_bus();
        assert_eq!(apply_damage(&net, &DamageScenario::default()).unwrap(), net);
    }

    #[test]
    fn single_branch_flag() {
        let net = three_bus();
        let dmg = DamageScenario::from_components([ComponentRef::branch(1)]);
        let out = apply_damage(&net, &dmg).unwrap();
        assert!(out.branches[&1].damaged);
        let mut expected = net.clone();
        expected.branches.get_mut(&1).unwrap().damaged = true;
        assert_eq!(out, expected);
    }

    #[test]
    fn unknown_component_is_rejected() {
        let net = three_bus();
        let dmg = DamageScenario::from_components([ComponentRef::gen(42)]);
        assert!(
            matches!(apply_damage(&net, &dmg), Err(Error::UnknownComponent(c)) if c == ComponentRef::gen(42))
        );
    }

    #[test]
    fn idempotent() {
        let net = three_bus();
        let dmg = DamageScenario::from_components([ComponentRef::branch(2), ComponentRef::gen(1)]);
        let once = apply_damage(&net, &dmg).unwrap();
        assert_eq!(apply_damage(&once, &dmg).unwrap(), once);
    }

    #[test]
    fn json_shape() {
        let dmg = DamageScenario::from_components([ComponentRef::branch(3), ComponentRef::gen(1)]);
        let s = serde_json::to_string(&dmg).unwrap();
        assert_eq!(s, r#"{"bus":[],"branch":[3],"gen":[1]}"#);
        let back: DamageScenario = serde_json::from_str(r#"{"branch":[3],"gen":[1]}"#).unwrap();
        assert_eq!(back, dmg);
    }
}
