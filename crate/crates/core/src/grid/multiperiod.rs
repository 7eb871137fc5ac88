use serde::{Deserialize, Serialize};

use super::{apply_damage, ComponentRef, DamageScenario, Network};
use crate::error::{Error, Result};

/// A network replicated over restoration periods `0..=periods`.
///
/// Period 0 is the post-event state with every damaged component out of
/// service; repairs happen in periods `1..=periods` with at most
/// `repairs_per_period` newly energised components each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiPeriodCase {
    pub base: Network,
    pub periods: usize,
    pub repairs_per_period: usize,
    pub period_hours: f64,
    pub damage: DamageScenario,
}

impl MultiPeriodCase {
    /// Active damaged components, in canonical order.
    pub fn damaged(&self) -> Vec<ComponentRef> {
        self.base.damaged_components()
    }

    pub fn period_count(&self) -> usize {
        self.periods + 1
    }
}

/// Builds a multi-period case with the smallest uniform repair budget that
/// restores every damaged component by the last period.
///
/// With nothing to repair the case collapses to the single initial period.
pub fn replicate(
    net: &Network,
    dmg: &DamageScenario,
    periods: usize,
    period_hours: f64,
) -> Result<MultiPeriodCase> {
    if !(period_hours > 0.0) {
        return Err(Error::InvalidConfig("period_hours must be positive".into()));
    }
    let base = apply_damage(net, dmg)?;
    let damaged = base.damaged_components();
    let damage = DamageScenario::from_components(damaged.iter().copied());
    if damaged.is_empty() {
        return Ok(MultiPeriodCase {
            base,
            periods: 0,
            repairs_per_period: 0,
            period_hours,
            damage,
        });
    }
    if periods == 0 {
        return Err(Error::InvalidConfig(
            "at least one restoration period is required".into(),
        ));
    }
    let repairs_per_period = damaged.len().div_ceil(periods);
    Ok(MultiPeriodCase {
        base,
        periods,
        repairs_per_period,
        period_hours,
        damage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::testutil::{n_parallel_branches, three_bus};
    use proptest::prelude::*;

    fn budget(n_damaged: usize, k: usize) -> usize {
        let net = n_parallel_branches(n_damaged.max(1));
        let dmg = DamageScenario::from_components((1..=n_damaged).map(ComponentRef::branch));
        replicate(&net, &dmg, k, 1.0).unwrap().repairs_per_period
    }

    #[test]
    fn budgets() {
        assert_eq!(budget(11, 3), 4);
        assert_eq!(budget(6, 3), 2);
        assert_eq!(budget(1, 1), 1);
    }

    #[test]
    fn empty_damage_collapses() {
        let c = replicate(&three_bus(), &DamageScenario::default(), 3, 1.0).unwrap();
        assert_eq!((c.periods, c.repairs_per_period), (0, 0));
    }

    #[test]
    fn zero_periods_rejected() {
        let dmg = DamageScenario::from_components([ComponentRef::branch(1)]);
        assert!(replicate(&three_bus(), &dmg, 0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn budget_is_minimal(n in 1usize..30, k in 1usize..12) {
            let b = budget(n, k);
            prop_assert!(b * k >= n);
            prop_assert!((b - 1) * k < n);
        }
    }
}
