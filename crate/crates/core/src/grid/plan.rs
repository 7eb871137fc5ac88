use serde::{Deserialize, Serialize};

use super::{ComponentRef, MultiPeriodCase};
use crate::error::{Error, Result};

const FRACTION_TOL: f64 = 1e-6;

/// Where a plan came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanSource {
    Dc,
    Soc,
    Heuristic,
}

/// Per-period energisation of the damaged components and served load.
///
/// `status[n][i]` is 1 when `components[i]` is energised in period `n`;
/// `load_fraction[n][j]` is the served share of `load_ids[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestorationPlan {
    pub source: PlanSource,
    pub periods: usize,
    pub repairs_per_period: usize,
    pub components: Vec<ComponentRef>,
    pub status: Vec<Vec<u8>>,
    pub load_ids: Vec<usize>,
    pub load_fraction: Vec<Vec<f64>>,
    /// Estimated served energy over all periods (MWh).
    pub objective_value: f64,
}

impl RestorationPlan {
    /// Components energised for the first time in each period.
    pub fn repair_order(&self) -> Vec<Vec<ComponentRef>> {
        (0..self.status.len())
            .map(|n| {
                self.components
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| {
                        self.status[n][i] == 1 && (n == 0 || self.status[n - 1][i] == 0)
                    })
                    .map(|(_, &c)| c)
                    .collect()
            })
            .collect()
    }

    /// Served active power in period `n` (pu).
    pub fn served(&self, case: &MultiPeriodCase, n: usize) -> f64 {
        self.load_ids
            .iter()
            .zip(&self.load_fraction[n])
            .map(|(id, f)| case.base.loads[id].pd * f)
            .sum()
    }

    /// Checks the plan against the case and every plan invariant: statuses
    /// start off and end on, never switch off, respect the per-period repair
    /// budget, and served fractions stay within [0, 1] and never decrease.
    pub fn validate(&self, case: &MultiPeriodCase) -> Result<()> {
        let expected = case.damaged();
        if self.components != expected {
            return Err(Error::PlanCaseMismatch(
                "damaged component list differs".into(),
            ));
        }
        if self.periods != case.periods || self.status.len() != case.period_count() {
            return Err(Error::PlanCaseMismatch(format!(
                "plan covers {} periods, case has {}",
                self.status.len(),
                case.period_count()
            )));
        }
        let loads: Vec<usize> = case.base.loads.keys().copied().collect();
        if self.load_ids != loads || self.load_fraction.len() != self.status.len() {
            return Err(Error::PlanCaseMismatch("load list differs".into()));
        }
        let k = self.periods;
        for (n, row) in self.status.iter().enumerate() {
            if row.len() != self.components.len() || row.iter().any(|&z| z > 1) {
                return Err(Error::InvalidPlan(format!("malformed status row {n}")));
            }
        }
        if self.status[0].iter().any(|&z| z != 0) {
            return Err(Error::InvalidPlan(
                "damaged component energised in period 0".into(),
            ));
        }
        if self.status[k].iter().any(|&z| z != 1) {
            return Err(Error::InvalidPlan(
                "component still out of service in final period".into(),
            ));
        }
        for n in 1..=k {
            let mut new = 0;
            for (i, c) in self.components.iter().enumerate() {
                match (self.status[n - 1][i], self.status[n][i]) {
                    (1, 0) => {
                        return Err(Error::InvalidPlan(format!(
                            "{c} switched off in period {n}"
                        )))
                    }
                    (0, 1) => new += 1,
                    _ => {}
                }
            }
            if new > self.repairs_per_period {
                return Err(Error::InvalidPlan(format!(
                    "{new} repairs in period {n} exceed budget {}",
                    self.repairs_per_period
                )));
            }
        }
        for (n, row) in self.load_fraction.iter().enumerate() {
            if row.len() != self.load_ids.len() {
                return Err(Error::InvalidPlan(format!("malformed load row {n}")));
            }
            for (j, &f) in row.iter().enumerate() {
                if !(-FRACTION_TOL..=1.0 + FRACTION_TOL).contains(&f) {
                    return Err(Error::InvalidPlan(format!(
                        "load fraction {f} out of range"
                    )));
                }
                if n > 0 && f < self.load_fraction[n - 1][j] - FRACTION_TOL {
                    return Err(Error::InvalidPlan(format!(
                        "load {} served fraction decreases in period {n}",
                        self.load_ids[j]
                    )));
                }
            }
        }
        Ok(())
    }
}
