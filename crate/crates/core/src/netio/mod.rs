//! Case file input and report output.

mod matpower;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Network;

pub use matpower::{
    area_buses, load_network, parse_matpower, to_network, ParsedCase, RawCase, SkippedSection,
    DEFAULT_ANGLE_LIMIT,
};

/// Reads a Matpower file from disk.
pub fn read_matpower_file(path: impl AsRef<Path>) -> Result<Network> {
    let text = std::fs::read_to_string(path)?;
    load_network(&text)
}

pub fn network_to_json(net: &Network) -> Result<String> {
    Ok(serde_json::to_string_pretty(net)?)
}

pub fn network_from_json(text: &str) -> Result<Network> {
    let net: Network = serde_json::from_str(text)?;
    net.validate()?;
    Ok(net)
}

/// Served and shed load for one restoration period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodEns {
    pub period: usize,
    pub served_mw: f64,
    pub shed_mw: f64,
    /// Shed energy charged to this period (0 for an uncounted period 0).
    pub ens_mwh: f64,
    pub estimated_served_mw: Option<f64>,
    pub estimated_ens_mwh: Option<f64>,
}

/// Per-period energy-not-served accounting for a restoration plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsReport {
    pub total_load_mw: f64,
    pub period_hours: f64,
    pub count_initial_period: bool,
    pub periods: Vec<PeriodEns>,
    pub true_ens_mwh: f64,
    pub estimated_ens_mwh: Option<f64>,
    pub warnings: Vec<String>,
}

/// Rounds to 1e-3 (MW or MWh), the resolution of every report figure.
pub fn round_mw(x: f64) -> f64 {
    let r = (x * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl EnsReport {
    /// Builds a report from served MW per period (index = period).
    ///
    /// `estimated` carries the served MW predicted by the planning model.
    pub fn new(
        total_load_mw: f64,
        period_hours: f64,
        count_initial_period: bool,
        served_mw: &[f64],
        estimated: Option<&[f64]>,
        warnings: Vec<String>,
    ) -> Result<Self> {
        if served_mw.is_empty() {
            return Err(Error::InvalidReport(
                "report needs at least one period".into(),
            ));
        }
        if !(period_hours > 0.0) {
            return Err(Error::InvalidReport(
                "period length must be positive".into(),
            ));
        }
        if estimated.is_some_and(|e| e.len() != served_mw.len()) {
            return Err(Error::InvalidReport(
                "estimated series has a different length".into(),
            ));
        }
        let total = round_mw(total_load_mw);
        let mut periods = Vec::with_capacity(served_mw.len());
        for (n, &s) in served_mw.iter().enumerate() {
            let counted = n > 0 || count_initial_period;
            let served = round_mw(s.clamp(0.0, total_load_mw));
            let shed = round_mw(total - served);
            let (est_served, est_ens) = match estimated {
                Some(e) => {
                    let es = round_mw(e[n].clamp(0.0, total_load_mw));
                    (
                        Some(es),
                        Some(if counted {
                            round_mw((total - es) * period_hours)
                        } else {
                            0.0
                        }),
                    )
                }
                None => (None, None),
            };
            periods.push(PeriodEns {
                period: n,
                served_mw: served,
                shed_mw: shed,
                ens_mwh: if counted {
                    round_mw(shed * period_hours)
                } else {
                    0.0
                },
                estimated_served_mw: est_served,
                estimated_ens_mwh: est_ens,
            });
        }
        let true_ens_mwh = round_mw(periods.iter().map(|p| p.ens_mwh).sum());
        let estimated_ens_mwh =
            estimated.map(|_| round_mw(periods.iter().filter_map(|p| p.estimated_ens_mwh).sum()));
        Ok(EnsReport {
            total_load_mw: total,
            period_hours,
            count_initial_period,
            periods,
            true_ens_mwh,
            estimated_ens_mwh,
            warnings,
        })
    }

    /// First period from which no load is shed for the rest of the horizon.
    pub fn full_service_period(&self) -> Option<usize> {
        let last_shedding = self.periods.iter().rposition(|p| p.shed_mw > 0.0);
        match last_shedding {
            None => Some(0),
            Some(i) if i + 1 < self.periods.len() => Some(i + 1),
            Some(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Serialises a report. CSV has one row per period and a `total` row.
pub fn write_report(report: &EnsReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut v = serde_json::to_vec_pretty(report).expect("report serialises");
            v.push(b'\n');
            v
        }
        ReportFormat::Csv => {
            let mut s = String::from("period,served_mw,shed_mw,ens_mwh\n");
            for p in &report.periods {
                s.push_str(&format!(
                    "{},{:.3},{:.3},{:.3}\n",
                    p.period, p.served_mw, p.shed_mw, p.ens_mwh
                ));
            }
            let served: f64 = report.periods.iter().map(|p| p.served_mw).sum();
            let shed: f64 = report.periods.iter().map(|p| p.shed_mw).sum();
            s.push_str(&format!(
                "total,{:.3},{:.3},{:.3}\n",
                round_mw(served),
                round_mw(shed),
                report.true_ens_mwh
            ));
            s.into_bytes()
        }
    }
}
