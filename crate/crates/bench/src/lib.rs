//! Inputs shared by the benchmarks.

use std::path::{Path, PathBuf};

use grs_core::mip::{LinExpr, MipModel, ObjectiveSense, RowSense};
use grs_core::netio::read_matpower_file;
use grs_core::{DamageScenario, Network};

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn network(name: &str) -> Network {
    read_matpower_file(fixture_path(name)).expect("fixture parses")
}

pub fn damage(name: &str) -> DamageScenario {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture exists");
    serde_json::from_str(&text).expect("fixture is a damage scenario")
}

/// Multi-constraint knapsack with `n` items and deterministic weights.
pub fn knapsack(n: usize) -> MipModel {
    let mut m = MipModel::new(ObjectiveSense::Maximize);
    let items: Vec<_> = (0..n).map(|i| m.add_binary(format!("x{i}"))).collect();
    let mut obj = LinExpr::new();
    for (i, &x) in items.iter().enumerate() {
        obj.add(x, (7 + 13 * i % 11) as f64);
    }
    for k in 0..3 {
        let mut row = LinExpr::new();
        for (i, &x) in items.iter().enumerate() {
            row.add(x, (3 + (5 * i + 7 * k) % 9) as f64);
        }
        m.add_row(format!("cap{k}"), row, RowSense::Le, 2.5 * n as f64);
    }
    m.set_objective(ObjectiveSense::Maximize, obj);
    m
}
