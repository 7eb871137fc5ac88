#![allow(dead_code)]

pub mod ac;

use grs_core::mip::{
    solve_dense, DenseTolerances, Integrality, LinExpr, LpData, LpStatus, MipModel, ObjectiveSense,
    RowSense,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random bounded MILP that is feasible by construction.
pub fn random_milp(seed: u64) -> MipModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.gen_range(1..=8);
    let nc = rng.gen_range(0..=12);
    let sense = if rng.gen_bool(0.5) {
        ObjectiveSense::Maximize
    } else {
        ObjectiveSense::Minimize
    };
    let mut m = MipModel::new(sense);
    let mut point = Vec::new();
    for i in 0..nb {
        m.add_binary(format!("b{i}"));
        point.push(if rng.gen_bool(0.5) { 1.0 } else { 0.0 });
    }
    for i in 0..nc {
        let lo = rng.gen_range(-4..=0) as f64;
        let hi = lo + rng.gen_range(1..=6) as f64;
        m.add_continuous(format!("c{i}"), lo, hi);
        point.push(rng.gen_range(lo..=hi));
    }
    let n = nb + nc;
    let rows = rng.gen_range(1..=8);
    for r in 0..rows {
        let mut e = LinExpr::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                e.add(grs_core::mip::VarId(j), rng.gen_range(-5..=5) as f64);
            }
        }
        let act: f64 = e.terms.iter().map(|(v, c)| c * point[v.0]).sum();
        let (sense, rhs) = match rng.gen_range(0..5) {
            0 => (RowSense::Eq, act),
            1 | 2 => (RowSense::Le, act + rng.gen_range(0.0..3.0)),
            _ => (RowSense::Ge, act - rng.gen_range(0.0..3.0)),
        };
        m.add_row(format!("r{r}"), e, sense, rhs);
    }
    let mut obj = LinExpr::new();
    for j in 0..n {
        obj.add(grs_core::mip::VarId(j), rng.gen_range(-10..=10) as f64);
    }
    m.set_objective(sense, obj);
    m
}

/// Best objective over all binary assignments, each completed by an LP.
pub fn enumeration_oracle(m: &MipModel) -> Option<f64> {
    let bins: Vec<usize> = (0..m.vars.len())
        .filter(|&j| m.vars[j].integrality == Integrality::Binary)
        .collect();
    let sign = if m.objective.sense == ObjectiveSense::Maximize {
        -1.0
    } else {
        1.0
    };
    let mut cost = vec![0.0; m.vars.len()];
    for (v, c) in &m.objective.coeffs {
        cost[v.0] += sign * c;
    }
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << bins.len()) {
        let mut lp = LpData {
            lower: m.vars.iter().map(|v| v.lower).collect(),
            upper: m.vars.iter().map(|v| v.upper).collect(),
            cost: cost.clone(),
            rows: m
                .rows
                .iter()
                .map(|r| {
                    (
                        r.coeffs.iter().map(|(v, c)| (v.0, *c)).collect(),
                        r.sense,
                        r.rhs,
                    )
                })
                .collect(),
        };
        for (k, &j) in bins.iter().enumerate() {
            let val = ((mask >> k) & 1) as f64;
            lp.lower[j] = val;
            lp.upper[j] = val;
        }
        let r = solve_dense(&lp, DenseTolerances::default());
        if r.status == LpStatus::Optimal {
            let v = sign * r.objective + m.objective.constant;
            best = Some(match best {
                None => v,
                Some(b) if sign < 0.0 => b.max(v),
                Some(b) => b.min(v),
            });
        }
    }
    best
}
