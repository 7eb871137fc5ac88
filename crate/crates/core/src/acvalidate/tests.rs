use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::grid::testutil::{five_bus_ring, gen, n_parallel_branches};
use crate::grid::{replicate, DamageScenario, Network};

fn island(buses: &[usize]) -> BTreeSet<usize> {
    buses.iter().copied().collect()
}

fn problem<'a>(net: &'a Network, isl: &'a BTreeSet<usize>, slack: usize) -> PfProblem<'a> {
    PfProblem {
        net,
        island: isl,
        slack_gen: slack,
        gen_p: BTreeMap::new(),
        load_fraction: BTreeMap::new(),
        load_scale: 1.0,
    }
}

#[test]
fn single_bus_without_load_needs_no_iterations() {
    let mut net = n_parallel_branches(1);
    net.loads.clear();
    let isl = island(&[1]);
    let s = newton_pf(&problem(&net, &isl, 1)).unwrap();
    assert_eq!(s.iterations, 0);
    assert_eq!(s.buses[&1], BusState { vm: 1.0, va: 0.0 });
    assert!(s.gens[&1].pg.abs() < 1e-12);
}

#[test]
fn two_bus_angle_with_regulated_voltages() {
    // a zero-output unit holds bus 2 at 1 pu, so p = sin(theta) / x
    let mut net = n_parallel_branches(1);
    net.loads.get_mut(&1).unwrap().pd = 0.5;
    let mut g = gen(2, 2, 0.0);
    g.qmin = -1.0;
    g.qmax = 1.0;
    net.gens.insert(2, g);
    let isl = island(&[1, 2]);
    let s = newton_pf(&problem(&net, &isl, 1)).unwrap();
    let theta = s.buses[&1].va - s.buses[&2].va;
    assert!((theta - 0.05f64.asin()).abs() < 1e-6, "{theta}");
    assert!(s.mismatch <= PF_TOL);
}

#[test]
fn two_bus_angle_with_unregulated_load_bus() {
    // q_to = 0 forces V2 = cos(theta), so p = sin(2 theta) / (2x)
    let mut net = n_parallel_branches(1);
    net.loads.get_mut(&1).unwrap().pd = 0.5;
    let isl = island(&[1, 2]);
    let s = newton_pf(&problem(&net, &isl, 1)).unwrap();
    let theta = s.buses[&1].va - s.buses[&2].va;
    assert!((theta - 0.5 * (2.0 * 0.5 * 0.1f64).asin()).abs() < 1e-8);
    assert!((s.buses[&2].vm - theta.cos()).abs() < 1e-8);
    assert!((s.gens[&1].pg - 0.5).abs() < 1e-8);
}

#[test]
fn select_slack_prefers_largest_then_lowest_id() {
    let mut net = five_bus_ring();
    let isl: BTreeSet<usize> = net.buses.keys().copied().collect();
    assert_eq!(select_slack(&net, &isl), Some(1));
    net.gens.get_mut(&2).unwrap().pmax = 3.0;
    assert_eq!(select_slack(&net, &isl), Some(1));
    net.gens.get_mut(&2).unwrap().pmax = 3.5;
    assert_eq!(select_slack(&net, &isl), Some(2));
    assert_eq!(select_slack(&net, &island(&[2, 3])), None);
}

#[test]
fn q_limit_switches_bus_to_pq() {
    let mut net = n_parallel_branches(1);
    net.loads.get_mut(&1).unwrap().qd = 0.3;
    let mut g = gen(2, 2, 0.0);
    g.qmin = -0.1;
    g.qmax = 0.1;
    net.gens.insert(2, g);
    let isl = island(&[1, 2]);
    let s = newton_pf(&problem(&net, &isl, 1)).unwrap();
    assert!(s.gens[&2].q_limited);
    assert!((s.gens[&2].qg - 0.1).abs() < 1e-8);
    assert!(s.buses[&2].vm < 1.0);
}

/// Served fraction at which the sending-end apparent power of a lossless
/// branch from a 1 pu slack to an unregulated bus reaches `rate`:
/// |S_fr| = sin(theta) / x and p = sin(theta) cos(theta) / x.
fn thermal_lambda(x: f64, rate: f64, load: f64) -> f64 {
    let s = rate * x;
    (s * (1.0 - s * s).sqrt() / x / load).min(1.0)
}

#[test]
fn thermal_limit_caps_load_scale() {
    let net = n_parallel_branches(1);
    let d = max_load_delivery(&net, &BTreeMap::new());
    let expected = thermal_lambda(0.1, 0.6, 1.0);
    let lambda = d.islands[0].lambda;
    assert!(
        lambda <= expected + 1e-9 && lambda >= expected - LAMBDA_TOL,
        "{lambda} vs {expected}"
    );
    assert_eq!(d.islands[0].binding, Some(Binding::Thermal { branch: 1 }));
}

#[test]
fn full_network_serves_everything() {
    let net = five_bus_ring();
    let d = max_load_delivery(&net, &BTreeMap::new());
    assert_eq!(d.islands.len(), 1);
    assert_eq!(d.islands[0].lambda, 1.0);
    let s = d.islands[0].state.as_ref().unwrap();
    assert!(s.mismatch <= PF_TOL);
    let served = d.served(&net);
    assert!((served - net.total_load()).abs() < 1e-12);
    // lossless lines: generation equals demand
    assert!((s.total_generation() - served).abs() < 1e-6);
    assert!(s.losses().abs() < 1e-6);
}

#[test]
fn isolated_loads_get_nothing() {
    let mut net = five_bus_ring();
    for br in net.branches.values_mut() {
        br.in_service = false;
    }
    let d = max_load_delivery(&net, &BTreeMap::new());
    assert_eq!(d.islands.len(), 5);
    assert_eq!(d.served(&net), 0.0);
    assert!(d.warnings().next().is_none());
}

#[test]
fn floor_keeps_previous_service() {
    let net = n_parallel_branches(1);
    let prev = BTreeMap::from([(1, 0.3)]);
    let d = max_load_delivery(&net, &prev);
    assert!(d.load_fraction[&1] > 0.59);
    // a floor above what the branch carries is kept and flagged
    let prev = BTreeMap::from([(1, 0.9)]);
    let d = max_load_delivery(&net, &prev);
    assert_eq!(d.load_fraction[&1], 0.9);
    assert_eq!(d.warnings().count(), 1);
}

#[test]
fn undamaged_plan_has_no_ens() {
    let net = five_bus_ring();
    let case = replicate(&net, &DamageScenario::default(), 2, 1.0).unwrap();
    let n = case.period_count();
    let plan = crate::grid::RestorationPlan {
        source: crate::grid::PlanSource::Heuristic,
        periods: case.periods,
        repairs_per_period: case.repairs_per_period,
        components: vec![],
        status: vec![vec![]; n],
        load_ids: net.loads.keys().copied().collect(),
        load_fraction: vec![vec![1.0; 3]; n],
        objective_value: 0.0,
    };
    let r = redispatch_plan(&case, &plan, true).unwrap();
    assert_eq!(r.true_ens_mwh, 0.0);
    assert_eq!(r.estimated_ens_mwh, Some(0.0));
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut net = five_bus_ring();
    for (k, br) in net.branches.values_mut().enumerate() {
        br.r = 0.01 * (k + 1) as f64;
        br.b_charge = 0.02;
        br.tap = 1.0 + 0.01 * k as f64;
        br.shift = 0.01 * k as f64;
    }
    let buses: Vec<usize> = net.buses.keys().copied().collect();
    let y = ybus(&net, &buses);
    let vm = [1.02, 0.97, 1.05, 0.99, 1.01];
    let va = [0.0, -0.1, 0.05, -0.2, 0.12];
    let j = jacobian(&y, &vm, &va);
    let h = 1e-6;
    for c in 0..10 {
        let (mut vp, mut ap, mut vn, mut an) = (vm.to_vec(), va.to_vec(), vm.to_vec(), va.to_vec());
        if c < 5 {
            ap[c] += h;
            an[c] -= h;
        } else {
            vp[c - 5] += h;
            vn[c - 5] -= h;
        }
        let (pp, qp) = injections(&y, &vp, &ap);
        let (pn, qn) = injections(&y, &vn, &an);
        for r in 0..10 {
            let fd = if r < 5 {
                (pp[r] - pn[r]) / (2.0 * h)
            } else {
                (qp[r - 5] - qn[r - 5]) / (2.0 * h)
            };
            assert!(
                (j[(r, c)] - fd).abs() <= 1e-5 * fd.abs().max(1.0),
                "({r},{c}) {} vs {fd}",
                j[(r, c)]
            );
        }
    }
}
