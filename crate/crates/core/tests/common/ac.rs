//! Branch-flow formulas written out in real arithmetic, independent of the
//! crate's admittance matrix.

use std::collections::{BTreeMap, BTreeSet};

use grs_core::acvalidate::PfState;
use grs_core::grid::{Branch, Network};

/// `(p_fr, q_fr, p_to, q_to)` of a pi-model branch in polar form.
pub fn branch_flow(br: &Branch, vf: f64, af: f64, vt: f64, at: f64) -> (f64, f64, f64, f64) {
    let z2 = br.r * br.r + br.x * br.x;
    let (g, b) = (br.r / z2, -br.x / z2);
    let bc = br.b_charge / 2.0;
    let tau = br.tap;
    let d_ft = af - at - br.shift;
    let d_tf = at - af + br.shift;
    let k = vf * vt / tau;
    let p_fr = g * vf * vf / (tau * tau) - k * (g * d_ft.cos() + b * d_ft.sin());
    let q_fr = -(b + bc) * vf * vf / (tau * tau) - k * (g * d_ft.sin() - b * d_ft.cos());
    let p_to = g * vt * vt - k * (g * d_tf.cos() + b * d_tf.sin());
    let q_to = -(b + bc) * vt * vt - k * (g * d_tf.sin() - b * d_tf.cos());
    (p_fr, q_fr, p_to, q_to)
}

pub fn live(br: &Branch, buses: &BTreeSet<usize>) -> bool {
    br.in_service && !br.damaged && buses.contains(&br.f_bus) && buses.contains(&br.t_bus)
}

/// Net injections (generation minus demand and shunt draw) needed to balance
/// the branch flows at each bus, from the voltages alone.
pub fn flow_injections(
    net: &Network,
    buses: &[usize],
    vm: &[f64],
    va: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let set: BTreeSet<usize> = buses.iter().copied().collect();
    let idx: BTreeMap<usize, usize> = buses.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let (mut p, mut q) = (vec![0.0; buses.len()], vec![0.0; buses.len()]);
    for br in net.branches.values().filter(|b| live(b, &set)) {
        let (f, t) = (idx[&br.f_bus], idx[&br.t_bus]);
        let (pf, qf, pt, qt) = branch_flow(br, vm[f], va[f], vm[t], va[t]);
        p[f] += pf;
        q[f] += qf;
        p[t] += pt;
        q[t] += qt;
    }
    for s in net.shunts.values().filter(|s| set.contains(&s.bus)) {
        let i = idx[&s.bus];
        p[i] += s.gs * vm[i] * vm[i];
        q[i] -= s.bs * vm[i] * vm[i];
    }
    (p, q)
}

/// Largest bus mismatch of a solved state, from generator output, served
/// load and voltages only. Also checks the reported branch flows.
pub fn residual(net: &Network, s: &PfState) -> f64 {
    let buses: Vec<usize> = s.buses.keys().copied().collect();
    let set: BTreeSet<usize> = buses.iter().copied().collect();
    let vm: Vec<f64> = buses.iter().map(|b| s.buses[b].vm).collect();
    let va: Vec<f64> = buses.iter().map(|b| s.buses[b].va).collect();
    let (need_p, need_q) = flow_injections(net, &buses, &vm, &va);
    let mut worst = 0.0f64;
    for (i, b) in buses.iter().enumerate() {
        let gen_p: f64 = s
            .gens
            .iter()
            .filter(|(id, _)| net.gens[id].bus == *b)
            .map(|(_, g)| g.pg)
            .sum();
        let gen_q: f64 = s
            .gens
            .iter()
            .filter(|(id, _)| net.gens[id].bus == *b)
            .map(|(_, g)| g.qg)
            .sum();
        let (mut pd, mut qd) = (0.0, 0.0);
        for l in net.loads.values().filter(|l| l.bus == *b) {
            let f = s.load_fraction[&l.id];
            pd += l.pd * f;
            qd += l.qd * f;
        }
        worst = worst
            .max((gen_p - pd - need_p[i]).abs())
            .max((gen_q - qd - need_q[i]).abs());
    }
    let expected: BTreeSet<usize> = net
        .branches
        .values()
        .filter(|b| live(b, &set))
        .map(|b| b.id)
        .collect();
    assert_eq!(
        s.branches.keys().copied().collect::<BTreeSet<_>>(),
        expected
    );
    for (id, f) in &s.branches {
        let br = &net.branches[id];
        let (a, b) = (&s.buses[&br.f_bus], &s.buses[&br.t_bus]);
        let (pf, qf, pt, qt) = branch_flow(br, a.vm, a.va, b.vm, b.va);
        for (x, y) in [(pf, f.p_fr), (qf, f.q_fr), (pt, f.p_to), (qt, f.q_to)] {
            assert!((x - y).abs() <= 1e-9, "branch {id} flow {y} vs {x}");
        }
    }
    worst
}
