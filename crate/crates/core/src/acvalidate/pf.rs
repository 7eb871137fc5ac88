//! Newton-Raphson AC power flow in polar coordinates.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Branch, ComponentRef, Network};

pub type C64 = Complex<f64>;

/// Mismatch tolerance (pu) for convergence.
pub const PF_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 30;
/// PV to PQ switching rounds per solve.
pub const MAX_SWITCH_ROUNDS: usize = 10;

/// Whether a component is physically in operation: active and not awaiting
/// repair.
pub fn energized(net: &Network, c: ComponentRef) -> bool {
    net.is_active(c) && !net.is_damaged(c)
}

/// Two-port admittances `[y_ff, y_ft, y_tf, y_tt]` of the branch pi model.
pub fn branch_admittance(br: &Branch) -> [C64; 4] {
    let ys = C64::new(1.0, 0.0) / C64::new(br.r, br.x);
    let ysh = C64::new(0.0, br.b_charge / 2.0);
    let t = C64::from_polar(br.tap, br.shift);
    [
        (ys + ysh) / (br.tap * br.tap),
        -ys / t.conj(),
        -ys / t,
        ys + ysh,
    ]
}

/// Bus admittance matrix over `buses` (in the given order), using energised
/// branches with both ends in the set and the bus shunts.
pub fn ybus(net: &Network, buses: &[usize]) -> DMatrix<C64> {
    let n = buses.len();
    let idx: BTreeMap<usize, usize> = buses.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let mut y = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for br in net.branches.values() {
        if !energized(net, ComponentRef::branch(br.id)) {
            continue;
        }
        let (Some(&f), Some(&t)) = (idx.get(&br.f_bus), idx.get(&br.t_bus)) else {
            continue;
        };
        let [yff, yft, ytf, ytt] = branch_admittance(br);
        y[(f, f)] += yff;
        y[(f, t)] += yft;
        y[(t, f)] += ytf;
        y[(t, t)] += ytt;
    }
    for s in net.shunts.values() {
        if let Some(&i) = idx.get(&s.bus) {
            y[(i, i)] += C64::new(s.gs, s.bs);
        }
    }
    y
}

/// Complex power injections `S = V conj(Y V)` split into (P, Q).
pub fn injections(y: &DMatrix<C64>, vm: &[f64], va: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let v: DVector<C64> = DVector::from_iterator(
        vm.len(),
        vm.iter().zip(va).map(|(&m, &a)| C64::from_polar(m, a)),
    );
    let i = y * &v;
    let s: Vec<C64> = v.iter().zip(i.iter()).map(|(v, i)| v * i.conj()).collect();
    (
        s.iter().map(|s| s.re).collect(),
        s.iter().map(|s| s.im).collect(),
    )
}

/// Full polar Jacobian of (P, Q) with respect to (va, vm), laid out as
/// `[[dP/dva, dP/dvm], [dQ/dva, dQ/dvm]]`, each block n x n.
pub fn jacobian(y: &DMatrix<C64>, vm: &[f64], va: &[f64]) -> DMatrix<f64> {
    let n = vm.len();
    let (p, q) = injections(y, vm, va);
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for k in 0..n {
            let (g, b) = (y[(i, k)].re, y[(i, k)].im);
            if i == k {
                j[(i, i)] = -q[i] - b * vm[i] * vm[i];
                j[(i, n + i)] = p[i] / vm[i] + g * vm[i];
                j[(n + i, i)] = p[i] - g * vm[i] * vm[i];
                j[(n + i, n + i)] = q[i] / vm[i] - b * vm[i];
            } else {
                if g == 0.0 && b == 0.0 {
                    continue;
                }
                let d = va[i] - va[k];
                let (s, c) = d.sin_cos();
                j[(i, k)] = vm[i] * vm[k] * (g * s - b * c);
                j[(i, n + k)] = vm[i] * (g * c + b * s);
                j[(n + i, k)] = -vm[i] * vm[k] * (g * c + b * s);
                j[(n + i, n + k)] = vm[i] * (g * s - b * c);
            }
        }
    }
    j
}

/// Power-flow input for one island.
#[derive(Clone, Debug)]
pub struct PfProblem<'a> {
    pub net: &'a Network,
    pub island: &'a BTreeSet<usize>,
    pub slack_gen: usize,
    /// Active power setpoints of the other energised generators; missing
    /// ones produce nothing.
    pub gen_p: BTreeMap<usize, f64>,
    /// Served fraction for loads listed here.
    pub load_fraction: BTreeMap<usize, f64>,
    /// Served fraction for every other load in the island.
    pub load_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusState {
    pub vm: f64,
    pub va: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenState {
    pub pg: f64,
    pub qg: f64,
    /// Held at a reactive limit after PV to PQ switching.
    pub q_limited: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchFlow {
    pub p_fr: f64,
    pub q_fr: f64,
    pub p_to: f64,
    pub q_to: f64,
}

impl BranchFlow {
    pub fn s_fr(&self) -> f64 {
        self.p_fr.hypot(self.q_fr)
    }
    pub fn s_to(&self) -> f64 {
        self.p_to.hypot(self.q_to)
    }
}

/// Converged operating point of an island.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PfState {
    pub buses: BTreeMap<usize, BusState>,
    pub gens: BTreeMap<usize, GenState>,
    pub branches: BTreeMap<usize, BranchFlow>,
    /// Served fraction of each load in the island.
    pub load_fraction: BTreeMap<usize, f64>,
    /// Largest |dP|, |dQ| at the returned point (pu).
    pub mismatch: f64,
    pub iterations: usize,
}

impl PfState {
    pub fn total_generation(&self) -> f64 {
        self.gens.values().map(|g| g.pg).sum()
    }

    pub fn losses(&self) -> f64 {
        self.branches.values().map(|f| f.p_fr + f.p_to).sum()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kind {
    Slack,
    Pv,
    Pq,
}

fn load_fraction(p: &PfProblem, id: usize) -> f64 {
    p.load_fraction.get(&id).copied().unwrap_or(p.load_scale)
}

/// Solves the AC power flow of one island from a flat start (generator
/// voltage setpoints at PV buses). Generators whose reactive output leaves
/// its range are switched to PQ at the violated limit; a switched bus stays
/// PQ.
pub fn newton_pf(p: &PfProblem) -> Result<PfState> {
    let net = p.net;
    let buses: Vec<usize> = p.island.iter().copied().collect();
    let n = buses.len();
    let idx: BTreeMap<usize, usize> = buses.iter().enumerate().map(|(i, &b)| (b, i)).collect();

    let slack = net
        .gens
        .get(&p.slack_gen)
        .filter(|g| idx.contains_key(&g.bus))
        .ok_or(Error::NoSlack)?;
    if !energized(net, ComponentRef::gen(slack.id)) {
        return Err(Error::NoSlack);
    }
    let gens: Vec<usize> = net
        .gens
        .values()
        .filter(|g| idx.contains_key(&g.bus) && energized(net, ComponentRef::gen(g.id)))
        .map(|g| g.id)
        .collect();

    let mut kind = vec![Kind::Pq; n];
    let mut vm = vec![1.0; n];
    let va = vec![0.0; n];
    // per bus: (gens, sum qmin, sum qmax)
    let mut at_bus: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &g in &gens {
        let gen = &net.gens[&g];
        let i = idx[&gen.bus];
        if at_bus[i].is_empty() {
            vm[i] = gen.vg;
        }
        at_bus[i].push(g);
        kind[i] = Kind::Pv;
    }
    let si = idx[&slack.bus];
    kind[si] = Kind::Slack;
    vm[si] = slack.vg;

    let mut p_spec = vec![0.0; n];
    let mut q_load = vec![0.0; n];
    for l in net.loads.values() {
        if let Some(&i) = idx.get(&l.bus) {
            let f = load_fraction(p, l.id);
            p_spec[i] -= f * l.pd;
            q_load[i] -= f * l.qd;
        }
    }
    for &g in &gens {
        if g != slack.id {
            p_spec[idx[&net.gens[&g].bus]] += p.gen_p.get(&g).copied().unwrap_or(0.0);
        }
    }
    let q_range: Vec<(f64, f64)> = at_bus
        .iter()
        .map(|gs| {
            gs.iter().fold((0.0, 0.0), |(lo, hi), g| {
                (lo + net.gens[g].qmin, hi + net.gens[g].qmax)
            })
        })
        .collect();
    // reactive generation fixed at a limit for switched buses
    let mut q_fixed: Vec<Option<f64>> = vec![None; n];

    let y = ybus(net, &buses);
    let mut state = (vm, va);
    let mut iterations = 0;
    for _round in 0..=MAX_SWITCH_ROUNDS {
        let q_spec: Vec<f64> = (0..n)
            .map(|i| q_load[i] + q_fixed[i].unwrap_or(0.0))
            .collect();
        let (vm, va, its, mismatch) = newton_loop(&y, &kind, &p_spec, &q_spec, state.0, state.1)?;
        iterations += its;
        if mismatch > PF_TOL {
            return Err(Error::NonConvergence { mismatch });
        }
        let (_, q) = injections(&y, &vm, &va);
        let mut switched = false;
        for i in 0..n {
            if kind[i] != Kind::Pv {
                continue;
            }
            let qg = q[i] - q_load[i];
            let (lo, hi) = q_range[i];
            let limit = if qg > hi + PF_TOL {
                Some(hi)
            } else if qg < lo - PF_TOL {
                Some(lo)
            } else {
                None
            };
            if let Some(l) = limit {
                kind[i] = Kind::Pq;
                q_fixed[i] = Some(l);
                switched = true;
            }
        }
        state = (vm, va);
        if !switched {
            break;
        }
    }
    let (vm, va) = state;
    let q_spec: Vec<f64> = (0..n)
        .map(|i| q_load[i] + q_fixed[i].unwrap_or(0.0))
        .collect();
    let (pc, qc) = injections(&y, &vm, &va);
    let mismatch = (0..n)
        .flat_map(|i| {
            let dp = if kind[i] == Kind::Slack {
                0.0
            } else {
                pc[i] - p_spec[i]
            };
            let dq = if kind[i] == Kind::Pq {
                qc[i] - q_spec[i]
            } else {
                0.0
            };
            [dp.abs(), dq.abs()]
        })
        .fold(0.0, f64::max);

    let mut gen_states = BTreeMap::new();
    for i in 0..n {
        if at_bus[i].is_empty() {
            continue;
        }
        let q_bus = qc[i] - q_load[i];
        let (lo, hi) = q_range[i];
        let beta = if hi > lo {
            (q_bus - lo) / (hi - lo)
        } else {
            0.0
        };
        let share = 1.0 / at_bus[i].len() as f64;
        for &g in &at_bus[i] {
            let gen = &net.gens[&g];
            let pg = if g == slack.id {
                // whatever the other units at the bus leave
                pc[i] - p_spec[i]
            } else {
                p.gen_p.get(&g).copied().unwrap_or(0.0)
            };
            let qg = if hi > lo {
                gen.qmin + beta * (gen.qmax - gen.qmin)
            } else {
                q_bus * share
            };
            gen_states.insert(
                g,
                GenState {
                    pg,
                    qg,
                    q_limited: q_fixed[i].is_some(),
                },
            );
        }
    }

    let mut flows = BTreeMap::new();
    for br in net.branches.values() {
        if !energized(net, ComponentRef::branch(br.id)) {
            continue;
        }
        let (Some(&f), Some(&t)) = (idx.get(&br.f_bus), idx.get(&br.t_bus)) else {
            continue;
        };
        let (vf, vt) = (C64::from_polar(vm[f], va[f]), C64::from_polar(vm[t], va[t]));
        let [yff, yft, ytf, ytt] = branch_admittance(br);
        let sf = vf * (yff * vf + yft * vt).conj();
        let st = vt * (ytf * vf + ytt * vt).conj();
        flows.insert(
            br.id,
            BranchFlow {
                p_fr: sf.re,
                q_fr: sf.im,
                p_to: st.re,
                q_to: st.im,
            },
        );
    }

    let load_fraction = net
        .loads
        .values()
        .filter(|l| idx.contains_key(&l.bus))
        .map(|l| (l.id, load_fraction(p, l.id)))
        .collect();
    Ok(PfState {
        buses: buses
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                (
                    b,
                    BusState {
                        vm: vm[i],
                        va: va[i],
                    },
                )
            })
            .collect(),
        gens: gen_states,
        branches: flows,
        load_fraction,
        mismatch,
        iterations,
    })
}

/// Newton iterations for fixed bus kinds. Returns the last point, the
/// iteration count and its mismatch.
fn newton_loop(
    y: &DMatrix<C64>,
    kind: &[Kind],
    p_spec: &[f64],
    q_spec: &[f64],
    mut vm: Vec<f64>,
    mut va: Vec<f64>,
) -> Result<(Vec<f64>, Vec<f64>, usize, f64)> {
    let n = kind.len();
    let pv_rows: Vec<usize> = (0..n).filter(|&i| kind[i] != Kind::Slack).collect();
    let pq_rows: Vec<usize> = (0..n).filter(|&i| kind[i] == Kind::Pq).collect();
    let dim = pv_rows.len() + pq_rows.len();

    let residual = |vm: &[f64], va: &[f64]| -> DVector<f64> {
        let (p, q) = injections(y, vm, va);
        let mut r = DVector::zeros(dim);
        for (k, &i) in pv_rows.iter().enumerate() {
            r[k] = p[i] - p_spec[i];
        }
        for (k, &i) in pq_rows.iter().enumerate() {
            r[pv_rows.len() + k] = q[i] - q_spec[i];
        }
        r
    };

    let mut r = residual(&vm, &va);
    let mut mismatch = r.amax();
    let mut it = 0;
    while mismatch > PF_TOL && it < MAX_ITERATIONS {
        let full = jacobian(y, &vm, &va);
        let mut j = DMatrix::zeros(dim, dim);
        let rows: Vec<usize> = pv_rows
            .iter()
            .copied()
            .chain(pq_rows.iter().map(|&i| n + i))
            .collect();
        // columns: va of non-slack buses, vm of PQ buses
        let cols = &rows;
        for (a, &ri) in rows.iter().enumerate() {
            for (b, &cj) in cols.iter().enumerate() {
                j[(a, b)] = full[(ri, cj)];
            }
        }
        let dx = j
            .lu()
            .solve(&(-&r))
            .ok_or_else(|| Error::NumericalFailure("singular power-flow Jacobian".into()))?;
        for (k, &i) in pv_rows.iter().enumerate() {
            va[i] += dx[k];
        }
        for (k, &i) in pq_rows.iter().enumerate() {
            vm[i] += dx[pv_rows.len() + k];
        }
        it += 1;
        r = residual(&vm, &va);
        mismatch = r.amax();
        if !mismatch.is_finite() {
            return Err(Error::NonConvergence { mismatch });
        }
    }
    Ok((vm, va, it, mismatch))
}

/// Slack choice for an island: the energised generator with the largest
/// pmax, lowest id on ties.
pub fn select_slack(net: &Network, island: &BTreeSet<usize>) -> Option<usize> {
    net.gens
        .values()
        .filter(|g| island.contains(&g.bus) && energized(net, ComponentRef::gen(g.id)))
        .fold(None, |best: Option<(usize, f64)>, g| match best {
            Some((_, p)) if p >= g.pmax => best,
            _ => Some((g.id, g.pmax)),
        })
        .map(|(id, _)| id)
}
