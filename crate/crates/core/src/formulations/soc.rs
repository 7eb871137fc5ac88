use std::collections::BTreeMap;

use super::common::{Ind, Mode, PeriodVars};
use crate::grid::{Branch, ComponentRef, Network};
use crate::mip::{LinExpr, MipModel, RowSense, VarId};

/// Series admittance and transformer terms of a branch in the form the
/// W-space Ohm rows use.
#[derive(Clone, Copy, Debug)]
pub(crate) struct BranchTerms {
    pub g: f64,
    pub b: f64,
    pub b_fr: f64,
    pub b_to: f64,
    pub tr: f64,
    pub ti: f64,
    pub tm2: f64,
}

impl BranchTerms {
    pub fn of(br: &Branch) -> Self {
        let d = br.r * br.r + br.x * br.x;
        BranchTerms {
            g: br.r / d,
            b: -br.x / d,
            b_fr: br.b_charge / 2.0,
            b_to: br.b_charge / 2.0,
            tr: br.tap * br.shift.cos(),
            ti: br.tap * br.shift.sin(),
            tm2: br.tap * br.tap,
        }
    }

    /// Coefficients of `(w_fr, wr, wi)` in `p_fr`, `q_fr` and of
    /// `(w_to, wr, wi)` in `p_to`, `q_to`.
    pub fn coefficients(&self) -> [[f64; 3]; 4] {
        let BranchTerms {
            g,
            b,
            b_fr,
            b_to,
            tr,
            ti,
            tm2,
        } = *self;
        [
            [g / tm2, (-g * tr + b * ti) / tm2, (-b * tr - g * ti) / tm2],
            [
                -(b + b_fr) / tm2,
                -(-b * tr - g * ti) / tm2,
                (-g * tr + b * ti) / tm2,
            ],
            [g, (-g * tr - b * ti) / tm2, -(-b * tr + g * ti) / tm2],
            [
                -(b + b_to),
                -(-b * tr + g * ti) / tm2,
                -(-g * tr - b * ti) / tm2,
            ],
        ]
    }
}

/// Voltage-product bounds `(wr_min, wr_max, wi_min, wi_max)` of an energised branch.
fn product_bounds(
    vmin: (f64, f64),
    vmax: (f64, f64),
    angmin: f64,
    angmax: f64,
) -> (f64, f64, f64, f64) {
    let hi = vmax.0 * vmax.1;
    let lo = vmin.0 * vmin.1;
    let widest = angmin.abs().max(angmax.abs());
    let wr_min = if widest <= std::f64::consts::FRAC_PI_2 {
        lo * widest.cos()
    } else {
        -hi
    };
    let wi_max = if angmax >= 0.0 {
        hi * angmax.sin()
    } else {
        lo * angmax.sin()
    };
    let wi_min = if angmin <= 0.0 {
        hi * angmin.sin()
    } else {
        lo * angmin.sin()
    };
    (wr_min, hi, wi_min, wi_max)
}

/// SOC-WR relaxation for one period.
///
/// Per active bus a squared-magnitude variable `w`; per active branch the
/// products `wr`, `wi`, four flow variables, four Ohm equalities, two
/// angle-difference rows, the voltage-product cone and, with a thermal
/// rating, one apparent-power cone per end. Switchable branches get on/off
/// copies of their end voltages.
pub(super) fn add_period(m: &mut MipModel, net: &Network, pv: &PeriodVars, mode: Mode, tag: &str) {
    // In ROP mode a bus may be dead (no energised source in its island):
    // `e` scales its voltage window down to zero and gates its demand.
    let mut w: BTreeMap<usize, VarId> = BTreeMap::new();
    let mut alive: BTreeMap<usize, VarId> = BTreeMap::new();
    for b in net.buses.values().filter(|b| b.in_service) {
        let (lo, hi) = (b.vmin * b.vmin, b.vmax * b.vmax);
        let ind = pv.of(ComponentRef::bus(b.id));
        let v = match (mode, ind) {
            (Mode::Mrsp, Ind::One) => m.add_continuous(format!("w_{}{tag}", b.id), lo, hi),
            (Mode::Mrsp, Ind::Var(z)) => {
                let v = m.add_continuous(format!("w_{}{tag}", b.id), 0.0, hi);
                m.add_row(
                    format!("w_on_lb_{}{tag}", b.id),
                    LinExpr::new().term(v, 1.0).term(z, -lo),
                    RowSense::Ge,
                    0.0,
                );
                m.add_row(
                    format!("w_on_ub_{}{tag}", b.id),
                    LinExpr::new().term(v, 1.0).term(z, -hi),
                    RowSense::Le,
                    0.0,
                );
                v
            }
            (Mode::Rop, _) => {
                let e = m.add_continuous(format!("e_{}{tag}", b.id), 0.0, 1.0);
                let v = m.add_continuous(format!("w_{}{tag}", b.id), 0.0, hi);
                m.add_row(
                    format!("w_on_lb_{}{tag}", b.id),
                    LinExpr::new().term(v, 1.0).term(e, -lo),
                    RowSense::Ge,
                    0.0,
                );
                m.add_row(
                    format!("w_on_ub_{}{tag}", b.id),
                    LinExpr::new().term(v, 1.0).term(e, -hi),
                    RowSense::Le,
                    0.0,
                );
                if let Ind::Var(z) = ind {
                    m.add_row(
                        format!("e_dep_{}{tag}", b.id),
                        LinExpr::new().term(e, 1.0).term(z, -1.0),
                        RowSense::Le,
                        0.0,
                    );
                }
                alive.insert(b.id, e);
                v
            }
        };
        w.insert(b.id, v);
    }
    let vmin = |bus: &crate::grid::Bus| if mode == Mode::Rop { 0.0 } else { bus.vmin };

    let mut p_inj: BTreeMap<usize, LinExpr> = w.keys().map(|&b| (b, LinExpr::new())).collect();
    let mut q_inj = p_inj.clone();

    for g in net.gens.values() {
        let c = ComponentRef::gen(g.id);
        if !net.is_active(c) {
            continue;
        }
        let (pg, qg) = match pv.of(c) {
            Ind::One => (
                m.add_continuous(format!("pg_{}{tag}", g.id), g.pmin, g.pmax),
                m.add_continuous(format!("qg_{}{tag}", g.id), g.qmin, g.qmax),
            ),
            Ind::Var(z) => {
                let pg = m.add_continuous(
                    format!("pg_{}{tag}", g.id),
                    g.pmin.min(0.0),
                    g.pmax.max(0.0),
                );
                let qg = m.add_continuous(
                    format!("qg_{}{tag}", g.id),
                    g.qmin.min(0.0),
                    g.qmax.max(0.0),
                );
                for (name, var, lo, hi) in [("p", pg, g.pmin, g.pmax), ("q", qg, g.qmin, g.qmax)] {
                    m.add_row(
                        format!("gen_{name}ub_{}{tag}", g.id),
                        LinExpr::new().term(var, 1.0).term(z, -hi),
                        RowSense::Le,
                        0.0,
                    );
                    m.add_row(
                        format!("gen_{name}lb_{}{tag}", g.id),
                        LinExpr::new().term(var, 1.0).term(z, -lo),
                        RowSense::Ge,
                        0.0,
                    );
                }
                (pg, qg)
            }
        };
        p_inj.get_mut(&g.bus).expect("active bus").add(pg, 1.0);
        q_inj.get_mut(&g.bus).expect("active bus").add(qg, 1.0);
    }

    for br in net.branches.values() {
        let c = ComponentRef::branch(br.id);
        if !net.is_active(c) {
            continue;
        }
        let (bf, bt) = (&net.buses[&br.f_bus], &net.buses[&br.t_bus]);
        let (wr_min, wr_max, wi_min, wi_max) = product_bounds(
            (vmin(bf), vmin(bt)),
            (bf.vmax, bt.vmax),
            br.angmin,
            br.angmax,
        );
        let id = br.id;
        let z = pv.of(c);
        let (w_fr, w_to, wr, wi) = match z {
            Ind::One => (
                w[&br.f_bus],
                w[&br.t_bus],
                m.add_continuous(format!("wr_{id}{tag}"), wr_min, wr_max),
                m.add_continuous(format!("wi_{id}{tag}"), wi_min, wi_max),
            ),
            Ind::Var(zv) => {
                let mut copy = |end: &str, bus: &crate::grid::Bus| {
                    let (lo, hi) = (vmin(bus).powi(2), bus.vmax * bus.vmax);
                    let wb = w[&bus.id];
                    let v = m.add_continuous(format!("w_{end}_{id}{tag}"), 0.0, hi);
                    m.add_row(
                        format!("w_{end}_lb_{id}{tag}"),
                        LinExpr::new().term(v, 1.0).term(zv, -lo),
                        RowSense::Ge,
                        0.0,
                    );
                    m.add_row(
                        format!("w_{end}_ub_{id}{tag}"),
                        LinExpr::new().term(v, 1.0).term(zv, -hi),
                        RowSense::Le,
                        0.0,
                    );
                    // equal to the bus value when on
                    m.add_row(
                        format!("w_{end}_on_lb_{id}{tag}"),
                        LinExpr::new().term(v, 1.0).term(wb, -1.0).term(zv, -hi),
                        RowSense::Ge,
                        -hi,
                    );
                    m.add_row(
                        format!("w_{end}_on_ub_{id}{tag}"),
                        LinExpr::new().term(v, 1.0).term(wb, -1.0).term(zv, -lo),
                        RowSense::Le,
                        -lo,
                    );
                    v
                };
                let w_fr = copy("fr", bf);
                let w_to = copy("to", bt);
                let wr =
                    m.add_continuous(format!("wr_{id}{tag}"), wr_min.min(0.0), wr_max.max(0.0));
                let wi =
                    m.add_continuous(format!("wi_{id}{tag}"), wi_min.min(0.0), wi_max.max(0.0));
                for (name, var, lo, hi) in [("wr", wr, wr_min, wr_max), ("wi", wi, wi_min, wi_max)]
                {
                    m.add_row(
                        format!("{name}_ub_{id}{tag}"),
                        LinExpr::new().term(var, 1.0).term(zv, -hi),
                        RowSense::Le,
                        0.0,
                    );
                    m.add_row(
                        format!("{name}_lb_{id}{tag}"),
                        LinExpr::new().term(var, 1.0).term(zv, -lo),
                        RowSense::Ge,
                        0.0,
                    );
                }
                (w_fr, w_to, wr, wi)
            }
        };
        m.add_row(
            format!("angmax_{id}{tag}"),
            LinExpr::new().term(wi, 1.0).term(wr, -br.angmax.tan()),
            RowSense::Le,
            0.0,
        );
        m.add_row(
            format!("angmin_{id}{tag}"),
            LinExpr::new().term(wi, 1.0).term(wr, -br.angmin.tan()),
            RowSense::Ge,
            0.0,
        );
        m.add_cone(format!("wcone_{id}{tag}"), wr, wi, w_fr, w_to);

        let inf = f64::INFINITY;
        let s = if br.has_thermal_limit() {
            br.rate_a
        } else {
            inf
        };
        let flows: Vec<VarId> = ["p_fr", "q_fr", "p_to", "q_to"]
            .iter()
            .map(|n| m.add_continuous(format!("{n}_{id}{tag}"), -s, s))
            .collect();
        let k = BranchTerms::of(br).coefficients();
        for (i, &f) in flows.iter().enumerate() {
            let wend = if i < 2 { w_fr } else { w_to };
            let e = LinExpr::new()
                .term(f, 1.0)
                .term(wend, -k[i][0])
                .term(wr, -k[i][1])
                .term(wi, -k[i][2]);
            m.add_row(
                format!("ohm_{}_{id}{tag}", ["p_fr", "q_fr", "p_to", "q_to"][i]),
                e,
                RowSense::Eq,
                0.0,
            );
        }
        if br.has_thermal_limit() {
            let t = match z {
                Ind::One => m.add_continuous(format!("t_{id}{tag}"), br.rate_a, br.rate_a),
                Ind::Var(zv) => {
                    let t = m.add_continuous(format!("t_{id}{tag}"), 0.0, br.rate_a);
                    m.add_row(
                        format!("t_on_{id}{tag}"),
                        LinExpr::new().term(t, 1.0).term(zv, -br.rate_a),
                        RowSense::Eq,
                        0.0,
                    );
                    t
                }
            };
            m.add_cone(format!("thermal_fr_{id}{tag}"), flows[0], flows[1], t, t);
            m.add_cone(format!("thermal_to_{id}{tag}"), flows[2], flows[3], t, t);
        }
        p_inj
            .get_mut(&br.f_bus)
            .expect("active bus")
            .add(flows[0], -1.0);
        q_inj
            .get_mut(&br.f_bus)
            .expect("active bus")
            .add(flows[1], -1.0);
        p_inj
            .get_mut(&br.t_bus)
            .expect("active bus")
            .add(flows[2], -1.0);
        q_inj
            .get_mut(&br.t_bus)
            .expect("active bus")
            .add(flows[3], -1.0);
    }

    for l in net.loads.values() {
        if !p_inj.contains_key(&l.bus) {
            log::warn!("load {} sits on inactive bus {}", l.id, l.bus);
            continue;
        }
        match mode {
            Mode::Rop => {
                let zd = pv.loads[&l.id];
                m.add_row(
                    format!("load_alive_{}{tag}", l.id),
                    LinExpr::new().term(zd, 1.0).term(alive[&l.bus], -1.0),
                    RowSense::Le,
                    0.0,
                );
                p_inj.get_mut(&l.bus).unwrap().add(zd, -l.pd);
                q_inj.get_mut(&l.bus).unwrap().add(zd, -l.qd);
            }
            Mode::Mrsp => {
                p_inj.get_mut(&l.bus).unwrap().add_constant(-l.pd);
                q_inj.get_mut(&l.bus).unwrap().add_constant(-l.qd);
            }
        }
    }
    for s in net.shunts.values() {
        let Some(&wb) = w.get(&s.bus) else { continue };
        let wz = match mode {
            Mode::Mrsp => wb,
            Mode::Rop => {
                // McCormick envelope of wz = zs * w
                let bus = &net.buses[&s.bus];
                let (lo, hi) = (0.0, bus.vmax * bus.vmax);
                let zs = pv.shunts[&s.id];
                let wz = m.add_continuous(format!("wz_{}{tag}", s.id), 0.0, hi);
                let sid = s.id;
                m.add_row(
                    format!("wz1_{sid}{tag}"),
                    LinExpr::new().term(wz, 1.0).term(zs, -lo),
                    RowSense::Ge,
                    0.0,
                );
                m.add_row(
                    format!("wz2_{sid}{tag}"),
                    LinExpr::new().term(wz, 1.0).term(wb, -1.0).term(zs, -hi),
                    RowSense::Ge,
                    -hi,
                );
                m.add_row(
                    format!("wz3_{sid}{tag}"),
                    LinExpr::new().term(wz, 1.0).term(zs, -hi),
                    RowSense::Le,
                    0.0,
                );
                m.add_row(
                    format!("wz4_{sid}{tag}"),
                    LinExpr::new().term(wz, 1.0).term(wb, -1.0).term(zs, -lo),
                    RowSense::Le,
                    -lo,
                );
                wz
            }
        };
        p_inj.get_mut(&s.bus).unwrap().add(wz, -s.gs);
        q_inj.get_mut(&s.bus).unwrap().add(wz, s.bs);
    }

    for (bus, e) in p_inj {
        m.add_row(format!("balance_p_{bus}{tag}"), e, RowSense::Eq, 0.0);
    }
    for (bus, e) in q_inj {
        m.add_row(format!("balance_q_{bus}{tag}"), e, RowSense::Eq, 0.0);
    }
}
