use std::collections::BTreeMap;

use super::common::{Ind, Mode, PeriodVars};
use super::{bigm_for_branch, FormulationOptions};
use crate::grid::{ComponentRef, Network};
use crate::mip::{LinExpr, MipModel, RowSense, VarId};

/// DC power flow for one period.
///
/// Rows added on top of the shared ones:
/// one per reference bus, one balance per active bus, three per always-on
/// branch (Ohm equality and two angle-difference rows; the thermal limit is a
/// variable bound), six per switchable branch (two big-M Ohm, two thermal,
/// two angle-difference) and two per switchable generator.
pub(super) fn add_period(
    m: &mut MipModel,
    net: &Network,
    pv: &PeriodVars,
    opts: &FormulationOptions,
    mode: Mode,
    tag: &str,
) {
    let bound = opts.va_bound;
    let span = 2.0 * bound;

    let mut va: BTreeMap<usize, VarId> = BTreeMap::new();
    for b in net.buses.values().filter(|b| b.in_service) {
        va.insert(
            b.id,
            m.add_continuous(format!("va_{}{tag}", b.id), -bound, bound),
        );
    }
    for r in &net.ref_buses {
        if let Some(&v) = va.get(r) {
            m.add_row(
                format!("theta_ref_{r}{tag}"),
                LinExpr::new().term(v, 1.0),
                RowSense::Eq,
                0.0,
            );
        }
    }

    let mut injection: BTreeMap<usize, LinExpr> = va.keys().map(|&b| (b, LinExpr::new())).collect();

    for g in net.gens.values() {
        let c = ComponentRef::gen(g.id);
        if !net.is_active(c) {
            continue;
        }
        let z = pv.of(c);
        let pg = match z {
            Ind::One => m.add_continuous(format!("pg_{}{tag}", g.id), g.pmin, g.pmax),
            Ind::Var(zv) => {
                let pg = m.add_continuous(
                    format!("pg_{}{tag}", g.id),
                    g.pmin.min(0.0),
                    g.pmax.max(0.0),
                );
                m.add_row(
                    format!("gen_ub_{}{tag}", g.id),
                    LinExpr::new().term(pg, 1.0).term(zv, -g.pmax),
                    RowSense::Le,
                    0.0,
                );
                m.add_row(
                    format!("gen_lb_{}{tag}", g.id),
                    LinExpr::new().term(pg, 1.0).term(zv, -g.pmin),
                    RowSense::Ge,
                    0.0,
                );
                pg
            }
        };
        injection
            .get_mut(&g.bus)
            .expect("active gen bus")
            .add(pg, 1.0);
    }

    for br in net.branches.values() {
        let c = ComponentRef::branch(br.id);
        if !net.is_active(c) {
            continue;
        }
        let b = br.dc_susceptance();
        let big_m = bigm_for_branch(br, bound);
        let limit = if br.has_thermal_limit() {
            br.rate_a
        } else {
            b.abs() * (br.angmin.abs().max(br.angmax.abs()) + br.shift.abs())
        };
        let (vf, vt) = (va[&br.f_bus], va[&br.t_bus]);
        let p = m.add_continuous(format!("p_{}{tag}", br.id), -limit, limit);
        // p - b (va_f - va_t - shift)
        let ohm = || {
            LinExpr::new()
                .term(p, 1.0)
                .term(vf, -b)
                .term(vt, b)
                .constant(b * br.shift)
        };
        let diff = || LinExpr::new().term(vf, 1.0).term(vt, -1.0);
        match pv.of(c) {
            Ind::One => {
                m.add_row(format!("ohm_{}{tag}", br.id), ohm(), RowSense::Eq, 0.0);
                m.add_row(
                    format!("angmax_{}{tag}", br.id),
                    diff(),
                    RowSense::Le,
                    br.angmax,
                );
                m.add_row(
                    format!("angmin_{}{tag}", br.id),
                    diff(),
                    RowSense::Ge,
                    br.angmin,
                );
            }
            Ind::Var(z) => {
                m.add_row(
                    format!("ohm_ub_{}{tag}", br.id),
                    ohm().term(z, big_m),
                    RowSense::Le,
                    big_m,
                );
                m.add_row(
                    format!("ohm_lb_{}{tag}", br.id),
                    ohm().term(z, -big_m),
                    RowSense::Ge,
                    -big_m,
                );
                m.add_row(
                    format!("thermal_ub_{}{tag}", br.id),
                    LinExpr::new().term(p, 1.0).term(z, -limit),
                    RowSense::Le,
                    0.0,
                );
                m.add_row(
                    format!("thermal_lb_{}{tag}", br.id),
                    LinExpr::new().term(p, 1.0).term(z, limit),
                    RowSense::Ge,
                    0.0,
                );
                m.add_row(
                    format!("angmax_{}{tag}", br.id),
                    diff().term(z, span - br.angmax),
                    RowSense::Le,
                    span,
                );
                m.add_row(
                    format!("angmin_{}{tag}", br.id),
                    diff().term(z, -span - br.angmin),
                    RowSense::Ge,
                    -span,
                );
            }
        }
        injection
            .get_mut(&br.f_bus)
            .expect("active bus")
            .add(p, -1.0);
        injection
            .get_mut(&br.t_bus)
            .expect("active bus")
            .add(p, 1.0);
    }

    for l in net.loads.values() {
        let Some(e) = injection.get_mut(&l.bus) else {
            log::warn!("load {} sits on inactive bus {}", l.id, l.bus);
            continue;
        };
        match mode {
            Mode::Rop => e.add(pv.loads[&l.id], -l.pd),
            Mode::Mrsp => e.add_constant(-l.pd),
        }
    }
    for s in net.shunts.values() {
        let Some(e) = injection.get_mut(&s.bus) else {
            continue;
        };
        match mode {
            Mode::Rop => e.add(pv.shunts[&s.id], -s.gs),
            Mode::Mrsp => pv.of(ComponentRef::bus(s.bus)).add_to(e, -s.gs),
        }
    }

    for (bus, e) in injection {
        m.add_row(format!("balance_{bus}{tag}"), e, RowSense::Eq, 0.0);
    }
}
