use super::*;
use crate::grid::testutil::{branch, five_bus_ring, n_parallel_branches, three_bus};
use crate::grid::{replicate, DamageScenario};
use crate::mip::{solve_lp, SolveOptions};

fn parallel_case(k: usize) -> MultiPeriodCase {
    let net = n_parallel_branches(2);
    let dmg = DamageScenario::from_components([ComponentRef::branch(1), ComponentRef::branch(2)]);
    replicate(&net, &dmg, k, 1.0).unwrap()
}

#[test]
fn bigm_values() {
    let br = branch(1, 1, 2, 0.1, 1.0);
    assert!((bigm_for_branch(&br, std::f64::consts::PI / 6.0) - 10.471975511965978).abs() < 1e-12);
    let neg = branch(1, 1, 2, -0.1, 1.0);
    assert_eq!(bigm_for_branch(&neg, 0.5), bigm_for_branch(&br, 0.5));
    let unlimited = branch(1, 1, 2, 0.1, 0.0);
    assert_eq!(bigm_for_branch(&unlimited, 0.5), bigm_for_branch(&br, 0.5));
}

#[test]
fn formulation_parse() {
    assert_eq!("DC".parse::<Formulation>().unwrap(), Formulation::Dc);
    assert_eq!("soc".parse::<Formulation>().unwrap(), Formulation::Soc);
    assert!("ac".parse::<Formulation>().is_err());
}

#[test]
fn mrsp_without_damage_is_empty() {
    for form in [Formulation::Dc, Formulation::Soc] {
        let (sel, sol) = solve_mrsp(
            &three_bus(),
            form,
            &FormulationOptions::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(sel.indicators.is_empty());
        assert_eq!(sol.objective, 0.0);
    }
}

#[test]
fn mrsp_parallel_branches_repairs_one() {
    // 0.5 pu over branches rated 0.6: any single branch suffices, none is too few
    let mut net = n_parallel_branches(2);
    net.loads.get_mut(&1).unwrap().pd = 0.5;
    let dmg = DamageScenario::from_components([ComponentRef::branch(1), ComponentRef::branch(2)]);
    let net = crate::grid::apply_damage(&net, &dmg).unwrap();
    let needed = (0.5f64 / 0.6).ceil() as usize;
    for form in [Formulation::Dc, Formulation::Soc] {
        let (sel, sol) = solve_mrsp(
            &net,
            form,
            &FormulationOptions::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(sel.repaired().unwrap().len(), needed, "{form}");
        assert!((sol.objective - needed as f64).abs() < 1e-9);
    }
}

#[test]
fn mrsp_infeasible_when_load_exceeds_all_repairs() {
    let mut net = n_parallel_branches(2);
    net.loads.get_mut(&1).unwrap().pd = 1.5;
    let dmg = DamageScenario::from_components([ComponentRef::branch(1), ComponentRef::branch(2)]);
    let net = crate::grid::apply_damage(&net, &dmg).unwrap();
    let r = solve_mrsp(
        &net,
        Formulation::Dc,
        &FormulationOptions::default(),
        &SolveOptions::default(),
    );
    assert!(matches!(r, Err(Error::MrspInfeasible)));
}

/// Largest active power one lossless branch delivers under the SOC model
/// with the thermal limit applied at the sending end. The receiving end
/// needs no reactive power, so `wr = w_to`; with `d = w_fr - w_to` the cone
/// `wi^2 <= w_fr w_to - wr^2` gives `wi^2 <= d w_to`, the sending end carries
/// `q = d / x` and `w_to <= vmax^2 - d`.
fn soc_single_branch_max(x: f64, rate: f64, vmax: f64) -> f64 {
    let w = vmax * vmax;
    let excess = |p: f64| {
        let wi = p * x;
        // smallest d with d (w - d) >= wi^2
        let d = (w - (w * w - 4.0 * wi * wi).sqrt()) / 2.0;
        p * p + (d / x).powi(2) - rate * rate
    };
    let (mut lo, mut hi) = (0.0, rate);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Served pu per period for a repair order on the parallel-branch case:
/// each repaired branch carries up to `cap` of the 1 pu load.
fn parallel_served(order_periods: &[usize], cap: f64) -> Vec<f64> {
    (0..=2)
        .map(|n| {
            let repaired = order_periods.iter().filter(|&&p| p <= n).count();
            (cap * repaired as f64).min(1.0)
        })
        .collect()
}

#[test]
fn rop_parallel_branches_matches_enumeration() {
    let case = parallel_case(2);
    assert_eq!(case.repairs_per_period, 1);
    let soc_cap = soc_single_branch_max(0.1, 0.6, 1.1);
    assert!(soc_cap < 0.6 && soc_cap > 0.59);
    for (form, cap) in [(Formulation::Dc, 0.6), (Formulation::Soc, soc_cap)] {
        // both orders of the two branches, one repair per period
        let orders = [[1usize, 2], [2, 1]];
        let best = orders
            .iter()
            .map(|o| parallel_served(o, cap).iter().sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let (plan, sol) = solve_rop(
            &case,
            form,
            &FormulationOptions::default(),
            &SolveOptions::default(),
            None,
        )
        .unwrap();
        assert!(
            (sol.objective - best).abs() < 1e-6,
            "{form}: {}",
            sol.objective
        );
        plan.validate(&case).unwrap();
        let served: Vec<f64> = (0..=2).map(|n| plan.served(&case, n)).collect();
        for (a, b) in served.iter().zip(parallel_served(&orders[0], cap)) {
            assert!((a - b).abs() < 1e-6, "{form}: {served:?}");
        }
        if form == Formulation::Dc {
            let total = case.base.total_load();
            let with0: f64 = served.iter().map(|s| (total - s) * 100.0).sum();
            let without0: f64 = served[1..].iter().map(|s| (total - s) * 100.0).sum();
            assert!((with0 - 140.0).abs() < 1e-4);
            assert!((without0 - 40.0).abs() < 1e-4);
        }
    }
}

#[test]
fn rop_without_damage_serves_everything() {
    let net = five_bus_ring();
    let case = replicate(&net, &DamageScenario::default(), 1, 1.0).unwrap();
    let (plan, sol) = solve_rop(
        &case,
        Formulation::Dc,
        &FormulationOptions::default(),
        &SolveOptions::default(),
        None,
    )
    .unwrap();
    assert!((sol.objective - net.total_load() * case.period_count() as f64).abs() < 1e-9);
    assert!(plan
        .load_fraction
        .iter()
        .flatten()
        .all(|&f| (f - 1.0).abs() < 1e-9));
}

fn expected_dc_rows_per_period(net: &Network) -> usize {
    let active_buses = net.buses.values().filter(|b| b.in_service).count();
    let refs = net
        .ref_buses
        .iter()
        .filter(|r| net.buses[r].in_service)
        .count();
    let mut rows = refs + active_buses;
    for br in net.branches.values() {
        if net.is_active(ComponentRef::branch(br.id)) {
            rows += if br.damaged { 6 } else { 3 };
        }
    }
    rows += 2 * net
        .gens
        .values()
        .filter(|g| g.damaged && net.is_active(ComponentRef::gen(g.id)))
        .count();
    rows
}

#[test]
fn dc_model_size_formula() {
    let net = five_bus_ring();
    let dmg = DamageScenario::from_components([
        ComponentRef::branch(1),
        ComponentRef::branch(6),
        ComponentRef::branch(7),
        ComponentRef::gen(2),
    ]);
    let case = replicate(&net, &dmg, 2, 1.0).unwrap();
    let rop = build_rop(&case, Formulation::Dc, &FormulationOptions::default(), None).unwrap();
    let k = case.periods;
    let d = dmg.len();
    let loads = net.loads.len();
    // per period rows, plus for n >= 1: monotonicity per component and load, one cardinality row
    let expected = (k + 1) * expected_dc_rows_per_period(&case.base) + k * (d + loads + 1);
    assert_eq!(rop.model.rows.len(), expected);
    // va per bus, pg per gen, p per branch, z per damaged item, zd per load
    let vars = (k + 1) * (net.buses.len() + net.gens.len() + net.branches.len() + d + loads);
    assert_eq!(rop.model.vars.len(), vars);
    assert_eq!(rop.model.num_binaries(), (k + 1) * d);

    let mrsp = build_mrsp(&case.base, Formulation::Dc, &FormulationOptions::default()).unwrap();
    assert_eq!(
        mrsp.model.rows.len(),
        expected_dc_rows_per_period(&case.base)
    );
}

#[test]
fn bus_damage_adds_dependencies() {
    let mut net = five_bus_ring();
    net.buses.get_mut(&4).unwrap().damaged = true;
    net.loads.insert(
        4,
        crate::grid::Load {
            id: 4,
            bus: 4,
            pd: 0.2,
            qd: 0.0,
        },
    );
    let mrsp = build_mrsp(&net, Formulation::Dc, &FormulationOptions::default()).unwrap();
    // bus 4 carries branches 3, 4, 7 and gen 2: one dependency row each;
    // its load is fixed demand, so the bus has to come back
    let deps = mrsp
        .model
        .rows
        .iter()
        .filter(|r| r.name.starts_with("dep_"))
        .count();
    assert_eq!(deps, 4);
    assert_eq!(mrsp.indicators.len(), 1);
    let (sel, _) = solve_mrsp(
        &net,
        Formulation::Dc,
        &FormulationOptions::default(),
        &SolveOptions::default(),
    )
    .unwrap();
    assert_eq!(sel.repaired().unwrap(), vec![ComponentRef::bus(4)]);
}

#[test]
fn scored_plans_never_beat_the_optimum() {
    let net = five_bus_ring();
    let dmg = DamageScenario::all_branches_and_gens(&net);
    let case = replicate(&net, &dmg, 3, 1.0).unwrap();
    let fopts = FormulationOptions::default();
    let sopts = SolveOptions::default();
    let (plan, sol) = solve_rop(&case, Formulation::Dc, &fopts, &sopts, None).unwrap();
    let scored = score_plan(&case, &plan, Formulation::Dc, &fopts, &sopts)
        .unwrap()
        .unwrap();
    assert!((scored.iter().sum::<f64>() - sol.objective).abs() < 1e-6);

    // same budget, components repaired in id order
    let comps = case.damaged();
    let r = case.repairs_per_period;
    let status: Vec<Vec<u8>> = (0..=case.periods)
        .map(|n| {
            (0..comps.len())
                .map(|i| u8::from(n > 0 && i < n * r))
                .collect()
        })
        .collect();
    let naive = RestorationPlan {
        status,
        ..plan.clone()
    };
    if let Some(s) = score_plan(&case, &naive, Formulation::Dc, &fopts, &sopts).unwrap() {
        assert!(s.iter().sum::<f64>() <= sol.objective + 1e-6);
    }
}

#[test]
fn lp_relaxation_bounds_rop() {
    let net = five_bus_ring();
    let dmg = DamageScenario::all_branches_and_gens(&net);
    let case = replicate(&net, &dmg, 3, 1.0).unwrap();
    let rop = build_rop(&case, Formulation::Dc, &FormulationOptions::default(), None).unwrap();
    let relax = solve_lp(&rop.model, &SolveOptions::default()).unwrap();
    let mip = solve_mip(&rop.model, &SolveOptions::default()).unwrap();
    assert!(relax.objective >= mip.objective - 1e-7);
}

mod soc_terms {
    use super::super::soc::BranchTerms;
    use crate::grid::testutil::branch;
    use nalgebra::Complex;
    use proptest::prelude::*;

    type C = Complex<f64>;

    /// Pi-model branch flows from complex voltages.
    fn pi_flows(r: f64, x: f64, bc: f64, tap: f64, shift: f64, vf: C, vt: C) -> (C, C) {
        let ys = C::new(1.0, 0.0) / C::new(r, x);
        let ysh = C::new(0.0, bc / 2.0);
        let t = C::from_polar(tap, shift);
        let i_f = (ys + ysh) / (tap * tap) * vf - ys / t.conj() * vt;
        let i_t = -ys / t * vf + (ys + ysh) * vt;
        (vf * i_f.conj(), vt * i_t.conj())
    }

    proptest! {
        #[test]
        fn w_space_rows_match_ac_flows(
            r in 0.0f64..0.05, x in 0.01f64..0.5, bc in 0.0f64..0.3,
            tap in 0.9f64..1.1, shift in -0.2f64..0.2,
            vmf in 0.9f64..1.1, vmt in 0.9f64..1.1, af in -0.5f64..0.5, at in -0.5f64..0.5,
        ) {
            let mut br = branch(1, 1, 2, x, 1.0);
            br.r = r;
            br.b_charge = bc;
            br.tap = tap;
            br.shift = shift;
            let k = BranchTerms::of(&br).coefficients();
            let (vf, vt) = (C::from_polar(vmf, af), C::from_polar(vmt, at));
            let (sf, st) = pi_flows(r, x, bc, tap, shift, vf, vt);
            let wr = vmf * vmt * (af - at).cos();
            let wi = vmf * vmt * (af - at).sin();
            let (wf, wt) = (vmf * vmf, vmt * vmt);
            let eval = |row: [f64; 3], w: f64| row[0] * w + row[1] * wr + row[2] * wi;
            prop_assert!((eval(k[0], wf) - sf.re).abs() < 1e-9);
            prop_assert!((eval(k[1], wf) - sf.im).abs() < 1e-9);
            prop_assert!((eval(k[2], wt) - st.re).abs() < 1e-9);
            prop_assert!((eval(k[3], wt) - st.im).abs() < 1e-9);
        }
    }
}
