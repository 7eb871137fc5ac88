use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use grs_core::formulations::{build_mrsp, build_rop, solve_mrsp, solve_rop, FormulationOptions};
use grs_core::grid::{
    apply_damage, random_damage, replicate, ComponentKind, DamageScenario, Network, RestorationPlan,
};
use grs_core::mip::lpfile::to_lp_string;
use grs_core::mip::{SolveOptions, SolveStatus};
use grs_core::netio::{self, parse_matpower, write_report, ReportFormat};
use grs_core::workflows::{
    run_heuristic, run_mrsp_then_rop, run_rop_then_redispatch, PipelineOptions, PipelineResult,
    SolveSummary,
};
use grs_core::{acvalidate, Error, Formulation};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{BatchInputArgs, Format, HorizonArgs, Kind, ModelArgs, ResultOutputArgs};

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Ok = 0,
    Infeasible = 1,
    Input = 2,
    Limit = 3,
}

/// A failed command: exit status plus message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            exit: Exit::Input,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let exit = match &e {
            Error::Infeasible { .. } | Error::MrspInfeasible => Exit::Infeasible,
            Error::NoIncumbent { .. }
            | Error::NumericalFailure(_)
            | Error::NonConvergence { .. }
            | Error::Unbounded { .. } => Exit::Limit,
            _ => Exit::Input,
        };
        Failure {
            exit,
            message: e.to_string(),
        }
    }
}

pub type CmdResult = Result<Exit, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| Failure::input(format!("stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("output serialises");
    v.push(b'\n');
    v
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Reads a Matpower case, or a network JSON written by `parse`.
pub fn load_case(path: &Path) -> Result<Network, Failure> {
    let text = read(path)?;
    let net = if is_json(path) {
        netio::network_from_json(&text)?
    } else {
        netio::load_network(&text)?
    };
    Ok(net)
}

pub fn load_damage(path: &Path, net: &Network) -> Result<DamageScenario, Failure> {
    let dmg: DamageScenario = serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    dmg.resolve(net)?;
    Ok(dmg)
}

fn solve_options(m: &ModelArgs) -> Result<SolveOptions, Failure> {
    let mut o = SolveOptions::default();
    if let Some(g) = m.gap {
        if !(g >= 0.0) {
            return Err(Failure::input("--gap must be non-negative"));
        }
        o.limits.gap = g;
    }
    if let Some(t) = m.time_limit {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::input("--time-limit must be positive"));
        }
        o.limits.time = Some(Duration::from_secs_f64(t));
    }
    o.limits.nodes = m.node_limit;
    Ok(o)
}

fn check_horizon(h: &HorizonArgs) -> Result<(), Failure> {
    if h.periods == 0 {
        return Err(Failure::input("--periods must be at least 1"));
    }
    check_hours(h.period_hours)
}

fn check_hours(hours: f64) -> Result<(), Failure> {
    if !(hours > 0.0 && hours.is_finite()) {
        return Err(Failure::input("--period-hours must be positive"));
    }
    Ok(())
}

fn pipeline_options(h: &HorizonArgs, m: Option<&ModelArgs>) -> Result<PipelineOptions, Failure> {
    check_horizon(h)?;
    let mut o = PipelineOptions {
        periods: h.periods,
        period_hours: h.period_hours,
        count_initial_period: h.count_initial_period,
        ..Default::default()
    };
    if let Some(m) = m {
        o.formulation = m.formulation.into();
        o.solve_opts = solve_options(m)?;
    }
    Ok(o)
}

/// Exit status for a solve that returned a usable solution.
fn status_exit(status: SolveStatus) -> Exit {
    match status {
        SolveStatus::Optimal | SolveStatus::GapLimit => Exit::Ok,
        SolveStatus::Infeasible => Exit::Infeasible,
        _ => Exit::Limit,
    }
}

pub fn parse(case: &Path, out: Option<&Path>) -> CmdResult {
    let parsed = parse_matpower(&read(case)?)?;
    for w in &parsed.warnings {
        log::warn!("skipped section {w:?}");
    }
    let net = netio::to_network(&parsed.case)?;
    let mut json = netio::network_to_json(&net)?;
    json.push('\n');
    write(out, json.as_bytes())?;
    Ok(Exit::Ok)
}

#[derive(Serialize)]
struct MrspOutput {
    formulation: Formulation,
    damaged: Vec<grs_core::ComponentRef>,
    repair: Vec<grs_core::ComponentRef>,
    leave_out: Vec<grs_core::ComponentRef>,
    solve: SolveSummary,
}

pub fn mrsp(
    case: &Path,
    damage: &Path,
    m: &ModelArgs,
    dump_lp: Option<&Path>,
    out: Option<&Path>,
) -> CmdResult {
    let net = load_case(case)?;
    let dmg = load_damage(damage, &net)?;
    let damaged = apply_damage(&net, &dmg)?;
    let form: Formulation = m.formulation.into();
    let fopts = FormulationOptions::default();
    if let Some(p) = dump_lp {
        let model = build_mrsp(&damaged, form, &fopts)?;
        write(Some(p), to_lp_string(&model.model).as_bytes())?;
    }
    let (selection, sol) = solve_mrsp(&damaged, form, &fopts, &solve_options(m)?)?;
    let clean = selection.clean()?;
    let output = MrspOutput {
        formulation: form,
        damaged: damaged.damaged_components(),
        repair: clean
            .iter()
            .filter(|(_, &on)| on)
            .map(|(c, _)| *c)
            .collect(),
        leave_out: clean
            .iter()
            .filter(|(_, &on)| !on)
            .map(|(c, _)| *c)
            .collect(),
        solve: SolveSummary::from(&sol),
    };
    log::info!(
        "mrsp: repair {} of {} ({:?})",
        output.repair.len(),
        output.damaged.len(),
        sol.status
    );
    write(out, &to_json(&output))?;
    Ok(status_exit(sol.status))
}

pub fn rop(
    case: &Path,
    damage: &Path,
    h: &HorizonArgs,
    m: &ModelArgs,
    dump_lp: Option<&Path>,
    out: Option<&Path>,
) -> CmdResult {
    check_horizon(h)?;
    let net = load_case(case)?;
    let dmg = load_damage(damage, &net)?;
    let mc = replicate(&net, &dmg, h.periods, h.period_hours)?;
    let form: Formulation = m.formulation.into();
    let fopts = FormulationOptions::default();
    if let Some(p) = dump_lp {
        let model = build_rop(&mc, form, &fopts, None)?;
        write(Some(p), to_lp_string(&model.model).as_bytes())?;
    }
    let (plan, sol) = solve_rop(&mc, form, &fopts, &solve_options(m)?, None)?;
    log::info!(
        "rop: objective {} gap {:.2e} nodes {} ({:?})",
        sol.objective,
        sol.gap,
        sol.stats.nodes,
        sol.status
    );
    write(out, &to_json(&plan))?;
    Ok(status_exit(sol.status))
}

/// Accepts a bare plan or any JSON object carrying one under `plan`.
fn load_plan(path: &Path) -> Result<RestorationPlan, Failure> {
    let text = read(path)?;
    let bad = |e: serde_json::Error| Failure::input(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
    let inner = match value.get("plan") {
        Some(p) => p.clone(),
        None => value,
    };
    serde_json::from_value(inner).map_err(bad)
}

pub fn redispatch(
    case: &Path,
    damage: &Path,
    plan: &Path,
    period_hours: f64,
    count_initial_period: bool,
    format: Format,
    out: Option<&Path>,
) -> CmdResult {
    check_hours(period_hours)?;
    let net = load_case(case)?;
    let dmg = load_damage(damage, &net)?;
    let plan = load_plan(plan)?;
    let mc = replicate(&net, &dmg, plan.periods.max(1), period_hours)?;
    let report = acvalidate::redispatch_plan(&mc, &plan, count_initial_period)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let fmt = match format {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
    };
    write(out, &write_report(&report, fmt))?;
    Ok(Exit::Ok)
}

#[derive(Clone, Copy)]
pub enum Pipeline {
    Rop,
    MrspRop,
    Heuristic,
}

fn run_one(
    kind: Pipeline,
    net: &Network,
    dmg: &DamageScenario,
    opts: &PipelineOptions,
) -> Result<PipelineResult, Failure> {
    let r = match kind {
        Pipeline::Rop => run_rop_then_redispatch(net, dmg, opts)?,
        Pipeline::MrspRop => run_mrsp_then_rop(net, dmg, opts)?,
        Pipeline::Heuristic => run_heuristic(net, dmg, opts)?,
    };
    Ok(r)
}

fn result_exit(r: &PipelineResult) -> Exit {
    [&r.mrsp_solve, &r.rop_solve]
        .iter()
        .filter_map(|s| s.as_ref())
        .map(|s| status_exit(s.status))
        .max()
        .unwrap_or(Exit::Ok)
}

fn emit(
    r: &PipelineResult,
    json: Option<&Path>,
    csv: Option<&Path>,
    timings: bool,
    label: &str,
) -> Result<(), Failure> {
    for w in &r.report.warnings {
        log::warn!("{label}{w}");
    }
    if timings {
        for (stage, s) in &r.timings {
            eprintln!("{label}{stage}: {s:.3} s");
        }
    }
    write(json, r.to_json()?.as_bytes())?;
    if let Some(p) = csv {
        write(Some(p), &write_report(&r.report, ReportFormat::Csv))?;
    }
    Ok(())
}

fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries =
        fs::read_dir(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_json(p))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::input(format!(
            "{}: no *.json scenarios",
            dir.display()
        )));
    }
    Ok(files)
}

pub fn pipeline(
    kind: Pipeline,
    input: &BatchInputArgs,
    h: &HorizonArgs,
    m: Option<&ModelArgs>,
    out: &ResultOutputArgs,
) -> CmdResult {
    let opts = pipeline_options(h, m)?;
    let net = load_case(&input.case)?;
    let Some(dir) = &input.scenarios else {
        let dmg = load_damage(
            input.damage.as_deref().expect("clap requires --damage"),
            &net,
        )?;
        let r = run_one(kind, &net, &dmg, &opts)?;
        emit(&r, out.out.as_deref(), out.csv.as_deref(), out.timings, "")?;
        return Ok(result_exit(&r));
    };

    let out_dir = out.out_dir.as_deref().expect("clap requires --out-dir");
    fs::create_dir_all(out_dir)
        .map_err(|e| Failure::input(format!("{}: {e}", out_dir.display())))?;
    let files = scenario_files(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(input.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::input(format!("thread pool: {e}")))?;
    let exits: Vec<Exit> = pool.install(|| {
        files
            .par_iter()
            .map(|f| {
                let stem = f
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let label = format!("{stem}: ");
                let run = || -> CmdResult {
                    let dmg = load_damage(f, &net)?;
                    let r = run_one(kind, &net, &dmg, &opts)?;
                    let json = out_dir.join(format!("{stem}.json"));
                    let csv = out_dir.join(format!("{stem}.csv"));
                    emit(&r, Some(&json), Some(&csv), out.timings, &label)?;
                    Ok(result_exit(&r))
                };
                run().unwrap_or_else(|f| {
                    eprintln!("{label}{}", f.message);
                    f.exit
                })
            })
            .collect()
    });
    Ok(exits.into_iter().max().unwrap_or(Exit::Ok))
}

/// Parses `1-30,113,115` into a bus set.
pub fn parse_bus_list(s: &str) -> Result<BTreeSet<usize>, Failure> {
    let mut out = BTreeSet::new();
    let bad = |p: &str| Failure::input(format!("--area: cannot read `{p}` as a bus id or range"));
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad(part))?;
                let b: usize = b.trim().parse().map_err(|_| bad(part))?;
                if a > b {
                    return Err(bad(part));
                }
                out.extend(a..=b);
            }
            None => {
                out.insert(part.parse().map_err(|_| bad(part))?);
            }
        }
    }
    if out.is_empty() {
        return Err(Failure::input("--area is empty"));
    }
    Ok(out)
}

pub fn gen_damage(
    case: &Path,
    area: Option<&str>,
    area_id: Option<usize>,
    fraction: f64,
    seed: u64,
    kinds: &[Kind],
    out: Option<&Path>,
) -> CmdResult {
    let net = load_case(case)?;
    let buses = match (area, area_id) {
        (Some(list), _) => Some(parse_bus_list(list)?),
        (None, Some(id)) => {
            if is_json(case) {
                return Err(Failure::input("--area-id needs a Matpower case"));
            }
            let raw = parse_matpower(&read(case)?)?.case;
            let b = netio::area_buses(&raw, id);
            if b.is_empty() {
                return Err(Failure::input(format!("no bus in area {id}")));
            }
            Some(b)
        }
        (None, None) => None,
    };
    let kinds: Vec<ComponentKind> = kinds
        .iter()
        .map(|k| match k {
            Kind::Bus => ComponentKind::Bus,
            Kind::Branch => ComponentKind::Branch,
            Kind::Gen => ComponentKind::Gen,
        })
        .collect();
    let dmg = random_damage(&net, buses.as_ref(), fraction, &kinds, seed)?;
    log::info!("damaged {} components", dmg.len());
    write(out, &to_json(&dmg))?;
    Ok(Exit::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bus_lists_accept_ranges() {
        let s = parse_bus_list("1-3, 7,5").unwrap();
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec![1, 2, 3, 5, 7]);
        assert!(parse_bus_list("3-1").is_err());
        assert!(parse_bus_list("a").is_err());
        assert!(parse_bus_list(",").is_err());
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(Failure::from(Error::MrspInfeasible).exit, Exit::Infeasible);
        assert_eq!(
            Failure::from(Error::NoIncumbent { stage: "rop" }).exit,
            Exit::Limit
        );
        assert_eq!(
            Failure::from(Error::InvalidConfig("x".into())).exit,
            Exit::Input
        );
        assert_eq!(status_exit(SolveStatus::IterationLimit), Exit::Limit);
        assert_eq!(status_exit(SolveStatus::GapLimit), Exit::Ok);
    }
}
