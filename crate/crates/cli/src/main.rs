mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::{Exit, Pipeline};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRS_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Parse { case, out } => commands::parse(case, out.out.as_deref()),
        Command::Mrsp {
            input,
            model,
            dump_lp,
            out,
        } => commands::mrsp(
            &input.case,
            &input.damage,
            model,
            dump_lp.as_deref(),
            out.out.as_deref(),
        ),
        Command::Rop {
            input,
            horizon,
            model,
            dump_lp,
            out,
        } => commands::rop(
            &input.case,
            &input.damage,
            horizon,
            model,
            dump_lp.as_deref(),
            out.out.as_deref(),
        ),
        Command::Redispatch {
            input,
            plan,
            period_hours,
            count_initial_period,
            format,
            out,
        } => commands::redispatch(
            &input.case,
            &input.damage,
            plan,
            *period_hours,
            *count_initial_period,
            *format,
            out.out.as_deref(),
        ),
        Command::Pipeline {
            input,
            horizon,
            model,
            mrsp,
            out,
        } => {
            let kind = if *mrsp {
                Pipeline::MrspRop
            } else {
                Pipeline::Rop
            };
            commands::pipeline(kind, input, horizon, Some(model), out)
        }
        Command::Heuristic {
            input,
            horizon,
            out,
        } => commands::pipeline(Pipeline::Heuristic, input, horizon, None, out),
        Command::GenDamage {
            case,
            area,
            area_id,
            fraction,
            seed,
            kinds,
            out,
        } => commands::gen_damage(
            case,
            area.as_deref(),
            *area_id,
            *fraction,
            *seed,
            kinds,
            out.out.as_deref(),
        ),
    };
    match result {
        Ok(exit) => {
            if exit != Exit::Ok {
                log::warn!("finished with status {exit:?}");
            }
            ExitCode::from(exit as u8)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.exit as u8)
        }
    }
}
