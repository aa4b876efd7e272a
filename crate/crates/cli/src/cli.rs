//! Command-line entry: one subcommand per solver, `--key value` per parameter.

use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::commands::{solver, verify::failed_summary, Solver, SOLVERS};
use crate::config::RunConfig;
use crate::{with_pool, RunError};

pub fn command() -> Command {
    let mut cmd = Command::new("collapse-lab")
        .about("Self-similar collapse solvers with reproducible CSV/JSON output")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for s in SOLVERS {
        cmd = cmd.subcommand(subcommand(s));
    }
    cmd
}

fn subcommand(s: &Solver) -> Command {
    let mut c = Command::new(s.name)
        .about(s.about)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("key=value file; flags override it"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("DIR")
                .required(true)
                .value_parser(clap::value_parser!(PathBuf))
                .help("output directory"),
        );
    for p in s.params {
        let arg = Arg::new(p.key).long(p.key);
        c = c.arg(if p.switch {
            arg.action(ArgAction::SetTrue).help(p.help)
        } else {
            arg.value_name("VALUE").help(format!("{} [default: {}]", p.help, p.default))
        });
    }
    c
}

/// Overrides given on the command line, in parameter order.
fn overrides(s: &Solver, m: &ArgMatches) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for p in s.params {
        if p.switch {
            if m.get_flag(p.key) {
                out.push((p.key.to_string(), "true".to_string()));
            }
        } else if let Some(v) = m.get_one::<String>(p.key) {
            out.push((p.key.to_string(), v.clone()));
        }
    }
    out
}

/// Parses `args`, runs the solver and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let Some((name, m)) = matches.subcommand() else { return 2 };
    let Some(s) = solver(name) else { return 2 };
    let out = m.get_one::<PathBuf>("out").cloned().unwrap_or_default();
    let cfg = match RunConfig::build(s.name, s.params, m.get_one::<PathBuf>("config").map(PathBuf::as_path), &overrides(s, m), out) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("collapse-lab {name}: config error: {e}");
            return 2;
        }
    };
    let result = with_pool(|| (s.run)(&cfg));
    let summary = match result {
        Ok(summary) => summary,
        Err(RunError::Solver(msg)) => {
            eprintln!("collapse-lab {name}: solver failed: {msg}");
            if let Err(e) = failed_summary(&cfg, s.name, &msg) {
                eprintln!("collapse-lab {name}: {e}");
            }
            return 1;
        }
        Err(e) => {
            eprintln!("collapse-lab {name}: {e}");
            return e.exit_code();
        }
    };
    for d in summary.failures() {
        eprintln!("FAIL {}: {} (need {})", d.name, d.measured, d.requirement);
    }
    println!("{}: {} diagnostics, {} failed, output in {}", name, summary.diagnostics.len(), summary.failures().len(), cfg.out.display());
    if summary.all_pass {
        0
    } else {
        1
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
