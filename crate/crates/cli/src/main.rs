//! `vacneg`: command-line front end.
//!
//! Every subcommand prints a one-line JSON summary to stdout. Exit status is
//! 0 on success, 2 when a verdict stays undecided at the final precision, and
//! 1 on errors or invalid configuration.

mod config;
mod run;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{resolve, Cmd, Flags, RunConfig, Violation};
use run::Outcome;

#[derive(Parser)]
#[command(name = "vacneg", version, about = "Vacuum entanglement of the lattice scalar field")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correlators 2<φ0 φn> and 2<π0 πn> in the thermodynamic limit
    Corr(Flags),
    /// Region-pair covariance blocks with physicality checks
    Cm(Flags),
    /// Partial-transpose symplectic spectrum of both sectors
    Spectrum(Flags),
    /// Logarithmic negativity and verdict
    Neg(Flags),
    /// Consolidation into two-mode pairs
    Consolidate(Flags),
    /// Optimal detector profiles and extraction report
    Profile(Flags),
    /// Beamsplitter swap of the extracted pair onto detectors
    Swap(Flags),
    /// Smallest separable separation for one region size
    Sphere(Flags),
    /// Negativity over an (md, mrt) grid at one pixelation
    Heatmap(Flags),
    /// Minimum negativity against region size at fixed md
    ScanMin(Flags),
    /// Negativity decay in mrt at fixed md for several pixelations
    ScanDecay(Flags),
    /// Sphere radius growth against pixelation at fixed md
    SphereGrowth(Flags),
    /// Check a configuration without running it
    Validate {
        /// Subcommand to validate for; defaults to the config file's `subcommand`
        #[arg(long = "for", value_name = "SUBCOMMAND")]
        target: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
}

fn emit(summary: &Value) {
    println!("{}", serde_json::to_string(summary).expect("summary serializes"));
}

fn invalid(cmd: &str, violations: &[Violation]) -> ExitCode {
    for v in violations {
        eprintln!("error: {v}");
    }
    emit(&json!({"command": cmd, "status": "invalid", "violations": violations}));
    ExitCode::from(1)
}

fn validate(target: Option<String>, flags: Flags) -> ExitCode {
    let (cfg, mut violations) = RunConfig::load(flags);
    let name = target.or_else(|| cfg.subcommand.clone());
    let cmd = match name.as_deref().map(str::parse::<Cmd>) {
        Some(Ok(c)) => Some(c),
        Some(Err(e)) => {
            violations.push(Violation::new("subcommand", e));
            None
        }
        None => {
            violations.push(Violation::new("subcommand", "missing (use --for or the config file)"));
            None
        }
    };
    if let Some(c) = cmd {
        if let Err(v) = resolve(c, &cfg) {
            violations.extend(v);
        }
    }
    emit(&json!({"command": "validate", "for": name, "violations": violations}));
    if violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cmd: Cmd, flags: Flags) -> ExitCode {
    let (cfg, violations) = RunConfig::load(flags);
    if !violations.is_empty() {
        return invalid(cmd.as_str(), &violations);
    }
    let plan = match resolve(cmd, &cfg) {
        Ok(p) => p,
        Err(v) => return invalid(cmd.as_str(), &v),
    };
    match vacneg::exec::with_jobs(plan.jobs, || run::run(&plan)) {
        Ok(report) => {
            let status = match report.outcome {
                Outcome::Done => "ok",
                Outcome::Undecided => "undecided",
                Outcome::Failed => "failed",
            };
            let mut summary = report.summary;
            if let Value::Object(o) = &mut summary {
                o.insert("status".into(), json!(status));
            }
            emit(&summary);
            match report.outcome {
                Outcome::Done => ExitCode::SUCCESS,
                Outcome::Undecided => ExitCode::from(2),
                Outcome::Failed => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut out = json!({"command": cmd.as_str(), "status": "error", "error": e.to_string()});
            if let vacneg::Error::PrecisionExhausted { escalations, estimate, bound } = &e {
                out["trace"] = json!({"escalations": escalations, "estimate": estimate, "bound": bound});
            }
            emit(&out);
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, flags) = match cli.command {
        Command::Validate { target, flags } => return validate(target, flags),
        Command::Corr(f) => (Cmd::Corr, f),
        Command::Cm(f) => (Cmd::Cm, f),
        Command::Spectrum(f) => (Cmd::Spectrum, f),
        Command::Neg(f) => (Cmd::Neg, f),
        Command::Consolidate(f) => (Cmd::Consolidate, f),
        Command::Profile(f) => (Cmd::Profile, f),
        Command::Swap(f) => (Cmd::Swap, f),
        Command::Sphere(f) => (Cmd::Sphere, f),
        Command::Heatmap(f) => (Cmd::Heatmap, f),
        Command::ScanMin(f) => (Cmd::ScanMin, f),
        Command::ScanDecay(f) => (Cmd::ScanDecay, f),
        Command::SphereGrowth(f) => (Cmd::SphereGrowth, f),
    };
    execute(cmd, flags)
}
