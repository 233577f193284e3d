//! `peaktag` command-line tool.

mod args;
mod commands;
mod error;
mod overlay;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use peaktag::{EvalSummary, PeakTag, RunConfig};
use serde::Serialize;

use args::{Cli, Command};
use commands::AlignmentReport;
use error::CliError;

/// Flags beat the config file, which beats the defaults.
fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cli.params.apply(&mut cfg);
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn describe_tags(tags: &[PeakTag]) {
    for t in tags {
        if t.visible {
            eprintln!(
                "  {:<24} ({}, {})  confidence {:.3}",
                t.name, t.photo_x, t.photo_y, t.confidence
            );
        } else {
            eprintln!("  {:<24} not visible", t.name);
        }
    }
}

fn describe_alignment(r: &AlignmentReport) {
    eprintln!(
        "azimuth {:.2} deg (dx {}, dy {}, scale {:.4}, score {:.4})",
        r.alignment.azimuth, r.alignment.dx, r.alignment.dy, r.alignment.scale, r.alignment.score
    );
    eprintln!("fov {:.2} deg ({:?})", r.fov_deg, r.fov_source);
    if let Some(m) = &r.camera_match {
        eprintln!(
            "camera {} {} (similarity {:.3})",
            m.spec.make, m.spec.model, m.similarity
        );
    }
    describe_tags(&r.peak_tags);
}

fn describe_summary(s: &EvalSummary) {
    eprintln!("{}", s.to_table());
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Align(a) => {
            let report = commands::align(a, &cfg)?;
            describe_alignment(&report);
            if cli.json {
                print_json(&report);
            }
        }
        Command::TagPeaks(a) => {
            let tags = commands::tag_peaks(a, &cfg)?;
            describe_tags(&tags);
            if cli.json {
                print_json(&tags);
            }
        }
        Command::Evaluate(a) => {
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = cli.jobs {
                pool = pool.num_threads(n.max(1));
            }
            let pool = pool
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
            let summary = pool.install(|| commands::evaluate(a, &cfg))?;
            describe_summary(&summary);
            if cli.json {
                print_json(&summary);
            }
        }
        Command::Synth(a) => {
            let dirs = commands::synth(a)?;
            for d in &dirs {
                eprintln!("wrote {}", d.display());
            }
            if cli.json {
                print_json(&dirs);
            }
        }
        Command::Fov(a) => {
            let report = commands::fov(a)?;
            eprintln!("fov {:.3} deg ({:.6} rad)", report.fov.fov_deg, report.fov.fov);
            if let Some(k) = report.scale_factor {
                eprintln!("scale factor {k:.6}");
            }
            if cli.json {
                print_json(&report);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = e.report();
            eprintln!("error: {e}");
            if cli.json {
                print_json(&report);
            }
            ExitCode::from(report.exit_code as u8)
        }
    }
}
