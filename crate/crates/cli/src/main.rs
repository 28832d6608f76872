mod args;
mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, GlobalArgs};
use commands::{load_model, CliError};
use output::Report;

/// Configuration echo for the provenance line. Output location and thread
/// count are left out since they do not change results.
fn provenance(cli: &Cli) -> String {
    let g = &cli.global;
    let model = match (&g.model, &g.lambdas) {
        (Some(m), _) => m.clone(),
        (None, Some(l)) => format!("lambdas={l:?}"),
        (None, None) => "-".into(),
    };
    let seed = g.seed.map_or("-".into(), |s| s.to_string());
    format!("ousg {}; model: {model}; seed: {seed}; command: {:?}", env!("CARGO_PKG_VERSION"), cli.command)
}

fn output_path(global: &GlobalArgs) -> Option<PathBuf> {
    let out = global.out.as_ref()?;
    match &global.output_dir {
        Some(dir) if out.is_relative() => Some(dir.join(out)),
        _ => Some(out.clone()),
    }
}

fn dispatch(cli: &Cli, raw_model: &mut Option<String>) -> Result<Report, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Validate => commands::validate(&load_model(g)?),
        Command::Decompose(a) => commands::decompose_cmd(&load_model(g)?, a, raw_model),
        Command::Kernel(a) => commands::kernel(&load_model(g)?, a),
        Command::Apply(a) => commands::apply(&load_model(g)?, a, g),
        Command::Maximal(a) => commands::maximal_cmd(&load_model(g)?, a, g),
        Command::Sample(a) => commands::sample(&load_model(g)?, a, g),
        Command::Geometry(a) => commands::geometry(a, g),
        Command::Weaktype(a) => commands::weaktype(a, g),
        Command::VerifyAll(a) => commands::verify_all(a, g),
        Command::Models => commands::models(),
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if let Some(threads) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {threads} threads: {e}")))?;
    }
    let mut raw_model = None;
    let report = dispatch(cli, &mut raw_model)?;
    let mut out: Box<dyn Write> = match output_path(&cli.global) {
        Some(path) => Box::new(BufWriter::new(File::create(&path)?)),
        None => Box::new(io::stdout().lock()),
    };
    match raw_model {
        Some(text) => out.write_all(text.as_bytes())?,
        None => report.write(cli.global.format, &provenance(cli), &mut out, &mut io::stderr())?,
    }
    out.flush()?;
    Ok(!report.verdict_failed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
