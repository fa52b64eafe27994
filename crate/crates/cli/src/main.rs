mod args;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use args::{Cli, Command};
use clap::Parser;
use error::CliError;
use output::{write_out, Report};

fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Packet(a) => commands::packet(a),
        Command::Riemann(a) => commands::riemann(a),
        Command::Family(a) => commands::family(a),
        Command::Assp(a) => commands::assp(a),
        Command::Variation(a) => commands::variation(a),
        Command::Diverge(a) => commands::diverge(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Triangular(a) => commands::triangular(a, cli.global.seed),
        Command::Kk(a) => commands::kk(a),
        Command::Bound(a) => commands::bound(a),
        Command::Run(_) => Err(CliError::Config("nested run".into())),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let cli = match &cli.command {
        Command::Run(r) => {
            let cfg = config::RunConfig::load(&r.config)?;
            Cli::try_parse_from(cfg.argv()?).map_err(|e| CliError::Config(e.to_string().trim().to_string()))?
        }
        _ => cli,
    };
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let report = dispatch(&cli)?;
    write_out(cli.global.out.as_deref(), &report.render(cli.global.format)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = match e.kind() {
                clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => "missing command; see --help".to_string(),
                _ => e.to_string().trim().to_string(),
            };
            let err = CliError::Config(msg);
            eprintln!("{}", err.record());
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
