use std::process::ExitCode;

use clap::Parser;

use fmcq_service::cli::{self, Cli, CliError, Command};

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Solve(a) => cli::solve(&a),
        Command::Count(a) => cli::count(&a),
        Command::Diagnose(a) => cli::diagnose(&a),
        Command::Analyze(a) => cli::analyze_model(&a),
        Command::Bench(a) => cli::bench(&a),
        Command::Serve(a) => {
            let mut models = Vec::new();
            for path in &a.model {
                let (format, fm) = cli::load_model(path, a.format)?;
                let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model").to_string();
                models.push((name, format, fm));
            }
            let rt = tokio::runtime::Runtime::new().map_err(CliError::Serve)?;
            rt.block_on(fmcq_service::serve(a.port, models)).map_err(CliError::Serve)?;
            Ok(String::new())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
