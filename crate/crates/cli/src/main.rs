mod args;
mod cmd;

use std::process::ExitCode;

use clap::Parser;

use args::{BoundCommand, Cli, Command, SimCommand};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Bound(BoundCommand::Eval(a)) => cmd::bound_eval(a),
        Command::Bound(BoundCommand::Contour(a)) => cmd::bound_contour(a),
        Command::Sim(SimCommand::Xy(a)) => cmd::sim_xy(a),
        Command::Sim(SimCommand::Tfim(a)) => cmd::sim_tfim(a),
        Command::Oracle(a) => cmd::oracle(a),
        Command::Verify(a) => cmd::verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
