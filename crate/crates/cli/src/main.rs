use std::process::ExitCode;

use clap::Parser;

use duase_cli::commands::{run, Cli};
use duase_cli::exit_code;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = cli.resolve().and_then(|cfg| {
        if let Some(threads) = cfg.threads {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        log::info!("running {}", cli.command.name());
        run(&cli.command, &cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
