use clap::error::ErrorKind;
use clap::Parser;

use textsleuth_cli::error::CliError;
use textsleuth_cli::{run, Cli};

fn fail(err: &CliError) -> ! {
    eprintln!("{}", err.to_json());
    std::process::exit(err.exit_code());
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => fail(&CliError::Usage(e.to_string().trim_end().to_string())),
    };
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(cli) {
        fail(&e);
    }
}
