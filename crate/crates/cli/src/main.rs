use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use gmwb_cli::args::Cli;
use gmwb_cli::CliError;

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let err = CliError::Usage {
                key: None,
                message: e.to_string().trim().to_string(),
            };
            return fail(&err);
        }
    };

    let (command, args) = cli.command.split();
    let spec = match args.resolve(command) {
        Ok(spec) => spec,
        Err(e) => return fail(&e),
    };
    if args.dry_run {
        print!("{}", spec.emit());
        return ExitCode::SUCCESS;
    }
    match gmwb_cli::run(&spec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
