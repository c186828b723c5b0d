use std::io::Write;
use std::process::ExitCode;

use growthlab_cli::{parse_args, run, write_artifacts, Artifact, CliError};

fn print_artifacts(artifacts: &[Artifact]) {
    let mut out = std::io::stdout().lock();
    for a in artifacts {
        let _ = out.write_all(a.contents.as_bytes());
    }
}

fn emit(spec_out: Option<&std::path::Path>, artifacts: &[Artifact]) -> Result<(), CliError> {
    match spec_out {
        Some(dir) => {
            for path in write_artifacts(dir, artifacts)? {
                println!("{path}");
            }
        }
        None => print_artifacts(artifacts),
    }
    Ok(())
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let spec = match parse_args(std::env::args_os()) {
        Ok(spec) => spec,
        Err(Ok(display)) => {
            let _ = display.print();
            return ExitCode::SUCCESS;
        }
        Err(Err(e)) => return fail(&e),
    };
    let out_dir = spec.run_args().out.clone();
    match run(&spec) {
        Ok(output) => match emit(out_dir.as_deref(), &output.artifacts) {
            Ok(()) => ExitCode::from(output.exit_code as u8),
            Err(e) => fail(&e),
        },
        Err(e) => {
            if let CliError::Budget { partial, .. } = &e {
                if let Err(io) = emit(out_dir.as_deref(), partial) {
                    return fail(&io);
                }
            }
            fail(&e)
        }
    }
}
