//! Thin binary wrapper: parse arguments, run the command, map errors to
//! exit codes (0 success, 1 usage/config, 2 broken internal invariant).

use clap::Parser;
use mixaq::cli::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests land here too; they exit 0, real
            // usage errors exit 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
