use clap::Parser;
use slopeforge_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let result = run(&cli);
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(reason) = &result.reason {
        eprintln!("{reason}");
    }
    if let Some(data) = &result.stdout {
        print!("{data}");
    }
    print!("{}", result.summary_text());
    std::process::exit(result.exit_code);
}
