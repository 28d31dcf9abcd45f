use clap::Parser;
use overdet_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for (name, _) in &outcome.artifacts.files {
                eprintln!("wrote {}", outcome.out_dir.join(name).display());
            }
            match &outcome.failure {
                Some(e) => {
                    eprintln!("overdet {}: {e}", cli.command.name());
                    e.exit_code()
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("overdet {}: {e}", cli.command.name());
            e.exit_code()
        }
    };
    std::process::exit(code);
}
