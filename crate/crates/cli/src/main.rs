use clap::Parser;
use stacknet_cli::commands::{init_thread_pool, run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version print to stdout and succeed; usage mistakes
            // are user errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = init_thread_pool().and_then(|()| run(cli)) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
