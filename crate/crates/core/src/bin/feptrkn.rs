use clap::Parser;
use feptrkn::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("FEPTRKN_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Err(err) = run(&cli) {
        eprintln!("feptrkn: {err}");
        std::process::exit(err.exit_code());
    }
}
