//! Trains U-DARec and its AutoRec baseline on the bundled quickstart config.
//!
//!     cargo run --release --example quickstart

use darec::cli::{load_data, summary};
use darec::harness::{run_with_baseline, RunConfig};

fn main() -> anyhow::Result<()> {
    let text = include_str!("../configs/quickstart.conf");
    let cfg = RunConfig::from_text(text, &[])?;
    let data = load_data(&cfg, cfg.train.seed)?;
    println!(
        "{} shared users, {} source items, {} target items",
        data.n_users(),
        data.source.n_items(),
        data.target.n_items()
    );
    let (baseline, outcome) = run_with_baseline(&cfg.train, &data)?;
    print!("{}", summary(&[baseline, outcome.report]));
    Ok(())
}
