//! Target RMSE of U-DARec as the AutoRec embedding size grows.
//!
//!     cargo run --release --example embedding_sweep

use darec::cli::load_data;
use darec::harness::{interior_minimum, sweep, RunConfig, SweepAxis};

fn main() -> anyhow::Result<()> {
    let cfg = RunConfig::from_text(include_str!("../configs/transfer-u.conf"), &[])?;
    let ks = [8.0, 16.0, 32.0, 64.0, 128.0];
    let data = load_data(&cfg, 0)?;
    let reports = sweep(&cfg.train, &data, SweepAxis::K, &ks)?;
    for (k, r) in ks.iter().zip(&reports) {
        println!("k = {k:>4}: target RMSE {:.4}", r.rmse_target);
    }
    if let Some((best, interior)) = interior_minimum(&reports) {
        println!("best k = {} ({})", ks[best], if interior { "interior" } else { "at an endpoint" });
    }
    Ok(())
}
