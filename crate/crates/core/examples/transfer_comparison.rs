//! U-DARec and I-DARec against the AutoRec-only baseline on the same
//! synthetic data, for a few cross-domain correlations.
//!
//!     cargo run --release --example transfer_comparison

use darec::cli::load_data;
use darec::harness::{run_experiment, run_with_baseline, RunConfig};

fn main() -> anyhow::Result<()> {
    let u_text = include_str!("../configs/transfer-u.conf");
    let i_text = include_str!("../configs/transfer-i.conf");
    println!("{:>5} {:>10} {:>10} {:>10}", "rho", "AutoRec", "U-DARec", "I-DARec");
    for rho in [0.0, 0.5, 0.9] {
        let set = [format!("synth.rho={rho}")];
        let u = RunConfig::from_text(u_text, &set)?;
        let i = RunConfig::from_text(i_text, &set)?;
        let data = load_data(&u, 0)?;
        let (base, ud) = run_with_baseline(&u.train, &data)?;
        let id = run_experiment(&i.train, &data)?;
        println!(
            "{rho:>5} {:>10.4} {:>10.4} {:>10.4}",
            base.rmse_target, ud.report.rmse_target, id.rmse_target
        );
    }
    Ok(())
}
