//! Full pipeline on two real review-category CSVs, e.g. Amazon exports
//! reduced to `user,item,rating,timestamp`.
//!
//!     cargo run --release --example amazon_at_scale -- src.csv tgt.csv [variant] [k]
//!
//! Expect hours of CPU time on full categories.

use darec::cli::summary;
use darec::harness::{run_with_baseline, RunConfig};
use darec::ratings::{align_domains, ingest_csv, AlignOptions, CsvOptions};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    anyhow::ensure!(args.len() >= 2, "usage: amazon_at_scale SRC.csv TGT.csv [U|I] [k]");
    let variant = args.get(2).map(String::as_str).unwrap_or("I");
    let k = args.get(3).map(String::as_str).unwrap_or("500");
    let opts = CsvOptions::default();
    let data = align_domains(
        &ingest_csv(args[0].as_ref(), opts)?,
        &ingest_csv(args[1].as_ref(), opts)?,
        AlignOptions::default(),
    )?;
    let text = format!(
        "[experiment]\nvariant = {variant}\n\n[autorec]\nk = {k}\nepochs = 200\npatience = 20\n\n[darec]\nepochs = 200\npatience = 20\n"
    );
    let cfg = RunConfig::from_text(&text, &[])?;
    let (base, outcome) = run_with_baseline(&cfg.train, &data)?;
    print!("{}", summary(&[base, outcome.report]));
    Ok(())
}
