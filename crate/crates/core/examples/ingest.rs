//! Aligns two rating CSVs (`user,item,rating[,timestamp]`) on shared users.
//!
//!     cargo run --example ingest -- books.csv movies.csv [min_ratings]
//!
//! Without arguments a small pair of domains is written to a temp dir first.

use std::path::PathBuf;

use darec::ratings::{align_domains, ingest_csv, stats, AlignOptions, CsvOptions, PairStats, UserFilter};

fn demo_files() -> anyhow::Result<(tempfile::TempDir, PathBuf, PathBuf)> {
    let dir = tempfile::tempdir()?;
    let mut books = String::new();
    let mut movies = String::new();
    for u in 0..8 {
        for i in 0..6 {
            if (u + i) % 3 != 0 {
                books.push_str(&format!("u{u},b{i},{}\n", 1 + (u * i) % 5));
            }
            if (u * 2 + i) % 4 != 1 && u < 6 {
                movies.push_str(&format!("u{u},m{i},{}\n", 1 + (u + i) % 5));
            }
        }
    }
    let (b, m) = (dir.path().join("books.csv"), dir.path().join("movies.csv"));
    std::fs::write(&b, books)?;
    std::fs::write(&m, movies)?;
    Ok((dir, b, m))
}

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let _guard;
    let (src, tgt) = if args.len() >= 2 {
        (PathBuf::from(&args[0]), PathBuf::from(&args[1]))
    } else {
        let (dir, b, m) = demo_files()?;
        _guard = dir;
        (b, m)
    };
    let min_ratings = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let opts = CsvOptions::default();
    let data = align_domains(
        &ingest_csv(&src, opts)?,
        &ingest_csv(&tgt, opts)?,
        AlignOptions {
            min_ratings,
            filter: UserFilter::PerDomain,
        },
    )?;
    let table = PairStats {
        source: stats(&data.source)?,
        target: stats(&data.target)?,
    };
    print!("{table}");
    Ok(())
}
