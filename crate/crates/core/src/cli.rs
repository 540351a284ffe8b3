//! Command-line front end. The `darec` binary is a thin wrapper around [`main`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::{
    gradcheck_suite, interior_minimum, reports_csv, run_experiment_full, run_with_baseline, synth_generate, sweep,
    DataSource, MeanStd, Outcome, Report, RunConfig, COMPONENTS,
};
use crate::nncore::checkpoint;
use crate::ratings::{
    align_domains, dataset_file, ingest_csv, stats, AlignOptions, AlignedDataset, CsvOptions, Domain, Orientation,
    PairStats, UserFilter,
};

#[derive(Debug, Parser)]
#[command(name = "darec", version, about = "Cross-domain rating prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every config-driven subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Config file (`key = value` lines under `[section]` headers).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key=value` override, applied after the config file. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align two rating CSVs on their shared users and write a dataset file.
    Ingest {
        source: PathBuf,
        target: PathBuf,
        #[arg(long, default_value_t = 5)]
        min_ratings: usize,
        /// Apply the threshold to the combined count instead of each domain.
        #[arg(long)]
        combined: bool,
        /// The CSVs start with a header row.
        #[arg(long)]
        header: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the dataset table for a dataset file, or for the configured data.
    Stats {
        dataset: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write the configured synthetic dataset to `--out`.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Train and evaluate; writes reports, the resolved config and checkpoints.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run every point of `sweep.axis` over `sweep.values` for each seed.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Finite-difference check of every analytic gradient.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        /// Perturb one component's analytic gradient (negative control).
        #[arg(long, hide = true)]
        corrupt: Option<String>,
    },
}

/// Parses `std::env::args`, runs the command and maps failures to exit 1.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Runs one subcommand. `Ok(false)` means it ran but reported failure.
pub fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Ingest {
            source,
            target,
            min_ratings,
            combined,
            header,
            out,
        } => {
            let opts = CsvOptions {
                has_header: header,
                ..CsvOptions::default()
            };
            let align = AlignOptions {
                min_ratings,
                filter: if combined {
                    UserFilter::Combined
                } else {
                    UserFilter::PerDomain
                },
            };
            let data = align_domains(&ingest_csv(&source, opts)?, &ingest_csv(&target, opts)?, align)?;
            dataset_file::save(&data, &out)?;
            print!("{}", pair_stats(&data)?);
            Ok(true)
        }
        Command::Stats { dataset, common } => {
            let data = match dataset {
                Some(p) => dataset_file::load(&p)?,
                None => {
                    let cfg = resolve(&common)?;
                    load_data(&cfg, cfg.train.seed)?
                }
            };
            print!("{}", pair_stats(&data)?);
            Ok(true)
        }
        Command::Synth { common } => {
            let cfg = resolve(&common)?;
            let DataSource::Synthetic(s) = &cfg.data else {
                return Err(Error::config("data.path", "synth needs synthetic data settings"));
            };
            let out = common
                .out
                .ok_or_else(|| Error::invalid("synth needs --out"))?;
            let syn = synth_generate(s)?;
            let (rs, rt) = syn.resampled_users;
            if rs + rt > 0 {
                eprintln!("note: forced one rating for {rs} source and {rt} target users");
            }
            dataset_file::save(&syn.data, &out)?;
            print!("{}", pair_stats(&syn.data)?);
            Ok(true)
        }
        Command::Run { common } => cmd_run(&common),
        Command::Sweep { common } => cmd_sweep(&common),
        Command::Gradcheck {
            common,
            trials,
            corrupt,
        } => cmd_gradcheck(common.seed.unwrap_or(0), trials, corrupt.as_deref(), common.out.as_deref()),
    }
}

/// Reads the config file (if any) and applies `--seed` and `--set`.
pub fn resolve(common: &Common) -> Result<RunConfig> {
    let text = match &common.config {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = common.set.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("experiment.seed={seed}"));
    }
    RunConfig::from_text(&text, &overrides)
}

/// Dataset for one seed; synthetic data is regenerated per seed.
pub fn load_data(cfg: &RunConfig, seed: u64) -> Result<AlignedDataset> {
    match &cfg.data {
        DataSource::File(p) => dataset_file::load(p),
        DataSource::Synthetic(s) => Ok(synth_generate(&crate::harness::SynthConfig { seed, ..s.clone() })?.data),
    }
}

fn pair_stats(data: &AlignedDataset) -> Result<PairStats> {
    Ok(PairStats {
        source: stats(&data.source)?,
        target: stats(&data.target)?,
    })
}

fn out_dir(common: &Common) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("darec-out"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn seeds(cfg: &RunConfig) -> impl Iterator<Item = u64> {
    let first = cfg.train.seed;
    (0..cfg.seeds as u64).map(move |i| first + i)
}

fn cmd_run(common: &Common) -> Result<bool> {
    let cfg = resolve(common)?;
    let dir = out_dir(common)?;
    fs::write(dir.join("config.resolved"), cfg.to_text())?;
    let mut reports = Vec::new();
    for seed in seeds(&cfg) {
        let data = load_data(&cfg, seed)?;
        let train = crate::harness::TrainConfig { seed, ..cfg.train.clone() };
        eprintln!("seed {seed}: training {}", train.variant.name());
        let outcome = if cfg.baseline {
            let (base, outcome) = run_with_baseline(&train, &data)?;
            reports.push(base);
            outcome
        } else {
            run_experiment_full(&train, &data)?
        };
        save_checkpoints(&dir.join(format!("seed-{seed}")), &data, &outcome)?;
        reports.push(outcome.report);
    }
    write_reports(&dir, &reports)?;
    print!("{}", summary(&reports));
    Ok(true)
}

fn save_checkpoints(dir: &Path, data: &AlignedDataset, outcome: &Outcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    let pre = &outcome.pretrained;
    for (name, trained) in &pre.autorec {
        checkpoint::save(
            &dir.join(format!("autorec-{name}.ckpt")),
            &checkpoint::tensors_of(&trained.params, &format!("autorec.{name}")),
        )?;
    }
    for d in [Domain::Source, Domain::Target] {
        let m = data.domain(d);
        let ids = match pre.orientation {
            Orientation::User => m.user_ids(),
            Orientation::Item => m.item_ids(),
        };
        pre.embeddings_of(d)
            .save(&dir.join(format!("embeddings-{}.ckpt", d.name())), ids)?;
    }
    if let Some(trained) = &outcome.darec {
        let cfg = &outcome.report.config;
        trained.params.save(&dir.join("darec"), trained.variant, &cfg.darec.weights)?;
    }
    Ok(())
}

fn write_reports(dir: &Path, reports: &[Report]) -> Result<()> {
    let mut text = String::new();
    for r in reports {
        text.push_str(&r.to_text());
        text.push('\n');
    }
    text.push_str(&summary(reports));
    fs::write(dir.join("report.txt"), text)?;
    fs::write(dir.join("report.csv"), reports_csv(reports))?;
    Ok(())
}

/// One line per model: mean ± std of target and source RMSE over seeds.
pub fn summary(reports: &[Report]) -> String {
    let mut models: Vec<&str> = Vec::new();
    for r in reports {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "{:<10} {:>5} {:>18} {:>18} {:>18}", "model", "runs", "rmse_target", "rmse_source", "accuracy");
    for m in models {
        let rs: Vec<&Report> = reports.iter().filter(|r| r.model == m).collect();
        let show = |xs: Vec<f64>| MeanStd::of(&xs).map(|m| m.to_string()).unwrap_or_else(|| "-".into());
        let tgt = show(rs.iter().map(|r| r.rmse_target).collect());
        let src = show(rs.iter().map(|r| r.rmse_source).collect());
        let acc = show(rs.iter().filter_map(|r| r.classifier_accuracy).collect());
        let _ = writeln!(s, "{:<10} {:>5} {:>18} {:>18} {:>18}", m, rs.len(), tgt, src, acc);
    }
    s
}

fn cmd_sweep(common: &Common) -> Result<bool> {
    let cfg = resolve(common)?;
    let Some((axis, values)) = cfg.sweep.clone() else {
        return Err(Error::config("sweep.axis", "sweep needs sweep.axis and sweep.values"));
    };
    let dir = out_dir(common)?;
    fs::write(dir.join("config.resolved"), cfg.to_text())?;
    let mut all = Vec::new();
    let mut interior = 0;
    let mut table = String::new();
    let _ = writeln!(table, "{:<6} {}", "seed", values.iter().map(|v| format!("{:>10}", v)).collect::<String>());
    for seed in seeds(&cfg) {
        let data = load_data(&cfg, seed)?;
        let train = crate::harness::TrainConfig { seed, ..cfg.train.clone() };
        eprintln!("seed {seed}: sweeping {} over {} points", axis.name(), values.len());
        let reports = sweep(&train, &data, axis, &values)?;
        let best = interior_minimum(&reports);
        if matches!(best, Some((_, true))) {
            interior += 1;
        }
        let _ = writeln!(
            table,
            "{:<6} {}{}",
            seed,
            reports.iter().map(|r| format!("{:>10.4}", r.rmse_target)).collect::<String>(),
            if matches!(best, Some((_, true))) { "  interior" } else { "" }
        );
        all.extend(reports);
    }
    let _ = writeln!(table, "interior minimum in {interior} of {} seeds", cfg.seeds);
    fs::write(dir.join("sweep.csv"), reports_csv(&all))?;
    fs::write(dir.join("sweep.txt"), &table)?;
    print!("{table}");
    Ok(true)
}

fn cmd_gradcheck(seed: u64, trials: u64, corrupt: Option<&str>, out: Option<&Path>) -> Result<bool> {
    if let Some(c) = corrupt {
        if !COMPONENTS.contains(&c) {
            return Err(Error::invalid(format!("unknown component `{c}`")));
        }
    }
    let checks = gradcheck_suite(seed, trials, corrupt)?;
    let mut text = String::new();
    for c in &checks {
        let _ = writeln!(
            text,
            "{:<14} {} max_error={:.3e} tolerance={:.0e}{}{}",
            c.component,
            if c.passed() { "PASS" } else { "FAIL" },
            c.max_error,
            c.tolerance,
            c.worst.as_deref().map(|w| format!(" worst={w}")).unwrap_or_default(),
            c.values.map(|(a, n)| format!(" analytic={a:.6e} numeric={n:.6e}")).unwrap_or_default()
        );
    }
    print!("{text}");
    if let Some(p) = out {
        fs::write(p, &text)?;
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.component).collect();
    if !failed.is_empty() {
        eprintln!("gradient check failed: {}", failed.join(", "));
    }
    Ok(failed.is_empty())
}
