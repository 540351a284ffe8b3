//! Flat `key = value` configuration with `[section]` headers.
//!
//! Keys are addressed as `section.key`. Every key is optional; anything
//! not listed in [`KEYS`] is rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::model::Variant;
use crate::nncore::Activation;
use crate::ratings::Orientation;

use super::experiment::{default_orientation, EvalInput, TrainConfig};
use super::sweep::SweepAxis;
use super::synth::SynthConfig;

pub type ConfigMap = BTreeMap<String, String>;

pub const KEYS: &[&str] = &[
    "experiment.variant",
    "experiment.orientation",
    "experiment.seed",
    "experiment.seeds",
    "experiment.train_frac",
    "experiment.val_frac",
    "experiment.baseline",
    "autorec.k",
    "autorec.alpha",
    "autorec.lr",
    "autorec.batch",
    "autorec.epochs",
    "autorec.patience",
    "autorec.init_std",
    "autorec.hidden",
    "autorec.output",
    "autorec.shared",
    "darec.extractor_width",
    "darec.beta",
    "darec.mu",
    "darec.lambda",
    "darec.lr",
    "darec.classifier_lr",
    "darec.batch",
    "darec.epochs",
    "darec.patience",
    "darec.init_std",
    "darec.cross_supervision",
    "darec.tie_output",
    "darec.eval_input",
    "data.path",
    "synth.users",
    "synth.items_source",
    "synth.items_target",
    "synth.rank",
    "synth.rho",
    "synth.density_source",
    "synth.density_target",
    "synth.noise",
    "synth.signal",
    "sweep.axis",
    "sweep.values",
];

/// Parses config text into `section.key → value`.
pub fn parse_config(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    let mut section = String::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::config(format!("line {}", n + 1), "unterminated section header"))?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", n + 1), "expected `key = value`"))?;
        let key = if section.is_empty() {
            k.trim().to_string()
        } else {
            format!("{section}.{}", k.trim())
        };
        set(&mut map, &key, v.trim())?;
    }
    Ok(map)
}

fn set(map: &mut ConfigMap, key: &str, value: &str) -> Result<()> {
    if !KEYS.contains(&key) {
        return Err(Error::config(key, "unknown key"));
    }
    map.insert(key.to_string(), value.to_string());
    Ok(())
}

/// Applies one `section.key=value` override.
pub fn apply_override(map: &mut ConfigMap, assignment: &str) -> Result<()> {
    let (k, v) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like section.key=value"))?;
    set(map, k.trim(), v.trim())
}

fn get<T: std::str::FromStr>(map: &ConfigMap, key: &str, default: T) -> Result<T> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::config(key, format!("cannot parse `{v}`"))),
    }
}

fn get_bool(map: &ConfigMap, key: &str, default: bool) -> Result<bool> {
    match map.get(key).map(|v| v.to_ascii_lowercase()) {
        None => Ok(default),
        Some(v) if matches!(v.as_str(), "true" | "yes" | "1" | "on") => Ok(true),
        Some(v) if matches!(v.as_str(), "false" | "no" | "0" | "off") => Ok(false),
        Some(v) => Err(Error::config(key, format!("`{v}` is not a boolean"))),
    }
}

fn get_with<T>(map: &ConfigMap, key: &str, default: T, parse: impl Fn(&str) -> Option<T>) -> Result<T> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => parse(v).ok_or_else(|| Error::config(key, format!("unrecognized value `{v}`"))),
    }
}

/// Zero disables early stopping.
fn get_patience(map: &ConfigMap, key: &str, default: Option<usize>) -> Result<Option<usize>> {
    let p: usize = get(map, key, default.unwrap_or(0))?;
    Ok((p > 0).then_some(p))
}

/// Where the ratings come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    /// Regenerated for each seed with that seed.
    Synthetic(SynthConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    /// Seeds `seed, seed + 1, …` are run.
    pub seeds: usize,
    /// Also report the AutoRec-only baseline.
    pub baseline: bool,
    pub data: DataSource,
    pub sweep: Option<(SweepAxis, Vec<f64>)>,
}

impl RunConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::config(k.clone(), "unknown key"));
        }
        let variant = get_with(map, "experiment.variant", Variant::U, Variant::parse)?;
        let mut t = TrainConfig::new(variant);
        t.orientation = get_with(map, "experiment.orientation", default_orientation(variant), Orientation::parse)?;
        t.seed = get(map, "experiment.seed", t.seed)?;
        t.train_frac = get(map, "experiment.train_frac", t.train_frac)?;
        t.val_frac = get(map, "experiment.val_frac", t.val_frac)?;

        let a = &mut t.autorec;
        a.k = get(map, "autorec.k", a.k)?;
        a.alpha = get(map, "autorec.alpha", a.alpha)?;
        a.lr = get(map, "autorec.lr", a.lr)?;
        a.batch_size = get(map, "autorec.batch", a.batch_size)?;
        a.epochs = get(map, "autorec.epochs", a.epochs)?;
        a.patience = get_patience(map, "autorec.patience", a.patience)?;
        a.init_std = get(map, "autorec.init_std", a.init_std)?;
        a.hidden = get_with(map, "autorec.hidden", a.hidden, Activation::parse)?;
        a.output = get_with(map, "autorec.output", a.output, Activation::parse)?;
        t.shared_autorec = get_bool(map, "autorec.shared", t.shared_autorec)?;

        let d = &mut t.darec;
        d.extractor_width = get(map, "darec.extractor_width", d.extractor_width)?;
        d.weights.beta = get(map, "darec.beta", d.weights.beta)?;
        d.weights.mu = get(map, "darec.mu", d.weights.mu)?;
        d.weights.lambda = get(map, "darec.lambda", d.weights.lambda)?;
        d.lr = get(map, "darec.lr", d.lr)?;
        d.classifier_lr = match map.get("darec.classifier_lr") {
            None => d.classifier_lr,
            Some(_) => Some(get(map, "darec.classifier_lr", 0.0)?),
        };
        d.batch_size = get(map, "darec.batch", d.batch_size)?;
        d.epochs = get(map, "darec.epochs", d.epochs)?;
        d.patience = get_patience(map, "darec.patience", d.patience)?;
        d.init_std = get(map, "darec.init_std", d.init_std)?;
        t.cross_supervision = get_bool(map, "darec.cross_supervision", t.cross_supervision)?;
        t.tie_output = get_bool(map, "darec.tie_output", t.tie_output)?;
        t.eval_input = get_with(map, "darec.eval_input", t.eval_input, EvalInput::parse)?;
        t.validate()?;

        let seeds = get(map, "experiment.seeds", 1usize)?;
        if seeds == 0 {
            return Err(Error::config("experiment.seeds", "must be at least 1"));
        }
        let baseline = get_bool(map, "experiment.baseline", false)?;

        let data = match map.get("data.path") {
            Some(p) => {
                if map.keys().any(|k| k.starts_with("synth.")) {
                    return Err(Error::config("data.path", "set either data.path or synth.* keys, not both"));
                }
                DataSource::File(PathBuf::from(p))
            }
            None => {
                let s = SynthConfig::default();
                let s = SynthConfig {
                    n_users: get(map, "synth.users", s.n_users)?,
                    n_items_source: get(map, "synth.items_source", s.n_items_source)?,
                    n_items_target: get(map, "synth.items_target", s.n_items_target)?,
                    rank: get(map, "synth.rank", s.rank)?,
                    rho: get(map, "synth.rho", s.rho)?,
                    density_source: get(map, "synth.density_source", s.density_source)?,
                    density_target: get(map, "synth.density_target", s.density_target)?,
                    noise: get(map, "synth.noise", s.noise)?,
                    signal: get(map, "synth.signal", s.signal)?,
                    seed: t.seed,
                };
                s.validate()?;
                DataSource::Synthetic(s)
            }
        };

        let sweep = match (map.get("sweep.axis"), map.get("sweep.values")) {
            (None, None) => None,
            (Some(axis), Some(values)) => {
                let axis = SweepAxis::parse(axis)
                    .ok_or_else(|| Error::config("sweep.axis", format!("unknown axis `{axis}`")))?;
                let values = values
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::config("sweep.values", "expected comma-separated numbers"))?;
                if values.is_empty() {
                    return Err(Error::config("sweep.values", "no values"));
                }
                for &v in &values {
                    axis.apply(&t, v)?;
                }
                Some((axis, values))
            }
            _ => return Err(Error::config("sweep.axis", "sweep.axis and sweep.values go together")),
        };

        Ok(Self {
            train: t,
            seeds,
            baseline,
            data,
            sweep,
        })
    }

    pub fn from_text(text: &str, overrides: &[String]) -> Result<Self> {
        let mut map = parse_config(text)?;
        for o in overrides {
            apply_override(&mut map, o)?;
        }
        Self::from_map(&map)
    }

    /// Every setting written out explicitly; parses back to `self`.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let a = &t.autorec;
        let d = &t.darec;
        let w = &d.weights;
        let mut s = String::new();
        let _ = writeln!(s, "[experiment]");
        let _ = writeln!(s, "variant = {}", t.variant.tag());
        let _ = writeln!(s, "orientation = {}", t.orientation.name());
        let _ = writeln!(s, "seed = {}", t.seed);
        let _ = writeln!(s, "seeds = {}", self.seeds);
        let _ = writeln!(s, "train_frac = {}", t.train_frac);
        let _ = writeln!(s, "val_frac = {}", t.val_frac);
        let _ = writeln!(s, "baseline = {}", self.baseline);
        let _ = writeln!(s, "\n[autorec]");
        let _ = writeln!(s, "k = {}", a.k);
        let _ = writeln!(s, "alpha = {}", a.alpha);
        let _ = writeln!(s, "lr = {}", a.lr);
        let _ = writeln!(s, "batch = {}", a.batch_size);
        let _ = writeln!(s, "epochs = {}", a.epochs);
        let _ = writeln!(s, "patience = {}", a.patience.unwrap_or(0));
        let _ = writeln!(s, "init_std = {}", a.init_std);
        let _ = writeln!(s, "hidden = {}", a.hidden.name());
        let _ = writeln!(s, "output = {}", a.output.name());
        let _ = writeln!(s, "shared = {}", t.shared_autorec);
        let _ = writeln!(s, "\n[darec]");
        let _ = writeln!(s, "extractor_width = {}", d.extractor_width);
        let _ = writeln!(s, "beta = {}", w.beta);
        let _ = writeln!(s, "mu = {}", w.mu);
        let _ = writeln!(s, "lambda = {}", w.lambda);
        let _ = writeln!(s, "lr = {}", d.lr);
        if let Some(lr) = d.classifier_lr {
            let _ = writeln!(s, "classifier_lr = {lr}");
        }
        let _ = writeln!(s, "batch = {}", d.batch_size);
        let _ = writeln!(s, "epochs = {}", d.epochs);
        let _ = writeln!(s, "patience = {}", d.patience.unwrap_or(0));
        let _ = writeln!(s, "init_std = {}", d.init_std);
        let _ = writeln!(s, "cross_supervision = {}", t.cross_supervision);
        let _ = writeln!(s, "tie_output = {}", t.tie_output);
        let _ = writeln!(s, "eval_input = {}", t.eval_input.name());
        match &self.data {
            DataSource::File(p) => {
                let _ = writeln!(s, "\n[data]\npath = {}", p.display());
            }
            DataSource::Synthetic(c) => {
                let _ = writeln!(s, "\n[synth]");
                let _ = writeln!(s, "users = {}", c.n_users);
                let _ = writeln!(s, "items_source = {}", c.n_items_source);
                let _ = writeln!(s, "items_target = {}", c.n_items_target);
                let _ = writeln!(s, "rank = {}", c.rank);
                let _ = writeln!(s, "rho = {}", c.rho);
                let _ = writeln!(s, "density_source = {}", c.density_source);
                let _ = writeln!(s, "density_target = {}", c.density_target);
                let _ = writeln!(s, "noise = {}", c.noise);
                let _ = writeln!(s, "signal = {}", c.signal);
            }
        }
        if let Some((axis, values)) = &self.sweep {
            let v: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "\n[sweep]\naxis = {}\nvalues = {}", axis.name(), v.join(","));
        }
        s
    }
}
