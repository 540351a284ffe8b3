use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ratings::AlignedDataset;

use super::experiment::{run_experiment, TrainConfig};
use super::report::Report;

/// A single hyperparameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    K,
    Alpha,
    Beta,
    Mu,
    Lambda,
    ExtractorWidth,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::K => "k",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Beta => "beta",
            SweepAxis::Mu => "mu",
            SweepAxis::Lambda => "lambda",
            SweepAxis::ExtractorWidth => "extractor_width",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            SweepAxis::K,
            SweepAxis::Alpha,
            SweepAxis::Beta,
            SweepAxis::Mu,
            SweepAxis::Lambda,
            SweepAxis::ExtractorWidth,
        ]
        .into_iter()
        .find(|a| a.name() == s.trim())
    }

    /// `cfg` with this axis set to `v`.
    pub fn apply(self, cfg: &TrainConfig, v: f64) -> Result<TrainConfig> {
        let count = || {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::config("sweep.values", format!("{} needs positive integers, got {v}", self.name())))
            }
        };
        let mut c = cfg.clone();
        match self {
            SweepAxis::K => c.autorec.k = count()?,
            SweepAxis::ExtractorWidth => c.darec.extractor_width = count()?,
            SweepAxis::Alpha => c.autorec.alpha = v,
            SweepAxis::Beta => c.darec.weights.beta = v,
            SweepAxis::Mu => c.darec.weights.mu = v,
            SweepAxis::Lambda => c.darec.weights.lambda = v,
        }
        c.validate()?;
        Ok(c)
    }
}

/// One report per value. Points are independent and run in parallel; each
/// depends only on its own config, so the order of execution is irrelevant.
pub fn sweep(cfg: &TrainConfig, data: &AlignedDataset, axis: SweepAxis, values: &[f64]) -> Result<Vec<Report>> {
    let configs = values
        .iter()
        .map(|&v| axis.apply(cfg, v))
        .collect::<Result<Vec<_>>>()?;
    configs.par_iter().map(|c| run_experiment(c, data)).collect()
}

/// Index of the lowest target RMSE, and whether it lies strictly inside
/// the swept range.
pub fn interior_minimum(reports: &[Report]) -> Option<(usize, bool)> {
    let best = reports
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.rmse_target.total_cmp(&b.1.rmse_target))?
        .0;
    Some((best, best > 0 && best + 1 < reports.len()))
}
