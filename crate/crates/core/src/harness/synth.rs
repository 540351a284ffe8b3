//! Synthetic two-domain rating data with a controllable cross-domain
//! correlation of user tastes.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::nncore::SeedStream;
use crate::ratings::{AlignedDataset, RatingMatrix, RatingScale};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_items_source: usize,
    pub n_items_target: usize,
    /// Latent rank.
    pub rank: usize,
    /// Correlation between a user's source and target latent factors.
    pub rho: f64,
    pub density_source: f64,
    pub density_target: f64,
    /// Standard deviation of rating noise.
    pub noise: f64,
    /// Standard deviation of the latent interaction `uᵀv`.
    pub signal: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 300,
            n_items_source: 150,
            n_items_target: 150,
            rank: 3,
            rho: 0.9,
            density_source: 0.1,
            density_target: 0.02,
            noise: 0.25,
            signal: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_items_source == 0 || self.n_items_target == 0 {
            return Err(Error::config("synth.users", "user and item counts must be positive"));
        }
        if self.rank == 0 {
            return Err(Error::config("synth.rank", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::config("synth.rho", "must lie in [0, 1]"));
        }
        for (key, d) in [("synth.density_source", self.density_source), ("synth.density_target", self.density_target)] {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::config(key, "must lie in (0, 1]"));
            }
        }
        if !(self.noise >= 0.0) || !(self.signal >= 0.0) {
            return Err(Error::config("synth.noise", "noise and signal must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub data: AlignedDataset,
    /// Users that drew no rating in some domain and received one forced
    /// rating there, per (source, target).
    pub resampled_users: (usize, usize),
    pub user_factors_source: Vec<Vec<f64>>,
    pub user_factors_target: Vec<Vec<f64>>,
}

/// Users get latent `u`; target tastes are `ρ u + sqrt(1 - ρ²) u'` with an
/// independent `u'`. A rating is `clip(round_half(3 + uᵀv + ε), 1, 5)`,
/// observed independently with the domain's density.
pub fn synth_generate(cfg: &SynthConfig) -> Result<Synthetic> {
    cfg.validate()?;
    let streams = SeedStream::new(cfg.seed);
    let r = cfg.rank;
    let user_dist = Normal::new(0.0, 1.0 / (r as f64).sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let item_dist = Normal::new(0.0, cfg.signal).map_err(|e| Error::invalid(e.to_string()))?;
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::invalid(e.to_string()))?;

    let draw = |n: usize, dist: &Normal<f64>, label: &str| -> Vec<Vec<f64>> {
        let mut rng = streams.rng(label);
        (0..n).map(|_| (0..r).map(|_| dist.sample(&mut rng)).collect()).collect()
    };
    let users = draw(cfg.n_users, &user_dist, "synth.users");
    let fresh = draw(cfg.n_users, &user_dist, "synth.users.target");
    let mix = (1.0 - cfg.rho * cfg.rho).max(0.0).sqrt();
    let users_t: Vec<Vec<f64>> = users
        .iter()
        .zip(&fresh)
        .map(|(u, f)| u.iter().zip(f).map(|(a, b)| cfg.rho * a + mix * b).collect())
        .collect();
    let items_s = draw(cfg.n_items_source, &item_dist, "synth.items.source");
    let items_t = draw(cfg.n_items_target, &item_dist, "synth.items.target");

    let scale = RatingScale::default();
    let build = |users: &[Vec<f64>], items: &[Vec<f64>], density: f64, label: &str| -> (Vec<(usize, usize, f64)>, usize) {
        let mut obs_rng = streams.rng(&format!("{label}.observe"));
        let mut noise_rng = streams.rng(&format!("{label}.noise"));
        let mut entries = Vec::new();
        let mut forced = 0;
        for (u, uf) in users.iter().enumerate() {
            let mut chosen: Vec<usize> = (0..items.len()).filter(|_| obs_rng.random::<f64>() < density).collect();
            if chosen.is_empty() {
                chosen.push(obs_rng.random_range(0..items.len()));
                forced += 1;
            }
            for i in chosen {
                let dot: f64 = uf.iter().zip(&items[i]).map(|(a, b)| a * b).sum();
                let raw = 3.0 + dot + noise.sample(&mut noise_rng);
                entries.push((u, i, scale.clip((raw * 2.0).round() / 2.0)));
            }
        }
        (entries, forced)
    };
    let (src_entries, forced_s) = build(&users, &items_s, cfg.density_source, "synth.source");
    let (tgt_entries, forced_t) = build(&users_t, &items_t, cfg.density_target, "synth.target");
    if forced_s + forced_t > 0 {
        log::info!("synthetic data: forced one rating for {forced_s} source and {forced_t} target users");
    }

    let user_ids: Vec<String> = (0..cfg.n_users).map(|u| format!("u{u}")).collect();
    let source = RatingMatrix::new(
        user_ids.clone(),
        (0..cfg.n_items_source).map(|i| format!("s{i}")).collect(),
        src_entries,
    )?;
    let target = RatingMatrix::new(
        user_ids,
        (0..cfg.n_items_target).map(|i| format!("t{i}")).collect(),
        tgt_entries,
    )?;
    Ok(Synthetic {
        data: AlignedDataset::new(source, target)?,
        resampled_users: (forced_s, forced_t),
        user_factors_source: users,
        user_factors_target: users_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_correlation_shares_user_factors() {
        let s = synth_generate(&SynthConfig {
            rho: 1.0,
            noise: 0.0,
            n_users: 20,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(s.user_factors_source, s.user_factors_target);
    }

    #[test]
    fn zero_correlation_draws_fresh_factors() {
        let s = synth_generate(&SynthConfig {
            rho: 0.0,
            n_users: 20,
            ..Default::default()
        })
        .unwrap();
        assert_ne!(s.user_factors_source, s.user_factors_target);
    }

    #[test]
    fn density_matches_expectation() {
        // 200 × 100 cells at 5%: mean 1000, binomial sd ≈ 30.8.
        let s = synth_generate(&SynthConfig {
            n_users: 200,
            n_items_source: 100,
            n_items_target: 100,
            density_source: 0.05,
            density_target: 0.05,
            seed: 4,
            ..Default::default()
        })
        .unwrap();
        for n in [s.data.source.n_entries(), s.data.target.n_entries()] {
            assert!((n as f64 - 1000.0).abs() < 5.0 * 30.8, "{n} observed");
        }
    }

    #[test]
    fn ratings_are_half_steps_on_scale_and_every_user_rated() {
        let s = synth_generate(&SynthConfig {
            density_target: 0.001,
            ..Default::default()
        })
        .unwrap();
        assert!(s.resampled_users.1 > 0);
        for m in [&s.data.source, &s.data.target] {
            for (_, _, r) in m.entries() {
                assert!((1.0..=5.0).contains(&r));
                assert_eq!((r * 2.0).fract(), 0.0);
            }
        }
        assert!(s.data.min_user_ratings() >= 1);
    }

    #[test]
    fn deterministic_and_validated() {
        let cfg = SynthConfig::default();
        assert_eq!(synth_generate(&cfg).unwrap(), synth_generate(&cfg).unwrap());
        assert!(synth_generate(&SynthConfig { rho: 1.5, ..cfg.clone() }).is_err());
        assert!(synth_generate(&SynthConfig { density_source: 0.0, ..cfg }).is_err());
    }
}
