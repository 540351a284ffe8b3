//! Finite-difference checks of every analytic gradient in the pipeline.

use rand::Rng;

use crate::autorec::{autorec_loss, autorec_loss_and_grad, AutoRecConfig, AutoRecParams};
use crate::error::Result;
use crate::model::{darec_loss, ClassifierPath, DARecParams, DARecShape, LossWeights, Sample};
use crate::nncore::{grad_check, ParamTensor, Parameterized, SeedStream};
use crate::ratings::{Domain, MaskedVector};

/// Relative-error bound for the finite-difference comparisons.
pub const GRAD_TOLERANCE: f64 = 1e-4;
/// Absolute bound for the reversal layer against the two-pass reference.
pub const REFERENCE_TOLERANCE: f64 = 1e-12;
pub const FD_STEP: f64 = 1e-5;

pub const COMPONENTS: [&str; 4] = ["autorec", "u-darec", "i-darec", "grl-reference"];

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCheck {
    pub component: &'static str,
    /// Largest relative error (absolute for the reference comparison).
    pub max_error: f64,
    pub tolerance: f64,
    /// Tensor holding the worst coordinate.
    pub worst: Option<String>,
    /// Analytic and numeric derivative at that coordinate (gradient checks
    /// only).
    pub values: Option<(f64, f64)>,
    pub trials: usize,
}

/// Worst coordinate of one trial.
#[derive(Debug, Clone, Default)]
struct Probe {
    error: f64,
    worst: Option<String>,
    values: Option<(f64, f64)>,
}

impl Probe {
    fn of(r: crate::nncore::GradCheckReport) -> Self {
        Probe {
            error: r.max_rel_error,
            worst: r.worst.map(|w| w.0),
            values: Some((r.analytic_at_worst, r.numeric_at_worst)),
        }
    }
}

impl ComponentCheck {
    pub fn passed(&self) -> bool {
        self.max_error < self.tolerance
    }
}

/// Wraps a model so only tensors whose name starts with one of `prefixes`
/// are visible to [`grad_check`].
struct Focus<'a> {
    model: &'a mut DARecParams,
    prefixes: Vec<&'static str>,
}

impl Focus<'_> {
    fn keep(&self) -> Vec<bool> {
        self.model
            .named_params()
            .iter()
            .map(|(n, _)| self.prefixes.iter().any(|p| n.starts_with(p)))
            .collect()
    }
}

impl Parameterized for Focus<'_> {
    fn named_params(&self) -> Vec<(String, &ParamTensor)> {
        self.model
            .named_params()
            .into_iter()
            .filter(|(n, _)| self.prefixes.iter().any(|p| n.starts_with(p)))
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let keep = self.keep();
        self.model
            .params_mut()
            .into_iter()
            .zip(keep)
            .filter_map(|(p, k)| k.then_some(p))
            .collect()
    }
}

/// Observed values are drawn from [-1, 1] rather than the rating scale: the
/// losses do not care about the range, and a smaller loss keeps the
/// rounding noise of the central difference (about `ε·|L|/h`) well below
/// the smallest derivatives being compared.
fn random_vector<R: Rng>(rng: &mut R, len: usize, density: f64) -> MaskedVector {
    let mut entries = Vec::new();
    for i in 0..len {
        if rng.random::<f64>() < density {
            entries.push((i, rng.random_range(-1.0..1.0)));
        }
    }
    if entries.is_empty() {
        entries.push((rng.random_range(0..len), 0.5));
    }
    MaskedVector::from_sparse(len, &entries)
}

fn corrupt_first(model: &mut impl Parameterized) {
    if let Some(p) = model.params_mut().into_iter().next() {
        p.grad.as_mut_slice()[0] += 1e-3;
    }
}

fn autorec_trial(seed: &SeedStream, trial: u64, corrupt: bool) -> Result<Probe> {
    let mut rng = seed.rng_indexed("gradcheck.autorec", trial);
    let d = rng.random_range(3..=20);
    let cfg = AutoRecConfig {
        k: rng.random_range(1..=16),
        init_std: 0.5,
        ..AutoRecConfig::default()
    };
    let alpha = 0.05;
    let mut p = AutoRecParams::new(d, &cfg, &seed.derive(&format!("gradcheck.autorec.{trial}")))?;
    let batch: Vec<MaskedVector> = (0..rng.random_range(1..=6)).map(|_| random_vector(&mut rng, d, 0.4)).collect();
    p.zero_grad();
    autorec_loss_and_grad(&mut p, &batch, alpha)?;
    if corrupt {
        corrupt_first(&mut p);
    }
    let r = grad_check(&mut p, FD_STEP, |m| autorec_loss(m, &batch, alpha).unwrap_or(f64::NAN))?;
    Ok(Probe::of(r))
}

/// A random small network with samples from both domains.
fn darec_setup(seed: &SeedStream, trial: u64) -> Result<(DARecParams, Vec<Sample>, LossWeights)> {
    let mut rng = seed.rng_indexed("gradcheck.darec", trial);
    let tie = trial % 2 == 1;
    let source_dim = rng.random_range(3..=20);
    let shape = DARecShape {
        k: rng.random_range(1..=16),
        extractor_width: rng.random_range(2..=12),
        source_dim,
        target_dim: if tie { source_dim } else { rng.random_range(3..=20) },
        tie_output: tie,
    };
    let params = DARecParams::new(shape, 0.5, &seed.derive(&format!("gradcheck.darec.{trial}")))?;
    let mut samples = Vec::new();
    for (e, domain) in [Domain::Source, Domain::Target, Domain::Source, Domain::Target].into_iter().enumerate() {
        let own_len = if domain == Domain::Source { shape.source_dim } else { shape.target_dim };
        let other_len = if domain == Domain::Source { shape.target_dim } else { shape.source_dim };
        samples.push(Sample {
            embedding: (0..shape.k).map(|_| rng.random::<f64>()).collect(),
            raw: random_vector(&mut rng, own_len, 0.5),
            paired: (e < 2).then(|| random_vector(&mut rng, other_len, 0.5)),
            domain,
            entity: e,
        });
    }
    let weights = LossWeights {
        beta: rng.random_range(0.1..1.0),
        mu: rng.random_range(0.1..2.0),
        lambda: rng.random_range(0.001..0.1),
    };
    Ok((params, samples, weights))
}

/// `Σ (predictor_weight · predictor + classifier_weight · BCE) + λ‖θ‖²`.
fn batch_objective(
    p: &DARecParams,
    samples: &[Sample],
    w: &LossWeights,
    predictor_weight: f64,
    classifier_weight: f64,
) -> f64 {
    let plain = LossWeights { mu: 1.0, ..*w };
    let mut total = 0.0;
    let mut reg = 0.0;
    for s in samples {
        match darec_loss(p, s, &plain) {
            Ok(parts) => {
                total += predictor_weight * parts.predictor + classifier_weight * parts.classifier;
                reg = parts.regularizer;
            }
            Err(_) => return f64::NAN,
        }
    }
    total + reg
}

fn accumulate(p: &mut DARecParams, samples: &[Sample], w: &LossWeights, path: ClassifierPath) -> Result<()> {
    let refs: Vec<&Sample> = samples.iter().collect();
    p.zero_grad();
    p.backward_batch(&refs, w, path, w.lambda)?;
    Ok(())
}

/// Checks each parameter group against its own objective. A group is only
/// compared against the terms that depend on it: a large constant term
/// adds nothing to the derivative but its rounding swamps small
/// differences.
fn check_groups(
    p: &mut DARecParams,
    samples: &[Sample],
    w: &LossWeights,
    groups: &[(&[&'static str], f64, f64)],
) -> Result<Probe> {
    let mut worst = Probe::default();
    for &(prefixes, predictor_weight, classifier_weight) in groups {
        let mut focus = Focus {
            model: p,
            prefixes: prefixes.to_vec(),
        };
        let r = grad_check(&mut focus, FD_STEP, |f| {
            batch_objective(f.model, samples, w, predictor_weight, classifier_weight)
        })?;
        if r.max_rel_error >= worst.error {
            worst = Probe::of(r);
        }
    }
    Ok(worst)
}

const HEADS: &[&str] = &["head_source", "head_target", "shared_output"];

fn idarec_trial(seed: &SeedStream, trial: u64, corrupt: bool) -> Result<Probe> {
    let (mut p, samples, w) = darec_setup(seed, trial)?;
    accumulate(&mut p, &samples, &w, ClassifierPath::Joint { weight: w.mu })?;
    if corrupt {
        corrupt_first(&mut p);
    }
    check_groups(
        &mut p,
        &samples,
        &w,
        &[(&["extractor"], 1.0, w.mu), (HEADS, 1.0, 0.0), (&["classifier"], 0.0, w.mu)],
    )
}

/// The reversal path is not the gradient of one scalar. The classifier
/// descends `BCE + λR`; the extractor descends `pred - μ·BCE + λR`.
fn udarec_trial(seed: &SeedStream, trial: u64, corrupt: bool) -> Result<Probe> {
    let (mut p, samples, w) = darec_setup(seed, trial)?;
    accumulate(&mut p, &samples, &w, ClassifierPath::Reversed { mu: w.mu })?;
    if corrupt {
        corrupt_first(&mut p);
    }
    check_groups(
        &mut p,
        &samples,
        &w,
        &[(&["extractor"], 1.0, -w.mu), (HEADS, 1.0, 0.0), (&["classifier"], 0.0, 1.0)],
    )
}

fn grads(p: &DARecParams) -> Vec<(String, Vec<f64>)> {
    p.named_params()
        .into_iter()
        .map(|(n, t)| (n, t.grad.as_slice().to_vec()))
        .collect()
}

/// Reversal-layer gradients against a reference built from two plain
/// passes: the classifier takes the BCE gradient, the extractor takes the
/// predictor gradient minus `μ` times the BCE gradient.
pub fn grl_reference_gap(p: &DARecParams, samples: &[Sample], w: &LossWeights) -> Result<f64> {
    Ok(reference_gap(p, samples, w, false)?.error)
}

fn reference_gap(p: &DARecParams, samples: &[Sample], w: &LossWeights, corrupt: bool) -> Result<Probe> {
    let mut a = p.clone();
    accumulate(&mut a, samples, w, ClassifierPath::Joint { weight: 0.0 })?;
    let pred = grads(&a);
    // Unobserved ratings and β = 0 leave only the classifier term.
    let bce_only: Vec<Sample> = samples
        .iter()
        .map(|s| Sample {
            raw: MaskedVector::zeros(s.raw.len()),
            paired: s.paired.as_ref().map(|v| MaskedVector::zeros(v.len())),
            ..s.clone()
        })
        .collect();
    let no_pred = LossWeights {
        beta: 0.0,
        lambda: 0.0,
        ..*w
    };
    let mut b = p.clone();
    accumulate(&mut b, &bce_only, &no_pred, ClassifierPath::Joint { weight: 1.0 })?;
    let bce = grads(&b);
    let mut g = p.clone();
    accumulate(&mut g, samples, w, ClassifierPath::Reversed { mu: w.mu })?;
    if corrupt {
        corrupt_first(&mut g);
    }
    let mut worst = Probe::default();
    for ((name, gv), ((_, av), (_, bv))) in grads(&g).iter().zip(pred.iter().zip(&bce)) {
        let factor = if name.starts_with("extractor") { -w.mu } else { 1.0 };
        for ((x, y), z) in gv.iter().zip(av).zip(bv) {
            let gap = (x - (y + factor * z)).abs();
            if gap > worst.error || worst.worst.is_none() {
                worst = Probe {
                    error: gap,
                    worst: Some(name.clone()),
                    values: None,
                };
            }
        }
    }
    Ok(worst)
}

fn reference_trial(seed: &SeedStream, trial: u64, corrupt: bool) -> Result<Probe> {
    let (p, samples, w) = darec_setup(seed, trial)?;
    reference_gap(&p, &samples, &w, corrupt)
}

/// Runs `trials` random instances per component. `corrupt` names a
/// component whose analytic gradient is deliberately perturbed.
pub fn gradcheck_suite(seed: u64, trials: u64, corrupt: Option<&str>) -> Result<Vec<ComponentCheck>> {
    let streams = SeedStream::new(seed);
    let mut out = Vec::new();
    for component in COMPONENTS {
        let bad = corrupt == Some(component);
        let tolerance = if component == "grl-reference" {
            REFERENCE_TOLERANCE
        } else {
            GRAD_TOLERANCE
        };
        let mut check = ComponentCheck {
            component,
            max_error: 0.0,
            tolerance,
            worst: None,
            values: None,
            trials: trials as usize,
        };
        for t in 0..trials {
            let probe = match component {
                "autorec" => autorec_trial(&streams, t, bad)?,
                "u-darec" => udarec_trial(&streams, t, bad)?,
                "i-darec" => idarec_trial(&streams, t, bad)?,
                _ => reference_trial(&streams, t, bad)?,
            };
            if probe.error >= check.max_error {
                check.max_error = probe.error;
                check.worst = probe.worst;
                check.values = probe.values;
            }
        }
        out.push(check);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_component_passes() {
        for c in gradcheck_suite(3, 4, None).unwrap() {
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn corruption_is_caught_only_where_injected() {
        for target in COMPONENTS {
            let checks = gradcheck_suite(5, 2, Some(target)).unwrap();
            for c in checks {
                assert_eq!(c.passed(), c.component != target, "{target}: {c:?}");
            }
        }
    }
}
