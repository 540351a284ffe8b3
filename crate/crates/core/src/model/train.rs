use super::interleave::interleave_order;
use super::network::{classifier_accuracy, DARecParams, DARecShape, LossParts, LossWeights, Sample, Variant};
use crate::error::{Error, Result};
use crate::nncore::{AdamConfig, AdamState, Parameterized, SeedStream, INIT_STD};
use crate::ratings::Domain;

#[derive(Debug, Clone, PartialEq)]
pub struct DARecConfig {
    pub extractor_width: usize,
    pub weights: LossWeights,
    pub lr: f64,
    /// Learning rate of the domain classifier; `lr` when unset.
    pub classifier_lr: Option<f64>,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub init_std: f64,
}

impl Default for DARecConfig {
    fn default() -> Self {
        Self {
            extractor_width: 64,
            weights: LossWeights::default(),
            lr: 1e-3,
            classifier_lr: None,
            batch_size: 32,
            epochs: 100,
            patience: None,
            init_std: INIT_STD,
        }
    }
}

impl DARecConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.extractor_width == 0 {
            return Err(Error::config("darec.extractor_width", "must be at least 1"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::config("darec.lr", "must be > 0"));
        }
        if self.classifier_lr.is_some_and(|lr| !(lr > 0.0)) {
            return Err(Error::config("darec.classifier_lr", "must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("darec.batch", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DARecEpoch {
    pub epoch: usize,
    pub loss: LossParts,
    pub classifier_accuracy: f64,
    pub validation_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedDARec {
    pub params: DARecParams,
    pub variant: Variant,
    pub history: Vec<DARecEpoch>,
    pub best_epoch: Option<usize>,
}

/// Adversarial training through the gradient reversal layer.
pub fn train_udarec(
    source: &[Sample],
    target: &[Sample],
    shape: DARecShape,
    cfg: &DARecConfig,
    seed: &SeedStream,
    validate: Option<&dyn Fn(&DARecParams) -> Result<f64>>,
) -> Result<TrainedDARec> {
    train_darec(Variant::U, source, target, shape, cfg, seed, validate)
}

/// Joint minimization of prediction and domain-classification losses.
pub fn train_idarec(
    source: &[Sample],
    target: &[Sample],
    shape: DARecShape,
    cfg: &DARecConfig,
    seed: &SeedStream,
    validate: Option<&dyn Fn(&DARecParams) -> Result<f64>>,
) -> Result<TrainedDARec> {
    train_darec(Variant::I, source, target, shape, cfg, seed, validate)
}

/// Mini-batch Adam over interleaved source/target samples. The classifier
/// has its own optimizer so it can run at a different rate; the variant
/// only decides how the classifier loss reaches the extractor.
pub fn train_darec(
    variant: Variant,
    source: &[Sample],
    target: &[Sample],
    shape: DARecShape,
    cfg: &DARecConfig,
    seed: &SeedStream,
    validate: Option<&dyn Fn(&DARecParams) -> Result<f64>>,
) -> Result<TrainedDARec> {
    cfg.validate()?;
    for (d, list) in [(Domain::Source, source), (Domain::Target, target)] {
        if list.is_empty() {
            return Err(Error::invalid(format!("no {} samples", d.name())));
        }
        if let Some(s) = list.iter().find(|s| s.domain != d || s.embedding.len() != shape.k) {
            return Err(Error::dim(format!(
                "{} sample {} has domain {} and embedding length {} (expected {})",
                d.name(),
                s.entity,
                s.domain.name(),
                s.embedding.len(),
                shape.k
            )));
        }
    }

    let mut params = DARecParams::new(shape, cfg.init_std, seed)?;
    let mut adam = AdamState::new(AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    });
    let mut adam_classifier = AdamState::new(AdamConfig {
        lr: cfg.classifier_lr.unwrap_or(cfg.lr),
        ..AdamConfig::default()
    });
    let path = variant.classifier_path(cfg.weights.mu);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, DARecParams)> = None;
    let mut since_best = 0;

    for epoch in 0..cfg.epochs {
        let order = interleave_order(source.len(), target.len(), &mut seed.rng_indexed("darec.interleave", epoch as u64))?;
        let stream: Vec<&Sample> = order
            .iter()
            .map(|&(d, k)| match d {
                Domain::Source => &source[k],
                Domain::Target => &target[k],
            })
            .collect();
        let n = stream.len() as f64;
        let mut epoch_loss = LossParts::default();
        for batch in stream.chunks(cfg.batch_size) {
            params.zero_grad();
            let reg = cfg.weights.lambda * batch.len() as f64 / n;
            let parts = params.backward_batch(batch, &cfg.weights, path, reg)?;
            if !parts.total().is_finite() {
                return Err(Error::Diverged { epoch });
            }
            epoch_loss.predictor += parts.predictor;
            epoch_loss.classifier += parts.classifier;
            epoch_loss.regularizer += parts.regularizer;
            let (mut main, mut classifier) = params.params_mut_split();
            adam.step(&mut main)?;
            adam_classifier.step(&mut classifier)?;
        }
        let accuracy = classifier_accuracy(&params, source.iter().chain(target))?;
        let validation_rmse = validate.map(|f| f(&params)).transpose()?;
        history.push(DARecEpoch {
            epoch,
            loss: epoch_loss,
            classifier_accuracy: accuracy,
            validation_rmse,
        });
        log::debug!(
            "{} epoch {epoch}: pred {:.4} cls {:.4} acc {:.3} val {:?}",
            variant.name(),
            epoch_loss.predictor,
            epoch_loss.classifier,
            accuracy,
            validation_rmse
        );

        if let (Some(patience), Some(v)) = (cfg.patience, validation_rmse) {
            if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                best = Some((v, epoch, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    break;
                }
            }
        }
    }

    let (params, best_epoch) = match best {
        Some((_, epoch, p)) => (p, Some(epoch)),
        None => (params, cfg.epochs.checked_sub(1)),
    };
    Ok(TrainedDARec {
        params,
        variant,
        history,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::ratings::{MaskedVector, RatingScale};

    fn samples(domain: Domain, n: usize, centre: f64, dim: usize, seed: u64) -> Vec<Sample> {
        let mut rng = SeedStream::new(seed).rng(domain.name());
        (0..n)
            .map(|e| {
                let entries: Vec<(usize, f64)> = (0..dim)
                    .filter(|i| (i + e) % 3 == 0)
                    .map(|i| (i, rng.random_range(1..=5) as f64))
                    .collect();
                Sample {
                    embedding: (0..4).map(|j| if j == 0 { centre } else { 0.0 } + rng.random_range(-0.1..0.1)).collect(),
                    raw: MaskedVector::from_sparse(dim, &entries),
                    paired: None,
                    domain,
                    entity: e,
                }
            })
            .collect()
    }

    fn shape() -> DARecShape {
        DARecShape {
            k: 4,
            extractor_width: 8,
            source_dim: 6,
            target_dim: 5,
            tie_output: false,
        }
    }

    fn cfg(epochs: usize) -> DARecConfig {
        DARecConfig {
            extractor_width: 8,
            lr: 0.01,
            batch_size: 4,
            epochs,
            init_std: 0.1,
            ..DARecConfig::default()
        }
    }

    #[test]
    fn joint_training_separates_domains() {
        let s = samples(Domain::Source, 20, 0.9, 6, 1);
        let t = samples(Domain::Target, 20, 0.1, 5, 1);
        let trained = train_idarec(&s, &t, shape(), &cfg(200), &SeedStream::new(3), None).unwrap();
        let acc = classifier_accuracy(&trained.params, s.iter().chain(&t)).unwrap();
        assert!(acc > 0.9, "accuracy {acc}");
    }

    #[test]
    fn same_seed_same_model() {
        let s = samples(Domain::Source, 6, 0.9, 6, 2);
        let t = samples(Domain::Target, 4, 0.1, 5, 2);
        let run = || train_udarec(&s, &t, shape(), &cfg(5), &SeedStream::new(8), None).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn without_classifier_weight_variants_share_the_predictor() {
        let s = samples(Domain::Source, 6, 0.9, 6, 4);
        let t = samples(Domain::Target, 5, 0.1, 5, 4);
        let mut c = cfg(10);
        c.weights.mu = 0.0;
        let u = train_udarec(&s, &t, shape(), &c, &SeedStream::new(1), None).unwrap();
        let i = train_idarec(&s, &t, shape(), &c, &SeedStream::new(1), None).unwrap();
        assert_eq!(u.params.extractor, i.params.extractor);
        assert_eq!(u.params.head_source, i.params.head_source);
        assert_eq!(u.params.head_target, i.params.head_target);
        assert_ne!(u.params.classifier, i.params.classifier);
    }

    #[test]
    fn tiny_instance_is_memorized() {
        let s = samples(Domain::Source, 4, 0.9, 6, 5);
        let t = samples(Domain::Target, 4, 0.1, 5, 5);
        let mut c = cfg(3000);
        c.batch_size = 8;
        c.weights = LossWeights {
            beta: 1.0,
            mu: 0.0,
            lambda: 0.0,
        };
        // Distinct embeddings per entity so each rating vector is recoverable.
        let spread = |mut v: Vec<Sample>| {
            for (e, x) in v.iter_mut().enumerate() {
                x.embedding[1] = e as f64;
            }
            v
        };
        let (s, t) = (spread(s), spread(t));
        let wide = DARecShape {
            extractor_width: 16,
            ..shape()
        };
        let trained = train_idarec(&s, &t, wide, &c, &SeedStream::new(2), None).unwrap();
        for x in s.iter().chain(&t) {
            let y = trained.params.predict(&x.embedding, x.domain, RatingScale::default()).unwrap();
            for (i, r) in x.raw.observed() {
                assert!((y[i] - r).abs() < 0.1, "{} vs {r}", y[i]);
            }
        }
    }

    #[test]
    fn early_stopping_keeps_the_best_epoch() {
        let s = samples(Domain::Source, 6, 0.9, 6, 6);
        let t = samples(Domain::Target, 4, 0.1, 5, 6);
        let mut c = cfg(50);
        c.patience = Some(3);
        // Validation score that only ever gets worse after epoch 0.
        let calls = std::cell::Cell::new(0.0);
        let validate = |_: &DARecParams| {
            calls.set(calls.get() + 1.0);
            Ok(calls.get())
        };
        let trained = train_udarec(&s, &t, shape(), &c, &SeedStream::new(0), Some(&validate)).unwrap();
        assert_eq!(trained.best_epoch, Some(0));
        assert_eq!(trained.history.len(), 4);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let s = samples(Domain::Source, 3, 0.9, 6, 7);
        let t = samples(Domain::Target, 3, 0.1, 5, 7);
        let seed = SeedStream::new(0);
        assert!(train_udarec(&[], &t, shape(), &cfg(1), &seed, None).is_err());
        assert!(train_udarec(&t, &s, shape(), &cfg(1), &seed, None).is_err());
        let wide = DARecShape { k: 5, ..shape() };
        assert!(train_idarec(&s, &t, wide, &cfg(1), &seed, None).is_err());
        let mut bad = cfg(1);
        bad.lr = 0.0;
        assert!(train_idarec(&s, &t, shape(), &bad, &seed, None).is_err());
    }
}
