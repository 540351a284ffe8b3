//! AutoRec embedding stage.
//!
//! One autoencoder `ŷ = h(W2 g(W1 y + b1) + b2)` per domain, trained on
//! observed entries only. After training its hidden activation
//! `g(W1 y + b1)` serves as a frozen `k`-dimensional embedding of each user
//! (or item) for the adaptation network.

use std::path::Path;

use crate::error::{Error, Result};
use crate::nncore::{
    checkpoint, Activation, AdamConfig, AdamState, DenseMatrix, Layer, Mlp, NamedTensor, ParamTensor,
    Parameterized, SeedStream, INIT_STD,
};
use crate::ratings::{Domain, MaskedVector, Orientation, RatingMatrix, RatingScale};

#[derive(Debug, Clone, PartialEq)]
pub struct AutoRecConfig {
    /// Embedding size.
    pub k: usize,
    /// Regularization strength on all weights and biases.
    pub alpha: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop after this many epochs without validation improvement and keep
    /// the best parameters seen.
    pub patience: Option<usize>,
    pub hidden: Activation,
    pub output: Activation,
    pub init_std: f64,
}

impl Default for AutoRecConfig {
    fn default() -> Self {
        Self {
            k: 32,
            alpha: 1e-3,
            lr: 1e-3,
            batch_size: 32,
            epochs: 200,
            patience: None,
            hidden: Activation::Sigmoid,
            output: Activation::Identity,
            init_std: INIT_STD,
        }
    }
}

impl AutoRecConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("autorec.k", "embedding size must be at least 1"));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::config("autorec.alpha", "must be >= 0"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::config("autorec.lr", "must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("autorec.batch", "must be at least 1"));
        }
        Ok(())
    }
}

/// `W1: k×d`, `b1: k`, `W2: d×k`, `b2: d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoRecParams {
    net: Mlp,
}

impl AutoRecParams {
    pub fn new(d: usize, cfg: &AutoRecConfig, seed: &SeedStream) -> Result<Self> {
        if cfg.k == 0 || d == 0 {
            return Err(Error::invalid(format!("AutoRec needs d >= 1 and k >= 1, got d={d}, k={}", cfg.k)));
        }
        let mut rng = seed.rng("autorec.init");
        let net = Mlp::new(&[d, cfg.k, d], &[cfg.hidden, cfg.output], cfg.init_std, &mut rng)?;
        Ok(Self { net })
    }

    pub fn from_parts(
        w1: DenseMatrix,
        b1: Vec<f64>,
        w2: DenseMatrix,
        b2: Vec<f64>,
        hidden: Activation,
        output: Activation,
    ) -> Result<Self> {
        if w2.rows() != w1.cols() || w2.cols() != w1.rows() {
            return Err(Error::dim(format!(
                "W1 is {:?} but W2 is {:?}",
                w1.shape(),
                w2.shape()
            )));
        }
        let net = Mlp::from_layers(vec![
            Layer::from_parts(w1, b1, hidden)?,
            Layer::from_parts(w2, b2, output)?,
        ])?;
        Ok(Self { net })
    }

    /// Input (and output) dimension `d`.
    pub fn input_dim(&self) -> usize {
        self.net.in_dim()
    }

    pub fn k(&self) -> usize {
        self.net.layers[0].out_dim()
    }

    pub fn w1(&self) -> &DenseMatrix {
        &self.net.layers[0].weights.value
    }

    pub fn b1(&self) -> &[f64] {
        self.net.layers[0].bias.value.as_slice()
    }

    pub fn w2(&self) -> &DenseMatrix {
        &self.net.layers[1].weights.value
    }

    pub fn b2(&self) -> &[f64] {
        self.net.layers[1].bias.value.as_slice()
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }

    /// `h(W2 g(W1 y + b1) + b2)` for a plain input vector.
    pub fn reconstruct(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.net.predict(y)
    }

    /// Hidden activation `g(W1 y + b1)` of the masked input.
    pub fn embed(&self, y: &MaskedVector) -> Result<Vec<f64>> {
        let encoder = &self.net.layers[0];
        let x = y.masked_values();
        if x.len() != encoder.in_dim() {
            return Err(Error::dim(format!(
                "rating vector of length {} for an AutoRec over {} positions",
                x.len(),
                encoder.in_dim()
            )));
        }
        let mut z = encoder.weights.value.matvec(&x);
        Ok(z
            .iter_mut()
            .zip(encoder.bias.value.as_slice())
            .map(|(zi, b)| encoder.activation.apply(*zi + b))
            .collect())
    }
}

impl Parameterized for AutoRecParams {
    fn named_params(&self) -> Vec<(String, &ParamTensor)> {
        let l = &self.net.layers;
        vec![
            ("W1".into(), &l[0].weights),
            ("b1".into(), &l[0].bias),
            ("W2".into(), &l[1].weights),
            ("b2".into(), &l[1].bias),
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.net.params_mut()
    }
}

fn check_batch(p: &AutoRecParams, batch: &[MaskedVector], alpha: f64) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if !(alpha >= 0.0) {
        return Err(Error::invalid(format!("alpha {alpha} must be >= 0")));
    }
    if let Some(v) = batch.iter().find(|v| v.len() != p.input_dim()) {
        return Err(Error::dim(format!(
            "rating vector of length {} for an AutoRec over {} positions",
            v.len(),
            p.input_dim()
        )));
    }
    Ok(())
}

/// `Σ ‖ŷ − y‖²_O + α (‖W1‖² + ‖W2‖² + ‖b1‖² + ‖b2‖²)`.
pub fn autorec_loss(p: &AutoRecParams, batch: &[MaskedVector], alpha: f64) -> Result<f64> {
    check_batch(p, batch, alpha)?;
    let mut data = 0.0;
    for y in batch {
        let y_hat = p.reconstruct(&y.masked_values())?;
        data += masked_sq_error(&y_hat, y);
    }
    Ok(data + alpha * p.sum_sq())
}

/// Same value as [`autorec_loss`], accumulating its gradient into `p`.
pub fn autorec_loss_and_grad(p: &mut AutoRecParams, batch: &[MaskedVector], alpha: f64) -> Result<f64> {
    check_batch(p, batch, alpha)?;
    let mut data = 0.0;
    for y in batch {
        let (y_hat, cache) = p.net.forward(&y.masked_values())?;
        data += masked_sq_error(&y_hat, y);
        let d = masked_sq_error_grad(&y_hat, y);
        p.net.backward(&cache, &d)?;
    }
    let reg = alpha * p.sum_sq();
    p.add_l2_grad(alpha);
    Ok(data + reg)
}

pub(crate) fn masked_sq_error(y_hat: &[f64], y: &MaskedVector) -> f64 {
    y.observed().map(|(i, r)| (y_hat[i] - r) * (y_hat[i] - r)).sum()
}

pub(crate) fn masked_sq_error_grad(y_hat: &[f64], y: &MaskedVector) -> Vec<f64> {
    let mut d = vec![0.0; y_hat.len()];
    for (i, r) in y.observed() {
        d[i] = 2.0 * (y_hat[i] - r);
    }
    d
}

/// A held-out rating: (entity index, position within its vector, rating).
pub type HeldOut = (usize, usize, f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub validation_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedAutoRec {
    pub params: AutoRecParams,
    pub history: Vec<EpochStats>,
    /// Epoch whose parameters were kept (last epoch without early stopping).
    pub best_epoch: Option<usize>,
}

/// Trains one AutoRec over the rating vectors of `m` along `orientation`.
pub fn train_autorec(
    m: &RatingMatrix,
    orientation: Orientation,
    cfg: &AutoRecConfig,
    seed: &SeedStream,
) -> Result<TrainedAutoRec> {
    if m.n_users() == 0 || m.n_items() == 0 {
        return Err(Error::invalid("cannot train AutoRec on an empty matrix"));
    }
    train_autorec_vectors(&m.vectors(orientation), &[], RatingScale::default(), cfg, seed)
}

/// Trains on explicit rating vectors. `validation` entries index into
/// `vectors`; when non-empty and `cfg.patience` is set, the parameters with
/// the lowest validation RMSE are returned.
pub fn train_autorec_vectors(
    vectors: &[MaskedVector],
    validation: &[HeldOut],
    scale: RatingScale,
    cfg: &AutoRecConfig,
    seed: &SeedStream,
) -> Result<TrainedAutoRec> {
    cfg.validate()?;
    let d = vectors
        .first()
        .map(MaskedVector::len)
        .ok_or_else(|| Error::invalid("no rating vectors to train on"))?;
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::dim("rating vectors differ in length"));
    }
    let mut params = AutoRecParams::new(d, cfg, seed)?;
    let mut adam = AdamState::new(AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    });

    let active: Vec<usize> = (0..vectors.len()).filter(|&e| vectors[e].observed_count() > 0).collect();
    let n = active.len().max(1) as f64;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, AutoRecParams)> = None;
    let mut since_best = 0;

    for epoch in 0..cfg.epochs {
        let mut order = active.clone();
        rand::seq::SliceRandom::shuffle(&mut order[..], &mut seed.rng_indexed("autorec.shuffle", epoch as u64));
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<MaskedVector> = chunk.iter().map(|&e| vectors[e].clone()).collect();
            params.zero_grad();
            // The regularizer is spread over batches so one epoch sums to the
            // full objective.
            let loss = autorec_loss_and_grad(&mut params, &batch, cfg.alpha * chunk.len() as f64 / n)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            epoch_loss += loss;
            adam.step(&mut params.params_mut())?;
        }
        let validation_rmse = if validation.is_empty() {
            None
        } else {
            Some(heldout_rmse(&params, vectors, validation, scale)?)
        };
        history.push(EpochStats {
            epoch,
            loss: epoch_loss,
            validation_rmse,
        });

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
    Ok(TrainedAutoRec {
        params,
        history,
        best_epoch,
    })
}

/// Predictions for held-out entries, reconstructing each entity's vector once.
pub fn predict_heldout(
    p: &AutoRecParams,
    vectors: &[MaskedVector],
    entries: &[HeldOut],
    scale: RatingScale,
) -> Result<Vec<f64>> {
    let mut cache: std::collections::HashMap<usize, Vec<f64>> = std::collections::HashMap::new();
    entries
        .iter()
        .map(|&(e, pos, _)| {
            if !cache.contains_key(&e) {
                let v = vectors
                    .get(e)
                    .ok_or_else(|| Error::invalid(format!("entity {e} out of range")))?;
                cache.insert(e, p.reconstruct(&v.masked_values())?);
            }
            let y = &cache[&e];
            y.get(pos)
                .map(|&r| scale.clip(r))
                .ok_or_else(|| Error::invalid(format!("position {pos} out of range")))
        })
        .collect()
}

fn heldout_rmse(p: &AutoRecParams, vectors: &[MaskedVector], entries: &[HeldOut], scale: RatingScale) -> Result<f64> {
    let preds = predict_heldout(p, vectors, entries, scale)?;
    let pairs: Vec<(f64, f64)> = preds.into_iter().zip(entries.iter().map(|e| e.2)).collect();
    crate::harness::rmse(&pairs)
}

/// Frozen embeddings of every entity of one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    /// One row per entity, `k` columns.
    pub vectors: DenseMatrix,
    pub domain: Domain,
    pub orientation: Orientation,
}

impl EmbeddingSet {
    pub fn k(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.rows() == 0
    }

    pub fn get(&self, e: usize) -> &[f64] {
        self.vectors.row(e)
    }

    pub fn tensor_name(&self) -> String {
        format!("embeddings.{}.{}", self.domain.name(), self.orientation.name())
    }

    /// Writes the tensor checkpoint plus a `<path>.ids` sidecar with one
    /// `ordinal<TAB>id` line per entity.
    pub fn save(&self, path: &Path, ids: &[String]) -> Result<()> {
        if ids.len() != self.len() {
            return Err(Error::dim(format!("{} ids for {} embeddings", ids.len(), self.len())));
        }
        checkpoint::save(
            path,
            &[NamedTensor {
                name: self.tensor_name(),
                value: self.vectors.clone(),
            }],
        )?;
        let sidecar: String = ids.iter().enumerate().map(|(k, id)| format!("{k}\t{id}\n")).collect();
        std::fs::write(sidecar_path(path), sidecar)?;
        Ok(())
    }

    pub fn load(path: &Path, domain: Domain, orientation: Orientation) -> Result<(Self, Vec<String>)> {
        let tensors = checkpoint::load(path)?;
        let name = format!("embeddings.{}.{}", domain.name(), orientation.name());
        let t = tensors
            .into_iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor `{name}`")))?;
        let ids: Vec<String> = std::fs::read_to_string(sidecar_path(path))?
            .lines()
            .map(|l| l.split_once('\t').map(|(_, id)| id.to_string()).unwrap_or_default())
            .collect();
        Ok((
            Self {
                vectors: t.value,
                domain,
                orientation,
            },
            ids,
        ))
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ids");
    s.into()
}

/// Embeds every rating vector of `m` along `orientation`.
pub fn extract_embeddings(
    p: &AutoRecParams,
    m: &RatingMatrix,
    orientation: Orientation,
    domain: Domain,
) -> Result<EmbeddingSet> {
    embed_vectors(p, &m.vectors(orientation), orientation, domain)
}

pub fn embed_vectors(
    p: &AutoRecParams,
    vectors: &[MaskedVector],
    orientation: Orientation,
    domain: Domain,
) -> Result<EmbeddingSet> {
    let k = p.k();
    let mut out = DenseMatrix::zeros(vectors.len(), k);
    for (e, v) in vectors.iter().enumerate() {
        out.row_mut(e).copy_from_slice(&p.embed(v)?);
    }
    Ok(EmbeddingSet {
        vectors: out,
        domain,
        orientation,
    })
}
