use std::collections::HashMap;
use std::time::Instant;

use crate::autorec::{
    embed_vectors, predict_heldout, train_autorec_vectors, AutoRecConfig, EmbeddingSet, HeldOut, TrainedAutoRec,
};
use crate::error::{Error, Result};
use crate::model::{classifier_accuracy, train_darec, DARecConfig, DARecParams, DARecShape, Sample, TrainedDARec, Variant};
use crate::nncore::SeedStream;
use crate::ratings::{split, AlignedDataset, Domain, Entry, MaskedVector, Orientation, RatingScale, Split};

use super::metrics::rmse;
use super::report::Report;

/// Which embedding feeds a head at prediction time for user-oriented
/// models. Item-oriented models always use the item's own embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalInput {
    /// The user's embedding from the domain being predicted.
    Own,
    /// The user's embedding from the other domain.
    Paired,
    /// Average of the two predictions.
    Mean,
}

impl EvalInput {
    pub fn name(self) -> &'static str {
        match self {
            EvalInput::Own => "own",
            EvalInput::Paired => "paired",
            EvalInput::Mean => "mean",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "own" => Some(EvalInput::Own),
            "paired" => Some(EvalInput::Paired),
            "mean" => Some(EvalInput::Mean),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub variant: Variant,
    pub orientation: Orientation,
    pub seed: u64,
    /// Fraction of each domain's ratings used for fitting; the rest is test.
    pub train_frac: f64,
    /// Fraction of the fitting ratings held out for early stopping.
    pub val_frac: f64,
    pub scale: RatingScale,
    pub autorec: AutoRecConfig,
    pub darec: DARecConfig,
    /// Supervise both heads with a shared user's ratings from both domains.
    pub cross_supervision: bool,
    /// One item AutoRec over the items of both domains instead of one per
    /// domain. Only meaningful for item orientation.
    pub shared_autorec: bool,
    /// Let both heads share their output layer, so per-user output weights
    /// learn from both domains. Only meaningful for item orientation.
    pub tie_output: bool,
    pub eval_input: EvalInput,
}

impl TrainConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            orientation: default_orientation(variant),
            seed: 0,
            train_frac: 0.9,
            val_frac: 0.1,
            scale: RatingScale::default(),
            autorec: AutoRecConfig::default(),
            darec: DARecConfig::default(),
            cross_supervision: true,
            shared_autorec: false,
            tie_output: false,
            eval_input: EvalInput::Own,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.orientation != default_orientation(self.variant) {
            return Err(Error::config(
                "experiment.orientation",
                format!(
                    "variant {} works on {} vectors, not {}",
                    self.variant.tag(),
                    default_orientation(self.variant).name(),
                    self.orientation.name()
                ),
            ));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::config("experiment.train_frac", "must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.val_frac) {
            return Err(Error::config("experiment.val_frac", "must lie in [0, 1)"));
        }
        if self.shared_autorec && self.orientation != Orientation::Item {
            return Err(Error::config("autorec.shared", "a shared AutoRec needs item orientation"));
        }
        if self.tie_output && self.orientation != Orientation::Item {
            return Err(Error::config("darec.tie_output", "a shared output layer needs item orientation"));
        }
        self.autorec.validate()?;
        self.darec.validate()
    }
}

pub fn default_orientation(v: Variant) -> Orientation {
    match v {
        Variant::U => Orientation::User,
        Variant::I => Orientation::Item,
    }
}

/// Split, per-domain AutoRec training and embedding extraction.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub split: Split,
    pub orientation: Orientation,
    /// Training rating vectors per domain, source then target.
    pub vectors: [Vec<MaskedVector>; 2],
    pub autorec: Vec<(String, TrainedAutoRec)>,
    pub embeddings: [EmbeddingSet; 2],
}

impl Pretrained {
    fn vectors_of(&self, d: Domain) -> &[MaskedVector] {
        &self.vectors[d as usize]
    }

    pub fn embeddings_of(&self, d: Domain) -> &EmbeddingSet {
        &self.embeddings[d as usize]
    }

    /// The AutoRec responsible for `d`.
    pub fn autorec_of(&self, d: Domain) -> &TrainedAutoRec {
        if self.autorec.len() == 1 {
            &self.autorec[0].1
        } else {
            &self.autorec[d as usize].1
        }
    }
}

fn heldout(entries: &[Entry], m: &crate::ratings::RatingMatrix, o: Orientation, offset: usize) -> Result<Vec<HeldOut>> {
    entries
        .iter()
        .map(|&(u, i)| {
            let r = m
                .get(u, i)
                .ok_or_else(|| Error::invalid(format!("({u}, {i}) is not an observed entry")))?;
            Ok(match o {
                Orientation::User => (u + offset, i, r),
                Orientation::Item => (i + offset, u, r),
            })
        })
        .collect()
}

/// Runs the stages shared by a transfer model and its AutoRec baseline.
pub fn pretrain(cfg: &TrainConfig, data: &AlignedDataset) -> Result<Pretrained> {
    cfg.validate()?;
    let sp = split(data, cfg.train_frac, cfg.val_frac, cfg.seed)?;
    let streams = SeedStream::new(cfg.seed);
    let o = cfg.orientation;
    let mut vectors = Vec::with_capacity(2);
    let mut validation = Vec::with_capacity(2);
    for d in [Domain::Source, Domain::Target] {
        let m = data.domain(d);
        vectors.push(m.restrict(&sp.domain(d).train)?.vectors(o));
        validation.push(heldout(&sp.domain(d).validation, m, o, 0)?);
    }

    let autorec = if cfg.shared_autorec {
        let offset = vectors[0].len();
        let all: Vec<MaskedVector> = vectors.concat();
        let mut val = validation[0].clone();
        val.extend(validation[1].iter().map(|&(e, p, r)| (e + offset, p, r)));
        let t = train_autorec_vectors(&all, &val, cfg.scale, &cfg.autorec, &streams.derive("autorec.shared"))?;
        vec![("shared".to_string(), t)]
    } else {
        let mut out = Vec::with_capacity(2);
        for d in [Domain::Source, Domain::Target] {
            let t = train_autorec_vectors(
                &vectors[d as usize],
                &validation[d as usize],
                cfg.scale,
                &cfg.autorec,
                &streams.derive(&format!("autorec.{}", d.name())),
            )?;
            out.push((d.name().to_string(), t));
        }
        out
    };

    let embed = |d: Domain| {
        let ar = if autorec.len() == 1 { &autorec[0].1 } else { &autorec[d as usize].1 };
        embed_vectors(&ar.params, &vectors[d as usize], o, d)
    };
    let embeddings = [embed(Domain::Source)?, embed(Domain::Target)?];
    let [vs, vt]: [Vec<MaskedVector>; 2] = vectors.try_into().map_err(|_| Error::invalid("vector lists"))?;
    Ok(Pretrained {
        split: sp,
        orientation: o,
        vectors: [vs, vt],
        autorec,
        embeddings,
    })
}

/// Everything produced by one run, for reporting and checkpointing.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub pretrained: Pretrained,
    pub darec: Option<TrainedDARec>,
}

/// Fails if any test entry also appears among the fitting entries.
pub fn watchdog(sp: &Split) -> Result<()> {
    sp.source.check_disjoint()?;
    sp.target.check_disjoint()
}

fn test_counts(entries: &[Entry]) -> (usize, usize) {
    let users: std::collections::HashSet<usize> = entries.iter().map(|e| e.0).collect();
    let items: std::collections::HashSet<usize> = entries.iter().map(|e| e.1).collect();
    (users.len(), items.len())
}

fn score(data: &AlignedDataset, d: Domain, entries: &[Entry], predict: &mut dyn FnMut(usize, usize) -> Result<f64>) -> Result<f64> {
    let m = data.domain(d);
    let mut pairs = Vec::with_capacity(entries.len());
    for &(u, i) in entries {
        let truth = m
            .get(u, i)
            .ok_or_else(|| Error::invalid(format!("({u}, {i}) is not an observed entry")))?;
        pairs.push((predict(u, i)?, truth));
    }
    rmse(&pairs)
}

/// AutoRec-only baseline: each domain's test ratings predicted by that
/// domain's reconstruction.
pub fn baseline_from(cfg: &TrainConfig, data: &AlignedDataset, pre: &Pretrained, started: Instant) -> Result<Report> {
    watchdog(&pre.split)?;
    let mut rmses = [0.0; 2];
    for d in [Domain::Source, Domain::Target] {
        let entries = &pre.split.domain(d).test;
        let offset = if pre.autorec.len() == 1 && d == Domain::Target { pre.vectors[0].len() } else { 0 };
        let held = heldout(entries, data.domain(d), pre.orientation, offset)?;
        let vectors: Vec<MaskedVector> = if offset > 0 { pre.vectors.concat() } else { pre.vectors_of(d).to_vec() };
        let preds = predict_heldout(&pre.autorec_of(d).params, &vectors, &held, cfg.scale)?;
        let pairs: Vec<(f64, f64)> = preds.into_iter().zip(held.iter().map(|h| h.2)).collect();
        rmses[d as usize] = rmse(&pairs)?;
    }
    let (m, n) = test_counts(&pre.split.target.test);
    let target_ar = pre.autorec_of(Domain::Target);
    Ok(Report {
        model: format!("{}-AutoRec", cfg.variant.tag()),
        config: cfg.clone(),
        rmse_target: rmses[1],
        rmse_source: rmses[0],
        classifier_accuracy: None,
        autorec_history: pre.autorec.iter().map(|(n, t)| (n.clone(), t.history.clone())).collect(),
        darec_history: Vec::new(),
        test_users: m,
        test_items: n,
        epochs: target_ar.history.len(),
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

fn samples(cfg: &TrainConfig, pre: &Pretrained, d: Domain) -> Vec<Sample> {
    let own = pre.vectors_of(d);
    let other = pre.vectors_of(d.other());
    let emb = pre.embeddings_of(d);
    let pair = cfg.cross_supervision && pre.orientation == Orientation::User;
    (0..own.len())
        .filter(|&e| own[e].observed_count() > 0)
        .map(|e| Sample {
            embedding: emb.get(e).to_vec(),
            raw: own[e].clone(),
            paired: pair.then(|| other[e].clone()),
            domain: d,
            entity: e,
        })
        .collect()
}

/// Predicts rating `(u, i)` of domain `d` from a trained network.
pub struct Predictor<'a> {
    cfg: &'a TrainConfig,
    pre: &'a Pretrained,
    params: &'a DARecParams,
    cache: HashMap<(Domain, usize), Vec<f64>>,
}

impl<'a> Predictor<'a> {
    pub fn new(cfg: &'a TrainConfig, pre: &'a Pretrained, params: &'a DARecParams) -> Self {
        Self {
            cfg,
            pre,
            params,
            cache: HashMap::new(),
        }
    }

    fn head_output(&self, d: Domain, entity: usize) -> Result<Vec<f64>> {
        let scale = self.cfg.scale;
        match self.pre.orientation {
            Orientation::Item => self.params.predict(self.pre.embeddings_of(d).get(entity), d, scale),
            Orientation::User => {
                let own = || self.params.predict(self.pre.embeddings_of(d).get(entity), d, scale);
                let paired = || self.params.predict(self.pre.embeddings_of(d.other()).get(entity), d, scale);
                match self.cfg.eval_input {
                    EvalInput::Own => own(),
                    EvalInput::Paired => paired(),
                    EvalInput::Mean => {
                        let a = own()?;
                        let b = paired()?;
                        Ok(a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect())
                    }
                }
            }
        }
    }

    pub fn predict(&mut self, d: Domain, u: usize, i: usize) -> Result<f64> {
        let (entity, pos) = match self.pre.orientation {
            Orientation::User => (u, i),
            Orientation::Item => (i, u),
        };
        if !self.cache.contains_key(&(d, entity)) {
            let y = self.head_output(d, entity)?;
            self.cache.insert((d, entity), y);
        }
        self.cache[&(d, entity)]
            .get(pos)
            .copied()
            .ok_or_else(|| Error::invalid(format!("position {pos} out of range")))
    }
}

/// Trains the transfer network on pretrained embeddings and scores it.
pub fn darec_from(cfg: &TrainConfig, data: &AlignedDataset, pre: Pretrained, started: Instant) -> Result<Outcome> {
    let source = samples(cfg, &pre, Domain::Source);
    let target = samples(cfg, &pre, Domain::Target);
    let shape = DARecShape {
        k: cfg.autorec.k,
        extractor_width: cfg.darec.extractor_width,
        source_dim: pre.vectors_of(Domain::Source)[0].len(),
        target_dim: pre.vectors_of(Domain::Target)[0].len(),
        tie_output: cfg.tie_output,
    };
    let val_entries = &pre.split.target.validation;
    let validate = |p: &DARecParams| -> Result<f64> {
        let mut pr = Predictor::new(cfg, &pre, p);
        score(data, Domain::Target, val_entries, &mut |u, i| pr.predict(Domain::Target, u, i))
    };
    let validate_ref: Option<&dyn Fn(&DARecParams) -> Result<f64>> =
        if val_entries.is_empty() { None } else { Some(&validate) };
    let trained = train_darec(
        cfg.variant,
        &source,
        &target,
        shape,
        &cfg.darec,
        &SeedStream::new(cfg.seed).derive("darec"),
        validate_ref,
    )?;

    watchdog(&pre.split)?;
    let mut rmses = [0.0; 2];
    {
        let mut pr = Predictor::new(cfg, &pre, &trained.params);
        for d in [Domain::Source, Domain::Target] {
            rmses[d as usize] = score(data, d, &pre.split.domain(d).test, &mut |u, i| pr.predict(d, u, i))?;
        }
    }
    let accuracy = classifier_accuracy(&trained.params, source.iter().chain(&target))?;
    let (m, n) = test_counts(&pre.split.target.test);
    let report = Report {
        model: cfg.variant.name().to_string(),
        config: cfg.clone(),
        rmse_target: rmses[1],
        rmse_source: rmses[0],
        classifier_accuracy: Some(accuracy),
        autorec_history: pre.autorec.iter().map(|(n, t)| (n.clone(), t.history.clone())).collect(),
        darec_history: trained.history.clone(),
        test_users: m,
        test_items: n,
        epochs: trained.history.len(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(Outcome {
        report,
        pretrained: pre,
        darec: Some(trained),
    })
}

/// split → AutoRec per domain → embeddings → transfer network → test RMSE.
pub fn run_experiment(cfg: &TrainConfig, data: &AlignedDataset) -> Result<Report> {
    run_experiment_full(cfg, data).map(|o| o.report)
}

pub fn run_experiment_full(cfg: &TrainConfig, data: &AlignedDataset) -> Result<Outcome> {
    let started = Instant::now();
    let pre = pretrain(cfg, data)?;
    darec_from(cfg, data, pre, started)
}

/// The AutoRec-only reference for `cfg`'s orientation.
pub fn run_baseline(cfg: &TrainConfig, data: &AlignedDataset) -> Result<Report> {
    let started = Instant::now();
    let pre = pretrain(cfg, data)?;
    baseline_from(cfg, data, &pre, started)
}

/// Baseline and transfer model from one shared pretraining pass.
pub fn run_with_baseline(cfg: &TrainConfig, data: &AlignedDataset) -> Result<(Report, Outcome)> {
    let started = Instant::now();
    let pre = pretrain(cfg, data)?;
    let base = baseline_from(cfg, data, &pre, started)?;
    let started = Instant::now();
    let outcome = darec_from(cfg, data, pre, started)?;
    Ok((base, outcome))
}
