//! Rating-pattern extractor, per-domain predictor heads and domain classifier.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::grl::GradientReversal;
use crate::error::{Error, Result};
use crate::nncore::{checkpoint, Activation, ForwardCache, Mlp, ParamTensor, Parameterized, SeedStream};
use crate::ratings::{Domain, MaskedVector, RatingScale};

/// Probability clamp applied before taking logarithms.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// User-oriented: adversarial through the gradient reversal layer.
    U,
    /// Item-oriented: classifier minimized jointly with the predictors.
    I,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::U => "U-DARec",
            Variant::I => "I-DARec",
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Variant::U => "U",
            Variant::I => "I",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "U" | "u" | "U-DARec" => Some(Variant::U),
            "I" | "i" | "I-DARec" => Some(Variant::I),
            _ => None,
        }
    }

    /// The classifier path this variant trains with.
    pub fn classifier_path(self, mu: f64) -> ClassifierPath {
        match self {
            Variant::U => ClassifierPath::Reversed { mu },
            Variant::I => ClassifierPath::Joint { weight: mu },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Weight of the target-domain reconstruction term.
    pub beta: f64,
    /// Classifier weight (I) or reversal coefficient (U).
    pub mu: f64,
    /// L2 strength over every parameter.
    pub lambda: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            beta: 1.0,
            mu: 1.0,
            lambda: 1e-3,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("beta", self.beta), ("mu", self.mu), ("lambda", self.lambda)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("darec.{key}"), format!("{v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// How the domain-classification loss reaches the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierPath {
    /// Unit-weight BCE descended by the classifier; the gradient entering
    /// the extractor is multiplied by `-mu` at the reversal layer.
    Reversed { mu: f64 },
    /// `weight · BCE` descended by every parameter set.
    Joint { weight: f64 },
}

impl ClassifierPath {
    fn loss_weight(self) -> f64 {
        match self {
            ClassifierPath::Reversed { .. } => 1.0,
            ClassifierPath::Joint { weight } => weight,
        }
    }
}

/// Layer sizes of the adaptation network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DARecShape {
    /// Embedding size fed to the extractor.
    pub k: usize,
    pub extractor_width: usize,
    pub source_dim: usize,
    pub target_dim: usize,
    /// Both heads end in one shared output layer. Needs equal output
    /// dimensions, which holds for item vectors over shared users.
    pub tie_output: bool,
}

impl DARecShape {
    /// Three predictor widths interpolated geometrically from the extractor
    /// width to the output dimension; the last equals `out`.
    pub fn head_widths(&self, out: usize) -> [usize; 3] {
        let w = self.extractor_width as f64;
        let ratio = out as f64 / w;
        let at = |j: f64| ((w * ratio.powf(j / 3.0)).round() as usize).max(1);
        [at(1.0), at(2.0), out]
    }

    pub fn classifier_hidden(&self) -> usize {
        (self.extractor_width / 2).max(1)
    }
}

/// One embedded entity with its own-domain rating vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub embedding: Vec<f64>,
    /// Rating vector in the sample's own domain.
    pub raw: MaskedVector,
    /// Rating vector of the same entity in the other domain, when the entity
    /// exists there (shared users).
    pub paired: Option<MaskedVector>,
    pub domain: Domain,
    pub entity: usize,
}

impl Sample {
    /// Ground truth for the head of `domain`, if this sample has any.
    pub fn truth(&self, domain: Domain) -> Option<&MaskedVector> {
        if domain == self.domain {
            Some(&self.raw)
        } else {
            self.paired.as_ref()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DARecOutputs {
    pub y_source: Vec<f64>,
    pub y_target: Vec<f64>,
    /// Predicted probability that the input came from the target domain.
    pub c_hat: f64,
}

impl DARecOutputs {
    pub fn head(&self, d: Domain) -> &[f64] {
        match d {
            Domain::Source => &self.y_source,
            Domain::Target => &self.y_target,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct HeadCache {
    trunk: ForwardCache,
    output: Option<ForwardCache>,
}

#[derive(Debug, Clone)]
pub(crate) struct DARecCache {
    extractor: ForwardCache,
    head_source: HeadCache,
    head_target: HeadCache,
    classifier: ForwardCache,
}

/// Value of the objective for one sample (or a batch), split by term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub predictor: f64,
    /// `μ · BCE`.
    pub classifier: f64,
    pub regularizer: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.predictor + self.classifier + self.regularizer
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DARecParams {
    pub extractor: Mlp,
    pub head_source: Mlp,
    pub head_target: Mlp,
    /// When present, the heads above hold only hidden layers and both feed
    /// this output layer.
    pub shared_output: Option<Mlp>,
    pub classifier: Mlp,
}

impl DARecParams {
    pub fn new(shape: DARecShape, init_std: f64, seed: &SeedStream) -> Result<Self> {
        if shape.k == 0 || shape.extractor_width == 0 || shape.source_dim == 0 || shape.target_dim == 0 {
            return Err(Error::invalid(format!("degenerate network shape {shape:?}")));
        }
        let mut rng = seed.rng("darec.init");
        let w = shape.extractor_width;
        let extractor = Mlp::new(&[shape.k, w], &[Activation::Sigmoid], init_std, &mut rng)?;
        if shape.tie_output && shape.source_dim != shape.target_dim {
            return Err(Error::dim(format!(
                "a shared output layer needs equal head sizes, got {} and {}",
                shape.source_dim, shape.target_dim
            )));
        }
        let hidden = [Activation::Sigmoid, Activation::Sigmoid];
        let head = |out: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            let [h1, h2, o] = shape.head_widths(out);
            if shape.tie_output {
                Mlp::new(&[w, h1, h2], &hidden, init_std, rng)
            } else {
                Mlp::new(&[w, h1, h2, o], &[hidden[0], hidden[1], Activation::Identity], init_std, rng)
            }
        };
        let head_source = head(shape.source_dim, &mut rng)?;
        let head_target = head(shape.target_dim, &mut rng)?;
        let shared_output = if shape.tie_output {
            let [_, h2, o] = shape.head_widths(shape.source_dim);
            Some(Mlp::new(&[h2, o], &[Activation::Identity], init_std, &mut rng)?)
        } else {
            None
        };
        let classifier = Mlp::new(
            &[w, shape.classifier_hidden(), 1],
            &[Activation::Sigmoid, Activation::Sigmoid],
            init_std,
            &mut rng,
        )?;
        Self::from_parts(extractor, head_source, head_target, classifier)?.with_shared_output(shared_output)
    }

    pub fn from_parts(extractor: Mlp, head_source: Mlp, head_target: Mlp, classifier: Mlp) -> Result<Self> {
        let w = extractor.out_dim();
        for (name, net) in [("head_source", &head_source), ("head_target", &head_target), ("classifier", &classifier)] {
            if net.in_dim() != w {
                return Err(Error::dim(format!("{name} expects {} inputs, extractor gives {w}", net.in_dim())));
            }
        }
        if classifier.out_dim() != 1 {
            return Err(Error::dim("classifier must have a single output"));
        }
        Ok(Self {
            extractor,
            head_source,
            head_target,
            shared_output: None,
            classifier,
        })
    }

    /// Routes both heads through `output`, or detaches a shared layer.
    pub fn with_shared_output(mut self, output: Option<Mlp>) -> Result<Self> {
        if let Some(out) = &output {
            for (name, net) in [("head_source", &self.head_source), ("head_target", &self.head_target)] {
                if net.out_dim() != out.in_dim() {
                    return Err(Error::dim(format!(
                        "{name} gives {} values, shared output expects {}",
                        net.out_dim(),
                        out.in_dim()
                    )));
                }
            }
        }
        self.shared_output = output;
        Ok(self)
    }

    /// Width of the rating vector predicted for `d`.
    pub fn output_dim(&self, d: Domain) -> usize {
        match &self.shared_output {
            Some(out) => out.out_dim(),
            None => self.head(d).out_dim(),
        }
    }

    pub fn shape(&self) -> DARecShape {
        DARecShape {
            k: self.extractor.in_dim(),
            extractor_width: self.extractor.out_dim(),
            source_dim: self.output_dim(Domain::Source),
            target_dim: self.output_dim(Domain::Target),
            tie_output: self.shared_output.is_some(),
        }
    }

    /// Domain-specific layers of a head (all of them unless the output
    /// layer is shared).
    pub fn head(&self, d: Domain) -> &Mlp {
        match d {
            Domain::Source => &self.head_source,
            Domain::Target => &self.head_target,
        }
    }

    fn subnets(&self) -> Vec<(&'static str, &Mlp)> {
        let mut out = vec![
            ("extractor", &self.extractor),
            ("head_source", &self.head_source),
            ("head_target", &self.head_target),
        ];
        if let Some(shared) = &self.shared_output {
            out.push(("shared_output", shared));
        }
        out.push(("classifier", &self.classifier));
        out
    }

    fn head_forward(&self, d: Domain, feat: &[f64]) -> Result<(Vec<f64>, HeadCache)> {
        let (h, trunk) = self.head(d).forward(feat)?;
        match &self.shared_output {
            None => Ok((h, HeadCache { trunk, output: None })),
            Some(out) => {
                let (y, c) = out.forward(&h)?;
                Ok((y, HeadCache { trunk, output: Some(c) }))
            }
        }
    }

    fn head_backward(&mut self, d: Domain, cache: &HeadCache, d_out: &[f64]) -> Result<Vec<f64>> {
        let d_hidden = match (&mut self.shared_output, &cache.output) {
            (Some(out), Some(c)) => out.backward(c, d_out)?,
            (None, None) => d_out.to_vec(),
            _ => return Err(Error::dim("cache does not match the head layout")),
        };
        let trunk = match d {
            Domain::Source => &mut self.head_source,
            Domain::Target => &mut self.head_target,
        };
        trunk.backward(&cache.trunk, &d_hidden)
    }

    /// Features produced by the extractor.
    pub fn features(&self, embedding: &[f64]) -> Result<Vec<f64>> {
        self.extractor.predict(embedding)
    }

    pub fn forward(&self, embedding: &[f64]) -> Result<DARecOutputs> {
        self.forward_cached(embedding).map(|(o, _)| o)
    }

    pub(crate) fn forward_cached(&self, embedding: &[f64]) -> Result<(DARecOutputs, DARecCache)> {
        let (feat, extractor) = self.extractor.forward(embedding)?;
        let (y_source, head_source) = self.head_forward(Domain::Source, &feat)?;
        let (y_target, head_target) = self.head_forward(Domain::Target, &feat)?;
        // The reversal layer is the identity going forward.
        let (c, classifier) = self.classifier.forward(&feat)?;
        Ok((
            DARecOutputs {
                y_source,
                y_target,
                c_hat: c[0],
            },
            DARecCache {
                extractor,
                head_source,
                head_target,
                classifier,
            },
        ))
    }

    /// Accumulates the gradient of one sample's predictor and classifier
    /// terms (no regularizer) and returns their values.
    pub fn backward_sample(&mut self, s: &Sample, w: &LossWeights, path: ClassifierPath) -> Result<LossParts> {
        let (out, cache) = self.forward_cached(&s.embedding)?;
        let mut parts = LossParts::default();
        let mut d_feat = vec![0.0; self.extractor.out_dim()];

        for (domain, head_weight) in [(Domain::Source, 1.0), (Domain::Target, w.beta)] {
            let Some(truth) = s.truth(domain) else { continue };
            let y_hat = out.head(domain);
            check_len(truth, y_hat.len(), domain)?;
            parts.predictor += head_weight * crate::autorec::masked_sq_error(y_hat, truth);
            if head_weight == 0.0 {
                continue;
            }
            let d: Vec<f64> = crate::autorec::masked_sq_error_grad(y_hat, truth)
                .into_iter()
                .map(|g| head_weight * g)
                .collect();
            let c = match domain {
                Domain::Source => &cache.head_source,
                Domain::Target => &cache.head_target,
            };
            let g = self.head_backward(domain, c, &d)?;
            add_into(&mut d_feat, &g);
        }

        let c = s.domain.label();
        parts.classifier = w.mu * bce(out.c_hat, c);
        let weight = path.loss_weight();
        if weight != 0.0 {
            let d_c = weight * bce_grad(out.c_hat, c);
            let g = self.classifier.backward(&cache.classifier, &[d_c])?;
            let g = match path {
                ClassifierPath::Reversed { mu } => GradientReversal::new(mu).backward(&g),
                ClassifierPath::Joint { .. } => g,
            };
            add_into(&mut d_feat, &g);
        }

        self.extractor.backward(&cache.extractor, &d_feat)?;
        Ok(parts)
    }

    /// Objective over a batch with gradients: per-sample terms plus
    /// `reg_scale · ‖θ‖²`.
    pub fn backward_batch(
        &mut self,
        batch: &[&Sample],
        w: &LossWeights,
        path: ClassifierPath,
        reg_scale: f64,
    ) -> Result<LossParts> {
        let mut parts = LossParts::default();
        for s in batch {
            let p = self.backward_sample(s, w, path)?;
            parts.predictor += p.predictor;
            parts.classifier += p.classifier;
        }
        parts.regularizer = reg_scale * self.sum_sq();
        self.add_l2_grad(reg_scale);
        Ok(parts)
    }

    /// Prediction from the `domain` head, clipped to `scale`.
    pub fn predict(&self, embedding: &[f64], domain: Domain, scale: RatingScale) -> Result<Vec<f64>> {
        let feat = self.features(embedding)?;
        let (y, _) = self.head_forward(domain, &feat)?;
        Ok(y.into_iter().map(|r| scale.clip(r)).collect())
    }

    /// Writes `<dir>/model.ckpt` and a `<dir>/model.manifest` describing the
    /// sub-networks, variant, embedding size and loss weights.
    pub fn save(&self, dir: &Path, variant: Variant, weights: &LossWeights) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut tensors = Vec::new();
        for (name, net) in self.subnets() {
            tensors.extend(checkpoint::tensors_of(net, name));
        }
        checkpoint::save(&dir.join("model.ckpt"), &tensors)?;

        let mut m = String::new();
        let _ = writeln!(m, "format = DARECNN1");
        let _ = writeln!(m, "variant = {}", variant.tag());
        let _ = writeln!(m, "k = {}", self.extractor.in_dim());
        let _ = writeln!(m, "beta = {}", weights.beta);
        let _ = writeln!(m, "mu = {}", weights.mu);
        let _ = writeln!(m, "lambda = {}", weights.lambda);
        for (name, net) in self.subnets() {
            let dims: Vec<String> = net.dims().iter().map(ToString::to_string).collect();
            let acts: Vec<&str> = net.layers.iter().map(|l| l.activation.name()).collect();
            let _ = writeln!(m, "{name}.dims = {}", dims.join(","));
            let _ = writeln!(m, "{name}.activations = {}", acts.join(","));
        }
        std::fs::write(dir.join("model.manifest"), m)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<(Self, Variant, LossWeights)> {
        let text = std::fs::read_to_string(dir.join("model.manifest"))?;
        let kv: BTreeMap<&str, &str> = text
            .lines()
            .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim(), v.trim())))
            .collect();
        let get = |key: &str| {
            kv.get(key)
                .copied()
                .ok_or_else(|| Error::Checkpoint(format!("manifest lacks `{key}`")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Checkpoint(format!("manifest `{key}` is not a number")))
        };
        let variant = Variant::parse(get("variant")?).ok_or_else(|| Error::Checkpoint("unknown variant".into()))?;
        let weights = LossWeights {
            beta: num("beta")?,
            mu: num("mu")?,
            lambda: num("lambda")?,
        };
        let tensors = checkpoint::load(&dir.join("model.ckpt"))?;
        let mut nets = Vec::new();
        let mut names = vec!["extractor", "head_source", "head_target", "classifier"];
        if kv.contains_key("shared_output.dims") {
            names.push("shared_output");
        }
        for name in names {
            let dims: Vec<usize> = get(&format!("{name}.dims"))?
                .split(',')
                .map(|d| d.parse().map_err(|_| Error::Checkpoint(format!("bad dims for {name}"))))
                .collect::<Result<_>>()?;
            let acts: Vec<Activation> = get(&format!("{name}.activations"))?
                .split(',')
                .map(|a| Activation::parse(a).ok_or_else(|| Error::Checkpoint(format!("bad activation `{a}`"))))
                .collect::<Result<_>>()?;
            let mut net = Mlp::new(&dims, &acts, 0.0, &mut SeedStream::new(0).rng("unused"))?;
            checkpoint::restore_into(&mut net, name, &tensors)?;
            nets.push(net);
        }
        let shared = if nets.len() == 5 { nets.pop() } else { None };
        let mut it = nets.into_iter();
        let mut next = || it.next().expect("four sub-networks");
        let params = Self::from_parts(next(), next(), next(), next())?.with_shared_output(shared)?;
        Ok((params, variant, weights))
    }
}

impl DARecParams {
    /// Parameters split into (extractor and heads, classifier).
    pub fn params_mut_split(&mut self) -> (Vec<&mut ParamTensor>, Vec<&mut ParamTensor>) {
        let mut main = self.extractor.params_mut();
        main.extend(self.head_source.params_mut());
        main.extend(self.head_target.params_mut());
        if let Some(shared) = &mut self.shared_output {
            main.extend(shared.params_mut());
        }
        (main, self.classifier.params_mut())
    }
}

impl Parameterized for DARecParams {
    fn named_params(&self) -> Vec<(String, &ParamTensor)> {
        self.subnets()
            .into_iter()
            .flat_map(|(prefix, net)| {
                net.named_params()
                    .into_iter()
                    .map(move |(n, p)| (format!("{prefix}.{n}"), p))
            })
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out = self.extractor.params_mut();
        out.extend(self.head_source.params_mut());
        out.extend(self.head_target.params_mut());
        if let Some(shared) = &mut self.shared_output {
            out.extend(shared.params_mut());
        }
        out.extend(self.classifier.params_mut());
        out
    }
}

fn check_len(truth: &MaskedVector, len: usize, domain: Domain) -> Result<()> {
    if truth.len() != len {
        return Err(Error::dim(format!(
            "{} rating vector has length {}, head outputs {len}",
            domain.name(),
            truth.len()
        )));
    }
    Ok(())
}

fn add_into(acc: &mut [f64], g: &[f64]) {
    for (a, b) in acc.iter_mut().zip(g) {
        *a += b;
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `-[c ln ĉ + (1 - c) ln(1 - ĉ)]` with `ĉ` clamped away from 0 and 1.
pub fn bce(c_hat: f64, c: f64) -> f64 {
    let p = clamp_prob(c_hat);
    -(c * p.ln() + (1.0 - c) * (1.0 - p).ln())
}

/// `d bce / d ĉ`; zero where the clamp is active.
pub fn bce_grad(c_hat: f64, c: f64) -> f64 {
    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&c_hat) {
        return 0.0;
    }
    -c / c_hat + (1.0 - c) / (1.0 - c_hat)
}

/// Objective value for one sample: own-domain (and paired) reconstruction,
/// `μ · BCE` and `λ ‖θ‖²`.
pub fn darec_loss(p: &DARecParams, s: &Sample, w: &LossWeights) -> Result<LossParts> {
    let out = p.forward(&s.embedding)?;
    loss_from_outputs(&out, s, w, p.sum_sq())
}

pub fn loss_from_outputs(out: &DARecOutputs, s: &Sample, w: &LossWeights, param_sum_sq: f64) -> Result<LossParts> {
    let mut predictor = 0.0;
    for (domain, head_weight) in [(Domain::Source, 1.0), (Domain::Target, w.beta)] {
        if let Some(truth) = s.truth(domain) {
            check_len(truth, out.head(domain).len(), domain)?;
            predictor += head_weight * crate::autorec::masked_sq_error(out.head(domain), truth);
        }
    }
    Ok(LossParts {
        predictor,
        classifier: w.mu * bce(out.c_hat, s.domain.label()),
        regularizer: w.lambda * param_sum_sq,
    })
}

/// Fraction of samples with `round(ĉ) = c`, ties rounding down to source.
pub fn classifier_accuracy<'a>(p: &DARecParams, samples: impl IntoIterator<Item = &'a Sample>) -> Result<f64> {
    let mut n = 0usize;
    let mut hits = 0usize;
    for s in samples {
        let out = p.forward(&s.embedding)?;
        let predicted = if out.c_hat > 0.5 { 1.0 } else { 0.0 };
        if predicted == s.domain.label() {
            hits += 1;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::invalid("no samples to score"));
    }
    Ok(hits as f64 / n as f64)
}
