/// Gradient reversal: identity on the forward pass, `-μ ×` upstream gradient
/// on the backward pass. Has no parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientReversal {
    pub mu: f64,
}

impl GradientReversal {
    pub fn new(mu: f64) -> Self {
        Self { mu }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    pub fn backward(&self, upstream: &[f64]) -> Vec<f64> {
        let factor = -self.mu;
        upstream.iter().map(|g| factor * g).collect()
    }
}

/// Forward half of [`GradientReversal`].
pub fn grl(x: &[f64], mu: f64) -> Vec<f64> {
    GradientReversal::new(mu).forward(x)
}
