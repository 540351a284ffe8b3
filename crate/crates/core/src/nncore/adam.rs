use super::matrix::DenseMatrix;
use super::mlp::ParamTensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments for an ordered parameter list.
///
/// Moments are allocated lazily on the first step; afterwards the parameter
/// shapes must not change.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    m: Vec<DenseMatrix>,
    v: Vec<DenseMatrix>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn first_moments(&self) -> &[DenseMatrix] {
        &self.m
    }

    pub fn second_moments(&self) -> &[DenseMatrix] {
        &self.v
    }

    /// One bias-corrected Adam update. Gradients are left in place.
    pub fn step(&mut self, params: &mut [&mut ParamTensor]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params
                .iter()
                .map(|p| DenseMatrix::zeros(p.value.rows(), p.value.cols()))
                .collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(Error::dim(format!(
                "optimizer tracks {} tensors, got {}",
                self.m.len(),
                params.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            if p.shape() != self.m[i].shape() || p.grad.shape() != p.value.shape() {
                return Err(Error::dim(format!("tensor {i} changed shape under the optimizer")));
            }
        }

        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.t as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);

        for (i, p) in params.iter_mut().enumerate() {
            let ParamTensor { value, grad } = &mut **p;
            let m = self.m[i].as_mut_slice();
            let v = self.v[i].as_mut_slice();
            for (((w, &g), mi), vi) in value
                .as_mut_slice()
                .iter_mut()
                .zip(grad.as_slice())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = beta1 * *mi + (1.0 - beta1) * g;
                *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64, g: f64) -> ParamTensor {
        let mut p = ParamTensor::new(DenseMatrix::row_vector(vec![v]));
        p.grad = DenseMatrix::row_vector(vec![g]);
        p
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        // m̂ = g, v̂ = g², so Δ = -lr · g / (|g| + eps).
        let mut p = scalar(1.0, 0.1);
        let mut adam = AdamState::new(AdamConfig::default());
        adam.step(&mut [&mut p]).unwrap();
        let expected = -0.001 * 0.1 / (0.1 + 1e-8);
        assert!((p.value.get(0, 0) - 1.0 - expected).abs() < 1e-15);
        assert_eq!(adam.t, 1);
        assert_eq!(p.grad.get(0, 0), 0.1);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = scalar(0.37, 0.0);
        let mut adam = AdamState::new(AdamConfig::default());
        for _ in 0..10 {
            adam.step(&mut [&mut p]).unwrap();
        }
        assert_eq!(p.value.get(0, 0), 0.37);
    }

    #[test]
    fn equal_gradients_give_equal_deltas() {
        let mut a = scalar(0.0, 0.25);
        let mut b = scalar(5.0, 0.25);
        let mut adam = AdamState::new(AdamConfig::default());
        adam.step(&mut [&mut a, &mut b]).unwrap();
        let da = a.value.get(0, 0) - 0.0;
        let db = b.value.get(0, 0) - 5.0;
        assert!((da - db).abs() < 1e-15, "{da} vs {db}");
    }

    #[test]
    fn shape_change_is_rejected() {
        let mut a = scalar(0.0, 0.25);
        let mut adam = AdamState::new(AdamConfig::default());
        adam.step(&mut [&mut a]).unwrap();
        let mut b = ParamTensor::new(DenseMatrix::zeros(2, 2));
        assert!(adam.step(&mut [&mut b]).is_err());
        assert!(adam.step(&mut [&mut a, &mut b]).is_err());
        assert!(adam.second_moments().iter().all(|v| v.as_slice().iter().all(|x| *x >= 0.0)));
    }
}
