use super::mlp::Parameterized;
use crate::error::{Error, Result};

/// Outcome of comparing analytic gradients against central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Name of the tensor and flat coordinate holding the worst mismatch.
    pub worst: Option<(String, usize)>,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Checks the gradients already accumulated in `model` against
/// `(f(θ+h) - f(θ-h)) / 2h` for every coordinate of every tensor.
///
/// `loss` must be a pure function of the parameter values. Values are
/// restored bitwise after each probe; gradients are not touched.
pub fn grad_check<M, F>(model: &mut M, h: f64, mut loss: F) -> Result<GradCheckReport>
where
    M: Parameterized,
    F: FnMut(&M) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::invalid(format!("step {h} must be positive")));
    }
    let names: Vec<String> = model.named_params().into_iter().map(|(n, _)| n).collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
        checked: 0,
    };
    if !loss(model).is_finite() {
        return Err(Error::NonFiniteLoss);
    }

    for (t, name) in names.iter().enumerate() {
        let len = model.params()[t].value.len();
        for c in 0..len {
            let (orig, analytic) = {
                let p = model.params()[t];
                (p.value.as_slice()[c], p.grad.as_slice()[c])
            };
            model.params_mut()[t].value.as_mut_slice()[c] = orig + h;
            let plus = loss(model);
            model.params_mut()[t].value.as_mut_slice()[c] = orig - h;
            let minus = loss(model);
            model.params_mut()[t].value.as_mut_slice()[c] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFiniteLoss);
            }
            let numeric = (plus - minus) / (2.0 * h);
            let err = relative_error(analytic, numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((name.clone(), c));
                report.analytic_at_worst = analytic;
                report.numeric_at_worst = numeric;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{DenseMatrix, ParamTensor};

    struct Scalar(ParamTensor);

    impl Parameterized for Scalar {
        fn named_params(&self) -> Vec<(String, &ParamTensor)> {
            vec![("theta".into(), &self.0)]
        }
        fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
            vec![&mut self.0]
        }
    }

    fn scalar(v: f64, g: f64) -> Scalar {
        let mut p = ParamTensor::new(DenseMatrix::row_vector(vec![v]));
        p.grad = DenseMatrix::row_vector(vec![g]);
        Scalar(p)
    }

    #[test]
    fn quadratic_matches_closed_form() {
        let mut s = scalar(3.0, 3.0);
        let r = grad_check(&mut s, 1e-5, |m| 0.5 * m.0.value.get(0, 0).powi(2)).unwrap();
        assert!(r.max_rel_error < 1e-9, "{r:?}");
        assert!((r.numeric_at_worst - 3.0).abs() < 1e-8);
    }

    #[test]
    fn constant_loss_has_zero_error() {
        let mut s = scalar(3.0, 0.0);
        let r = grad_check(&mut s, 1e-5, |_| 4.2).unwrap();
        assert_eq!(r.max_rel_error, 0.0);
        assert_eq!(r.numeric_at_worst, 0.0);
    }

    #[test]
    fn wrong_gradient_is_detected() {
        let mut s = scalar(3.0, 2.0);
        let r = grad_check(&mut s, 1e-5, |m| 0.5 * m.0.value.get(0, 0).powi(2)).unwrap();
        assert!(r.max_rel_error > 0.3);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let mut s = scalar(3.0, 0.0);
        assert!(matches!(
            grad_check(&mut s, 1e-5, |_| f64::NAN),
            Err(Error::NonFiniteLoss)
        ));
        assert!(grad_check(&mut s, 0.0, |_| 1.0).is_err());
    }

    #[test]
    fn values_are_restored() {
        let mut s = scalar(0.1, 0.2);
        grad_check(&mut s, 1e-5, |m| m.0.value.get(0, 0)).unwrap();
        assert_eq!(s.0.value.get(0, 0).to_bits(), 0.1f64.to_bits());
    }
}
