use serde::{Deserialize, Serialize};

use super::TensorError;

/// Probabilities are clamped to `[BCE_EPS, 1 - BCE_EPS]` inside the loss.
pub const BCE_EPS: f64 = 1e-7;

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => relu(x),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    /// ReLU has derivative 0 at the kink.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(BCE_EPS, 1.0 - BCE_EPS)
}

/// Mean binary cross-entropy.
pub fn bce_loss(pred: &[f64], targets: &[f64]) -> Result<f64, TensorError> {
    if pred.len() != targets.len() {
        return Err(TensorError::DimensionMismatch {
            op: "bce_loss",
            left: (pred.len(), 1),
            right: (targets.len(), 1),
        });
    }
    if pred.is_empty() {
        return Err(TensorError::Empty("bce_loss"));
    }
    let total: f64 = pred
        .iter()
        .zip(targets)
        .map(|(&p, &y)| {
            let p = clamp_prob(p);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / pred.len() as f64)
}

/// Per-sample `d loss / d p` (before dividing by the batch size).
///
/// The clamp is treated as identity for differentiation so that a
/// saturated prediction still receives a corrective signal through the
/// sigmoid.
#[inline]
pub fn bce_grad(p: f64, y: f64) -> f64 {
    let pc = clamp_prob(p);
    (pc - y) / (pc * (1.0 - pc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activations() {
        assert_eq!(relu(-1.0), 0.0);
        assert_eq!(relu(2.0), 2.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(Activation::Relu.derivative_from_output(0.0), 0.0);
    }

    #[test]
    fn bce_values() {
        assert!((bce_loss(&[0.5], &[1.0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(bce_loss(&[1.0, 0.0], &[1.0, 0.0]).unwrap() < 1e-6);
        // (-ln 0.9 - ln 0.9) / 2
        let expected = -(0.9f64.ln());
        assert!((bce_loss(&[0.9, 0.1], &[1.0, 0.0]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.1054).abs() < 1e-4);
    }

    #[test]
    fn bce_dimension_mismatch() {
        assert!(matches!(
            bce_loss(&[0.5, 0.5], &[1.0]),
            Err(TensorError::DimensionMismatch { .. })
        ));
    }
}
