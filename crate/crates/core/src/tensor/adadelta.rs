use serde::{Deserialize, Serialize};

use super::TensorError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdadeltaConfig {
    pub rho: f64,
    pub eps: f64,
}

impl Default for AdadeltaConfig {
    fn default() -> Self {
        Self { rho: 0.9, eps: 1e-6 }
    }
}

/// Running averages for one flat parameter buffer.
#[derive(Clone, Debug)]
pub struct AdadeltaState {
    cfg: AdadeltaConfig,
    sq_grad: Vec<f64>,
    sq_delta: Vec<f64>,
}

impl AdadeltaState {
    pub fn new(len: usize, cfg: AdadeltaConfig) -> Self {
        Self {
            cfg,
            sq_grad: vec![0.0; len],
            sq_delta: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.sq_grad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sq_grad.is_empty()
    }

    pub fn accumulators(&self) -> (&[f64], &[f64]) {
        (&self.sq_grad, &self.sq_delta)
    }

    /// One update. When `mask` is given, every position whose mask entry is
    /// zero is set to exactly `0.0` after the update.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], mask: Option<&[f64]>) -> Result<(), TensorError> {
        let n = self.sq_grad.len();
        if params.len() != n || grads.len() != n || mask.is_some_and(|m| m.len() != n) {
            return Err(TensorError::DimensionMismatch {
                op: "adadelta_step",
                left: (params.len(), 1),
                right: (grads.len(), 1),
            });
        }
        let AdadeltaConfig { rho, eps } = self.cfg;
        for i in 0..n {
            let g = grads[i];
            let eg = rho * self.sq_grad[i] + (1.0 - rho) * g * g;
            let delta = -((self.sq_delta[i] + eps).sqrt() / (eg + eps).sqrt()) * g;
            self.sq_grad[i] = eg;
            self.sq_delta[i] = rho * self.sq_delta[i] + (1.0 - rho) * delta * delta;
            params[i] += delta;
        }
        if let Some(mask) = mask {
            for (p, &m) in params.iter_mut().zip(mask) {
                if m == 0.0 {
                    *p = 0.0;
                }
            }
        }
        Ok(())
    }
}
