//! Reverse-mode differentiation over dense matrix operations.
//!
//! A [`Tape`] records each operation as it is evaluated. Operands always
//! precede their results, so [`Tape::backward`] is a single reverse sweep.

use super::ops::{bce_grad, bce_loss, relu, sigmoid};
use super::{Matrix, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// Adds a `rows × 1` column to every column of the operand.
    AddBias(Var, Var),
    Concat(Vec<Var>),
    Relu(Var),
    Sigmoid(Var),
    BceLoss {
        pred: Var,
        targets: Vec<f64>,
    },
}

#[derive(Debug, Default)]
pub struct Tape {
    values: Vec<Matrix>,
    ops: Vec<Op>,
}

/// Gradients of a scalar with respect to every value on the tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// `None` when the value does not influence the loss.
    pub fn get(&self, var: Var) -> Option<&Matrix> {
        self.grads[var.0].as_ref()
    }

    pub fn take(&mut self, var: Var) -> Option<Matrix> {
        self.grads[var.0].take()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.values.push(value);
        self.ops.push(op);
        Var(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, var: Var) -> &Matrix {
        &self.values[var.0]
    }

    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var, TensorError> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if bv.cols() != 1 || bv.rows() != xv.rows() {
            return Err(TensorError::DimensionMismatch {
                op: "add_bias",
                left: xv.shape(),
                right: bv.shape(),
            });
        }
        let mut value = xv.clone();
        for r in 0..value.rows() {
            let b = bv.get(r, 0);
            for v in value.row_mut(r) {
                *v += b;
            }
        }
        Ok(self.push(value, Op::AddBias(x, bias)))
    }

    /// Row-stacks the operands (feature concatenation for column batches).
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        if parts.len() == 1 {
            return Ok(parts[0]);
        }
        let mats: Vec<&Matrix> = parts.iter().map(|&p| self.value(p)).collect();
        let value = Matrix::concat_rows(&mats)?;
        Ok(self.push(value, Op::Concat(parts.to_vec())))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(relu);
        self.push(value, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let value = self.value(x).map(sigmoid);
        self.push(value, Op::Sigmoid(x))
    }

    /// Mean binary cross-entropy of `pred` against `targets` (row-major
    /// element order). Produces a `1 × 1` value.
    pub fn bce_loss(&mut self, pred: Var, targets: &[f64]) -> Result<Var, TensorError> {
        let p = self.value(pred);
        if p.len() != targets.len() {
            return Err(TensorError::DimensionMismatch {
                op: "bce_loss",
                left: p.shape(),
                right: (targets.len(), 1),
            });
        }
        let loss = bce_loss(p.as_slice(), targets)?;
        Ok(self.push(
            Matrix::filled(1, 1, loss),
            Op::BceLoss {
                pred,
                targets: targets.to_vec(),
            },
        ))
    }

    /// Propagates `d output / d value` for every value recorded before
    /// `output`. `output` must be a `1 × 1` scalar.
    pub fn backward(&self, output: Var) -> Result<Gradients, TensorError> {
        let out = self.value(output);
        if out.shape() != (1, 1) {
            return Err(TensorError::DimensionMismatch {
                op: "backward",
                left: out.shape(),
                right: (1, 1),
            });
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; self.values.len()];
        grads[output.0] = Some(Matrix::filled(1, 1, 1.0));

        for idx in (0..=output.0).rev() {
            let Some(upstream) = grads[idx].take() else {
                continue;
            };
            match &self.ops[idx] {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let da = upstream.matmul_nt(self.value(*b))?;
                    let db = self.value(*a).matmul_tn(&upstream)?;
                    accumulate(&mut grads, *a, da)?;
                    accumulate(&mut grads, *b, db)?;
                }
                Op::AddBias(x, bias) => {
                    let mut db = Matrix::zeros(upstream.rows(), 1);
                    for r in 0..upstream.rows() {
                        db.set(r, 0, upstream.row(r).iter().sum());
                    }
                    accumulate(&mut grads, *bias, db)?;
                    accumulate(&mut grads, *x, upstream.clone())?;
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let rows = self.value(*p).rows();
                        accumulate(&mut grads, *p, upstream.row_block(offset, rows))?;
                        offset += rows;
                    }
                }
                Op::Relu(x) => {
                    let y = &self.values[idx];
                    let mut dx = upstream.clone();
                    for (d, &v) in dx.as_mut_slice().iter_mut().zip(y.as_slice()) {
                        if v <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::Sigmoid(x) => {
                    let y = &self.values[idx];
                    let mut dx = upstream.clone();
                    for (d, &v) in dx.as_mut_slice().iter_mut().zip(y.as_slice()) {
                        *d *= v * (1.0 - v);
                    }
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::BceLoss { pred, targets } => {
                    let scale = upstream.get(0, 0);
                    let p = self.value(*pred);
                    let n = targets.len() as f64;
                    let mut dp = Matrix::zeros(p.rows(), p.cols());
                    for ((d, &pv), &y) in dp.as_mut_slice().iter_mut().zip(p.as_slice()).zip(targets) {
                        *d = scale * bce_grad(pv, y) / n;
                    }
                    accumulate(&mut grads, *pred, dp)?;
                }
            }
            grads[idx] = Some(upstream);
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Matrix>], var: Var, g: Matrix) -> Result<(), TensorError> {
    match &mut grads[var.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}
