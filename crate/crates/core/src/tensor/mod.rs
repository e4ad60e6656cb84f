//! Dense linear algebra, activations, loss, reverse-mode differentiation and
//! the masked Adadelta optimiser. Everything is `f64`.

mod adadelta;
mod matrix;
pub mod ops;
mod tape;

pub use adadelta::{AdadeltaConfig, AdadeltaState};
pub use matrix::{concat, Matrix};
pub use ops::{bce_grad, bce_loss, relu, sigmoid, Activation};
pub use tape::{Gradients, Tape, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TensorError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{0}: empty operand")]
    Empty(&'static str),
}
