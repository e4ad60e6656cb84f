//! Neuroevolution of topologies compiled to layered, masked dense tensors.
//!
//! A [`genome::Genome`] is analysed by [`graphplan`] into a layer plan,
//! compiled by [`compiler`] into per-layer weight/mask matrices and trained
//! by gradient descent in [`train`]. [`naive`] evaluates the same genome node
//! by node and serves as the reference. [`evolution`] runs the outer loop and
//! [`bench`] holds the measurement helpers.

pub mod bench;
pub mod compiler;
pub mod data;
pub mod evolution;
pub mod genome;
pub mod graphplan;
pub mod naive;
pub mod tensor;
pub mod train;
