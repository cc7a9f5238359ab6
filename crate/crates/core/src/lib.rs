//! Sparse adversarial inputs for feed-forward ReLU networks.
//!
//! The pipeline works in two stages. First it searches for a small change to
//! the weights of the *first* edge layer that flips the network's behaviour
//! on a concrete input (`patch::find_first_layer_mod`): the change is found
//! by repeatedly patching an edge layer in the middle of the current network,
//! simulating the patched network, and restating the goal as a constraint on
//! an earlier layer. Second, it translates the first-layer weight patch into
//! an input perturbation by constrained linear optimisation
//! (`patch::translate_patch`): the perturbed input reproduces the hidden values the
//! patched weights would have produced, so the original network misbehaves on
//! it.
//!
//! All numeric work is generic over [`scalar::Scalar`], with two shipped
//! instantiations: exact arbitrary-precision rationals ([`scalar::Rational`])
//! and `f64`. The LP/MILP solver under [`lp`] is a self-contained
//! bounded-variable simplex with Bland's rule plus branch-and-bound, built
//! for determinism and exactness rather than industrial scale; the patch
//! engine only talks to it through the [`lp::LpBackend`] trait so a different
//! solver can be plugged in.

pub mod error;
pub mod format;
pub mod lp;
pub mod marking;
pub mod metrics;
pub mod network;
pub mod patch;
pub mod property;
pub mod scalar;
pub mod testgen;

pub use error::{Error, Result};
pub use network::{Activation, Layer, LayerTrace, Mat, Network, Patch};
pub use scalar::{Rational, Scalar};
