//! Photon-number transition probabilities of single-mode phase-covariant
//! Gaussian channels, the column-stochastic ladder matrix that links
//! consecutive Fock outputs, and numerical checks built on top of it.
//!
//! Independent work items (channels, rows, patterns) run through
//! [`par::Exec`]; the `parallel` feature (on by default) spreads them over
//! rayon, and results never depend on the thread count.

// `!(x >= 0.0)` rejects NaN along with negative values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod numeric;
pub mod par;
pub mod state;

pub mod entropy;
pub mod majorization;
pub mod transition;

pub mod experiments;
pub mod suite;

pub mod cli;
pub mod io;

pub use channel::{ChannelParams, ChannelSpec, Family};
pub use error::{Error, Result};
pub use state::FockDiagonalState;
pub use transition::TransitionGrid;
