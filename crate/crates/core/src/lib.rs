//! Gradient-boosted physics-informed neural networks.
//!
//! The PDE solution is represented by a frozen additive ensemble
//! `f_m = f_{m-1} + ρ_m·h_m` of small networks trained one stage at a time
//! against a collocation residual loss.
//!
//! * [`autodiff`]: scalar tape and second-order input jets.
//! * [`network`]: stage architectures and the batched jet kernel.
//! * [`training`]: Adam, the composite loss and the boosting loop.
//! * [`problems`]: the benchmark PDEs and the reaction–diffusion reference solver.
//! * [`harness`]: run configs, presets, metrics, ablations and report files.

pub mod autodiff;
pub mod error;
pub mod harness;
pub mod network;
pub mod points;
pub mod problems;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use points::PointSet;
pub use scalar::Scalar;

pub type Tape64 = autodiff::Tape<f64>;
pub type ParameterStore64 = network::ParameterStore<f64>;
pub type Ensemble64 = training::Ensemble<f64>;
pub type PointSet64 = PointSet<f64>;
pub type Ensemble32 = training::Ensemble<f32>;
