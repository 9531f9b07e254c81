//! Stage architectures: plain GeLU MLPs, axis Fourier-feature MLPs and the
//! periodic `(sin x, cos x, t)` embedding, with Xavier initialization.

mod batch;
mod embed;
mod mlp;
mod params;
mod spec;

pub use batch::{evaluate_values, feature_jets, BatchNet, JetOrder};
pub use embed::{embed, fourier_encode, periodic_embed};
pub use mlp::{forward, mlp_forward, network_jet_eval, NetworkOnTape};
pub use params::{layout, xavier_init, LayerLayout, ParameterStore};
pub use spec::{Activation, Embedding, NetworkSpec};
