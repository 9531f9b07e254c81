//! Scalar reverse-mode tape and second-order input jets on top of it.

mod jet;
mod tape;

pub use jet::{Elementary, Jet2};
pub use tape::{sum, Adjoints, NodeId, NodeKind, Tape, Var};
