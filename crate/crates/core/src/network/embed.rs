use super::spec::Embedding;
use crate::autodiff::Elementary;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Applies `embedding` to an input point. Works for plain scalars and for
/// jets, so the tape route differentiates through the same map.
pub fn embed<S: Scalar, T: Elementary<S>>(embedding: &Embedding, x: &[T]) -> Vec<T> {
    match embedding {
        Embedding::None => x.to_vec(),
        Embedding::Fourier { frequencies } => {
            let two_pi = S::TAU();
            let phases: Vec<T> = frequencies
                .iter()
                .flat_map(|&f| {
                    let w = two_pi * S::lit(f as f64);
                    x.iter().map(move |xa| xa.clone() * w)
                })
                .collect();
            let mut out: Vec<T> = phases.iter().map(Elementary::cos).collect();
            out.extend(phases.iter().map(Elementary::sin));
            out
        }
        Embedding::Periodic => {
            let mut out = Vec::with_capacity(x.len() + 1);
            out.push(x[0].sin());
            out.push(x[0].cos());
            out.extend_from_slice(&x[1..]);
            out
        }
    }
}

/// Axis Fourier features `[cos(2πxB), sin(2πxB)]`, cos block first, each
/// block ordered frequency-major, axis-minor.
pub fn fourier_encode<S: Scalar>(x: &[S], frequencies: &[u32]) -> Result<Vec<S>> {
    if frequencies.is_empty() {
        return Err(Error::usage("fourier encoding needs at least one frequency"));
    }
    Ok(embed(
        &Embedding::Fourier {
            frequencies: frequencies.to_vec(),
        },
        x,
    ))
}

/// `(sin x, cos x, t)`.
pub fn periodic_embed<S: Scalar>(x: S, t: S) -> [S; 3] {
    let (s, c) = num_traits::Float::sin_cos(x);
    [s, c, t]
}
