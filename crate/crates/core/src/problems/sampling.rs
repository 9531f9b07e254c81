use rand::distributions::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::PdeProblem;
use crate::points::PointSet;
use crate::scalar::Scalar;

fn uniform_open<S: Scalar>(rng: &mut ChaCha8Rng, lo: S, hi: S) -> S {
    loop {
        let u: f64 = Open01.sample(rng);
        let v = lo + (hi - lo) * S::lit(u);
        // rounding can land on an end point in f32
        if v > lo && v < hi {
            return v;
        }
    }
}

/// `count` i.i.d. uniform points in the open domain, skipping inadmissible ones.
pub fn sample_interior<S: Scalar>(problem: &dyn PdeProblem<S>, count: usize, seed: u64) -> PointSet<S> {
    let domain = problem.domain();
    let dim = domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = PointSet::empty(dim);
    let mut x = vec![S::zero(); dim];
    while out.len() < count {
        for (a, v) in x.iter_mut().enumerate() {
            *v = uniform_open(&mut rng, domain.lower[a], domain.upper[a]);
        }
        if problem.admissible(&x) {
            out.push(&x);
        }
    }
    out
}

/// Boundary points. In 1D the two end points alternate; in 2D the count is
/// split as evenly as possible over the four edges (bottom, right, top,
/// left) with uniform positions along each edge. Problems without a
/// boundary term get an empty set.
pub fn sample_boundary<S: Scalar>(problem: &dyn PdeProblem<S>, count: usize, seed: u64) -> PointSet<S> {
    let domain = problem.domain();
    let dim = domain.dim();
    let mut out = PointSet::empty(dim);
    if !problem.has_boundary() {
        return out;
    }
    let (lo, hi) = (&domain.lower, &domain.upper);
    match dim {
        1 => {
            for i in 0..count {
                out.push(&[if i % 2 == 0 { lo[0] } else { hi[0] }]);
            }
        }
        2 => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for edge in 0..4 {
                let n = count / 4 + usize::from(edge < count % 4);
                for _ in 0..n {
                    let p = match edge {
                        0 => [uniform_open(&mut rng, lo[0], hi[0]), lo[1]],
                        1 => [hi[0], uniform_open(&mut rng, lo[1], hi[1])],
                        2 => [uniform_open(&mut rng, lo[0], hi[0]), hi[1]],
                        _ => [lo[0], uniform_open(&mut rng, lo[1], hi[1])],
                    };
                    out.push(&p);
                }
            }
        }
        _ => unimplemented!("boundary sampling is defined for 1D and 2D boxes"),
    }
    out
}

/// Points on the initial slice `t = t₀`, uniform in the open spatial domain.
pub fn sample_initial<S: Scalar>(problem: &dyn PdeProblem<S>, count: usize, seed: u64) -> PointSet<S> {
    let domain = problem.domain();
    let dim = domain.dim();
    let mut out = PointSet::empty(dim);
    let Some(t_axis) = domain.time_axis else {
        return out;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![S::zero(); dim];
    for _ in 0..count {
        for (a, v) in x.iter_mut().enumerate() {
            *v = if a == t_axis {
                domain.lower[a]
            } else {
                uniform_open(&mut rng, domain.lower[a], domain.upper[a])
            };
        }
        out.push(&x);
    }
    out
}
