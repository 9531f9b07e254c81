use std::f64::consts::TAU;

use gbpinn_core::autodiff::{Jet2, Tape, Var};
use gbpinn_core::network::{embed, forward, fourier_encode, xavier_init, Embedding, NetworkSpec, ParameterStore};
use gbpinn_core::problems::{make_problem, sample_boundary, sample_initial, sample_interior, ProblemKind};
use proptest::prelude::*;

fn central<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = 1e-6 * x.abs().max(1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Applies unary op `k` to a tape variable and to a plain float.
fn second<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = 1e-4;
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

fn unary<'t>(k: usize, v: Var<'t, f64>) -> Var<'t, f64> {
    match k {
        0 => v.exp(),
        1 => v.sin(),
        2 => v.cos(),
        3 => v.tanh(),
        4 => v.atan(),
        5 => v.erf(),
        6 => v.square(),
        7 => v.powi(3),
        8 => (v.square() + 1.0).sqrt(),
        9 => (v.square() + 1.0).ln(),
        _ => (v.square() + 2.0).recip(),
    }
}

fn unary_f(k: usize, x: f64) -> f64 {
    match k {
        0 => x.exp(),
        1 => x.sin(),
        2 => x.cos(),
        3 => x.tanh(),
        4 => x.atan(),
        5 => libm::erf(x),
        6 => x * x,
        7 => x.powi(3),
        8 => (x * x + 1.0).sqrt(),
        9 => (x * x + 1.0).ln(),
        _ => 1.0 / (x * x + 2.0),
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn elementary_adjoints_match_differences(k in 0usize..11, x in -2.0f64..2.0) {
        let tape = Tape::new();
        let p = tape.parameter(0, x);
        let y = unary(k, p);
        let adj = tape.adjoints(&y).unwrap();
        prop_assert!(close(adj.of(&p), central(|t| unary_f(k, t), x), 1e-7));
    }

    #[test]
    fn binary_adjoints_match_differences(a in -2.0f64..2.0, b in 0.5f64..3.0) {
        let tape = Tape::new();
        let pa = tape.parameter(0, a);
        let pb = tape.parameter(1, b);
        let y = (pa * pb - pa / pb) + (pa - pb) * pa;
        let adj = tape.adjoints(&y).unwrap();
        let f = |a: f64, b: f64| (a * b - a / b) + (a - b) * a;
        prop_assert!(close(adj.of(&pa), central(|t| f(t, b), a), 1e-7));
        prop_assert!(close(adj.of(&pb), central(|t| f(a, t), b), 1e-7));
    }

    #[test]
    fn jet_chain_rule_matches_differences(k in 0usize..11, x in -1.5f64..1.5) {
        let tape = Tape::new();
        let input = Jet2::inputs(&tape, &[x]).remove(0);
        let jet = match k {
            0 => input.exp(),
            1 => input.sin(),
            2 => input.cos(),
            3 => input.tanh(),
            4 => input.atan(),
            5 => input.erf(),
            6 => input.square(),
            7 => input.powi(3),
            8 => (input.square() + 1.0).sqrt(),
            9 => (input.square() + 1.0).ln(),
            _ => {
                let d = input.square() + 2.0;
                Jet2::constant(&tape, 1.0, 1).div_jet(&d)
            }
        };
        let (v, d1, d2) = jet.values();
        prop_assert!(close(v, unary_f(k, x), 1e-14));
        prop_assert!(close(d1[0], central(|t| unary_f(k, t), x), 1e-7));
        prop_assert!(close(d2[0], second(|t| unary_f(k, t), x), 1e-5));
    }

    #[test]
    fn xavier_respects_bounds(
        dim in 1usize..3,
        hidden in prop::collection::vec(1usize..40, 1..4),
        seed in any::<u64>(),
    ) {
        let spec = NetworkSpec::mlp(dim, hidden);
        let store: ParameterStore<f64> = xavier_init(&spec, seed).unwrap();
        prop_assert_eq!(store.len(), spec.parameter_count());
        for l in store.layers() {
            let bound = (6.0 / (l.fan_in + l.fan_out) as f64).sqrt();
            prop_assert!(store.as_slice()[l.weights()].iter().all(|w| w.abs() <= bound));
            prop_assert!(store.as_slice()[l.bias()].iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn periodic_embedding_is_periodic_in_space(x in 0.0f64..TAU, t in 0.0f64..1.0, seed in 0u64..1000) {
        let spec = NetworkSpec::mlp(2, vec![12, 12]).with_embedding(Embedding::Periodic);
        let store: ParameterStore<f64> = xavier_init(&spec, seed).unwrap();
        let a = forward(&spec, &store, &[x, t]).unwrap();
        let b = forward(&spec, &store, &[x + TAU, t]).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        let f0 = embed(&Embedding::Periodic, &[x, t]);
        let f1 = embed(&Embedding::Periodic, &[x + TAU, t]);
        prop_assert_eq!(f0.len(), 3);
        prop_assert_eq!(f0[2].to_bits(), f1[2].to_bits());
        prop_assert!(f0.iter().zip(&f1).all(|(a, b)| (a - b).abs() <= 1e-14));
    }

    #[test]
    fn fourier_dimension_and_bounds(
        x in prop::collection::vec(-1.0f64..1.0, 1..3),
        freqs in prop::collection::vec(1u32..20, 1..8),
    ) {
        let out = fourier_encode(&x, &freqs).unwrap();
        let e = Embedding::Fourier { frequencies: freqs.clone() };
        prop_assert_eq!(out.len(), 2 * x.len() * freqs.len());
        prop_assert_eq!(out.len(), e.output_dim(x.len()));
        prop_assert!(out.iter().all(|v| v.abs() <= 1.0));
        // cos² + sin² = 1 for every (frequency, axis) pair
        let half = out.len() / 2;
        for i in 0..half {
            prop_assert!((out[i] * out[i] + out[half + i] * out[half + i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn architecture_notation_round_trips(
        layers in prop::collection::vec(1usize..300, 1..5),
        k in 0u32..12,
    ) {
        let mut spec = NetworkSpec::mlp(1, layers);
        if k > 0 {
            spec = spec.with_embedding(Embedding::fourier_range(k));
        }
        let text = spec.to_string();
        prop_assert_eq!(NetworkSpec::parse(&text, 1).unwrap(), spec);
    }

    #[test]
    fn samplers_stay_in_their_sets(kind_ix in 0usize..4, n in 1usize..300, seed in any::<u64>()) {
        let kind = ProblemKind::ALL[kind_ix];
        let problem = make_problem::<f64>(kind, None).unwrap();
        let d = problem.domain().clone();
        let interior = sample_interior(problem.as_ref(), n, seed);
        prop_assert_eq!(interior.len(), n);
        for p in interior.iter() {
            prop_assert!(d.contains_open(p));
            prop_assert!(problem.admissible(p));
        }
        let boundary = sample_boundary(problem.as_ref(), n, seed);
        if problem.has_boundary() {
            prop_assert_eq!(boundary.len(), n);
            for p in boundary.iter() {
                let on_face = p.iter().enumerate().any(|(a, &v)| v == d.lower[a] || v == d.upper[a]);
                let inside = p.iter().enumerate().all(|(a, &v)| v >= d.lower[a] && v <= d.upper[a]);
                prop_assert!(on_face && inside);
            }
        } else {
            prop_assert!(boundary.is_empty());
        }
        if let Some(axis) = d.time_axis {
            let initial = sample_initial(problem.as_ref(), n, seed);
            prop_assert_eq!(initial.len(), n);
            prop_assert!(initial.iter().all(|p| p[axis] == d.lower[axis]));
        }
    }
}

#[test]
fn samplers_are_seed_deterministic() {
    let problem = make_problem::<f64>(ProblemKind::Ej2d, None).unwrap();
    let a = sample_interior(problem.as_ref(), 64, 9);
    let b = sample_interior(problem.as_ref(), 64, 9);
    let c = sample_interior(problem.as_ref(), 64, 10);
    assert_eq!(a.coords(), b.coords());
    assert_ne!(a.coords(), c.coords());
}

#[test]
fn two_dim_boundary_covers_all_edges() {
    let problem = make_problem::<f64>(ProblemKind::Interior2d, None).unwrap();
    let pts = sample_boundary(problem.as_ref(), 400, 1);
    let count = |f: &dyn Fn(&[f64]) -> bool| pts.iter().filter(|p| f(p)).count();
    assert_eq!(count(&|p| p[1] == 0.0), 100);
    assert_eq!(count(&|p| p[0] == 1.0), 100);
    assert_eq!(count(&|p| p[1] == 1.0), 100);
    assert_eq!(count(&|p| p[0] == 0.0), 100);
}
