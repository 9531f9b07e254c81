use gbpinn_core::autodiff::Tape;
use gbpinn_core::network::{xavier_init, NetworkSpec};
use gbpinn_core::problems::{make_problem, ProblemKind};
use gbpinn_core::training::{
    pinn_loss, pinn_loss_and_grad, run_boosting, train_stage, BatchSizes, CollocationData, Ensemble, LossWeights,
    StageObjective, StagePlan,
};

fn plan(archs: &[&str], steps: usize, seed: u64) -> StagePlan {
    StagePlan::halving(
        archs,
        steps,
        LossWeights {
            interior: 1.0,
            boundary: 10.0,
            initial: 0.0,
        },
        BatchSizes {
            interior: 128,
            boundary: 2,
            initial: 0,
        },
        seed,
    )
}

#[test]
fn new_stage_with_tiny_weight_continues_previous_loss() {
    let problem = make_problem::<f64>(ProblemKind::Sp1d, Some(0.05)).unwrap();
    let p = plan(&["[16]", "[16]"], 300, 3);
    let mut e = Ensemble::new();
    let spec = NetworkSpec::parse("[16]", 1).unwrap();
    e.push(spec.clone(), xavier_init(&spec, 1).unwrap(), 1.0).unwrap();
    let d0 = CollocationData::sample(problem.as_ref(), &p.batches, &p.weights, p.seed, 0);
    train_stage(&mut e, problem.as_ref(), &p, 0, &d0, &mut ()).unwrap();
    e.freeze_all();

    let d1 = CollocationData::sample(problem.as_ref(), &p.batches, &p.weights, p.seed, 1);
    let tape = Tape::new();
    let before = pinn_loss(&tape, &e, problem.as_ref(), &d1, &p.weights).unwrap().value();

    e.push(spec.clone(), xavier_init(&spec, 2).unwrap(), 1e-6).unwrap();
    let mut obj = StageObjective::new(&e, problem.as_ref(), &d1, &p.weights).unwrap();
    let after = obj.loss(&e.stages()[1].params).unwrap();
    let rel = (after - before).abs() / before;
    assert!(rel < 1e-3, "stage-start loss {after} vs previous {before}");
}

#[test]
fn batched_objective_agrees_with_tape_on_a_three_stage_ensemble() {
    for kind in [ProblemKind::Ej2d, ProblemKind::Reaction] {
        let problem = make_problem::<f64>(kind, None).unwrap();
        let dim = problem.input_dim();
        let archs: &[&str] = if kind == ProblemKind::Reaction {
            &["P[6]", "P[5]*2", "P[4]"]
        } else {
            &["[6]", "F2[5]", "[4]*2"]
        };
        let mut p = plan(archs, 1, 4);
        p.weights = LossWeights {
            interior: 1.0,
            boundary: if problem.has_boundary() { 100.0 } else { 0.0 },
            initial: if problem.has_initial() { 50.0 } else { 0.0 },
        };
        p.batches = BatchSizes {
            interior: 40,
            boundary: 12,
            initial: 9,
        };
        let mut e = Ensemble::new();
        for (i, spec) in p.networks(dim).unwrap().into_iter().enumerate() {
            let store = xavier_init(&spec, 10 + i as u64).unwrap();
            e.push(spec, store, p.stages[i].rho).unwrap();
        }
        let data = CollocationData::sample(problem.as_ref(), &p.batches, &p.weights, p.seed, 2);
        let (tape_loss, tape_grad) = pinn_loss_and_grad(&e, problem.as_ref(), &data, &p.weights).unwrap();
        let mut obj = StageObjective::with_chunk(&e, problem.as_ref(), &data, &p.weights, 7).unwrap();
        let active = &e.stages()[2].params;
        let mut grad = vec![0.0; active.len()];
        let loss = obj.loss_and_grad(active, &mut grad).unwrap();
        assert!(
            (loss - tape_loss).abs() <= 1e-12 * tape_loss.abs(),
            "{kind:?}: {loss} vs {tape_loss}"
        );
        let scale = tape_grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for (a, b) in grad.iter().zip(&tape_grad) {
            assert!((a - b).abs() <= 1e-11 * scale, "{kind:?}: {a} vs {b}");
        }
    }
}

#[test]
fn later_stages_reduce_the_loss_on_a_mild_problem() {
    let problem = make_problem::<f64>(ProblemKind::Sp1d, Some(0.1)).unwrap();
    let run = run_boosting(problem.as_ref(), &plan(&["[12]", "[12]", "F3[8]"], 400, 5), &mut ()).unwrap();
    let (_, reports) = run.into_result().unwrap();
    assert_eq!(reports.len(), 3);
    for r in &reports {
        assert!(r.final_loss < r.initial_loss, "stage {} did not improve", r.stage);
    }
    assert!(reports[2].final_loss < reports[0].final_loss);
}

#[test]
fn runs_are_bitwise_reproducible() {
    let problem = make_problem::<f64>(ProblemKind::Interior2d, Some(0.05)).unwrap();
    let mut p = plan(&["[8]", "[6]"], 15, 11);
    p.weights.boundary = 100.0;
    p.batches = BatchSizes {
        interior: 64,
        boundary: 32,
        initial: 0,
    };
    let a = run_boosting(problem.as_ref(), &p, &mut ())
        .unwrap()
        .into_result()
        .unwrap();
    let b = run_boosting(problem.as_ref(), &p, &mut ())
        .unwrap()
        .into_result()
        .unwrap();
    for (x, y) in a.0.stages().iter().zip(b.0.stages()) {
        assert_eq!(x.params, y.params);
    }
    let losses = |r: &[gbpinn_core::training::StageReport]| -> Vec<u64> {
        r.iter()
            .flat_map(|s| [s.initial_loss.to_bits(), s.final_loss.to_bits()])
            .collect()
    };
    assert_eq!(losses(&a.1), losses(&b.1));

    p.seed = 12;
    let c = run_boosting(problem.as_ref(), &p, &mut ())
        .unwrap()
        .into_result()
        .unwrap();
    assert_ne!(a.0.stages()[0].params, c.0.stages()[0].params);
}

#[test]
fn plan_validation_rejects_mismatched_terms() {
    let reaction = make_problem::<f64>(ProblemKind::Reaction, None).unwrap();
    // no periodic embedding
    let mut p = plan(&["[8]"], 1, 0);
    p.weights = LossWeights {
        interior: 1.0,
        boundary: 0.0,
        initial: 1.0,
    };
    p.batches = BatchSizes {
        interior: 8,
        boundary: 0,
        initial: 8,
    };
    assert!(p.validate(reaction.as_ref()).is_err());
    // boundary weight on a problem without a boundary term
    let mut q = plan(&["P[8]"], 1, 0);
    q.weights = LossWeights {
        interior: 1.0,
        boundary: 1.0,
        initial: 1.0,
    };
    q.batches = BatchSizes {
        interior: 8,
        boundary: 8,
        initial: 8,
    };
    assert!(q.validate(reaction.as_ref()).is_err());
    q.weights.boundary = 0.0;
    q.batches.boundary = 0;
    assert!(q.validate(reaction.as_ref()).is_ok());
}
