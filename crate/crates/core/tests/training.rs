use lrtnet::data::{Label, LabeledDataset, Matrix, PermutedStream, Provenance};
use lrtnet::eval::{empirical_j, empirical_perr};
use lrtnet::loss::{make_phi_cat_a_default, make_phi_cat_b_identity, make_phi_hinge};
use lrtnet::network::NetParams;
use lrtnet::trainer::{
    batch_step, train, CriterionMode, SamplingPolicy, TrainMode, TrainRun, Trainer, TrainerState,
};
use lrtnet::PhiSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian_set(rng: &mut ChaCha8Rng, n: usize, k: usize, shift: f64) -> Matrix {
    let data = (0..n * k)
        .map(|_| rng.sample::<f64, _>(StandardNormal) + shift)
        .collect();
    Matrix::from_vec(n, k, data)
}

fn run(phi: PhiSpec, mode: TrainMode, sampling_policy: SamplingPolicy, iterations: u64) -> TrainRun {
    TrainRun {
        mode,
        criterion: CriterionMode::for_phi(&phi),
        phi,
        n_hidden: 10,
        mu: 1e-2,
        lambda: 0.99,
        iterations,
        sampling_policy,
        eval_every: 25,
        seed: 4,
    }
}

#[test]
fn power_estimates_are_exponential_averages() {
    let phi = make_phi_cat_a_default();
    let omega = phi.output();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let init = NetParams::glorot_init(5, 3, 2).unwrap();
    let mut state = TrainerState::new(init, 1e-3, 0.9).unwrap();
    let mut trainer = Trainer::new(phi, CriterionMode::DifferenceMax).unwrap();
    let mut squares: Vec<Vec<f64>> = Vec::new();
    for t in 0..10 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let label = if t % 3 == 0 { Label::Two } else { Label::One };
        let trace = state.params.forward(&x, &omega).unwrap();
        let g = state.params.gradient(&x, &trace, &omega).unwrap();
        squares.push(g.as_slice().iter().map(|v| v * v).collect());
        trainer.sgd_step(&mut state, &x, label).unwrap();
    }
    for (i, &p) in state.power.as_slice().iter().enumerate() {
        let direct: f64 = squares
            .iter()
            .enumerate()
            .map(|(s, sq)| 0.1 * 0.9f64.powi(9 - s as i32) * sq[i])
            .sum();
        assert!((p - direct).abs() <= 1e-14 * direct.max(1e-300), "element {i}: {p} vs {direct}");
        assert!(p >= 0.0);
    }
    assert_eq!(state.t, 10);
}

#[test]
fn single_batch_step_by_hand() {
    // n = 1, k = 1 with A = 2, a = -1, B = 3, b = 0.5; class 1 = {1}, class 2 = {-1}
    let p = NetParams::from_parts(1, 1, &[2.0], &[-1.0], &[3.0], 0.5).unwrap();
    let data = LabeledDataset::new(
        Matrix::from_vec(1, 1, vec![1.0]),
        Matrix::from_vec(1, 1, vec![-1.0]),
        Provenance::Synthetic,
    )
    .unwrap();
    let phi = make_phi_cat_a_default();
    let mut s = TrainerState::new(p, 1e-4, 0.99).unwrap();
    batch_step(&mut s, &data, &phi, CriterionMode::DifferenceMax).unwrap();
    // class 1: z = 3.5, class 2: z = 0.5 with a dead hidden unit
    let w1 = 2.0 * (1.0 - 12.25) / (13.25f64 * 13.25);
    let w2 = 2.0 * (1.0 - 0.25) / (1.25f64 * 1.25);
    let gb = w1 - w2;
    let g_hidden = 3.0 * w1;
    let n = (1.0 - 0.99) * gb * gb;
    assert!((s.power.output_bias() - n).abs() < 1e-15);
    assert!((s.power.hidden_bias()[0] - 0.01 * g_hidden * g_hidden).abs() < 1e-15);
    // every element moved by a sign step of 10μ
    assert!((s.params.output_bias() - (0.5 - 1e-3)).abs() < 1e-12);
    assert!((s.params.output_weights()[0] - (3.0 - 1e-3)).abs() < 1e-12);
    assert!((s.params.hidden_weights()[0] - (2.0 - 1e-3)).abs() < 1e-12);
    assert!((s.params.hidden_bias()[0] - (-1.0 - 1e-3)).abs() < 1e-12);
}

#[test]
fn hinge_separates_a_separable_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut c1 = gaussian_set(&mut rng, 60, 2, 0.0);
    let mut c2 = gaussian_set(&mut rng, 60, 2, 0.0);
    // push the classes apart along x₀ + x₁
    for i in 0..60 {
        c1.row_mut(i).iter_mut().for_each(|v| *v = 0.3 * *v + 1.5);
        c2.row_mut(i).iter_mut().for_each(|v| *v = 0.3 * *v - 1.5);
    }
    let data = LabeledDataset::new(c1, c2, Provenance::Synthetic).unwrap();
    let cfg = run(make_phi_hinge(), TrainMode::Sgd, SamplingPolicy::Permuted, 2000);
    let (state, _) = train(&cfg, &data, &data).unwrap();
    let r = empirical_perr(&state.params, &make_phi_hinge().output(), &data).unwrap();
    assert_eq!(r.pooled, 0.0);
}

#[test]
fn permuted_epochs_visit_every_sample_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = LabeledDataset::new(
        gaussian_set(&mut rng, 7, 1, 0.0),
        gaussian_set(&mut rng, 4, 1, 0.0),
        Provenance::Synthetic,
    )
    .unwrap();
    let mut s = PermutedStream::new(&data, 9);
    for _ in 0..5 {
        let mut epoch: Vec<(Label, usize)> = s.by_ref().take(11).collect();
        epoch.sort_by_key(|&(l, i)| (l.index(), i));
        let expected: Vec<_> = (0..7)
            .map(|i| (Label::One, i))
            .chain((0..4).map(|i| (Label::Two, i)))
            .collect();
        assert_eq!(epoch, expected);
    }
}

#[test]
fn training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data = LabeledDataset::new(
        gaussian_set(&mut rng, 50, 2, 0.5),
        gaussian_set(&mut rng, 50, 2, -0.5),
        Provenance::Synthetic,
    )
    .unwrap();
    for (phi, mode, policy) in [
        (make_phi_cat_a_default(), TrainMode::Sgd, SamplingPolicy::Permuted),
        (make_phi_cat_b_identity(), TrainMode::Sgd, SamplingPolicy::AlternatingPairs),
        (make_phi_hinge(), TrainMode::Batch, SamplingPolicy::Permuted),
    ] {
        let cfg = run(phi, mode, policy, 200);
        let (s1, l1) = train(&cfg, &data, &data).unwrap();
        let (s2, l2) = train(&cfg, &data, &data).unwrap();
        assert_eq!(l1.to_csv_string(), l2.to_csv_string());
        assert_eq!(s1.params, s2.params);
        assert_eq!(l1.snapshots().first().unwrap().iteration, 0);
        assert_eq!(l1.last().unwrap().iteration, 200);
        assert_eq!(l1.len(), 9);
    }
}

#[test]
fn empirical_j_matches_trainer_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let data = LabeledDataset::new(
        gaussian_set(&mut rng, 40, 3, 0.2),
        gaussian_set(&mut rng, 30, 3, -0.2),
        Provenance::Synthetic,
    )
    .unwrap();
    for phi in [make_phi_cat_a_default(), make_phi_cat_b_identity(), make_phi_hinge()] {
        let mode = CriterionMode::for_phi(&phi);
        let mut trainer = Trainer::new(phi.clone(), mode).unwrap();
        for seed in 0..5 {
            let p = NetParams::glorot_init(6, 3, seed).unwrap();
            let a = empirical_j(&p, &phi, &data, mode).unwrap();
            let b = trainer.objective(&p, &data);
            assert!((a - b).abs() < 1e-12, "{phi}: {a} vs {b}");
        }
    }
}

#[test]
fn perr_matches_naive_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let omega = make_phi_cat_b_identity().output();
    for seed in 0..100 {
        let (n1, n2, k) = (rng.random_range(1..20), rng.random_range(1..20), rng.random_range(1..4));
        let data = LabeledDataset::new(
            gaussian_set(&mut rng, n1, k, 0.3),
            gaussian_set(&mut rng, n2, k, -0.3),
            Provenance::Synthetic,
        )
        .unwrap();
        let p = NetParams::glorot_init(4, k, seed).unwrap();
        let r = empirical_perr(&p, &omega, &data).unwrap();
        let mut wrong = [0usize; 2];
        for x in data.class1().iter_rows() {
            if p.forward(x, &omega).unwrap().y < 0.0 {
                wrong[0] += 1;
            }
        }
        for x in data.class2().iter_rows() {
            if p.forward(x, &omega).unwrap().y >= 0.0 {
                wrong[1] += 1;
            }
        }
        assert_eq!(r.err1, wrong[0] as f64 / n1 as f64);
        assert_eq!(r.err2, wrong[1] as f64 / n2 as f64);
        assert_eq!(r.pooled, (wrong[0] + wrong[1]) as f64 / (n1 + n2) as f64);
        assert_eq!(r.misclassified_indices[0].len(), wrong[0]);
    }
}

#[test]
fn difference_criterion_is_at_most_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let data = LabeledDataset::new(
        gaussian_set(&mut rng, 30, 2, 1.0),
        gaussian_set(&mut rng, 30, 2, -1.0),
        Provenance::Synthetic,
    )
    .unwrap();
    for phi in [make_phi_cat_a_default(), make_phi_cat_b_identity()] {
        for seed in 0..50 {
            let mut p = NetParams::glorot_init(8, 2, seed).unwrap();
            for v in p.as_mut_slice() {
                *v *= rng.random_range(0.1..20.0);
            }
            let j = empirical_j(&p, &phi, &data, CriterionMode::DifferenceMax).unwrap();
            assert!(j <= 1.0, "{phi}: {j}");
        }
    }
}

#[test]
fn indistinguishable_classes_keep_criterion_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let train_set = LabeledDataset::new(
        gaussian_set(&mut rng, 2000, 1, 0.0),
        gaussian_set(&mut rng, 2000, 1, 0.0),
        Provenance::Synthetic,
    )
    .unwrap();
    let test_set = LabeledDataset::new(
        gaussian_set(&mut rng, 20_000, 1, 0.0),
        gaussian_set(&mut rng, 20_000, 1, 0.0),
        Provenance::Synthetic,
    )
    .unwrap();
    let mut cfg = run(make_phi_cat_b_identity(), TrainMode::Sgd, SamplingPolicy::AlternatingPairs, 2000);
    cfg.mu = 1e-4;
    let (state, _) = train(&cfg, &train_set, &test_set).unwrap();
    let j = empirical_j(&state.params, &cfg.phi, &test_set, CriterionMode::DifferenceMax).unwrap();
    assert!(j.abs() < 0.02, "{j}");
}

#[test]
fn smoothed_criterion_increases_early_in_training() {
    let h = lrtnet::config::synthetic_pair();
    let draw = |f, seed| lrtnet::data::sample_mixture(f, 5000, &mut ChaCha8Rng::seed_from_u64(seed));
    let data = LabeledDataset::new(draw(&h.f1, 1), draw(&h.f2, 2), Provenance::Synthetic).unwrap();
    let phi = make_phi_cat_a_default();
    let mut trainer = Trainer::new(phi.clone(), CriterionMode::DifferenceMax).unwrap();
    let init = NetParams::glorot_init(100, 1, 8).unwrap();
    let mut state = TrainerState::new(init, 1e-4, 0.99).unwrap();
    let mut js = Vec::new();
    for t in 0..500 {
        trainer.sgd_step(&mut state, data.sample(Label::One, t), Label::One).unwrap();
        trainer.sgd_step(&mut state, data.sample(Label::Two, t), Label::Two).unwrap();
        js.push(trainer.objective(&state.params, &data));
    }
    let smooth: Vec<f64> = js.windows(100).map(|w| w.iter().sum::<f64>() / 100.0).collect();
    let up = smooth.windows(2).filter(|w| w[1] >= w[0]).count();
    let frac = up as f64 / (smooth.len() - 1) as f64;
    assert!(frac >= 0.95, "non-decreasing in {frac:.3} of comparisons");
}
