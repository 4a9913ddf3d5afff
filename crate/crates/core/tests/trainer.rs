use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qtsa_core::circuit::{build_baseline, execute, Activation, Architecture, CircuitSpec, FeatureVector};
use qtsa_core::dataset::{Sample, SampleSet};
use qtsa_core::trainer::*;
use std::f64::consts::FRAC_PI_2;

fn fv(v: &[f64]) -> FeatureVector {
    FeatureVector::new(v.to_vec()).unwrap()
}

fn arb_spec() -> impl Strategy<Value = CircuitSpec> {
    (0..4usize, 1..=3usize, 1..=4usize, 1..=3usize, 0..3usize).prop_map(|(arch, n, l, d, act)| {
        let act = [Activation::Tanh, Activation::Arctan, Activation::Identity][act];
        match arch {
            0 => CircuitSpec::qtsa(n, l, d).unwrap().with_activation(act),
            1 => build_baseline(Architecture::Iqp, n, l, d).unwrap(),
            2 => build_baseline(Architecture::Qaoa, n, l, d).unwrap(),
            _ => build_baseline(Architecture::Reupload, n, l, d).unwrap().with_activation(act),
        }
    })
}

/// Spec with random parameters, features and labels for a small batch.
fn arb_problem() -> impl Strategy<Value = (CircuitSpec, Vec<f64>, Vec<Example>)> {
    arb_spec().prop_flat_map(|spec| {
        let p = prop::collection::vec(-3.0..3.0f64, spec.param_count());
        let ex = prop::collection::vec(
            (prop::collection::vec(-1.0..1.0f64, spec.feature_dim), 0..2u8)
                .prop_map(|(z, label)| Example { features: FeatureVector::new(z).unwrap(), label }),
            1..4,
        );
        (Just(spec), p, ex)
    })
}

fn states_diff(spec: &CircuitSpec, params: &[f64], z: &FeatureVector, k: usize, h: f64) -> Vec<Complex64> {
    let mut lo = params.to_vec();
    let mut hi = params.to_vec();
    lo[k] -= h;
    hi[k] += h;
    let a = execute(spec, &hi, z).unwrap();
    let b = execute(spec, &lo, z).unwrap();
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y) / (2.0 * h)).collect()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[test]
fn bce_examples() {
    assert_abs_diff_eq!(bce_loss(1.0, 1), 1e-7, epsilon = 1e-12);
    assert_abs_diff_eq!(bce_loss(0.5, 0), std::f64::consts::LN_2, epsilon = 1e-15);
    assert_abs_diff_eq!(bce_loss(0.5, 1), std::f64::consts::LN_2, epsilon = 1e-15);
    assert_abs_diff_eq!(bce_loss(0.0, 1), 16.118_095_650_958_32, epsilon = 1e-9);
}

#[test]
fn batch_loss_examples() {
    let spec = CircuitSpec::qtsa(1, 1, 1).unwrap();
    let params: Vec<f64> = (0..spec.param_count()).map(|i| 0.3 * i as f64 - 1.0).collect();
    let a = Example { features: fv(&[0.2]), label: 1 };
    let b = Example { features: fv(&[-0.7]), label: 0 };
    let single = batch_loss(&spec, &params, std::slice::from_ref(&a)).unwrap();
    let p = qtsa_core::circuit::predict_prob_one(&spec, &params, &a.features).unwrap();
    assert_eq!(single, bce_loss(p, 1));
    let pair = batch_loss(&spec, &params, &[a.clone(), b.clone()]).unwrap();
    let doubled = batch_loss(&spec, &params, &[a.clone(), b.clone(), a.clone(), b]).unwrap();
    assert_abs_diff_eq!(pair, doubled, epsilon = 1e-15);
    assert_eq!(batch_loss(&spec, &params, &[]), Err(TrainError::EmptyBatch));

    // free RY of the variational block at pi sends |0> to |1> for every input
    let layout = spec.layout();
    let mut flip = vec![0.0; spec.param_count()];
    flip[layout[1].start] = std::f64::consts::PI;
    let ok = [Example { features: fv(&[0.3]), label: 1 }, Example { features: fv(&[-0.9]), label: 1 }];
    assert_abs_diff_eq!(batch_loss(&spec, &flip, &ok).unwrap(), 1e-7, epsilon = 1e-12);
}

#[test]
fn single_rotation_gradient() {
    let spec = CircuitSpec::qtsa(1, 1, 1).unwrap();
    let k = spec.layout()[1].start;
    let z = fv(&[0.5]);
    for (theta, expect) in [(0.0, 0.0), (FRAC_PI_2, 0.5)] {
        let mut params = vec![0.0; spec.param_count()];
        params[k] = theta;
        let (p1, grad) = prob_one_grad(&spec, &params, &z).unwrap();
        assert_abs_diff_eq!(p1, (theta / 2.0).sin().powi(2), epsilon = 1e-15);
        assert_abs_diff_eq!(grad[k], expect, epsilon = 1e-15);
        let h = 1e-5;
        let mut hi = params.clone();
        hi[k] += h;
        let mut lo = params.clone();
        lo[k] -= h;
        let fd = (qtsa_core::circuit::predict_prob_one(&spec, &hi, &z).unwrap()
            - qtsa_core::circuit::predict_prob_one(&spec, &lo, &z).unwrap())
            / (2.0 * h);
        assert_abs_diff_eq!(grad[k], fd, epsilon = 1e-9);
    }
}

#[test]
fn gradient_rejects_wrong_param_count() {
    let spec = CircuitSpec::qtsa(2, 1, 2).unwrap();
    let ex = [Example { features: fv(&[0.0, 0.1]), label: 1 }];
    assert!(parameter_shift_grad(&spec, &[0.0; 3], &ex).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_gradient_matches_finite_differences((spec, params, batch) in arb_problem()) {
        let grad = parameter_shift_grad(&spec, &params, &batch).unwrap();
        let h = 1e-5;
        for k in 0..params.len() {
            let mut hi = params.clone();
            hi[k] += h;
            let mut lo = params.clone();
            lo[k] -= h;
            let fd = (batch_loss(&spec, &hi, &batch).unwrap() - batch_loss(&spec, &lo, &batch).unwrap()) / (2.0 * h);
            let err = (grad[k] - fd).abs();
            prop_assert!(err <= 1e-6 || err <= 1e-4 * fd.abs(), "param {k}: shift {} vs fd {fd}", grad[k]);
        }
    }

    #[test]
    fn fisher_matches_state_derivatives((spec, params, batch) in arb_problem()) {
        let z = &batch[0].features;
        let fisher = fisher_matrix(&spec, &params, z).unwrap();
        let dense = fisher.to_dense();
        let psi = execute(&spec, &params, z).unwrap();
        let h = 1e-5;
        let derivs: Vec<_> = (0..params.len()).map(|k| states_diff(&spec, &params, z, k, h)).collect();
        let mut block_of = vec![usize::MAX; params.len()];
        for (b, blk) in fisher.blocks().iter().enumerate() {
            block_of[blk.start..blk.start + blk.matrix.nrows()].fill(b);
        }
        for k in 0..params.len() {
            for l in 0..params.len() {
                if block_of[k] != block_of[l] {
                    prop_assert_eq!(dense[(k, l)], 0.0);
                    continue;
                }
                let a = psi.amplitudes();
                let exact = 4.0
                    * (dot(&derivs[k], &derivs[l]) - dot(&derivs[k], a) * dot(a, &derivs[l])).re;
                prop_assert!((dense[(k, l)] - exact).abs() < 1e-6, "F[{k},{l}] = {} vs {exact}", dense[(k, l)]);
            }
        }
    }

    #[test]
    fn fisher_diagonal_matches_fidelity_oracle((spec, params, batch) in arb_problem()) {
        let z = &batch[0].features;
        let dense = fisher_matrix(&spec, &params, z).unwrap().to_dense();
        let psi = execute(&spec, &params, z).unwrap();
        let eps = 1e-4;
        for k in 0..params.len() {
            let mut moved = params.clone();
            moved[k] += eps;
            let phi = execute(&spec, &moved, z).unwrap();
            let oracle = 8.0 * (1.0 - psi.inner(&phi).unwrap().norm()) / (eps * eps);
            prop_assert!((dense[(k, k)] - oracle).abs() < 1e-4 * (1.0 + oracle.abs()), "F[{k},{k}] = {} vs {oracle}", dense[(k, k)]);
        }
    }

    #[test]
    fn damped_blocks_are_positive((spec, params, batch) in arb_problem(), lambda in 1e-4..1.0f64) {
        let fisher = fisher_matrix(&spec, &params, &batch[0].features).unwrap();
        for b in fisher.blocks() {
            let n = b.matrix.nrows();
            let damped = &b.matrix + DMatrix::identity(n, n) * lambda;
            prop_assert!((&damped - damped.transpose()).amax() == 0.0);
            let min = damped.symmetric_eigen().eigenvalues.min();
            prop_assert!(min >= lambda - 1e-9, "eigenvalue {min} below damping {lambda}");
        }
    }

    #[test]
    fn classify_threshold_is_monotone(probs in prop::collection::vec(0.0..=1.0f64, 1..200)) {
        let count = |t: f64| probs.iter().filter(|&&p| classify_prob(p, t).label == 1).count();
        let mut last = usize::MAX;
        for t in [0.5, 0.7, 0.9, 0.95] {
            let c = count(t);
            prop_assert!(c <= last);
            for &p in &probs {
                if classify_prob(p, t).label == 1 {
                    prop_assert!(classify_prob(p, 0.5).label == 1);
                }
            }
            last = c;
        }
    }
}

#[test]
fn single_rotation_fisher() {
    // n = 1: the variational block is RY then RZ, acting on |0> when the
    // encoding block is switched off
    let spec = CircuitSpec::qtsa(1, 1, 1).unwrap();
    let seg = spec.layout()[1];
    for theta in [0.0, 0.4, 2.0] {
        let mut params = vec![0.0; spec.param_count()];
        params[seg.start] = theta;
        let f = fisher_matrix(&spec, &params, &fv(&[0.3])).unwrap().to_dense();
        assert_abs_diff_eq!(f[(seg.start, seg.start)], 1.0, epsilon = 1e-14);
    }
    let f = fisher_matrix(&spec, &vec![0.0; spec.param_count()], &fv(&[0.3])).unwrap();
    let dense = f.to_dense();
    assert_abs_diff_eq!(dense[(seg.start + 1, seg.start + 1)], 0.0, epsilon = 1e-14);
    let solved = f.solve(&vec![1.0; spec.param_count()], 1e-3).unwrap();
    assert_abs_diff_eq!(solved[seg.start + 1], 1e3, epsilon = 1e-6);
}

#[test]
fn undamped_singular_fisher_rejected() {
    let spec = CircuitSpec::qtsa(1, 1, 1).unwrap();
    let params = vec![0.0; spec.param_count()];
    let f = fisher_matrix(&spec, &params, &fv(&[0.3])).unwrap();
    let cfg = TrainConfig { fisher_damping: 0.0, ..TrainConfig::default() };
    let grad = vec![0.1; params.len()];
    assert!(matches!(
        gqng_update(&OptimizerState::new(params.len()), &params, &grad, Some(&f), &cfg),
        Err(TrainError::SingularFisher { .. })
    ));
}

#[test]
fn zero_gradient_leaves_params() {
    let spec = CircuitSpec::qtsa(2, 2, 2).unwrap();
    let fisher = BlockFisher::identity(&spec.layout());
    let params: Vec<f64> = (0..spec.param_count()).map(|i| i as f64 * 0.01).collect();
    let (opt, next) =
        gqng_update(&OptimizerState::new(params.len()), &params, &vec![0.0; params.len()], Some(&fisher), &TrainConfig::default())
            .unwrap();
    assert_eq!(next, params);
    assert_eq!(opt.step(), 1);
}

#[test]
fn first_identity_step_moves_by_learning_rate() {
    let spec = CircuitSpec::qtsa(1, 2, 1).unwrap();
    let fisher = BlockFisher::identity(&spec.layout());
    let cfg = TrainConfig { fisher_damping: 0.0, ..TrainConfig::default() };
    let n = spec.param_count();
    let params = vec![0.2; n];
    let grad: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 0.0 } else { (i as f64 - 7.5) * 0.1 }).collect();
    let (_, next) = gqng_update(&OptimizerState::new(n), &params, &grad, Some(&fisher), &cfg).unwrap();
    for ((p, q), g) in params.iter().zip(&next).zip(&grad) {
        let expect = if *g == 0.0 { 0.0 } else { -cfg.learning_rate * g.signum() };
        assert_abs_diff_eq!(q - p, expect, epsilon = 1e-6);
    }
}

#[test]
fn identity_fisher_reproduces_adam() {
    let spec = CircuitSpec::qtsa(2, 1, 2).unwrap();
    let n = spec.param_count();
    let fisher = BlockFisher::identity(&spec.layout());
    let with = TrainConfig { fisher_damping: 0.0, ..TrainConfig::default() };
    let without = TrainConfig { use_fisher: false, ..TrainConfig::default() };
    let (mut oa, mut ob) = (OptimizerState::new(n), OptimizerState::new(n));
    let (mut pa, mut pb) = (vec![0.05; n], vec![0.05; n]);
    for step in 0..25 {
        let grad: Vec<f64> = (0..n).map(|i| ((i * 7 + step * 3) as f64).sin()).collect();
        let (o, p) = gqng_update(&oa, &pa, &grad, Some(&fisher), &with).unwrap();
        oa = o;
        pa = p;
        let (o, p) = gqng_update(&ob, &pb, &grad, None, &without).unwrap();
        ob = o;
        pb = p;
    }
    assert_eq!(pa, pb);
    assert_eq!(oa, ob);
}

#[test]
fn doubling_damping_shrinks_step() {
    let f = DMatrix::from_row_slice(3, 3, &[1.0, 0.999, 0.0, 0.999, 1.0, 0.0, 0.0, 0.0, 1e-4]);
    let fisher = BlockFisher::from_blocks(3, vec![FisherBlock { start: 0, matrix: f }]).unwrap();
    let grad = [0.3, -0.2, 0.05];
    let natural_norm = |lambda: f64| fisher.solve(&grad, lambda).unwrap().iter().map(|x| x * x).sum::<f64>().sqrt();
    // A fresh Adam step only sees the sign of each coordinate, so the update
    // is compared from a warm state whose second moments dominate.
    let opt = OptimizerState::from_moments(vec![0.0; 3], vec![1e8; 3], 50).unwrap();
    let p = vec![0.0; 3];
    let step_norm = |lambda: f64| {
        let cfg = TrainConfig { fisher_damping: lambda, ..TrainConfig::default() };
        let (_, q) = gqng_update(&opt, &p, &grad, Some(&fisher), &cfg).unwrap();
        q.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    };
    let mut lambda = 1e-3;
    for _ in 0..8 {
        assert!(natural_norm(2.0 * lambda) < natural_norm(lambda));
        let (a, b) = (step_norm(lambda), step_norm(2.0 * lambda));
        assert!(b < a, "lambda {lambda}: {b} !< {a}");
        lambda *= 2.0;
    }
}

fn toy_set() -> SampleSet {
    let samples = (0..120)
        .map(|i| {
            // |z| >= 0.05 leaves a margin around the decision point
            let u = -1.0 + 2.0 * (i as f64 + 0.5) / 120.0;
            let z = u.signum() * (0.05 + 0.95 * u.abs());
            Sample { features: vec![z], label: (z > 0.0) as u8, scenario: i }
        })
        .collect();
    SampleSet::new(samples).unwrap()
}

#[test]
fn separable_toy_problem_is_learned() {
    let spec = CircuitSpec::qtsa(1, 2, 1).unwrap();
    let cfg = TrainConfig { max_epochs: 100, batch_size: 16, seed: 0, ..TrainConfig::default() };
    let model = train(&spec, &toy_set(), &cfg).unwrap();
    let best = model.history.iter().map(|r| r.loss).fold(f64::INFINITY, f64::min);
    let best_acc = model.history.iter().find(|r| r.loss == best).unwrap().train_accuracy;
    assert!(best < 0.1, "best loss {best}");
    assert!(best_acc >= 0.99, "accuracy {best_acc}");
    let again = train(&spec, &toy_set(), &cfg).unwrap();
    assert_eq!(again, model);
}

#[test]
fn single_class_rejected() {
    let samples = (0..10).map(|i| Sample { features: vec![i as f64], label: 1, scenario: i }).collect();
    let data = SampleSet::new(samples).unwrap();
    let cfg = TrainConfig { batch_size: 4, ..TrainConfig::default() };
    assert_eq!(train(&CircuitSpec::qtsa(1, 1, 1).unwrap(), &data, &cfg), Err(TrainError::SingleClass));
}

#[test]
fn classify_examples() {
    assert_eq!(classify_prob(0.9, 0.5).label, 1);
    assert_eq!(classify_prob(0.9, 0.95).label, 0);
}

#[test]
fn model_json_round_trip() {
    let spec = CircuitSpec::qtsa(1, 1, 1).unwrap();
    let cfg = TrainConfig { max_epochs: 3, batch_size: 20, ..TrainConfig::default() };
    let model = train(&spec, &toy_set(), &cfg).unwrap();
    let json = model.to_json();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["architecture", "n_qubits", "n_layers", "feature_dim", "activation", "param_layout", "params", "scaler", "history"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let back = TrainedModel::from_json(&json).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.classify(&[0.7], 0.5).unwrap(), model.classify(&[0.7], 0.5).unwrap());
    assert!(model.classify(&[0.7], 1.0).is_err());
}
