use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use qtsa_core::analysis::*;
use qtsa_core::circuit::{CircuitSpec, ParameterVector};
use qtsa_core::dataset::SampleSet;
use qtsa_core::power::{generate_dataset, GridModel, SmibEnergy};
use qtsa_core::qsim::{DensityMatrix, Gate, StateVector};
use qtsa_core::trainer::{train, FeatureScaler, TrainConfig, TrainedModel};
use std::sync::OnceLock;

fn basis(n: usize, k: usize) -> DensityMatrix {
    DensityMatrix::from_pure(&StateVector::basis_state(n, k).unwrap())
}

fn random_state(n: usize, angles: &[f64]) -> DensityMatrix {
    let mut psi = StateVector::zero_state(n).unwrap();
    for (i, &a) in angles.iter().enumerate() {
        let q = i % n;
        psi.apply_gate(&if i % 2 == 0 { Gate::Ry { qubit: q, angle: a } } else { Gate::Rz { qubit: q, angle: a } }).unwrap();
        if n > 1 {
            psi.apply_gate(&Gate::Cnot { control: q, target: (q + 1) % n }).unwrap();
        }
    }
    DensityMatrix::from_pure(&psi)
}

#[test]
fn all_correct_is_perfect() {
    let m = confusion_metrics(&[1, 0, 1, 1], &[1, 0, 1, 1]).unwrap();
    assert_eq!((m.tp, m.tn, m.fp, m.fn_), (3, 1, 0, 0));
    assert_eq!(m.accuracy, 1.0);
    assert_eq!(m.f1, Some(1.0));
}

#[test]
fn reported_rates_reproduced_from_counts() {
    let (acc, prec, rec) = (0.9810, 0.9726, 0.9820);
    let mut found = None;
    'search: for total in 100..2000usize {
        for pos in 1..total {
            let tp = (rec * pos as f64).round() as usize;
            let fn_ = pos - tp;
            let fp = (tp as f64 / prec - tp as f64).round() as usize;
            if tp + fp > total || fn_ + tp + fp > total {
                continue;
            }
            let tn = total - tp - fp - fn_;
            let m = Metrics::from_counts(tp, tn, fp, fn_).unwrap();
            if (m.accuracy - acc).abs() < 5e-4
                && (m.precision.unwrap() - prec).abs() < 5e-4
                && (m.recall.unwrap() - rec).abs() < 5e-4
            {
                found = Some(m);
                break 'search;
            }
        }
    }
    let m = found.expect("consistent confusion counts exist");
    let n = (m.tp + m.tn + m.fp + m.fn_) as f64;
    assert_eq!(m.accuracy, (m.tp + m.tn) as f64 / n);
    assert_abs_diff_eq!(m.accuracy, acc, epsilon = 5e-4);
    assert_abs_diff_eq!(m.precision.unwrap(), prec, epsilon = 5e-4);
    assert_abs_diff_eq!(m.recall.unwrap(), rec, epsilon = 5e-4);
}

#[test]
fn undefined_ratios_are_marked() {
    let m = confusion_metrics(&[0, 0, 0], &[1, 0, 0]).unwrap();
    assert_eq!(m.precision, None);
    assert_eq!(m.recall, Some(0.0));
    assert_eq!(m.f1, None);
    let json = serde_json::to_value(m).unwrap();
    assert!(json["precision"].is_null());
    assert_eq!(json["fn"], 1);
    let m = confusion_metrics(&[0, 0], &[0, 0]).unwrap();
    assert_eq!((m.precision, m.recall, m.f1), (None, None, None));
    assert_eq!(confusion_metrics(&[0], &[0, 1]), Err(AnalysisError::LengthMismatch(1, 2)));
    assert_eq!(confusion_metrics(&[], &[]), Err(AnalysisError::Empty));
}

proptest! {
    #[test]
    fn metric_identities(pairs in prop::collection::vec((0..2u8, 0..2u8), 1..300)) {
        let (pred, truth): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
        let m = confusion_metrics(&pred, &truth).unwrap();
        let count = |p: u8, t: u8| pairs.iter().filter(|&&x| x == (p, t)).count();
        let (tp, tn, fp, fn_) = (count(1, 1), count(0, 0), count(1, 0), count(0, 1));
        prop_assert_eq!((m.tp, m.tn, m.fp, m.fn_), (tp, tn, fp, fn_));
        prop_assert_eq!(m.accuracy, (tp + tn) as f64 / pairs.len() as f64);
        prop_assert_eq!(m.precision, (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64));
        prop_assert_eq!(m.recall, (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64));
        if let (Some(p), Some(r), Some(f)) = (m.precision, m.recall, m.f1) {
            if tp > 0 {
                prop_assert!((f - 2.0 / (1.0 / p + 1.0 / r)).abs() < 1e-12);
            } else {
                prop_assert_eq!(f, 0.0);
            }
        }
        for r in [Some(m.accuracy), m.precision, m.recall, m.f1].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn overlap_symmetric_and_order_free(
        a in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 4), 1..6),
        b in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 4), 1..6),
    ) {
        let c0: Vec<_> = a.iter().map(|x| random_state(2, x)).collect();
        let c1: Vec<_> = b.iter().map(|x| random_state(2, x)).collect();
        let ab = class_overlap(&c0, &c1).unwrap();
        let ba = class_overlap(&c1, &c0).unwrap();
        let rev: Vec<_> = c0.iter().rev().cloned().collect();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((ab - class_overlap(&rev, &c1).unwrap()).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&ab));
    }
}

#[test]
fn overlap_examples() {
    let (zero, one) = (basis(1, 0), basis(1, 1));
    assert_abs_diff_eq!(class_overlap(&vec![one.clone(); 3], &vec![zero.clone(); 2]).unwrap(), 0.0);
    let psi = random_state(1, &[0.7, 1.3]);
    assert_abs_diff_eq!(class_overlap(std::slice::from_ref(&psi), &[psi.clone(), psi.clone()]).unwrap(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(class_overlap(&[zero.clone(), one], &vec![zero.clone(); 4]).unwrap(), 0.5, epsilon = 1e-15);
    assert_eq!(class_overlap(&[zero], &[]), Err(AnalysisError::SingleClass));
}

fn toy_model(spec: CircuitSpec, seed: u64) -> TrainedModel {
    let params: Vec<f64> = (0..spec.param_count()).map(|i| ((i as u64 * 2654435761 + seed) % 1000) as f64 / 300.0 - 1.6).collect();
    let params = ParameterVector::from_values(&spec, params).unwrap();
    let scaler = FeatureScaler { scale: vec![0.5; spec.feature_dim], offset: vec![0.0; spec.feature_dim] };
    TrainedModel::new(spec, params, scaler, Vec::new()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn threshold_maps_nested(seed in 0..1000u64, layers in 1..4usize) {
        let model = toy_model(CircuitSpec::qtsa(2, layers, 2).unwrap(), seed);
        let grid = GridSpec::smib((-2.0, 2.0), (-2.0, 2.0), 15, 15);
        let map = scan_region(&model, &grid, &[0.5, 0.7, 0.9, 0.95], None).unwrap();
        prop_assert_eq!(map.cells.len(), 225);
        for c in &map.cells {
            prop_assert!((0.0..=1.0).contains(&c.p1));
            for w in c.labels.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
        }
    }
}

#[test]
fn slices_and_grid_validation() {
    let model = toy_model(CircuitSpec::qtsa(2, 2, 3).unwrap(), 5);
    let mut grid = GridSpec { axes: (0, 2), x_range: (-1.0, 1.0), y_range: (0.0, 0.0), nx: 3, ny: 1, fixed: vec![0.3; 3] };
    let map = scan_region(&model, &grid, &[0.5], None).unwrap();
    assert_eq!(map.cells.iter().map(|c| c.x).collect::<Vec<_>>(), vec![-1.0, 0.0, 1.0]);
    let p = model.predict(&[1.0, 0.3, 0.0]).unwrap();
    assert_eq!(map.cells[2].p1, p);
    assert_eq!(map.agreement(0), None);

    grid.fixed.clear();
    assert!(matches!(scan_region(&model, &grid, &[0.5], None), Err(AnalysisError::Grid(_))));
    grid.fixed = vec![0.0; 3];
    grid.axes = (1, 1);
    assert!(matches!(scan_region(&model, &grid, &[0.5], None), Err(AnalysisError::Grid(_))));
    grid.axes = (0, 3);
    assert!(matches!(scan_region(&model, &grid, &[0.5], None), Err(AnalysisError::Grid(_))));
    grid.axes = (0, 1);
    assert!(matches!(scan_region(&model, &grid, &[1.0], None), Err(AnalysisError::Grid(_))));
    grid.x_range = (1.0, -1.0);
    assert!(matches!(scan_region(&model, &grid, &[0.5], None), Err(AnalysisError::Grid(_))));
}

#[test]
fn region_csv_layout() {
    let model = toy_model(CircuitSpec::qtsa(1, 1, 2).unwrap(), 1);
    let energy = SmibEnergy::from_model(&GridModel::smib_default()).unwrap();
    let map = scan_region(&model, &GridSpec::smib((0.0, 1.0), (-1.0, 1.0), 2, 2), &[0.5, 0.9], Some(&energy)).unwrap();
    let mut buf = Vec::new();
    map.write_csv(("delta", "omega"), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "delta,omega,p1,label@0.5,label@0.9,oracle_label");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,-1,"));
    assert!(map.agreement(1).is_some());
}

struct Smib {
    train: SampleSet,
    test: SampleSet,
    model: TrainedModel,
}

fn smib() -> &'static Smib {
    static CELL: OnceLock<Smib> = OnceLock::new();
    CELL.get_or_init(|| {
        let grid = GridModel::smib_default();
        let data = generate_dataset(&grid, 600, &grid.scenarios, 11).unwrap();
        let (train_set, test) = data.stratified_split(0.7, 11).unwrap();
        let cfg = TrainConfig { max_epochs: 60, seed: 2, ..TrainConfig::default() };
        let model = train(&CircuitSpec::qtsa(2, 2, 2).unwrap(), &train_set, &cfg).unwrap();
        Smib { train: train_set, test, model }
    })
}

#[test]
fn trained_model_stable_near_equilibrium() {
    let s = smib();
    let energy = SmibEnergy::from_model(&GridModel::smib_default()).unwrap();
    let grid = GridSpec::smib((energy.delta_s - 0.3, energy.delta_s + 0.3), (-1.0, 1.0), 20, 20);
    let map = scan_region(&s.model, &grid, &[0.5], Some(&energy)).unwrap();
    assert_eq!(map.agreement(0).unwrap(), map.stable_count(0) as f64 / 400.0);
    assert!(map.stable_count(0) as f64 / 400.0 >= 0.99, "{}", map.stable_count(0));
}

#[test]
fn evaluation_and_comparison() {
    let s = smib();
    let e = evaluate(&s.model, &s.test, 0.5).unwrap();
    assert!(e.metrics.accuracy > 0.85, "{}", e.metrics.accuracy);
    assert!((0.0..=1.0).contains(&e.tr_sigma));
    let json = serde_json::to_value(e).unwrap();
    for key in ["accuracy", "precision", "recall", "f1", "tp", "tn", "fp", "fn", "tr_sigma"] {
        assert!(json.get(key).is_some(), "{key}");
    }

    let cfg = TrainConfig { max_epochs: 3, batch_size: 64, ..TrainConfig::default() };
    let specs = [CircuitSpec::qtsa(1, 1, 2).unwrap(), CircuitSpec { feature_dim: 3, ..CircuitSpec::qtsa(1, 1, 2).unwrap() }];
    let rows = compare_circuits(&s.train, &s.test, &specs, &cfg).unwrap();
    assert!(rows[0].outcome.is_ok());
    assert!(rows[1].outcome.is_err());
    let mut buf = Vec::new();
    write_comparison_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("architecture,n_qubits,n_layers,n_params,accuracy,f1,tr_sigma,error\nQTSA,1,1,"));
    assert_eq!(compare_circuits(&s.train, &s.test, &[], &cfg), Err(AnalysisError::Empty));
}
