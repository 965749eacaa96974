//! End-to-end estimation on small systems against closed-form truths.

use hamtomo::experiment::{by_name, Experiment, ExperimentConfig, HamiltonianSource};
use hamtomo::pauli::PauliAxis::{X, Y, Z};
use hamtomo::schedule::{AxisVariant, PulseErrorModel};
use hamtomo::spin_system::SpinSystem;

fn two_spin(terms: &[(hamtomo::pauli::PauliAxis, hamtomo::pauli::PauliAxis, f64)]) -> SpinSystem {
    let mut sys = SpinSystem::new(2).unwrap();
    for &(a, b, v) in terms {
        sys.set_coupling(0, 1, a, b, v).unwrap();
    }
    sys
}

fn noiseless(variants: Vec<AxisVariant>) -> ExperimentConfig {
    ExperimentConfig {
        exact_probabilities: true,
        bootstrap_resamples: 0,
        variants,
        spins: Some(vec![]),
        ..Default::default()
    }
}

#[test]
fn cross_couplings_recovered_by_rotated_variants() {
    let sys = two_spin(&[(X, Y, 0.4), (X, Z, -0.7), (Z, Z, 0.2)]);
    let exp = Experiment::with_system(noiseless(vec![AxisVariant::XyYz, AxisVariant::YxZy]), sys).unwrap();
    let res = exp.run_pair_tomography(0, 1, &PulseErrorModel::NONE).unwrap();
    let est = by_name(&res.estimates);
    for (name, want) in [("J_0_1_xy", 0.4), ("J_0_1_xz", -0.7), ("J_0_1_yz", 0.0), ("J_0_1_yx", 0.0)] {
        let got = est[name].estimate;
        assert!((got - want).abs() < 1e-4, "{name}: {got} vs {want}");
    }
}

#[test]
fn zero_coupling_pair_estimates_zero() {
    let mut sys = SpinSystem::random_instance(3, 5).unwrap();
    for a in [X, Y, Z] {
        for b in [X, Y, Z] {
            sys.set_coupling(0, 2, a, b, 0.0).unwrap();
        }
    }
    let exp = Experiment::with_system(noiseless(AxisVariant::ALL.to_vec()), sys).unwrap();
    let res = exp.run_pair_tomography(0, 2, &PulseErrorModel::NONE).unwrap();
    assert_eq!(res.estimates.len(), 9);
    for e in &res.estimates {
        assert!(e.estimate.abs() < 5e-3, "{}: {}", e.name, e.estimate);
    }
}

#[test]
fn shot_noise_estimates_within_three_sigma() {
    let cfg = ExperimentConfig {
        hamiltonian: HamiltonianSource::Random { n_spins: 2, seed: 11 },
        shots: 400,
        bootstrap_resamples: 200,
        spins: Some(vec![]),
        ..Default::default()
    };
    let exp = Experiment::new(cfg).unwrap();
    let res = exp.run_pair_tomography(0, 1, &PulseErrorModel::NONE).unwrap();
    assert_eq!(res.estimates.len(), 9);
    for e in &res.estimates {
        let truth = e.truth.unwrap();
        assert!(e.sigma.is_finite() && e.sigma > 0.0, "{}", e.name);
        assert!((e.estimate - truth).abs() <= 3.0 * e.sigma + 1e-3, "{}: {} vs {} ± {}", e.name, e.estimate, truth, e.sigma);
    }
}

#[test]
fn runs_are_deterministic_and_independent_of_selection() {
    let cfg = |pairs| ExperimentConfig {
        hamiltonian: HamiltonianSource::Random { n_spins: 4, seed: 2 },
        timepoints: 20,
        bootstrap_resamples: 0,
        variants: vec![AxisVariant::XxYy],
        pairs: Some(pairs),
        spins: Some(vec![1]),
        ..Default::default()
    };
    let a = Experiment::new(cfg(vec![(0, 1), (2, 3)])).unwrap().run_full_scan().unwrap();
    let b = Experiment::new(cfg(vec![(0, 1), (2, 3)])).unwrap().run_full_scan().unwrap();
    let c = Experiment::new(cfg(vec![(2, 3)])).unwrap().run_full_scan().unwrap();
    let values = |r: &hamtomo::experiment::EstimationReport| -> Vec<(String, f64)> {
        r.models[0].estimates.iter().map(|e| (e.name.clone(), e.estimate)).collect()
    };
    assert_eq!(values(&a), values(&b));
    let full = by_name(&a.models[0].estimates);
    for e in &c.models[0].estimates {
        assert_eq!(full[e.name.as_str()].estimate, e.estimate, "{}", e.name);
    }
}

#[test]
fn four_spin_scan_recovers_every_coefficient() {
    let cfg = ExperimentConfig {
        hamiltonian: HamiltonianSource::Random { n_spins: 4, seed: 9 },
        bootstrap_resamples: 0,
        ..Default::default()
    };
    let rep = Experiment::new(cfg).unwrap().run_full_scan().unwrap();
    let m = &rep.models[0];
    assert_eq!(m.estimates.len(), 6 * 9 + 4 * 3);
    let ad = m.average_deviation().unwrap();
    assert!(ad <= 0.05, "average deviation {ad}");
}

#[test]
fn doubling_shots_shrinks_bootstrap_sigma() {
    let sigma = |shots| {
        let cfg = ExperimentConfig {
            hamiltonian: HamiltonianSource::Random { n_spins: 2, seed: 4 },
            shots,
            bootstrap_resamples: 400,
            variants: vec![AxisVariant::XxYy],
            spins: Some(vec![]),
            ..Default::default()
        };
        let res = Experiment::new(cfg).unwrap().run_pair_tomography(0, 1, &PulseErrorModel::NONE).unwrap();
        res.estimates.iter().map(|e| e.sigma).sum::<f64>() / res.estimates.len() as f64
    };
    let ratio = sigma(100) / sigma(200);
    assert!((ratio - 2f64.sqrt()).abs() < 0.3, "ratio {ratio}");
}
