use std::f64::consts::PI;

use proptest::prelude::*;
use qel::circuit::{Encoding, Observable, QuantumModel};
use qel::diff::{grad_theta, model_observable};
use qel::extremal::{discrete_objective, ExtremizerFeatureMap, ExtremizerObjective};
use qel::problems::{
    all_costs, brute_force_optimum, gen_correlation_chain, gen_maxcut_clusters, gen_molecule, maxcut_cost, Bitstring,
    Direction, DiscreteProblem,
};
use qel::sim::{magnetization, Gate, StateVector};
use qel::train::{fit, scale_targets, Dataset, Loss, OptimizerConfig, Sample};
use qel::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    let q = 0..n;
    let pair = (0..n, 0..n).prop_filter("distinct qubits", |(a, b)| a != b);
    let angle = -2.0 * PI..2.0 * PI;
    prop_oneof![
        q.clone().prop_map(Gate::X),
        q.clone().prop_map(Gate::H),
        (q.clone(), angle.clone()).prop_map(|(t, a)| Gate::Rx(t, a)),
        (q.clone(), angle.clone()).prop_map(|(t, a)| Gate::Ry(t, a)),
        (q, angle.clone()).prop_map(|(t, a)| Gate::Rz(t, a)),
        pair.clone().prop_map(|(control, target)| Gate::Cnot { control, target }),
        (pair, angle).prop_map(|((control, target), angle)| Gate::Cry { control, target, angle }),
    ]
}

fn circuit() -> impl Strategy<Value = (usize, Vec<Gate>)> {
    (2usize..=5).prop_flat_map(|n| (Just(n), prop::collection::vec(gate(n), 0..40)))
}

fn random_digital_model(n: usize, seed: u64) -> QuantumModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = QuantumModel::with_hea(Encoding::Digital { n_qubits: n }, n, Observable::new(n, 1.0, 0.5), &mut rng).unwrap();
    let theta: Vec<f64> = (0..m.theta().len()).map(|_| rng.random_range(-PI..PI)).collect();
    m.set_theta(&theta).unwrap();
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gates_preserve_norm((n, gates) in circuit(), start in 0usize..32) {
        let mut s = StateVector::basis(n, start % (1 << n)).unwrap();
        s.apply_all(&gates).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_circuit_restores_state((n, gates) in circuit(), start in 0usize..32) {
        let s0 = StateVector::basis(n, start % (1 << n)).unwrap();
        let mut s = s0.clone();
        s.apply_all(&gates).unwrap();
        let inverse: Vec<Gate> = gates.iter().rev().map(|g| g.inverse()).collect();
        s.apply_all(&inverse).unwrap();
        for (a, b) in s.amplitudes().iter().zip(s0.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn probabilities_are_a_distribution((n, gates) in circuit()) {
        let mut s = StateVector::zero(n).unwrap();
        s.apply_all(&gates).unwrap();
        let p = s.probabilities();
        prop_assert!(p.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for (pi, a) in p.iter().zip(s.amplitudes()) {
            prop_assert_eq!(*pi, a.norm_sqr());
        }
        let weighted: f64 = p.iter().enumerate().map(|(i, pi)| pi * magnetization(i, n)).sum();
        prop_assert!((s.expectation_z_sum() - weighted).abs() < 1e-12);
    }

    #[test]
    fn bitstring_round_trips(n in 1usize..=12, raw in any::<usize>()) {
        let i = raw % (1 << n);
        let b = Bitstring::from_index(i, n);
        prop_assert_eq!(b.index(), i);
        prop_assert_eq!(b.to_string().parse::<Bitstring>().unwrap(), b.clone());
        prop_assert_eq!(b.complement().complement(), b.clone());
        prop_assert_eq!(b.complement().index(), (1 << n) - 1 - i);
    }

    #[test]
    fn maxcut_complement_symmetry(n in (2usize..=4).prop_map(|k| 2 * k), sep in 0.0f64..10.0, seed in any::<u64>()) {
        let inst = gen_maxcut_clusters(n, sep, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for i in 0..1usize << n {
            let z = Bitstring::from_index(i, n);
            let a = maxcut_cost(&inst, &z).unwrap();
            let b = maxcut_cost(&inst, &z.complement()).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn brute_force_optimum_dominates(seed in any::<u64>(), n in 3usize..=7, order in 2usize..=3, maximize in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let direction = if maximize { Direction::Maximize } else { Direction::Minimize };
        let chain = gen_correlation_chain(n, order, &mut rng).unwrap();
        let molecule = gen_molecule(&mut rng);
        let maxcut = gen_maxcut_clusters(2 * (n / 2).max(2), 5.0, &mut rng).unwrap();
        let problems: [&dyn DiscreteProblem; 3] = [&chain, &molecule, &maxcut];
        for problem in problems {
            let costs = all_costs(problem).unwrap();
            let opt = brute_force_optimum(problem, direction).unwrap();
            prop_assert!(!opt.set.is_empty());
            for &c in &costs {
                prop_assert!(!direction.better(c, opt.value));
            }
            for b in &opt.set {
                prop_assert!((costs[b.index()] - opt.value).abs() <= 1e-12 * opt.value.abs().max(1.0));
            }
        }
    }

    #[test]
    fn target_scaling_round_trips(targets in prop::collection::vec(-1e3f64..1e3, 2..20)) {
        let data = Dataset::new(targets.iter().map(|&t| Sample { input: vec![0.0], target: t }).collect());
        match scale_targets(&data) {
            Ok((scaled, scaler)) => {
                for (s, t) in scaled.samples.iter().zip(&targets) {
                    prop_assert!((0.0..=1.0).contains(&s.target));
                    prop_assert!((scaler.inverse(s.target) - t).abs() < 1e-12 * t.abs().max(1.0));
                }
            }
            Err(e) => prop_assert!(matches!(e, Error::DegenerateRange(_))),
        }
    }

    #[test]
    fn gradient_scales_linearly_with_alpha(seed in any::<u64>(), alpha in 1.0f64..100.0, beta in -1.0f64..1.0, x in -0.9f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3;
        let raw = QuantumModel::with_hea(Encoding::Chebyshev { n_qubits: n }, 2, Observable::raw(n), &mut rng).unwrap();
        let scaled = QuantumModel::new(
            Encoding::Chebyshev { n_qubits: n },
            raw.ansatz().clone(),
            Observable::new(n, alpha, beta),
            raw.theta().to_vec(),
        ).unwrap();
        let g_raw = grad_theta(&raw, &[x]).unwrap().values;
        let g = grad_theta(&scaled, &[x]).unwrap().values;
        for (a, b) in g.iter().zip(&g_raw) {
            prop_assert!((a - alpha / (2.0 * n as f64) * b).abs() < 1e-12);
        }
    }

    #[test]
    fn measured_objective_is_a_weighted_average(seed in any::<u64>(), n in 2usize..=4) {
        let mut m = random_digital_model(n, seed);
        m.freeze();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let chi: Vec<f64> = (0..2 * n * n * n).map(|_| rng.random_range(-PI..PI)).collect();
        let efm = ExtremizerFeatureMap::with_chi(n, chi).unwrap();
        let p = efm.state().unwrap().probabilities();
        let values: Vec<f64> = (0..1 << n).map(|z| m.evaluate(&[z as f64]).unwrap()).collect();
        let avg: f64 = p.iter().zip(&values).map(|(a, b)| a * b).sum();
        let y = discrete_objective(&m, &efm, ExtremizerObjective::Measured).unwrap();
        prop_assert!((y - avg).abs() < 1e-9);
        // a weighted average never leaves the range of the basis values
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(y >= lo - 1e-12 && y <= hi + 1e-12);
    }

    #[test]
    fn dephasing_keeps_basis_expectations(seed in any::<u64>(), n in 1usize..=4, mask in any::<usize>()) {
        let m = random_digital_model(n, seed);
        let h = model_observable(&m).unwrap();
        let d = h.clone().dephased(mask % (1 << n));
        for z in 0..1usize << n {
            let s = StateVector::basis(n, z).unwrap();
            prop_assert!((h.expectation(s.amplitudes()) - d.expectation(s.amplitudes())).abs() < 1e-12);
        }
    }

    #[test]
    fn frozen_theta_is_immutable(seed in any::<u64>(), epochs in 0usize..4) {
        let mut m = random_digital_model(2, seed);
        let data = Dataset::new((0..4).map(|z| Sample { input: vec![z as f64], target: (z % 2) as f64 }).collect());
        let loss = Loss::Mse(data);
        let report = fit(&mut m, &loss, &[OptimizerConfig::adam(0.1, epochs)]).unwrap();
        prop_assert!(m.is_frozen());
        prop_assert_eq!(m.theta(), report.final_theta.as_slice());
        let theta = m.theta().to_vec();
        prop_assert!(matches!(m.set_theta(&vec![0.0; theta.len()]), Err(Error::Frozen)));
        prop_assert!(matches!(fit(&mut m, &loss, &[OptimizerConfig::adam(0.1, 1)]), Err(Error::Frozen)));
        prop_assert_eq!(m.theta(), theta.as_slice());
    }
}
