use proptest::prelude::*;
use rand::Rng;

use proctens::basis::OperationBasis;
use proctens::channel::{compose, mix, Channel};
use proctens::cji::{cji_from_scenario, extract_average_map};
use proctens::evolution::{evolve, evolve_trajectory, evolve_with_causal_break, ControlSequence, Scenario};
use proctens::linalg::{self, c, ComplexMatrix, SubsystemShape};
use proctens::markov::{markov_product, markov_witness_standard, non_markovianity, Verdict, DEFAULT_TOL_MARKOV};
use proctens::process_tensor::ProcessTensor;
use proctens::scenarios::{
    self, factorized_random, haar_unitary, random_channel, random_density_matrix, random_kraus,
    random_trace_decreasing, seeded_rng,
};
use proctens::state::{relative_entropy, trace_distance, DensityMatrix};

fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    linalg::hermitian_part(&a)
}

fn random_controls<R: Rng>(d: usize, k: usize, rng: &mut R) -> ControlSequence {
    let channels = (0..k).map(|_| random_channel(d, d, 2, rng)).collect();
    ControlSequence::new(d, channels).unwrap()
}

fn small_scenario(seed: u64) -> Scenario {
    let mut rng = seeded_rng(seed);
    let de = rng.random_range(1..=3);
    let k = rng.random_range(1..=2);
    scenarios::random(2, de, k, &mut rng).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partial_trace_composes(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let shape = SubsystemShape::new(vec![2, 3, 2]).unwrap();
        let rho = random_density_matrix(12, 3, &mut rng);
        let joint = linalg::partial_trace(rho.matrix(), &shape, &[0]).unwrap();
        let step = linalg::partial_trace(rho.matrix(), &shape, &[0, 1]).unwrap();
        let step = linalg::partial_trace(&step, &SubsystemShape::new(vec![2, 3]).unwrap(), &[0]).unwrap();
        prop_assert!(linalg::max_abs_diff(&joint, &step) < 1e-12);
    }

    #[test]
    fn trace_distance_triangle(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let [a, b, m] = [0, 1, 2].map(|_| random_density_matrix(3, 3, &mut rng));
        let ab = trace_distance(&a, &b).unwrap();
        let am = trace_distance(&a, &m).unwrap();
        let mb = trace_distance(&m, &b).unwrap();
        prop_assert!(ab <= am + mb + 1e-10);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn relative_entropy_is_nonnegative(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let a = random_density_matrix(3, 3, &mut rng);
        let b = random_density_matrix(3, 3, &mut rng);
        let s = relative_entropy(&a, &b).unwrap();
        prop_assert!(s >= -1e-12);
        prop_assert!(s > 0.0 || trace_distance(&a, &b).unwrap() <= 1e-8);
        prop_assert!(relative_entropy(&a, &a).unwrap().abs() < 1e-10);
    }

    #[test]
    fn density_spectrum_is_a_distribution(seed in any::<u64>(), rank in 1usize..=4) {
        let mut rng = seeded_rng(seed);
        let ev = random_density_matrix(4, rank, &mut rng).eigenvalues();
        prop_assert!(ev.iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v)));
        prop_assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn choi_action_equals_kraus_sum(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = seeded_rng(seed);
        let kraus = random_kraus(3, 2, n, &mut rng);
        let ch = Channel::from_kraus(&kraus).unwrap();
        let rho = random_density_matrix(3, 3, &mut rng);
        let direct = kraus.iter().fold(linalg::zeros(2, 2), |acc, k| acc + k * rho.matrix() * k.adjoint());
        prop_assert!(linalg::max_abs_diff(&ch.apply_matrix(rho.matrix()).unwrap(), &direct) < 1e-11);
    }

    #[test]
    fn dual_set_reconstructs_operators(seed in any::<u64>(), d in 2usize..=3) {
        let mut rng = seeded_rng(seed);
        let basis = OperationBasis::standard(d).unwrap();
        let x = random_hermitian(d, &mut rng);
        let back = basis
            .preparations()
            .iter()
            .zip(basis.duals_prep())
            .fold(linalg::zeros(d, d), |acc, (p, dual)| acc + p.matrix() * (dual * &x).trace());
        prop_assert!(linalg::max_abs_diff(&back, &x) < 1e-9);
    }

    #[test]
    fn channels_decompose_over_the_basis(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let basis = OperationBasis::standard(2).unwrap();
        let ch = random_channel(2, 2, 3, &mut rng);
        let alpha = basis.expand_channel(&ch).unwrap();
        let rho = random_density_matrix(2, 2, &mut rng);
        let mut rebuilt = linalg::zeros(2, 2);
        for (mu, row) in alpha.iter().enumerate() {
            for (nu, &a) in row.iter().enumerate() {
                let el = Channel::measure_prepare(&basis.povm()[mu], &basis.preparations()[nu]).unwrap();
                rebuilt += el.apply_matrix(rho.matrix()).unwrap() * c(a, 0.0);
            }
        }
        prop_assert!(linalg::max_abs_diff(&rebuilt, &ch.apply_matrix(rho.matrix()).unwrap()) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trace_preserving_controls_keep_unit_trace(seed in any::<u64>()) {
        let sc = small_scenario(seed);
        let mut rng = seeded_rng(seed ^ 1);
        let controls = random_controls(2, sc.steps(), &mut rng);
        let traj = evolve_trajectory(&sc, &controls, sc.steps()).unwrap();
        for joint in &traj.joint {
            prop_assert!((linalg::trace(joint).re - 1.0).abs() < 1e-10);
            prop_assert!(DensityMatrix::new(joint.clone()).is_ok());
        }
    }

    #[test]
    fn evolution_is_linear_in_controls(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let sc = small_scenario(seed);
        let k = sc.steps();
        let mut rng = seeded_rng(seed ^ 2);
        let a = random_channel(2, 2, 2, &mut rng);
        let b = random_channel(2, 2, 2, &mut rng);
        let slot = rng.random_range(0..k);
        let with = |ch: Channel| {
            let mut seq = ControlSequence::identity(2, k);
            seq.set(slot, ch).unwrap();
            evolve(&sc, &seq, k).unwrap().into_matrix()
        };
        let mixed = with(mix(&[p, 1.0 - p], &[&a, &b]).unwrap());
        let expected = with(a.clone()) * c(p, 0.0) + with(b.clone()) * c(1.0 - p, 0.0);
        prop_assert!(linalg::max_abs_diff(&mixed, &expected) < 1e-10);
    }

    #[test]
    fn causal_breaks_average_to_a_reset(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let sc = scenarios::random(2, 2, 2, &mut rng).unwrap();
        let prep = random_density_matrix(2, 1, &mut rng);
        let prefix = random_controls(2, 1, &mut rng);
        let povm = OperationBasis::standard(2).unwrap().povm().to_vec();
        let mut averaged = linalg::zeros(2, 2);
        for effect in &povm {
            if let Ok((state, prob)) = evolve_with_causal_break(&sc, &prefix, effect, &prep, 1, 2) {
                averaged += state.matrix() * c(prob, 0.0);
            }
        }
        let mut reset = prefix.clone();
        reset.push(Channel::replace(2, &prep)).unwrap();
        let direct = evolve(&sc, &reset, 2).unwrap();
        prop_assert!(linalg::max_abs_diff(&averaged, direct.matrix()) < 1e-10);
    }

    #[test]
    fn tensor_matches_direct_evolution(seed in any::<u64>()) {
        let sc = small_scenario(seed);
        let k = sc.steps();
        let t = ProcessTensor::from_scenario_standard(&sc, k).unwrap();
        let mut rng = seeded_rng(seed ^ 3);
        let mut controls = random_controls(2, k, &mut rng);
        controls.set(0, random_trace_decreasing(2, 2, &mut rng)).unwrap();
        let a = t.apply(&controls).unwrap();
        let b = evolve(&sc, &controls, k).unwrap();
        prop_assert!(linalg::trace_norm_hermitian(&(a.matrix() - b.matrix())).unwrap() < 1e-8);
    }

    #[test]
    fn containment_nests(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let sc = scenarios::random(2, 2, 3, &mut rng).unwrap();
        let t = ProcessTensor::from_scenario_standard(&sc, 3).unwrap();
        let (j, kp) = (rng.random_range(0..=1), rng.random_range(2..=3));
        let (jj, kk) = (rng.random_range(j..=2), 2);
        let nested = t.contained(j, kp).unwrap().contained(jj, kk).unwrap();
        let direct = t.contained(jj, kk).unwrap();
        prop_assert_eq!(nested.steps(), direct.steps());
        prop_assert!(linalg::max_abs_diff(nested.matrix(), direct.matrix()) < 1e-9);
    }

    #[test]
    fn tensor_is_scaled_cji_state(seed in any::<u64>()) {
        let sc = small_scenario(seed);
        let k = sc.steps();
        let t = ProcessTensor::from_scenario_standard(&sc, k).unwrap();
        let u = cji_from_scenario(&sc, k).unwrap();
        let scaled = u.matrix() * c(2f64.powi(k as i32), 0.0);
        prop_assert!(linalg::max_abs_diff(t.matrix(), &scaled) < 1e-9);
    }

    #[test]
    fn closed_dynamics_have_pure_cji_states(seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = seeded_rng(seed);
        let psi = random_density_matrix(2, 1, &mut rng);
        let unitaries = (0..k).map(|_| haar_unitary(2, &mut rng)).collect();
        let sc = Scenario::new(2, 1, psi, unitaries, None).unwrap();
        prop_assert!((cji_from_scenario(&sc, k).unwrap().purity() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn factorized_dynamics_are_markovian(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let de = rng.random_range(1..=3);
        let sc = factorized_random(2, de, 2, &mut rng).unwrap();
        let u = cji_from_scenario(&sc, 2).unwrap();
        prop_assert!(linalg::max_abs_diff(u.matrix(), &markov_product(&u).unwrap()) < 1e-9);
        prop_assert!(non_markovianity(&u).unwrap() <= 1e-9);
        prop_assert_eq!(markov_witness_standard(&sc, DEFAULT_TOL_MARKOV).unwrap().verdict, Verdict::Markovian);
        let direct = extract_average_map(&u, 2, 0).unwrap();
        let stepwise = compose(&extract_average_map(&u, 2, 1).unwrap(), &extract_average_map(&u, 1, 0).unwrap()).unwrap();
        prop_assert!(linalg::max_abs_diff(direct.choi(), stepwise.choi()) < 1e-9);
    }

    #[test]
    fn flagged_processes_carry_measure(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let de = rng.random_range(1..=3);
        let sc = scenarios::random(2, de, 2, &mut rng).unwrap();
        let rep = markov_witness_standard(&sc, DEFAULT_TOL_MARKOV).unwrap();
        prop_assert!(rep.max_discrepancy >= 0.0);
        prop_assert_eq!(rep.verdict == Verdict::NonMarkovian, rep.max_discrepancy > rep.tol_markov);
        if rep.verdict == Verdict::NonMarkovian {
            let u = cji_from_scenario(&sc, sc.steps()).unwrap();
            prop_assert!(non_markovianity(&u).unwrap() > DEFAULT_TOL_MARKOV);
        }
    }

    #[test]
    fn causal_break_outputs_are_states(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let sc = scenarios::random(2, 2, 2, &mut rng).unwrap();
        let prep = random_density_matrix(2, 2, &mut rng);
        let effect = OperationBasis::standard(2).unwrap().povm()[rng.random_range(0..4)].clone();
        let (state, prob) = evolve_with_causal_break(&sc, &ControlSequence::identity(2, 1), &effect, &prep, 1, 2).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&prob));
        prop_assert!((linalg::trace(state.matrix()).re - 1.0).abs() < 1e-10);
    }
}
