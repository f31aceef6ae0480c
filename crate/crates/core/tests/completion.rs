use maxvne::completion::*;
use maxvne::kernels::{build_kernel, KernelKind, KernelMatrix};
use maxvne::random;
use maxvne::spectral::{renyi2, vne, DensityMatrix, SymMatrix};
use maxvne::{EmbeddingMatrix, Error};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn cosine_kernel(n: usize, d: usize, seed: u64) -> KernelMatrix {
    let mut rng = random::rng(seed);
    let emb = EmbeddingMatrix::new(random::gaussian_matrix(n, d, &mut rng)).unwrap();
    build_kernel(&emb, KernelKind::Cosine).unwrap()
}

fn dense_rho(u: &DMatrix<f64>) -> DensityMatrix {
    let k = u * u.transpose();
    let t = k.trace();
    DensityMatrix::new(SymMatrix::new(k / t).unwrap()).unwrap()
}

#[test]
fn mask_generator_counts_pairs() {
    let k = cosine_kernel(100, 5, 3);
    let mask = mask_generator(&k, 0.1, 9).unwrap();
    assert_eq!(mask.off_diagonal_count(), 495);
    assert_eq!(mask.len(), 595);
    assert!(mask.include_diagonal());
    for (i, j, v) in mask.entries() {
        assert!(i <= j);
        assert_eq!(v, k.matrix().get(i, j));
    }
}

#[test]
fn mask_generator_is_deterministic_per_seed() {
    let k = cosine_kernel(40, 4, 1);
    let a = mask_generator(&k, 0.3, 5).unwrap();
    let b = mask_generator(&k, 0.3, 5).unwrap();
    let c = mask_generator(&k, 0.3, 6).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn full_fraction_observes_everything() {
    let k = cosine_kernel(12, 3, 2);
    let mask = mask_generator(&k, 1.0, 0).unwrap();
    assert_eq!(mask.off_diagonal_count(), 66);
    assert_eq!(
        mask.entries().collect::<Vec<_>>(),
        ObservationMask::full(&k).unwrap().entries().collect::<Vec<_>>()
    );
}

#[test]
fn fraction_out_of_range_is_rejected() {
    let k = cosine_kernel(5, 2, 0);
    assert!(mask_generator(&k, 0.0, 0).is_err());
    assert!(mask_generator(&k, 1.5, 0).is_err());
}

#[test]
fn mask_rejects_duplicates_and_bad_diagonals() {
    assert!(matches!(
        ObservationMask::new(3, vec![(0, 1, 0.5), (1, 0, 0.5)], true),
        Err(Error::DuplicatePair(0, 1))
    ));
    assert!(matches!(
        ObservationMask::new(3, vec![(0, 3, 0.5)], true),
        Err(Error::OutOfRange(0, 3))
    ));
    assert!(ObservationMask::new(3, vec![(1, 1, 0.5)], true).is_err());
    assert!(ObservationMask::new(3, vec![(0, 1, f64::NAN)], true).is_err());
}

#[test]
fn diagonal_only_mask_is_feasible() {
    let mask = ObservationMask::diagonal_only(6).unwrap();
    assert_eq!(feasible_set_check(&mask).unwrap().checked_pairs, 0);
}

#[test]
fn cauchy_schwarz_violation_is_reported() {
    let mask = ObservationMask::new(3, vec![(0, 1, 1.5), (1, 2, 0.2)], true).unwrap();
    match feasible_set_check(&mask) {
        Err(Error::InfeasibleObservation(pairs)) => assert_eq!(pairs, vec![(0, 1)]),
        other => panic!("expected a violation, got {other:?}"),
    }
}

#[test]
fn cosine_submask_is_feasible() {
    let k = cosine_kernel(30, 6, 4);
    let mask = mask_generator(&k, 0.4, 2).unwrap();
    let diag = feasible_set_check(&mask).unwrap();
    assert_eq!(diag.checked_pairs, mask.off_diagonal_count());
}

#[test]
fn purity_fixtures() {
    let n = 5;
    let q = random::haar_orthogonal(n, &mut random::rng(1)) * 0.7;
    assert!((purity_objective(&q).unwrap().value - 1.0 / n as f64).abs() < 1e-12);
    let v = DMatrix::from_column_slice(4, 1, &[1.0, -2.0, 0.5, 3.0]);
    assert!((purity_objective(&v).unwrap().value - 1.0).abs() < 1e-12);
    let u = random::gaussian_matrix(6, 3, &mut random::rng(7));
    let dense = (-renyi2(&dense_rho(&u))).exp();
    assert!((purity_objective(&u).unwrap().value - dense).abs() < 1e-12);
}

#[test]
fn logdet_fixtures() {
    let r = 4;
    let floor = 1e-8;
    let q = random::haar_orthogonal(r, &mut random::rng(2)) * 1.3;
    let j = logdet_surrogate_objective(&q, floor).unwrap().value;
    assert!((j - r as f64 * (1.0 / r as f64 + floor).ln()).abs() < 1e-10);

    let mut u = random::gaussian_matrix(6, 3, &mut random::rng(3));
    u.column_mut(2).fill(0.0);
    let j = logdet_surrogate_objective(&u, floor).unwrap().value;
    assert!(j < floor.ln() + 1.0);

    let u = random::gaussian_matrix(6, 3, &mut random::rng(5));
    let rho = dense_rho(&u);
    let mut eigs = rho.spectrum().to_vec();
    eigs.sort_by(|a, b| b.total_cmp(a));
    let dense: f64 = eigs[..3].iter().map(|l| (l + floor).ln()).sum();
    assert!((logdet_surrogate_objective(&u, floor).unwrap().value - dense).abs() < 1e-10);
}

#[test]
fn zero_factor_is_an_error() {
    let u = DMatrix::zeros(4, 2);
    assert!(matches!(purity_objective(&u), Err(Error::ZeroFactor)));
    assert!(matches!(logdet_surrogate_objective(&u, 1e-8), Err(Error::ZeroFactor)));
}

#[test]
fn factor_objectives_match_dense_evaluation() {
    for seed in 0..10u64 {
        let n = 10 + 4 * seed as usize;
        let r = 2 + seed as usize % 5;
        let u = initial_factor(n, r, seed);
        let rho = dense_rho(&u);
        let p = purity_objective(&u).unwrap().value;
        assert!((p - (-renyi2(&rho)).exp()).abs() < 1e-10);
        let mut eigs = rho.spectrum().to_vec();
        eigs.sort_by(|a, b| b.total_cmp(a));
        let dense: f64 = eigs[..r].iter().map(|l| (l + 1e-8).ln()).sum();
        assert!((logdet_surrogate_objective(&u, 1e-8).unwrap().value - dense).abs() < 1e-10);
    }
}

#[test]
fn fully_observed_mask_reproduces_the_kernel() {
    let k = cosine_kernel(12, 3, 11);
    let mut problem = CompletionProblem::new(ObservationMask::full(&k).unwrap(), CompletionObjective::Renyi2Purity);
    problem.rank = 6;
    problem.seed = 3;
    problem.optimizer.learning_rate = 1e-2;
    problem.optimizer.max_iters = 20000;
    let res = complete_kernel(&problem).unwrap();
    let truth = vne(&DensityMatrix::from_psd(k.matrix().clone()).unwrap());
    assert!(res.constraint_residual <= 1e-3, "residual {}", res.constraint_residual);
    assert!((res.vne() - truth).abs() <= 1e-2, "{} vs {truth}", res.vne());
}

#[test]
fn two_point_purity_completion_decouples() {
    let mut problem = CompletionProblem::new(
        ObservationMask::diagonal_only(2).unwrap(),
        CompletionObjective::Renyi2Purity,
    );
    problem.rank = 2;
    problem.seed = 1;
    problem.optimizer.learning_rate = 1e-2;
    let res = complete_kernel(&problem).unwrap();
    assert!(res.k_hat.matrix().get(0, 1).abs() < 1e-2);
    let purity = (-renyi2(&res.rho_hat)).exp();
    assert!((purity - 0.5).abs() < 1e-3);
}

#[test]
fn completion_outputs_are_trace_normalized_psd() {
    let k = cosine_kernel(25, 4, 6);
    let mask = mask_generator(&k, 0.2, 1).unwrap();
    for objective in [CompletionObjective::Renyi2Purity, CompletionObjective::VneLogDet] {
        let mut problem = CompletionProblem::new(mask.clone(), objective);
        problem.rank = 10;
        problem.optimizer.max_iters = 800;
        let res = complete_kernel(&problem).unwrap();
        let m = res.k_hat.matrix();
        assert!((m.trace() - 25.0).abs() <= 1e-9);
        assert!(m.eigen().unwrap().min() >= -1e-10);
        assert!(res.objective_trace.last().unwrap() <= res.objective_trace.first().unwrap());
        assert!(res.constraint_residual <= res.initial_residual);
    }
}

#[test]
fn infeasible_observations_stop_completion() {
    let mask = ObservationMask::new(3, vec![(0, 2, -1.2)], true).unwrap();
    let problem = CompletionProblem::new(mask, CompletionObjective::Renyi2Purity);
    assert!(matches!(
        complete_kernel(&problem),
        Err(Error::InfeasibleObservation(_))
    ));
}

#[test]
fn invalid_rank_is_rejected() {
    let mut problem = CompletionProblem::new(
        ObservationMask::diagonal_only(4).unwrap(),
        CompletionObjective::VneLogDet,
    );
    problem.rank = 5;
    assert!(complete_kernel(&problem).is_err());
    problem.rank = 0;
    assert!(complete_kernel(&problem).is_err());
}

#[test]
fn completion_is_deterministic() {
    let k = cosine_kernel(20, 3, 8);
    let mask = mask_generator(&k, 0.3, 2).unwrap();
    let mut problem = CompletionProblem::new(mask, CompletionObjective::Renyi2Purity);
    problem.rank = 5;
    problem.optimizer.max_iters = 300;
    let a = complete_kernel(&problem).unwrap();
    let b = complete_kernel(&problem).unwrap();
    assert_eq!(a.k_hat, b.k_hat);
    assert_eq!(a.objective_trace, b.objective_trace);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn purity_lies_between_inverse_rank_and_one(n in 3usize..12, r in 1usize..5, seed in 0u64..1000) {
        let r = r.min(n);
        let u = initial_factor(n, r, seed);
        let p = purity_objective(&u).unwrap().value;
        prop_assert!(p >= 1.0 / r as f64 - 1e-12 && p <= 1.0 + 1e-12);
    }

    #[test]
    fn objectives_are_scale_invariant(seed in 0u64..1000, c in 0.1f64..10.0) {
        let u = initial_factor(8, 3, seed);
        let scaled = &u * c;
        let p = purity_objective(&u).unwrap().value;
        prop_assert!((purity_objective(&scaled).unwrap().value - p).abs() < 1e-12);
        let j = logdet_surrogate_objective(&u, 1e-8).unwrap().value;
        prop_assert!((logdet_surrogate_objective(&scaled, 1e-8).unwrap().value - j).abs() < 1e-9);
    }

    #[test]
    fn generated_masks_are_sorted_and_sized(n in 2usize..30, frac in 0.05f64..1.0, seed in 0u64..100) {
        let k = KernelMatrix::new(SymMatrix::identity(n), KernelKind::Custom).unwrap();
        let mask = mask_generator(&k, frac, seed).unwrap();
        let total = n * (n - 1) / 2;
        prop_assert_eq!(mask.off_diagonal_count(), ((frac * total as f64) - 1e-9).ceil() as usize);
        let keys: Vec<_> = mask.entries().map(|(i, j, _)| (i, j)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        prop_assert_eq!(keys, sorted);
    }
}
