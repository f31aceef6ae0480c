use approx::assert_abs_diff_eq;
use maxvne::random;
use maxvne::spectral::*;
use proptest::prelude::*;

fn fixed_pair() -> (DensityMatrix, DensityMatrix) {
    let r = SymMatrix::from_row_slice(3, &[0.5, 0.1, 0.0, 0.1, 0.3, 0.05, 0.0, 0.05, 0.2]).unwrap();
    let s = SymMatrix::from_row_slice(3, &[0.4, -0.05, 0.02, -0.05, 0.35, 0.0, 0.02, 0.0, 0.25]).unwrap();
    (DensityMatrix::new(r).unwrap(), DensityMatrix::new(s).unwrap())
}

// values computed with scipy.linalg.logm and numpy.linalg.eigvalsh
#[test]
fn matches_scipy_on_fixed_states() {
    let (r, s) = fixed_pair();
    assert_abs_diff_eq!(vne(&r), 0.9933187587390575, epsilon = 1e-12);
    assert_abs_diff_eq!(vne(&s), 1.0725686730498813, epsilon = 1e-12);
    let d = quantum_relative_entropy(&r, &s).unwrap().finite().unwrap();
    assert_abs_diff_eq!(d, 0.09192648486128507, epsilon = 1e-12);
    let eps = EpsilonFloor::new(0.01, 3).unwrap();
    assert_abs_diff_eq!(log_loss(&r, &s, eps).unwrap(), 1.0852452436003424, epsilon = 1e-12);
    assert_abs_diff_eq!(renyi_entropy(&r, 0.5).unwrap(), 1.0448094658759455, epsilon = 1e-12);
    assert_abs_diff_eq!(renyi_entropy(&r, 2.0).unwrap(), 0.9038682118755977, epsilon = 1e-12);
    assert_abs_diff_eq!(renyi_entropy(&r, 3.0).unwrap(), 0.8363219941689464, epsilon = 1e-12);
    assert_abs_diff_eq!(renyi2(&r), 0.9038682118755977, epsilon = 1e-12);
    assert_abs_diff_eq!(
        bregman_divergence(&r, &s, FGenerator::Square).unwrap(),
        0.0658,
        epsilon = 1e-12
    );
}

#[test]
fn log_loss_rejects_sigma_below_floor() {
    let rho = DensityMatrix::maximally_mixed(2);
    let sigma = DensityMatrix::from_diagonal(&[0.999, 0.001]).unwrap();
    let eps = EpsilonFloor::new(0.01, 2).unwrap();
    assert!(matches!(
        log_loss(&rho, &sigma, eps),
        Err(maxvne::Error::FloorViolation { .. })
    ));
}

fn arb_density(max_n: usize) -> impl Strategy<Value = DensityMatrix> {
    (1..=max_n, any::<u64>()).prop_map(|(n, seed)| random::density(n, &mut random::rng(seed)))
}

fn arb_pair(max_n: usize, floor: f64) -> impl Strategy<Value = (DensityMatrix, DensityMatrix)> {
    (2..=max_n, any::<u64>()).prop_map(move |(n, seed)| {
        let mut rng = random::rng(seed);
        let f = floor / n as f64;
        (
            random::density_with_floor(n, f, &mut rng),
            random::density_with_floor(n, f, &mut rng),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn entropy_is_bounded(rho in arb_density(8)) {
        let s = vne(&rho);
        prop_assert!(s >= -1e-12);
        prop_assert!(s <= (rho.dim() as f64).ln() + 1e-12);
    }

    #[test]
    fn entropy_is_unitarily_invariant(rho in arb_density(6), seed in any::<u64>()) {
        let q = random::haar_orthogonal(rho.dim(), &mut random::rng(seed));
        let rotated = SymMatrix::new(&q * rho.matrix().as_matrix() * q.transpose()).unwrap();
        let r2 = DensityMatrix::new(rotated).unwrap();
        prop_assert!((vne(&r2) - vne(&rho)).abs() <= 1e-10);
    }

    #[test]
    fn entropy_is_concave((a, b) in arb_pair(6, 0.0), w in 0.0f64..=1.0) {
        let mix = DensityMatrix::mixture(&[&a, &b], &[w, 1.0 - w]).unwrap();
        prop_assert!(vne(&mix) >= w * vne(&a) + (1.0 - w) * vne(&b) - 1e-10);
    }

    #[test]
    fn renyi_is_nonincreasing_in_order(rho in arb_density(6), a in 0.1f64..0.9, b in 1.1f64..5.0) {
        let s = vne(&rho);
        let ra = renyi_entropy(&rho, a).unwrap();
        let rb = renyi_entropy(&rho, b).unwrap();
        prop_assert!(ra >= s - 1e-10);
        prop_assert!(s >= rb - 1e-10);
        prop_assert!((renyi2(&rho) - renyi_entropy(&rho, 2.0).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn klein_and_decomposition((rho, sigma) in arb_pair(6, 0.1)) {
        let d = quantum_relative_entropy(&rho, &sigma).unwrap().value();
        prop_assert!(d >= -1e-10);
        let eps = EpsilonFloor::new(0.1 / rho.dim() as f64, rho.dim()).unwrap();
        let ll = log_loss(&rho, &sigma, eps).unwrap();
        prop_assert!((ll - vne(&rho) - d).abs() <= 1e-9);
    }

    #[test]
    fn f_losses_decompose((rho, sigma) in arb_pair(5, 0.1), alpha in prop_oneof![0.2f64..0.9, 1.2f64..4.0]) {
        for f in [FGenerator::XLogX, FGenerator::Square, FGenerator::Power(3.0), FGenerator::power(alpha).unwrap()] {
            let lf = f_loss(&rho, &sigma, f).unwrap();
            let h = trace_entropy(&rho, f).unwrap();
            let b = bregman_divergence(&rho, &sigma, f).unwrap();
            prop_assert!((lf - h - b).abs() <= 1e-9);
            prop_assert!(b >= -1e-10);
            // the loss is smallest at sigma = rho
            prop_assert!(lf >= f_loss(&rho, &rho, f).unwrap() - 1e-10);
        }
    }

    #[test]
    fn xlogx_bregman_is_relative_entropy((rho, sigma) in arb_pair(5, 0.1)) {
        let b = bregman_divergence(&rho, &sigma, FGenerator::XLogX).unwrap();
        let d = quantum_relative_entropy(&rho, &sigma).unwrap().value();
        prop_assert!((b - d).abs() <= 1e-9);
    }

    #[test]
    fn log_then_exp_round_trips((rho, _) in arb_pair(6, 0.2)) {
        let back = matrix_function(&rho.log().unwrap(), f64::exp).unwrap();
        prop_assert!(back.sub(rho.matrix()).frobenius_norm() <= 1e-8);
    }

    #[test]
    fn eigenvalues_form_a_distribution(rho in arb_density(8)) {
        let p = rho.spectrum();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(p.windows(2).all(|w| w[0] <= w[1]));
    }
}
