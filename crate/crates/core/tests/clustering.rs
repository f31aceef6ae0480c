use maxvne::cluster::*;
use maxvne::random;
use maxvne::spectral::SymMatrix;
use maxvne::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn labels(v: &[usize]) -> ClusterLabels {
    ClusterLabels::from_labels(v.to_vec()).unwrap()
}

fn block_kernel(sizes: &[usize]) -> (SymMatrix, Vec<usize>) {
    let truth: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect();
    let n = truth.len();
    let k = SymMatrix::from_fn(n, |i, j| if truth[i] == truth[j] { 1.0 } else { 0.0 }).unwrap();
    (k, truth)
}

#[test]
fn three_blocks_of_ones_are_recovered() {
    let (k, truth) = block_kernel(&[10, 10, 10]);
    let pred = spectral_cluster(&k, 3, 0).unwrap();
    let m = evaluate(&pred, &labels(&truth)).unwrap();
    assert_eq!((m.acc, m.nmi, m.ari), (1.0, 1.0, 1.0));
}

#[test]
fn block_counts_two_to_five_give_perfect_accuracy() {
    for c in 2..=5 {
        let sizes: Vec<usize> = (0..c).map(|i| 4 + 3 * i).collect();
        let (k, truth) = block_kernel(&sizes);
        let pred = spectral_cluster(&k, c, 7).unwrap();
        assert_eq!(acc(&pred, &labels(&truth)).unwrap(), 1.0, "c = {c}");
    }
}

#[test]
fn single_cluster_labels_everything_zero() {
    let (k, _) = block_kernel(&[5, 5]);
    let pred = spectral_cluster(&k, 1, 0).unwrap();
    assert!(pred.labels().iter().all(|&l| l == 0));
}

#[test]
fn one_cluster_per_point_has_zero_inertia() {
    let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
    let res = kmeans(&pts, 6, KMeansSettings::default(), 3).unwrap();
    assert_eq!(res.inertia, 0.0);
    let mut l = res.labels.clone();
    l.sort();
    assert_eq!(l, (0..6).collect::<Vec<_>>());
}

#[test]
fn zero_degree_affinity_is_reported() {
    let k = SymMatrix::from_diagonal(&[1.0, 0.0, 1.0]).unwrap();
    assert!(matches!(spectral_embedding(&k, 2), Err(Error::DegenerateAffinity(1))));
}

#[test]
fn metric_fixtures() {
    let a = labels(&[0, 0, 1, 1]);
    let b = labels(&[0, 1, 0, 1]);
    assert!(nmi(&a, &b).unwrap().abs() < 1e-12);
    assert!((ari(&a, &b).unwrap() + 0.5).abs() < 1e-12);
    assert_eq!(acc(&labels(&[0, 1, 1, 1]), &a).unwrap(), 0.75);
    let one = labels(&[0, 0, 0]);
    assert_eq!(nmi(&one, &one).unwrap(), 1.0);
    assert_eq!(ari(&one, &one).unwrap(), 1.0);
    let perm = labels(&[2, 2, 0, 0, 1, 1]);
    let base = labels(&[0, 0, 1, 1, 2, 2]);
    assert_eq!(acc(&perm, &base).unwrap(), 1.0);
    assert!((nmi(&perm, &base).unwrap() - 1.0).abs() < 1e-12);
    assert!((ari(&perm, &base).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn length_mismatch_is_an_error() {
    let a = labels(&[0, 1, 0]);
    let b = labels(&[0, 1]);
    assert!(matches!(nmi(&a, &b), Err(Error::LengthMismatch(..))));
    assert!(ari(&a, &b).is_err());
    assert!(acc(&a, &b).is_err());
}

#[test]
fn independent_labels_have_near_zero_nmi() {
    let mut rng = random::rng(12);
    let n = 20000;
    let a: Vec<usize> = (0..n).map(|i| i % 4).collect();
    let mut b: Vec<usize> = (0..n).map(|i| i % 5).collect();
    b.shuffle(&mut rng);
    let (a, b) = (labels(&a), labels(&b));
    assert!(nmi(&a, &b).unwrap() < 5e-3);
    assert!(ari(&a, &b).unwrap().abs() < 5e-3);
}

#[test]
fn kmeans_is_deterministic_per_seed() {
    let emb = random::gaussian_blobs(20, 3, 4, 3.0, 0.5, &mut random::rng(2)).unwrap();
    let pts: Vec<Vec<f64>> = emb.rows().row_iter().map(|r| r.iter().copied().collect()).collect();
    let a = kmeans(&pts, 3, KMeansSettings::default(), 5).unwrap();
    let b = kmeans(&pts, 3, KMeansSettings::default(), 5).unwrap();
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.inertia, b.inertia);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_are_relabeling_invariant(seed in 0u64..10_000, n in 2usize..40, c in 1usize..5) {
        let c = c.min(n);
        let mut rng = random::rng(seed);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let mut perm: Vec<usize> = (0..c).collect();
        perm.shuffle(&mut rng);
        let pa: Vec<usize> = a.iter().map(|&x| perm[x]).collect();
        let (a, b, pa) = (labels(&a), labels(&b), labels(&pa));
        prop_assert!((nmi(&a, &b).unwrap() - nmi(&pa, &b).unwrap()).abs() < 1e-12);
        prop_assert!((ari(&a, &b).unwrap() - ari(&pa, &b).unwrap()).abs() < 1e-12);
        prop_assert!((acc(&a, &b).unwrap() - acc(&pa, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn metric_ranges(seed in 0u64..10_000, n in 2usize..40, c in 1usize..6) {
        let c = c.min(n);
        let mut rng = random::rng(seed);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let (a, b) = (labels(&a), labels(&b));
        let m = nmi(&a, &b).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&m));
        prop_assert!((m - nmi(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(ari(&a, &b).unwrap() <= 1.0 + 1e-12);
        let x = acc(&a, &b).unwrap();
        prop_assert!(x > 0.0 && x <= 1.0);
    }
}
