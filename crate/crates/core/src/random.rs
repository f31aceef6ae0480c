//! Seeded random instances: orthogonal matrices, density matrices, Gaussian blobs.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::Result;
use crate::kernels::EmbeddingMatrix;
use crate::spectral::{DensityMatrix, SymMatrix};

/// Deterministic RNG used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian_matrix(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            let mut col = q.column_mut(k);
            col *= -1.0;
        }
    }
    q
}

/// Uniform point on the probability simplex (flat Dirichlet).
pub fn dirichlet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// `U diag(p) U^T` with Haar `U` and Dirichlet `p`.
pub fn density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix {
    let p = dirichlet(n, rng);
    from_spectrum(&p, rng)
}

/// Random state whose eigenvalues are all at least `floor`.
pub fn density_with_floor<R: Rng + ?Sized>(n: usize, floor: f64, rng: &mut R) -> DensityMatrix {
    let p: Vec<f64> = dirichlet(n, rng)
        .into_iter()
        .map(|x| floor + (1.0 - floor * n as f64) * x)
        .collect();
    from_spectrum(&p, rng)
}

/// Random rotation of a given spectrum.
pub fn from_spectrum<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> DensityMatrix {
    let n = p.len();
    let u = haar_orthogonal(n, rng);
    let m = &u * DMatrix::from_diagonal(&DVector::from_column_slice(p)) * u.transpose();
    DensityMatrix::from_psd(SymMatrix::symmetrized(m)).expect("rotated spectrum is a valid state")
}

/// Random symmetric matrix with standard normal entries on and above the diagonal.
pub fn symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymMatrix {
    let g = gaussian_matrix(n, n, rng);
    SymMatrix::symmetrized(&g + g.transpose())
}

/// `clusters` isotropic Gaussian blobs in `d` dimensions with labels.
///
/// Centres are `separation` times distinct coordinate axes, so `d >= clusters`
/// is required for them to be mutually orthogonal directions.
pub fn gaussian_blobs<R: Rng + ?Sized>(
    per_cluster: usize,
    clusters: usize,
    d: usize,
    separation: f64,
    noise: f64,
    rng: &mut R,
) -> Result<EmbeddingMatrix> {
    let n = per_cluster * clusters;
    let mut rows = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for c in 0..clusters {
        for _ in 0..per_cluster {
            for k in 0..d {
                let centre = if k == c % d { separation } else { 0.0 };
                let z: f64 = StandardNormal.sample(rng);
                rows.push(centre + noise * z);
            }
            labels.push(c as u32);
        }
    }
    EmbeddingMatrix::with_labels(DMatrix::from_row_slice(n, d, &rows), labels)
}
