//! Symmetric matrices, density matrices and spectral entropy functionals.
//!
//! Every functional here is evaluated on the spectrum of a real symmetric
//! matrix. Entropies are in nats and use the convention `0 log 0 = 0`.
//!
//! A [`DensityMatrix`] is a symmetric positive semidefinite matrix with unit
//! trace. Eigenvalues in `[-1e-10, 0)` are treated as floating-point drift and
//! clamped to zero; anything more negative is rejected.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance on negative eigenvalues of a PSD matrix.
pub const TOL_PSD: f64 = 1e-10;
/// Absolute tolerance on `|Tr(rho) - 1|`.
pub const TOL_TRACE: f64 = 1e-10;
/// Eigenvalues of `sigma` below this value span its kernel in relative entropy.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Maximum mass `rho` may place on the kernel of `sigma`.
const SUPPORT_MASS_TOL: f64 = 1e-10;

/// Dense real symmetric matrix.
///
/// Construction symmetrizes the input as `(M + M^T) / 2`, so
/// `m[(i, j)] == m[(j, i)]` holds bit for bit afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::Empty);
        }
        if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
            let n = m.nrows();
            return Err(Error::NonFinite(format!("({}, {})", pos % n, pos / n)));
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, f))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `<A, B> = Tr(A B)` for symmetric operands.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        Self(&self.0 * s)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        Self(&self.0 - &other.0)
    }

    /// Eigendecomposition with eigenvalues in ascending order.
    pub fn eigen(&self) -> Result<Eigen> {
        Eigen::of(&self.0)
    }
}

/// Largest `|m[i][j] - m[j][i]|` of a square matrix.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetric eigendecomposition `M = V diag(values) V^T`, values ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    fn of(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        // Householder tridiagonalization followed by implicit symmetric QR.
        let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 1000 * n.max(10)).ok_or(Error::EigenFailure)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigenFailure);
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.dim() - 1]
    }

    /// `V diag(f(values)) V^T`.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[k]);
        }
        &scaled * self.vectors.transpose()
    }

    /// Diagonal of `V^T A V`: the weight `A` puts on each eigenvector.
    pub fn overlaps(&self, a: &DMatrix<f64>) -> Vec<f64> {
        let av = a * &self.vectors;
        (0..self.dim())
            .map(|k| self.vectors.column(k).dot(&av.column(k)))
            .collect()
    }
}

/// Applies a scalar function through the eigendecomposition, `V f(L) V^T`.
pub fn matrix_function(m: &SymMatrix, f: impl FnMut(f64) -> f64) -> Result<SymMatrix> {
    let out = m.eigen()?.map(f);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix function output".into()));
    }
    Ok(SymMatrix::symmetrized(out))
}

/// Unit-trace positive semidefinite symmetric matrix.
///
/// The eigendecomposition is computed once at construction, since validity
/// depends on it, and never changes afterwards.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: SymMatrix,
    eigen: Eigen,
    probs: Vec<f64>,
}

impl DensityMatrix {
    /// Validates a matrix that should already have unit trace.
    pub fn new(mat: SymMatrix) -> Result<Self> {
        let tr = mat.trace();
        if (tr - 1.0).abs() > TOL_TRACE {
            return Err(Error::BadTrace(tr));
        }
        Self::checked(mat)
    }

    /// Divides a PSD matrix by its trace.
    pub fn from_psd(mat: SymMatrix) -> Result<Self> {
        let tr = mat.trace();
        if !(tr > 0.0) {
            return Err(Error::ZeroTrace);
        }
        Self::checked(mat.scale(1.0 / tr))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self::from_psd(SymMatrix::identity(n)).expect("identity is a valid state")
    }

    /// Diagonal state with the given probabilities.
    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(SymMatrix::from_diagonal(probs)?)
    }

    /// Projector onto the span of `v`.
    pub fn pure(v: &[f64]) -> Result<Self> {
        let v = DVector::from_column_slice(v);
        Self::from_psd(SymMatrix::new(&v * v.transpose())?)
    }

    fn checked(mat: SymMatrix) -> Result<Self> {
        let eigen = mat.eigen()?;
        if eigen.min() < -TOL_PSD {
            return Err(Error::NotPsd(eigen.min()));
        }
        let mut probs: Vec<f64> = eigen.values.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroTrace);
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(Self { mat, eigen, probs })
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.mat
    }

    pub fn eigen(&self) -> &Eigen {
        &self.eigen
    }

    /// Clamped, renormalized eigenvalues in ascending order.
    pub fn spectrum(&self) -> &[f64] {
        &self.probs
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.probs[0]
    }

    /// `Tr(rho^2)` from the entries, no eigendecomposition involved.
    pub fn purity(&self) -> f64 {
        self.mat.as_matrix().norm_squared()
    }

    /// `log(rho)`, defined only for strictly positive states.
    pub fn log(&self) -> Result<SymMatrix> {
        if !(self.min_eigenvalue() > 0.0) {
            return Err(Error::DomainError(self.min_eigenvalue()));
        }
        let probs = &self.probs;
        let mut k = 0;
        let out = self.eigen.map(|_| {
            let v = probs[k].ln();
            k += 1;
            v
        });
        Ok(SymMatrix::symmetrized(out))
    }

    /// Convex combination `sum_k w_k rho_k`.
    pub fn mixture(states: &[&DensityMatrix], weights: &[f64]) -> Result<DensityMatrix> {
        if states.is_empty() {
            return Err(Error::Empty);
        }
        if states.len() != weights.len() {
            return Err(Error::LengthMismatch(states.len(), weights.len()));
        }
        let n = states[0].dim();
        let mut acc = DMatrix::zeros(n, n);
        for (s, &w) in states.iter().zip(weights) {
            check_dims(n, s.dim())?;
            acc += s.matrix().as_matrix() * w;
        }
        Self::from_psd(SymMatrix::new(acc)?)
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Lower bound `eps` on the spectrum, with `0 < eps < 1/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonFloor {
    eps: f64,
}

impl EpsilonFloor {
    pub fn new(eps: f64, n: usize) -> Result<Self> {
        if eps > 0.0 && eps * (n as f64) < 1.0 {
            Ok(Self { eps })
        } else {
            Err(Error::InvalidEpsilon { eps, n })
        }
    }

    pub fn value(&self) -> f64 {
        self.eps
    }

    /// Whether `eps * n < 1` holds for dimension `n`.
    pub fn admits(&self, n: usize) -> bool {
        self.eps * (n as f64) < 1.0
    }
}

/// Convex generator `f` of a trace entropy `H_f(rho) = -Tr f(rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FGenerator {
    /// `t log t`; gives the von Neumann entropy.
    XLogX,
    /// `t^2`; gives minus the purity.
    Square,
    /// `sign(alpha - 1) * t^alpha`, convex for every `alpha > 0`, `alpha != 1`.
    Power(f64),
}

impl FGenerator {
    pub fn power(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha != 1.0 && alpha.is_finite() {
            Ok(FGenerator::Power(alpha))
        } else {
            Err(Error::InvalidAlpha(alpha))
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            FGenerator::Power(a) => Self::power(a).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// `f(t)` on `t >= 0`; every supported generator extends continuously to 0.
    pub fn value(&self, t: f64) -> Result<f64> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::DomainError(t));
        }
        Ok(match *self {
            FGenerator::XLogX => xlogx(t),
            FGenerator::Square => t * t,
            FGenerator::Power(a) => power_sign(a) * t.powf(a),
        })
    }

    /// `f'(t)`; `XLogX` and `Power(alpha < 1)` need `t > 0`.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::DomainError(t));
        }
        match *self {
            FGenerator::XLogX if t > 0.0 => Ok(t.ln() + 1.0),
            FGenerator::Square => Ok(2.0 * t),
            FGenerator::Power(a) if a > 1.0 || t > 0.0 => Ok(power_sign(a) * a * t.powf(a - 1.0)),
            _ => Err(Error::DomainError(t)),
        }
    }
}

fn power_sign(alpha: f64) -> f64 {
    if alpha > 1.0 {
        1.0
    } else {
        -1.0
    }
}

fn xlogx(t: f64) -> f64 {
    if t > 0.0 {
        t * t.ln()
    } else {
        0.0
    }
}

/// Von Neumann entropy `-sum l log l`, with `0 log 0 = 0`.
pub fn vne(rho: &DensityMatrix) -> f64 {
    -rho.spectrum().iter().map(|&l| xlogx(l)).sum::<f64>()
}

/// Renyi entropy of order `alpha` on the spectrum, `0 log 0 = 0` terms vanish.
pub fn renyi_entropy(rho: &DensityMatrix, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::InvalidAlpha(alpha));
    }
    let s: f64 = rho
        .spectrum()
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l.powf(alpha))
        .sum();
    Ok(s.ln() / (1.0 - alpha))
}

/// Order-2 Renyi entropy `-log Tr(rho^2)`, read off the Frobenius norm.
pub fn renyi2(rho: &DensityMatrix) -> f64 {
    -rho.purity().ln()
}

/// Relative entropy, which is infinite when the support condition fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn value(&self) -> f64 {
        match *self {
            Divergence::Finite(v) => v,
            Divergence::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Divergence::Infinite)
    }

    pub fn finite(self) -> Result<f64> {
        match self {
            Divergence::Finite(v) => Ok(v),
            Divergence::Infinite => Err(Error::SupportViolation),
        }
    }
}

/// `Tr(rho (log rho - log sigma))`.
///
/// Eigenvalues of `sigma` below `1e-12` span its kernel; if `rho` puts more
/// than `1e-10` mass there the result is [`Divergence::Infinite`].
pub fn quantum_relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Divergence> {
    check_dims(rho.dim(), sigma.dim())?;
    let overlaps = sigma.eigen().overlaps(rho.matrix().as_matrix());
    let mut cross = 0.0;
    for (&mu, &w) in sigma.spectrum().iter().zip(&overlaps) {
        if mu < SUPPORT_TOL {
            if w > SUPPORT_MASS_TOL {
                return Ok(Divergence::Infinite);
            }
        } else {
            cross += w * mu.ln();
        }
    }
    Ok(Divergence::Finite(-vne(rho) - cross))
}

/// Quantum log loss `-Tr(rho log sigma)` for `sigma >= eps I`.
pub fn log_loss(rho: &DensityMatrix, sigma: &DensityMatrix, eps: EpsilonFloor) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    let min = sigma.min_eigenvalue();
    if min < eps.value() - 1e-12 {
        return Err(Error::FloorViolation { min, eps: eps.value() });
    }
    Ok(log_loss_unchecked(rho, sigma))
}

/// `-Tr(rho log sigma)` for strictly positive `sigma`, no floor check.
pub(crate) fn log_loss_unchecked(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let overlaps = sigma.eigen().overlaps(rho.matrix().as_matrix());
    -sigma
        .spectrum()
        .iter()
        .zip(&overlaps)
        .map(|(&mu, &w)| w * mu.ln())
        .sum::<f64>()
}

/// Trace entropy `-Tr f(rho)`.
pub fn trace_entropy(rho: &DensityMatrix, f: FGenerator) -> Result<f64> {
    f.validate()?;
    let mut s = 0.0;
    for &l in rho.spectrum() {
        s += f.value(l)?;
    }
    Ok(-s)
}

/// `Tr(f(sigma)) + Tr(f'(sigma)(rho - sigma))`, the tangent of `Tr f` at `sigma`.
fn tangent_at(rho: &DensityMatrix, sigma: &DensityMatrix, f: FGenerator) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    f.validate()?;
    let overlaps = sigma.eigen().overlaps(rho.matrix().as_matrix());
    let mut s = 0.0;
    for (&mu, &w) in sigma.spectrum().iter().zip(&overlaps) {
        s += f.value(mu)? + f.derivative(mu)? * (w - mu);
    }
    Ok(s)
}

/// Matrix Bregman divergence `Tr(f(rho) - f(sigma) - f'(sigma)(rho - sigma))`.
pub fn bregman_divergence(rho: &DensityMatrix, sigma: &DensityMatrix, f: FGenerator) -> Result<f64> {
    let tangent = tangent_at(rho, sigma, f)?;
    Ok(-trace_entropy(rho, f)? - tangent)
}

/// Loss `-Tr(f(sigma) + f'(sigma)(rho - sigma))`, affine in `rho`.
pub fn f_loss(rho: &DensityMatrix, sigma: &DensityMatrix, f: FGenerator) -> Result<f64> {
    Ok(-tangent_at(rho, sigma, f)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn diag(p: &[f64]) -> DensityMatrix {
        DensityMatrix::from_diagonal(p).unwrap()
    }

    #[test]
    fn symmetrizes_on_construction() {
        let m = SymMatrix::from_row_slice(2, &[1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            SymMatrix::new(DMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
        assert_eq!(SymMatrix::new(DMatrix::zeros(0, 0)), Err(Error::Empty));
        assert!(matches!(
            SymMatrix::from_row_slice(1, &[f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn eigen_is_ascending_and_orthonormal() {
        let m = SymMatrix::from_row_slice(3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]).unwrap();
        let e = m.eigen().unwrap();
        assert!(e.values[0] <= e.values[1] && e.values[1] <= e.values[2]);
        let vtv = e.vectors.transpose() * &e.vectors;
        assert_abs_diff_eq!((vtv - DMatrix::identity(3, 3)).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((e.map(|x| x) - m.as_matrix()).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn density_validation() {
        assert!(matches!(
            DensityMatrix::new(SymMatrix::from_diagonal(&[0.5, 0.6]).unwrap()),
            Err(Error::BadTrace(_))
        ));
        assert!(matches!(
            DensityMatrix::new(SymMatrix::from_diagonal(&[1.1, -0.1]).unwrap()),
            Err(Error::NotPsd(_))
        ));
        let drift = diag(&[1.0 + 5e-11, -5e-11]);
        assert_eq!(drift.spectrum()[0], 0.0);
        assert_abs_diff_eq!(drift.spectrum().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn vne_examples() {
        assert_abs_diff_eq!(vne(&DensityMatrix::maximally_mixed(4)), 4f64.ln(), epsilon = 1e-12);
        assert_eq!(vne(&diag(&[1.0, 0.0, 0.0])), 0.0);
        assert_abs_diff_eq!(vne(&diag(&[0.5, 0.25, 0.25])), 1.5 * LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(1.5 * LN_2, 1.039721, epsilon = 1e-6);
    }

    #[test]
    fn renyi_examples() {
        for alpha in [0.3, 0.5, 2.0, 7.0] {
            assert_abs_diff_eq!(
                renyi_entropy(&DensityMatrix::maximally_mixed(5), alpha).unwrap(),
                5f64.ln(),
                epsilon = 1e-12
            );
        }
        assert_abs_diff_eq!(
            renyi_entropy(&diag(&[0.5, 0.5, 0.0]), 2.0).unwrap(),
            LN_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(renyi_entropy(&diag(&[1.0, 0.0]), 0.5).unwrap(), 0.0, epsilon = 1e-15);
        let rho = diag(&[0.5, 0.5]);
        assert_eq!(renyi_entropy(&rho, 1.0), Err(Error::InvalidAlpha(1.0)));
        assert_eq!(renyi_entropy(&rho, 0.0), Err(Error::InvalidAlpha(0.0)));
        assert_eq!(renyi_entropy(&rho, -1.0), Err(Error::InvalidAlpha(-1.0)));
    }

    #[test]
    fn renyi2_examples() {
        assert_abs_diff_eq!(renyi2(&DensityMatrix::maximally_mixed(8)), 8f64.ln(), epsilon = 1e-12);
        let p = DensityMatrix::pure(&[1.0, 2.0, -1.0]).unwrap();
        assert_abs_diff_eq!(renyi2(&p), 0.0, epsilon = 1e-12);
        let r = diag(&[0.7, 0.3]);
        assert_abs_diff_eq!(renyi2(&r), -(0.58f64).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(renyi2(&r), 0.544727, epsilon = 1e-6);
        assert_abs_diff_eq!(renyi2(&r), renyi_entropy(&r, 2.0).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn relative_entropy_examples() {
        let r = diag(&[0.2, 0.3, 0.5]);
        assert_abs_diff_eq!(quantum_relative_entropy(&r, &r).unwrap().value(), 0.0, epsilon = 1e-14);
        let d = quantum_relative_entropy(&diag(&[1.0, 0.0]), &diag(&[0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(d.value(), LN_2, epsilon = 1e-12);
        let inf = quantum_relative_entropy(&diag(&[0.5, 0.5]), &diag(&[1.0, 0.0])).unwrap();
        assert!(inf.is_infinite());
        assert_eq!(inf.finite(), Err(Error::SupportViolation));
    }

    #[test]
    fn log_loss_examples() {
        let eps = EpsilonFloor::new(0.01, 3).unwrap();
        let r = diag(&[0.2, 0.3, 0.5]);
        assert_abs_diff_eq!(log_loss(&r, &r, eps).unwrap(), vne(&r), epsilon = 1e-12);
        let e2 = EpsilonFloor::new(0.1, 2).unwrap();
        assert_abs_diff_eq!(
            log_loss(&diag(&[1.0, 0.0]), &diag(&[0.5, 0.5]), e2).unwrap(),
            LN_2,
            epsilon = 1e-12
        );
        let m3 = DensityMatrix::maximally_mixed(3);
        assert_abs_diff_eq!(log_loss(&m3, &m3, eps).unwrap(), 3f64.ln(), epsilon = 1e-12);
        assert!(matches!(
            log_loss(&m3, &diag(&[0.995, 0.005]), e2),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            log_loss(&diag(&[0.5, 0.5]), &diag(&[0.95, 0.05]), e2),
            Err(Error::FloorViolation { .. })
        ));
    }

    #[test]
    fn epsilon_floor_bounds() {
        assert!(EpsilonFloor::new(0.0, 3).is_err());
        assert!(EpsilonFloor::new(1.0 / 3.0, 3).is_err());
        assert!(EpsilonFloor::new(0.3, 3).is_ok());
    }

    #[test]
    fn trace_entropy_examples() {
        let half = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(trace_entropy(&half, FGenerator::XLogX).unwrap(), LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(
            trace_entropy(&DensityMatrix::maximally_mixed(4), FGenerator::Square).unwrap(),
            -0.25,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            trace_entropy(&diag(&[0.5, 0.5]), FGenerator::Power(3.0)).unwrap(),
            -0.25,
            epsilon = 1e-15
        );
        assert_eq!(
            trace_entropy(&half, FGenerator::Power(1.0)),
            Err(Error::InvalidAlpha(1.0))
        );
        // pure states are fine for every generator value
        assert_eq!(trace_entropy(&diag(&[1.0, 0.0]), FGenerator::Power(0.5)).unwrap(), 1.0);
    }

    #[test]
    fn bregman_examples() {
        let r = diag(&[0.2, 0.8]);
        for f in [
            FGenerator::XLogX,
            FGenerator::Square,
            FGenerator::Power(3.0),
            FGenerator::Power(0.5),
        ] {
            assert_abs_diff_eq!(bregman_divergence(&r, &r, f).unwrap(), 0.0, epsilon = 1e-14);
        }
        let rho = diag(&[1.0, 0.0]);
        let sigma = diag(&[0.5, 0.5]);
        assert_abs_diff_eq!(
            bregman_divergence(&rho, &sigma, FGenerator::Square).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            bregman_divergence(&rho, &sigma, FGenerator::XLogX).unwrap(),
            quantum_relative_entropy(&rho, &sigma).unwrap().value(),
            epsilon = 1e-9
        );
        // XLogX needs sigma strictly positive
        assert!(matches!(
            bregman_divergence(&sigma, &rho, FGenerator::XLogX),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn f_loss_examples() {
        let rho = diag(&[1.0, 0.0]);
        let sigma = diag(&[0.5, 0.5]);
        // -1 entropy plus 0.5 regret
        let l = f_loss(&rho, &sigma, FGenerator::Square).unwrap();
        assert_abs_diff_eq!(l, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_entropy(&rho, FGenerator::Square).unwrap(), -1.0, epsilon = 1e-15);
        let half = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(f_loss(&half, &half, FGenerator::XLogX).unwrap(), LN_2, epsilon = 1e-12);
        let r = diag(&[0.1, 0.3, 0.6]);
        for f in [FGenerator::XLogX, FGenerator::Square, FGenerator::Power(3.0)] {
            assert_abs_diff_eq!(
                f_loss(&r, &r, f).unwrap(),
                trace_entropy(&r, f).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn matrix_function_examples() {
        let sigma = SymMatrix::from_row_slice(2, &[0.6, 0.1, 0.1, 0.4]).unwrap();
        let log = matrix_function(&sigma, f64::ln).unwrap();
        let back = matrix_function(&log, f64::exp).unwrap();
        assert_abs_diff_eq!(back.sub(&sigma).frobenius_norm(), 0.0, epsilon = 1e-8);
        let zero = matrix_function(&SymMatrix::identity(3), f64::ln).unwrap();
        assert_abs_diff_eq!(zero.frobenius_norm(), 0.0, epsilon = 1e-15);
        let sq = matrix_function(&SymMatrix::from_diagonal(&[2.0, 3.0]).unwrap(), |x| x * x).unwrap();
        assert_abs_diff_eq!(
            sq.sub(&SymMatrix::from_diagonal(&[4.0, 9.0]).unwrap()).frobenius_norm(),
            0.0,
            epsilon = 1e-12
        );
        let id = matrix_function(&sigma, |x| x).unwrap();
        assert_abs_diff_eq!(id.sub(&sigma).frobenius_norm(), 0.0, epsilon = 1e-10);
        assert!(matches!(
            matrix_function(&SymMatrix::zeros(2), f64::ln),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn density_log_requires_full_rank() {
        assert!(diag(&[1.0, 0.0]).log().is_err());
        let l = diag(&[0.25, 0.75]).log().unwrap();
        assert_abs_diff_eq!(l.get(0, 0), 0.25f64.ln(), epsilon = 1e-14);
    }
}
