//! Kernel matrices built from embeddings, and the density matrices they induce.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{vne, DensityMatrix, SymMatrix};

/// Default cap on the sample count for dense kernels.
pub const DEFAULT_MAX_SAMPLES: usize = 5000;

const UNIT_TOL: f64 = 1e-10;
const PSD_REL_TOL: f64 = 1e-8;

/// `n x d` matrix of sample embeddings, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: DMatrix<f64>,
    labels: Option<Vec<u32>>,
}

impl EmbeddingMatrix {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::Empty);
        }
        let n = rows.nrows();
        if let Some(pos) = rows.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("row {}, column {}", pos % n, pos / n)));
        }
        Ok(Self { rows, labels: None })
    }

    pub fn with_labels(rows: DMatrix<f64>, labels: Vec<u32>) -> Result<Self> {
        let mut emb = Self::new(rows)?;
        if labels.len() != emb.n() {
            return Err(Error::LengthMismatch(emb.n(), labels.len()));
        }
        emb.labels = Some(labels);
        Ok(emb)
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn d(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    /// Copy with every row scaled to unit Euclidean norm.
    pub fn normalized(&self) -> Result<Self> {
        let mut rows = self.rows.clone();
        for (i, mut row) in rows.row_iter_mut().enumerate() {
            let norm = row.norm();
            if norm == 0.0 {
                return Err(Error::ZeroRow(i));
            }
            row /= norm;
        }
        Ok(Self {
            rows,
            labels: self.labels.clone(),
        })
    }

    /// Squared Euclidean distances between all pairs of rows.
    pub fn squared_distances(&self) -> DMatrix<f64> {
        let n = self.n();
        let gram = &self.rows * self.rows.transpose();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(0.0)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf {
        bandwidth: f64,
    },
    Cosine,
    /// Loaded from a file or produced by completion.
    Custom,
}

/// PSD kernel (Gram) matrix over `n` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    mat: SymMatrix,
    kind: KernelKind,
    normalized: bool,
}

impl KernelMatrix {
    /// Checks PSD (smallest eigenvalue at least `-1e-8` times the largest).
    pub fn new(mat: SymMatrix, kind: KernelKind) -> Result<Self> {
        let eig = mat.eigen()?;
        let scale = eig.max().abs().max(f64::MIN_POSITIVE);
        if eig.min() < -PSD_REL_TOL * scale {
            return Err(Error::NotPsd(eig.min()));
        }
        Ok(Self::trusted(mat, kind))
    }

    /// Wraps a matrix that is PSD by construction (a Gram matrix).
    pub(crate) fn trusted(mat: SymMatrix, kind: KernelKind) -> Self {
        let normalized = is_unit_normalized(&mat);
        Self { mat, kind, normalized }
    }

    pub fn n(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.mat
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Unit diagonal and off-diagonal magnitudes at most one.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }
}

fn is_unit_normalized(mat: &SymMatrix) -> bool {
    let m = mat.as_matrix();
    let n = mat.dim();
    (0..n).all(|i| (m[(i, i)] - 1.0).abs() <= UNIT_TOL) && m.iter().all(|v| v.abs() <= 1.0 + UNIT_TOL)
}

pub fn build_kernel(emb: &EmbeddingMatrix, kind: KernelKind) -> Result<KernelMatrix> {
    build_kernel_limited(emb, kind, DEFAULT_MAX_SAMPLES)
}

/// [`build_kernel`] with an explicit sample cap.
pub fn build_kernel_limited(emb: &EmbeddingMatrix, kind: KernelKind, limit: usize) -> Result<KernelMatrix> {
    let n = emb.n();
    if n > limit {
        return Err(Error::TooLarge { n, limit });
    }
    let mat = match kind {
        KernelKind::Linear => SymMatrix::symmetrized(emb.rows() * emb.rows().transpose()),
        KernelKind::Rbf { bandwidth } => rbf_from_distances(&emb.squared_distances(), bandwidth)?,
        KernelKind::Cosine => {
            let unit = emb.normalized()?;
            let mut g = unit.rows() * unit.rows().transpose();
            for i in 0..n {
                g[(i, i)] = 1.0;
            }
            g.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
            SymMatrix::symmetrized(g)
        }
        KernelKind::Custom => {
            return Err(Error::InvalidArgument(
                "custom kernels cannot be built from embeddings".into(),
            ))
        }
    };
    Ok(KernelMatrix::trusted(mat, kind))
}

fn rbf_from_distances(sq: &DMatrix<f64>, bandwidth: f64) -> Result<SymMatrix> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::BadBandwidth(bandwidth));
    }
    let denom = 2.0 * bandwidth * bandwidth;
    Ok(SymMatrix::symmetrized(sq.map(|d| (-d / denom).exp())))
}

/// Cosine-style rescaling `K_ij / sqrt(K_ii K_jj)`.
pub fn normalize_kernel(k: &KernelMatrix) -> Result<KernelMatrix> {
    let m = k.matrix().as_matrix();
    let n = k.n();
    let mut scale = Vec::with_capacity(n);
    for i in 0..n {
        let d = m[(i, i)];
        if !(d > 0.0) {
            return Err(Error::ZeroDiagonal(i));
        }
        scale.push(d.sqrt());
    }
    let out = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            (m[(i, j)] / (scale[i] * scale[j])).clamp(-1.0, 1.0)
        }
    });
    Ok(KernelMatrix::trusted(SymMatrix::symmetrized(out), k.kind()))
}

/// `rho_K = K / Tr(K)`.
pub fn kernel_density(k: &KernelMatrix) -> Result<DensityMatrix> {
    DensityMatrix::from_psd(k.matrix().clone())
}

/// Trace-normalized uncentered covariance `(1/n) Phi^T Phi` of unit-norm rows.
///
/// Its nonzero spectrum coincides with that of the linear-kernel density.
pub fn covariance_density(emb: &EmbeddingMatrix) -> Result<DensityMatrix> {
    for (i, row) in emb.rows().row_iter().enumerate() {
        if (row.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotNormalized(i));
        }
    }
    let c = emb.rows().transpose() * emb.rows() / emb.n() as f64;
    DensityMatrix::from_psd(SymMatrix::symmetrized(c))
}

/// Ordered set of normalized kernels over the same samples.
#[derive(Debug, Clone)]
pub struct KernelBundle {
    kernels: Vec<KernelMatrix>,
    names: Vec<String>,
}

impl KernelBundle {
    pub fn new(kernels: Vec<KernelMatrix>, names: Vec<String>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Empty);
        }
        if kernels.len() != names.len() {
            return Err(Error::LengthMismatch(kernels.len(), names.len()));
        }
        let n = kernels[0].n();
        for (i, k) in kernels.iter().enumerate() {
            if k.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: k.n(),
                });
            }
            if !k.is_normalized() {
                return Err(Error::InvalidArgument(format!("kernel {i} is not normalized")));
            }
        }
        Ok(Self { kernels, names })
    }

    /// Names default to `k0, k1, ...`.
    pub fn unnamed(kernels: Vec<KernelMatrix>) -> Result<Self> {
        let names = (0..kernels.len()).map(|i| format!("k{i}")).collect();
        Self::new(kernels, names)
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn n(&self) -> usize {
        self.kernels[0].n()
    }

    pub fn kernels(&self) -> &[KernelMatrix] {
        &self.kernels
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Outcome of [`calibrate_bandwidth`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub bandwidth: f64,
    pub vne: f64,
    pub iterations: usize,
    /// `[0.01, 100]` times the median pairwise distance.
    pub bracket: (f64, f64),
}

const CALIBRATION_MAX_ITERS: usize = 60;

/// Search bracket for RBF bandwidths from the median pairwise distance.
pub fn bandwidth_bracket(emb: &EmbeddingMatrix) -> Result<(f64, f64)> {
    if emb.n() < 2 {
        return Err(Error::InvalidArgument("calibration needs at least two samples".into()));
    }
    let sq = emb.squared_distances();
    let n = emb.n();
    let mut dists: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| sq[(i, j)].sqrt())
        .collect();
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if !(median > 0.0) {
        return Err(Error::BadBandwidth(median));
    }
    Ok((0.01 * median, 100.0 * median))
}

/// VNE of the RBF kernel density at a given bandwidth.
pub fn rbf_vne(emb: &EmbeddingMatrix, bandwidth: f64) -> Result<f64> {
    rbf_vne_from(&emb.squared_distances(), bandwidth)
}

fn rbf_vne_from(sq: &DMatrix<f64>, bandwidth: f64) -> Result<f64> {
    let rho = DensityMatrix::from_psd(rbf_from_distances(sq, bandwidth)?)?;
    Ok(vne(&rho))
}

/// Bisection on `log(bandwidth)` for an RBF kernel whose density has the
/// target von Neumann entropy.
///
/// VNE must be strictly larger at the lower bracket end than at the upper
/// end, and the target must lie between the two.
pub fn calibrate_bandwidth(emb: &EmbeddingMatrix, target_vne: f64, tol: f64) -> Result<Calibration> {
    let n = emb.n();
    if !(target_vne > 0.0 && target_vne < (n as f64).ln()) {
        return Err(Error::InvalidArgument(format!(
            "target entropy {target_vne} must lie in (0, log n)"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let bracket = bandwidth_bracket(emb)?;
    let sq = emb.squared_distances();
    let (mut lo, mut hi) = (bracket.0.ln(), bracket.1.ln());
    let vne_lo = rbf_vne_from(&sq, bracket.0)?;
    let vne_hi = rbf_vne_from(&sq, bracket.1)?;
    if !(vne_lo > vne_hi) || target_vne > vne_lo || target_vne < vne_hi {
        return Err(Error::BracketFailure {
            target: target_vne,
            low: vne_hi,
            high: vne_lo,
        });
    }
    let mut best = Calibration {
        bandwidth: bracket.0,
        vne: vne_lo,
        iterations: 0,
        bracket,
    };
    for it in 1..=CALIBRATION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        let bw = mid.exp();
        let v = rbf_vne_from(&sq, bw)?;
        best = Calibration {
            bandwidth: bw,
            vne: v,
            iterations: it,
            bracket,
        };
        if (v - target_vne).abs() <= tol {
            break;
        }
        // entropy decreases as the bandwidth grows
        if v > target_vne {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Mean VNE of the linear-kernel densities, the default common target.
pub fn mean_linear_vne(embs: &[EmbeddingMatrix]) -> Result<f64> {
    if embs.is_empty() {
        return Err(Error::Empty);
    }
    let mut total = 0.0;
    for e in embs {
        total += vne(&kernel_density(&build_kernel(e, KernelKind::Linear)?)?);
    }
    Ok(total / embs.len() as f64)
}
