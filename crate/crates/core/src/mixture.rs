//! Max-VNE kernel-mixture selection by projected gradient ascent on the simplex.
//!
//! For a bundle of normalized kernels `K_1..K_M` over `n` samples the mixture
//! density is `rho(alpha) = (1/n) sum_i alpha_i K_i`. Its entropy is concave in
//! `alpha`, so PGA from the uniform start finds the global maximum.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{EmbeddingMatrix, KernelBundle};
use crate::spectral::{vne, DensityMatrix, SymMatrix};

/// Eigenvalues below this are treated as zero in the gradient's logarithm.
pub const DEGENERATE_EIG: f64 = 1e-12;
const FEASIBLE_TOL: f64 = 1e-10;
const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Init {
    Uniform,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgaSettings {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Threshold on the gradient-mapping norm `|proj(a + lr g) - a| / lr`.
    pub grad_tol: f64,
    pub init: Init,
    /// Halve the step until a sufficient-ascent condition holds.
    pub backtracking: bool,
}

impl Default for PgaSettings {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_iters: 100,
            grad_tol: 1e-7,
            init: Init::Uniform,
            backtracking: false,
        }
    }
}

impl PgaSettings {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "learning rate must be positive and max_iters at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Feasible set of mixture weights, a subset of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeasibleSet {
    FullSimplex,
    BoxedSimplex { lower: Vec<f64>, upper: Vec<f64> },
}

impl FeasibleSet {
    pub fn validate(&self, m: usize) -> Result<()> {
        if let FeasibleSet::BoxedSimplex { lower, upper } = self {
            if lower.len() != m || upper.len() != m {
                return Err(Error::LengthMismatch(m, lower.len().min(upper.len())));
            }
            let ok = lower.iter().zip(upper).all(|(&l, &u)| 0.0 <= l && l <= u && u <= 1.0);
            let (sl, su): (f64, f64) = (lower.iter().sum(), upper.iter().sum());
            if !ok || sl > 1.0 + 1e-12 || su < 1.0 - 1e-12 {
                return Err(Error::InfeasibleBox);
            }
        }
        Ok(())
    }

    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        let sum_ok = (w.iter().sum::<f64>() - 1.0).abs() <= tol;
        match self {
            FeasibleSet::FullSimplex => sum_ok && w.iter().all(|&x| x >= -tol),
            FeasibleSet::BoxedSimplex { lower, upper } => {
                sum_ok
                    && w.iter()
                        .zip(lower.iter().zip(upper))
                        .all(|(&x, (&l, &u))| x >= l - tol && x <= u + tol)
            }
        }
    }
}

/// Euclidean projection onto the feasible set.
pub fn project_simplex(v: &[f64], feasible: &FeasibleSet) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("component {i}")));
    }
    feasible.validate(v.len())?;
    Ok(match feasible {
        FeasibleSet::FullSimplex => project_full(v),
        FeasibleSet::BoxedSimplex { lower, upper } => project_boxed(v, lower, upper),
    })
}

fn project_full(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn project_boxed(v: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let clamp = |theta: f64| -> Vec<f64> {
        v.iter()
            .zip(lower.iter().zip(upper))
            .map(|(&x, (&l, &u))| (x - theta).clamp(l, u))
            .collect()
    };
    let excess = |theta: f64| clamp(theta).iter().sum::<f64>() - 1.0;
    let mut lo = v.iter().zip(upper).map(|(x, u)| x - u).fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v
        .iter()
        .zip(lower)
        .map(|(x, l)| x - l)
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let w = clamp(theta);
    // Recompute the threshold exactly from the coordinates strictly inside the box.
    let free: Vec<usize> = (0..v.len()).filter(|&i| w[i] > lower[i] && w[i] < upper[i]).collect();
    if free.is_empty() {
        return w;
    }
    let fixed: f64 = (0..v.len()).filter(|i| !free.contains(i)).map(|i| w[i]).sum();
    let theta = (free.iter().map(|&i| v[i]).sum::<f64>() + fixed - 1.0) / free.len() as f64;
    let mut out = w;
    for &i in &free {
        out[i] = (v[i] - theta).clamp(lower[i], upper[i]);
    }
    out
}

/// One step of the PGA trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterRecord {
    pub objective: f64,
    pub grad_norm: f64,
}

/// Generic projected gradient ascent result.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PgaOutcome {
    pub weights: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    pub trajectory: Vec<IterRecord>,
    pub converged: bool,
    pub monotone_violations: usize,
}

/// Maximizes a concave function over the feasible set.
///
/// `eval` returns the objective and its gradient at a point.
pub(crate) fn projected_gradient_ascent(
    mut eval: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    m: usize,
    feasible: &FeasibleSet,
    settings: &PgaSettings,
) -> Result<PgaOutcome> {
    settings.validate()?;
    feasible.validate(m)?;
    let start = match &settings.init {
        Init::Uniform => vec![1.0 / m as f64; m],
        Init::Given(w) => {
            if w.len() != m {
                return Err(Error::LengthMismatch(m, w.len()));
            }
            w.clone()
        }
    };
    let mut w = project_simplex(&start, feasible)?;
    let (mut f, mut g) = eval(&w)?;
    let mut step = settings.learning_rate;
    let mut trajectory = Vec::with_capacity(settings.max_iters + 1);
    let mut violations = 0;
    let mut converged = false;
    let mut grad_norm = f64::INFINITY;

    for _ in 0..settings.max_iters {
        let candidate = ascent_step(&w, &g, step, feasible)?;
        grad_norm = distance(&candidate, &w) / step;
        trajectory.push(IterRecord {
            objective: f,
            grad_norm,
        });
        if grad_norm <= settings.grad_tol {
            converged = true;
            break;
        }
        let (mut next, (mut f_next, mut g_next)) = {
            let r = eval(&candidate)?;
            (candidate, r)
        };
        if settings.backtracking {
            loop {
                let d: Vec<f64> = next.iter().zip(&w).map(|(a, b)| a - b).collect();
                let lin: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
                let quad: f64 = d.iter().map(|x| x * x).sum::<f64>() / (2.0 * step);
                if f_next >= f + lin - quad - 1e-15 || step < 1e-14 {
                    break;
                }
                step *= 0.5;
                next = ascent_step(&w, &g, step, feasible)?;
                let r = eval(&next)?;
                f_next = r.0;
                g_next = r.1;
            }
        }
        if f_next < f - MONOTONE_TOL {
            violations += 1;
        }
        w = next;
        f = f_next;
        g = g_next;
        if settings.backtracking {
            step *= 2.0;
        }
    }
    if !converged {
        let candidate = ascent_step(&w, &g, step, feasible)?;
        grad_norm = distance(&candidate, &w) / step;
        trajectory.push(IterRecord {
            objective: f,
            grad_norm,
        });
        converged = grad_norm <= settings.grad_tol;
    }
    Ok(PgaOutcome {
        weights: w,
        objective: f,
        grad_norm,
        trajectory,
        converged,
        monotone_violations: violations,
    })
}

fn ascent_step(w: &[f64], g: &[f64], step: f64, feasible: &FeasibleSet) -> Result<Vec<f64>> {
    let raw: Vec<f64> = w.iter().zip(g).map(|(a, b)| a + step * b).collect();
    project_simplex(&raw, feasible)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Entropy of `(1/scale) sum_k w_k C_k` and its gradient in `w`.
pub(crate) struct MixtureEval {
    pub rho: DensityMatrix,
    pub entropy: f64,
    pub gradient: Vec<f64>,
    pub degenerate: bool,
}

pub(crate) fn mixture_eval(components: &[&DMatrix<f64>], scale: f64, w: &[f64]) -> Result<MixtureEval> {
    if components.len() != w.len() {
        return Err(Error::LengthMismatch(components.len(), w.len()));
    }
    let n = components[0].nrows();
    let mut acc = DMatrix::zeros(n, n);
    for (c, &wk) in components.iter().zip(w) {
        if c.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.nrows(),
            });
        }
        acc += *c * (wk / scale);
    }
    let rho = DensityMatrix::from_psd(SymMatrix::new(acc)?)?;
    let spectrum = rho.spectrum();
    let degenerate = spectrum[0] < DEGENERATE_EIG;
    let log_plus_one: Vec<f64> = spectrum.iter().map(|&l| l.max(DEGENERATE_EIG).ln() + 1.0).collect();
    let gradient = components
        .iter()
        .map(|c| {
            let overlaps = rho.eigen().overlaps(c);
            -overlaps.iter().zip(&log_plus_one).map(|(o, l)| o * l).sum::<f64>() / scale
        })
        .collect();
    Ok(MixtureEval {
        entropy: vne(&rho),
        rho,
        gradient,
        degenerate,
    })
}

fn check_weights(w: &[f64], m: usize) -> Result<()> {
    if w.len() != m {
        return Err(Error::LengthMismatch(m, w.len()));
    }
    if !FeasibleSet::FullSimplex.contains(w, FEASIBLE_TOL) {
        return Err(Error::InvalidArgument("weights are not on the simplex".into()));
    }
    Ok(())
}

fn components(bundle: &KernelBundle) -> Vec<&DMatrix<f64>> {
    bundle.kernels().iter().map(|k| k.matrix().as_matrix()).collect()
}

/// `rho(alpha) = (1/n) sum_i alpha_i K_i`.
pub fn mixture_density(bundle: &KernelBundle, alpha: &[f64]) -> Result<DensityMatrix> {
    check_weights(alpha, bundle.len())?;
    Ok(mixture_eval(&components(bundle), bundle.n() as f64, alpha)?.rho)
}

/// Analytic gradient of `S(rho(alpha))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureGradient {
    pub gradient: Vec<f64>,
    /// Some eigenvalue of `rho(alpha)` is below `1e-12`; its log was clamped.
    pub degenerate: bool,
}

/// `g_i = -Tr((K_i / n)(log rho(alpha) + I))`.
pub fn vne_alpha_gradient(bundle: &KernelBundle, alpha: &[f64]) -> Result<MixtureGradient> {
    check_weights(alpha, bundle.len())?;
    let e = mixture_eval(&components(bundle), bundle.n() as f64, alpha)?;
    Ok(MixtureGradient {
        gradient: e.gradient,
        degenerate: e.degenerate,
    })
}

#[derive(Debug, Clone)]
pub struct MixtureProblem {
    pub bundle: KernelBundle,
    pub feasible: FeasibleSet,
    pub pga: PgaSettings,
}

impl MixtureProblem {
    pub fn new(bundle: KernelBundle) -> Self {
        Self {
            bundle,
            feasible: FeasibleSet::FullSimplex,
            pga: PgaSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MixtureSolution {
    pub alpha_star: Vec<f64>,
    pub vne_star: f64,
    pub trajectory: Vec<IterRecord>,
    pub rho_star: DensityMatrix,
    pub converged: bool,
    pub grad_norm: f64,
    /// At least one iterate had a singular mixture density.
    pub degenerate: bool,
    /// Steps whose objective dropped by more than `1e-9`.
    pub monotone_violations: usize,
}

/// Maximizes `S(rho(alpha))` over the feasible set.
pub fn select_mixture(problem: &MixtureProblem) -> Result<MixtureSolution> {
    let comps = components(&problem.bundle);
    let scale = problem.bundle.n() as f64;
    let mut degenerate = false;
    let out = projected_gradient_ascent(
        |w| {
            let e = mixture_eval(&comps, scale, w)?;
            degenerate |= e.degenerate;
            Ok((e.entropy, e.gradient))
        },
        problem.bundle.len(),
        &problem.feasible,
        &problem.pga,
    )?;
    let rho_star = mixture_eval(&comps, scale, &out.weights)?.rho;
    Ok(MixtureSolution {
        vne_star: vne(&rho_star),
        alpha_star: out.weights,
        trajectory: out.trajectory,
        rho_star,
        converged: out.converged,
        grad_norm: out.grad_norm,
        degenerate,
        monotone_violations: out.monotone_violations,
    })
}

/// Per-embedding scale factors `sqrt(alpha_i)` for weighted concatenation.
pub fn concatenation_recipe(solution: &MixtureSolution) -> Vec<f64> {
    solution.alpha_star.iter().map(|a| a.max(0.0).sqrt()).collect()
}

/// Concatenates `[s_1 X_1, ..., s_M X_M]` column-wise.
pub fn concatenate_scaled(embs: &[EmbeddingMatrix], scales: &[f64]) -> Result<EmbeddingMatrix> {
    if embs.is_empty() {
        return Err(Error::Empty);
    }
    if embs.len() != scales.len() {
        return Err(Error::LengthMismatch(embs.len(), scales.len()));
    }
    let n = embs[0].n();
    let d: usize = embs.iter().map(|e| e.d()).sum();
    let mut out = DMatrix::zeros(n, d);
    let mut col = 0;
    for (e, &s) in embs.iter().zip(scales) {
        if e.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: e.n(),
            });
        }
        out.columns_mut(col, e.d()).copy_from(&(e.rows() * s));
        col += e.d();
    }
    match embs[0].labels() {
        Some(l) => EmbeddingMatrix::with_labels(out, l.to_vec()),
        None => EmbeddingMatrix::new(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelKind, KernelMatrix};
    use approx::assert_abs_diff_eq;

    fn kernel(m: SymMatrix) -> KernelMatrix {
        KernelMatrix::new(m, KernelKind::Custom).unwrap()
    }

    fn ones_identity(n: usize) -> KernelBundle {
        KernelBundle::unnamed(vec![
            kernel(SymMatrix::from_fn(n, |_, _| 1.0).unwrap()),
            kernel(SymMatrix::identity(n)),
        ])
        .unwrap()
    }

    #[test]
    fn projection_examples() {
        let full = FeasibleSet::FullSimplex;
        assert_eq!(project_simplex(&[0.2, 0.8], &full).unwrap(), vec![0.2, 0.8]);
        assert_eq!(project_simplex(&[2.0, 0.0], &full).unwrap(), vec![1.0, 0.0]);
        assert_eq!(project_simplex(&[0.6, 0.6], &full).unwrap(), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[-3.0, 0.1, -1.0], &full).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn boxed_projection() {
        let boxed = FeasibleSet::BoxedSimplex {
            lower: vec![0.1, 0.1, 0.0],
            upper: vec![0.5, 1.0, 0.3],
        };
        let w = project_simplex(&[2.0, 0.0, 0.0], &boxed).unwrap();
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(boxed.contains(&w, 1e-12));
        let again = project_simplex(&w, &boxed).unwrap();
        for (a, b) in w.iter().zip(&again) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let empty = FeasibleSet::BoxedSimplex {
            lower: vec![0.6, 0.6],
            upper: vec![1.0, 1.0],
        };
        assert_eq!(project_simplex(&[0.5, 0.5], &empty), Err(Error::InfeasibleBox));
        // a box equal to the full simplex reproduces the sorting projection
        let unit = FeasibleSet::BoxedSimplex {
            lower: vec![0.0; 3],
            upper: vec![1.0; 3],
        };
        let v = [0.9, 0.4, -0.2];
        let a = project_simplex(&v, &unit).unwrap();
        let b = project_simplex(&v, &FeasibleSet::FullSimplex).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixture_density_examples() {
        let b = ones_identity(4);
        let rho = mixture_density(&b, &[0.5, 0.5]).unwrap();
        let s = rho.spectrum();
        for &l in &s[..3] {
            assert_abs_diff_eq!(l, 0.125, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(s[3], 0.625, epsilon = 1e-12);
        let e1 = mixture_density(&b, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(e1.matrix().get(0, 1), 0.25, epsilon = 1e-15);
        assert!(mixture_density(&b, &[0.7, 0.7]).is_err());
        assert!(mixture_density(&b, &[1.0]).is_err());
    }

    #[test]
    fn gradient_is_symmetric_for_identical_kernels() {
        let k = kernel(SymMatrix::from_row_slice(2, &[1.0, 0.3, 0.3, 1.0]).unwrap());
        let b = KernelBundle::unnamed(vec![k.clone(), k]).unwrap();
        let g = vne_alpha_gradient(&b, &[0.3, 0.7]).unwrap();
        assert_abs_diff_eq!(g.gradient[0], g.gradient[1], epsilon = 1e-14);
        assert!(!g.degenerate);
    }

    #[test]
    fn degenerate_spectrum_is_flagged() {
        let g = vne_alpha_gradient(&ones_identity(3), &[1.0, 0.0]).unwrap();
        assert!(g.degenerate);
        assert!(g.gradient.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn ones_identity_selects_identity() {
        let sol = select_mixture(&MixtureProblem::new(ones_identity(4))).unwrap();
        assert!(sol.alpha_star[0] < 1e-3);
        assert_abs_diff_eq!(sol.vne_star, 4f64.ln(), epsilon = 1e-6);
        assert_eq!(sol.monotone_violations, 0);
    }

    #[test]
    fn identical_kernels_stay_uniform() {
        let k = kernel(SymMatrix::from_row_slice(2, &[1.0, 0.3, 0.3, 1.0]).unwrap());
        let b = KernelBundle::unnamed(vec![k.clone(), k.clone()]).unwrap();
        let sol = select_mixture(&MixtureProblem::new(b)).unwrap();
        assert_eq!(sol.alpha_star, vec![0.5, 0.5]);
        assert!(sol.converged);
        let single = crate::kernels::kernel_density(&k).unwrap();
        assert_abs_diff_eq!(sol.vne_star, vne(&single), epsilon = 1e-12);
    }

    #[test]
    fn recipe_is_square_root() {
        let b = ones_identity(2);
        let mut sol = select_mixture(&MixtureProblem::new(b)).unwrap();
        sol.alpha_star = vec![0.25, 0.75];
        let s = concatenation_recipe(&sol);
        assert_abs_diff_eq!(s[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 0.75f64.sqrt(), epsilon = 1e-15);
        sol.alpha_star = vec![1.0, 0.0];
        assert_eq!(concatenation_recipe(&sol), vec![1.0, 0.0]);
    }

    #[test]
    fn pga_settings_validation() {
        let mut p = MixtureProblem::new(ones_identity(2));
        p.pga.learning_rate = 0.0;
        assert!(select_mixture(&p).is_err());
        p.pga = PgaSettings {
            init: Init::Given(vec![1.0]),
            ..PgaSettings::default()
        };
        assert!(select_mixture(&p).is_err());
    }
}
