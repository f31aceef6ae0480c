//! Numerical witnesses for the log-loss minimax game.
//!
//! Nature picks `rho` from an ambiguity set, the decision maker answers with
//! `sigma` and pays `L(rho, sigma) = -Tr(rho log sigma)`. Three objects are
//! covered:
//!
//! - polytope ambiguity sets, where [`lower_value`] (`sup_rho S(rho)`) and
//!   [`upper_value`] (`inf_sigma sup_rho L`) are computed by independent routes
//!   and compared by [`verify_minimax`];
//! - linear-constraint sets, whose maximum-entropy state has Gibbs form and
//!   equalizes the log loss ([`solve_gibbs`], [`verify_equalizer`]);
//! - classical-quantum states and their conditional entropies.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixture::{mixture_eval, projected_gradient_ascent, FeasibleSet, Init, PgaSettings};
use crate::random;
use crate::spectral::{
    check_dims, log_loss, log_loss_unchecked, quantum_relative_entropy, vne, DensityMatrix, EpsilonFloor, SymMatrix,
};

/// Convex hull of finitely many states, all above a common floor.
#[derive(Debug, Clone)]
pub struct PolytopeAmbiguitySet {
    vertices: Vec<DensityMatrix>,
    eps: EpsilonFloor,
}

impl PolytopeAmbiguitySet {
    pub fn new(vertices: Vec<DensityMatrix>, eps: EpsilonFloor) -> Result<Self> {
        let first = vertices.first().ok_or(Error::Empty)?;
        let n = first.dim();
        if !eps.admits(n) {
            return Err(Error::InvalidEpsilon { eps: eps.value(), n });
        }
        for v in &vertices {
            check_dims(n, v.dim())?;
            if v.min_eigenvalue() < eps.value() - 1e-12 {
                return Err(Error::FloorViolation {
                    min: v.min_eigenvalue(),
                    eps: eps.value(),
                });
            }
        }
        Ok(Self { vertices, eps })
    }

    /// `count` random vertices with spectra bounded below by `2 eps`.
    pub fn random(n: usize, count: usize, eps: f64, seed: u64) -> Result<Self> {
        let floor = EpsilonFloor::new(eps, n)?;
        let mut rng = random::rng(seed);
        let vertices = (0..count)
            .map(|_| random::density_with_floor(n, (2.0 * eps).min(0.5 / n as f64), &mut rng))
            .collect();
        Self::new(vertices, floor)
    }

    pub fn vertices(&self) -> &[DensityMatrix] {
        &self.vertices
    }

    pub fn eps(&self) -> EpsilonFloor {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }
}

/// PGA defaults for the lower value: backtracking from a unit step.
pub fn default_game_pga() -> PgaSettings {
    PgaSettings {
        learning_rate: 1.0,
        max_iters: 5000,
        grad_tol: 1e-10,
        init: Init::Uniform,
        backtracking: true,
    }
}

#[derive(Debug, Clone)]
pub struct LowerValue {
    pub value: f64,
    pub weights: Vec<f64>,
    pub rho: DensityMatrix,
    pub converged: bool,
    pub grad_norm: f64,
}

/// `max_w S(sum_k w_k V_k)` over mixture weights, by projected gradient ascent.
///
/// Any feasible `w` gives a lower bound, so the returned value never exceeds
/// the true supremum.
pub fn lower_value(gamma: &PolytopeAmbiguitySet, pga: &PgaSettings) -> Result<LowerValue> {
    let comps: Vec<&DMatrix<f64>> = gamma.vertices.iter().map(|v| v.matrix().as_matrix()).collect();
    let out = projected_gradient_ascent(
        |w| {
            let e = mixture_eval(&comps, 1.0, w)?;
            Ok((e.entropy, e.gradient))
        },
        comps.len(),
        &FeasibleSet::FullSimplex,
        pga,
    )?;
    let rho = mixture_eval(&comps, 1.0, &out.weights)?.rho;
    Ok(LowerValue {
        value: vne(&rho),
        weights: out.weights,
        rho,
        converged: out.converged,
        grad_norm: out.grad_norm,
    })
}

#[derive(Debug, Clone)]
pub struct UpperValue {
    pub value: f64,
    pub sigma: DensityMatrix,
    pub converged: bool,
}

/// Smallest `delta` with `(1 - delta) sigma + delta I/n >= eps I`, applied.
pub fn floor_projection(sigma: &DensityMatrix, eps: EpsilonFloor) -> Result<DensityMatrix> {
    let n = sigma.dim() as f64;
    let min = sigma.min_eigenvalue();
    if min >= eps.value() {
        return Ok(sigma.clone());
    }
    let delta = (eps.value() - min) / (1.0 / n - min);
    let mixed = sigma
        .matrix()
        .scale(1.0 - delta)
        .add(&SymMatrix::identity(sigma.dim()).scale(delta / n));
    DensityMatrix::from_psd(mixed)
}

/// `max_k L(V_k, sigma)`.
fn worst_vertex_loss(gamma: &PolytopeAmbiguitySet, sigma: &DensityMatrix) -> f64 {
    gamma
        .vertices
        .iter()
        .map(|v| log_loss_unchecked(v, sigma))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Gibbs state `exp(H) / Tr exp(H)` with its log-partition function.
fn gibbs(h: &SymMatrix) -> Result<(DensityMatrix, f64)> {
    let eig = h.eigen()?;
    let top = eig.max();
    let logz = top + eig.values.iter().map(|&l| (l - top).exp()).sum::<f64>().ln();
    let m = eig.map(|l| (l - logz).exp());
    Ok((DensityMatrix::from_psd(SymMatrix::symmetrized(m))?, logz))
}

/// `inf_sigma max_k L(V_k, sigma)` over `sigma >= eps I`.
///
/// With `sigma = exp(H) / Tr exp(H)` each vertex loss is
/// `log Tr exp(H) - <V_k, H>`, so the objective is convex in `H`. The max is
/// smoothed by a log-sum-exp of temperature `mu`, minimized by gradient
/// descent with backtracking, and `mu` is decreased geometrically. Every
/// iterate is floor-projected and scored on the exact objective; the best
/// score is returned, which bounds the true value from above.
pub fn upper_value(gamma: &PolytopeAmbiguitySet, eps: EpsilonFloor) -> Result<UpperValue> {
    let k = gamma.vertices.len();
    let centroid = DensityMatrix::mixture(&gamma.vertices.iter().collect::<Vec<_>>(), &vec![1.0 / k as f64; k])?;
    let mut h = centroid.log()?;

    let score = |h: &SymMatrix| -> Result<(f64, DensityMatrix)> {
        let (sigma, _) = gibbs(h)?;
        let sigma = floor_projection(&sigma, eps)?;
        Ok((worst_vertex_loss(gamma, &sigma), sigma))
    };
    let (mut best, mut best_sigma) = score(&h)?;
    if k == 1 {
        let v = &gamma.vertices[0];
        let exact = log_loss_unchecked(v, v);
        if exact <= best {
            return Ok(UpperValue {
                value: exact,
                sigma: v.clone(),
                converged: true,
            });
        }
    }

    let smoothed = |h: &SymMatrix, mu: f64| -> Result<(f64, SymMatrix)> {
        let (sigma, logz) = gibbs(h)?;
        let inner: Vec<f64> = gamma.vertices.iter().map(|v| v.matrix().inner(h)).collect();
        let lo = inner.iter().cloned().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = inner.iter().map(|&a| (-(a - lo) / mu).exp()).collect();
        let wsum: f64 = weights.iter().sum();
        let value = logz - lo + mu * wsum.ln();
        let mut grad = sigma.matrix().as_matrix().clone();
        for (v, w) in gamma.vertices.iter().zip(&weights) {
            grad -= v.matrix().as_matrix() * (w / wsum);
        }
        Ok((value, SymMatrix::symmetrized(grad)))
    };

    let mut converged = false;
    let mut mu = 0.1;
    let mut step = 1.0;
    while mu >= 1e-6 {
        let (mut f, mut g) = smoothed(&h, mu)?;
        for _ in 0..2000 {
            let gnorm2 = g.as_matrix().norm_squared();
            if gnorm2.sqrt() <= 1e-11 {
                break;
            }
            let mut accepted = None;
            while step > 1e-16 {
                let cand = h.sub(&g.scale(step));
                let (fc, gc) = smoothed(&cand, mu)?;
                if fc <= f - 0.5 * step * gnorm2 {
                    accepted = Some((cand, fc, gc));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, fc, gc)) = accepted else { break };
            let improvement = f - fc;
            h = cand;
            f = fc;
            g = gc;
            step *= 2.0;
            let (s, sigma) = score(&h)?;
            if s < best {
                best = s;
                best_sigma = sigma;
            }
            if improvement <= 1e-15 * f.abs().max(1.0) {
                break;
            }
        }
        if mu <= 1e-6 * 1.0001 {
            converged = g.as_matrix().norm() <= 1e-6;
        }
        mu *= 0.1;
    }
    Ok(UpperValue {
        value: best,
        sigma: best_sigma,
        converged,
    })
}

#[derive(Debug, Clone)]
pub struct MinimaxSettings {
    pub pga: PgaSettings,
    /// Random feasible actions used for the second saddle inequality.
    pub samples: usize,
    pub seed: u64,
}

impl Default for MinimaxSettings {
    fn default() -> Self {
        Self {
            pga: default_game_pga(),
            samples: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimaxReport {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub weights: Vec<f64>,
    /// `min_k L(rho*, rho*) - L(V_k, rho*)`; nonnegative at a saddle point.
    pub vertex_margin: f64,
    /// `min_sigma L(rho*, sigma) - L(rho*, rho*)` over the sampled actions.
    pub action_margin: f64,
    pub lower_converged: bool,
    pub upper_converged: bool,
    pub pass: bool,
}

/// Runs both value computations and checks the saddle inequalities at
/// `(rho*, sigma* = rho*)`.
pub fn verify_minimax(
    gamma: &PolytopeAmbiguitySet,
    eps: EpsilonFloor,
    tol: f64,
    settings: &MinimaxSettings,
) -> Result<MinimaxReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let lower = lower_value(gamma, &settings.pga)?;
    let upper = upper_value(gamma, eps)?;
    let rho_star = &lower.rho;
    let value = log_loss(rho_star, rho_star, eps)?;
    let vertex_margin = gamma
        .vertices
        .iter()
        .map(|v| log_loss(v, rho_star, eps).map(|l| value - l))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let mut rng = random::rng(settings.seed);
    let n = gamma.dim();
    let mut action_margin = f64::INFINITY;
    for _ in 0..settings.samples {
        let sigma = random::density_with_floor(n, eps.value(), &mut rng);
        action_margin = action_margin.min(log_loss(rho_star, &sigma, eps)? - value);
    }
    let gap = upper.value - lower.value;
    let pass = gap <= tol && gap >= -tol && vertex_margin >= -tol && action_margin >= -tol;
    Ok(MinimaxReport {
        lower: lower.value,
        upper: upper.value,
        gap,
        weights: lower.weights,
        vertex_margin,
        action_margin,
        lower_converged: lower.converged,
        upper_converged: upper.converged,
        pass,
    })
}

/// Linear constraints `Tr(rho A_j) = tau_j`.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    observables: Vec<SymMatrix>,
    targets: Vec<f64>,
}

impl ConstraintSet {
    pub fn new(observables: Vec<SymMatrix>, targets: Vec<f64>) -> Result<Self> {
        let first = observables.first().ok_or(Error::Empty)?;
        if observables.len() != targets.len() {
            return Err(Error::LengthMismatch(observables.len(), targets.len()));
        }
        for a in &observables {
            check_dims(first.dim(), a.dim())?;
        }
        if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFinite(format!("target {i}")));
        }
        Ok(Self { observables, targets })
    }

    pub fn observables(&self) -> &[SymMatrix] {
        &self.observables
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn dim(&self) -> usize {
        self.observables[0].dim()
    }

    /// Frobenius-orthonormal basis of `span{I, A_1, ..., A_m}`.
    fn span_basis(&self) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        let mut basis: Vec<DMatrix<f64>> = Vec::new();
        let candidates =
            std::iter::once(DMatrix::identity(n, n)).chain(self.observables.iter().map(|a| a.as_matrix().clone()));
        for mut c in candidates {
            let scale = c.norm();
            for _ in 0..2 {
                for q in &basis {
                    let p = c.dot(q);
                    c -= q * p;
                }
            }
            let norm = c.norm();
            if norm > 1e-10 * scale.max(1.0) {
                basis.push(c / norm);
            }
        }
        basis
    }

    fn independent(&self) -> bool {
        self.span_basis().len() == self.observables.len() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iters: usize,
    pub armijo: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 100,
            armijo: 1e-4,
        }
    }
}

/// `log rho_tau = c I + sum_j beta_j A_j`.
#[derive(Debug, Clone)]
pub struct GibbsSolution {
    pub beta: Vec<f64>,
    pub c: f64,
    pub rho_tau: DensityMatrix,
    /// `-(c + sum_j beta_j tau_j)`, the constant log loss over the feasible set.
    pub equalizer_value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// A singular Hessian forced at least one gradient step.
    pub gradient_fallback: bool,
}

struct DualPoint {
    value: f64,
    logz: f64,
    grad: DVector<f64>,
    hessian: DMatrix<f64>,
    rho: DMatrix<f64>,
}

fn dual_point(c: &ConstraintSet, beta: &DVector<f64>, with_hessian: bool) -> Result<DualPoint> {
    let n = c.dim();
    let m = c.observables.len();
    let mut h = DMatrix::zeros(n, n);
    for (a, &b) in c.observables.iter().zip(beta.iter()) {
        h += a.as_matrix() * b;
    }
    let eig = SymMatrix::symmetrized(h).eigen()?;
    let top = eig.max();
    let unnorm: Vec<f64> = eig.values.iter().map(|&l| (l - top).exp()).collect();
    let z: f64 = unnorm.iter().sum();
    let logz = top + z.ln();
    let p: Vec<f64> = unnorm.iter().map(|u| u / z).collect();
    let rotated: Vec<DMatrix<f64>> = c
        .observables
        .iter()
        .map(|a| eig.vectors.transpose() * a.as_matrix() * &eig.vectors)
        .collect();
    let expect = DVector::from_iterator(m, rotated.iter().map(|r| (0..n).map(|a| p[a] * r[(a, a)]).sum::<f64>()));
    let tau = DVector::from_column_slice(&c.targets);
    let value = logz - beta.dot(&tau);
    let grad = &expect - &tau;
    let mut hessian = DMatrix::zeros(m, m);
    if with_hessian {
        // Divided differences of exp on the spectrum (Daleckii-Krein).
        let lam = &eig.values;
        let dd = DMatrix::from_fn(n, n, |a, b| {
            let delta = lam[b] - lam[a];
            if delta.abs() < 1e-12 {
                p[a]
            } else {
                p[a] * delta.exp_m1() / delta
            }
        });
        for i in 0..m {
            for j in 0..=i {
                let s = rotated[i].component_mul(&rotated[j]).component_mul(&dd).sum();
                let v = s - expect[i] * expect[j];
                hessian[(i, j)] = v;
                hessian[(j, i)] = v;
            }
        }
    }
    let rho = eig.map(|l| (l - logz).exp());
    Ok(DualPoint {
        value,
        logz,
        grad,
        hessian,
        rho,
    })
}

const FULL_RANK_FLOOR: f64 = 1e-9;
const BETA_LIMIT: f64 = 1e8;

/// Maximum-entropy state under linear constraints by Newton's method on the
/// dual `F(beta) = log Tr exp(sum_j beta_j A_j) - beta . tau`.
pub fn solve_gibbs(constraints: &ConstraintSet, newton: &NewtonSettings) -> Result<GibbsSolution> {
    if !constraints.independent() {
        return Err(Error::DependentConstraints);
    }
    let m = constraints.observables.len();
    let mut beta = DVector::zeros(m);
    let mut point = dual_point(constraints, &beta, true)?;
    let mut fallback = false;
    let mut iterations = 0;
    while point.grad.norm() > newton.tol {
        if iterations >= newton.max_iters {
            return Err(Error::InfeasibleOrUnbounded);
        }
        iterations += 1;
        let direction = match point.hessian.clone().cholesky() {
            Some(ch) => -ch.solve(&point.grad),
            None => {
                fallback = true;
                -point.grad.clone()
            }
        };
        let slope = point.grad.dot(&direction);
        let mut t = 1.0;
        let next = loop {
            let cand = &beta + &direction * t;
            let p = dual_point(constraints, &cand, true)?;
            if p.value <= point.value + newton.armijo * t * slope {
                break Some((cand, p));
            }
            // Near the optimum the decrease drops below the rounding of F;
            // fall back to requiring a smaller gradient.
            let slack = 1e-14 * point.value.abs().max(1.0);
            if p.value <= point.value + slack && p.grad.norm() < point.grad.norm() {
                break Some((cand, p));
            }
            t *= 0.5;
            if t < 1e-20 {
                break None;
            }
        };
        let Some((b, p)) = next else { break };
        beta = b;
        point = p;
        if beta.amax() > BETA_LIMIT {
            return Err(Error::InfeasibleOrUnbounded);
        }
    }
    if point.grad.norm() > newton.tol.max(1e-8) {
        return Err(Error::InfeasibleOrUnbounded);
    }
    let rho_tau = DensityMatrix::from_psd(SymMatrix::symmetrized(point.rho))?;
    if rho_tau.min_eigenvalue() < FULL_RANK_FLOOR {
        return Err(Error::InfeasibleOrUnbounded);
    }
    let c = -point.logz;
    let equalizer_value = -(c + beta.dot(&DVector::from_column_slice(&constraints.targets)));
    Ok(GibbsSolution {
        beta: beta.iter().copied().collect(),
        c,
        rho_tau,
        equalizer_value,
        grad_norm: point.grad.norm(),
        iterations,
        gradient_fallback: fallback,
    })
}

/// `|log rho_tau - sum_j beta_j A_j - c I|_F`.
pub fn gibbs_residual(sol: &GibbsSolution, constraints: &ConstraintSet) -> Result<f64> {
    let n = constraints.dim();
    let mut r = sol.rho_tau.log()?.into_inner() - DMatrix::identity(n, n) * sol.c;
    for (a, b) in constraints.observables.iter().zip(&sol.beta) {
        r -= a.as_matrix() * *b;
    }
    Ok(r.norm())
}

#[derive(Debug, Clone, Serialize)]
pub struct EqualizerReport {
    pub samples: usize,
    /// `max |L(rho, rho_tau) - equalizer_value|` over the samples.
    pub max_deviation: f64,
    /// `max S(rho) - S(rho_tau)`; nonpositive when `rho_tau` maximizes entropy.
    pub max_entropy_excess: f64,
    /// The feasible set is a single point.
    pub trivial: bool,
    pub pass: bool,
}

const EQUALIZER_TOL: f64 = 1e-8;

/// Samples feasible states `rho_tau + t V` with `V` orthogonal to
/// `I, A_1, ..., A_m`, and checks that the log loss against `rho_tau` is
/// constant and that none of them has larger entropy.
pub fn verify_equalizer(
    sol: &GibbsSolution,
    constraints: &ConstraintSet,
    trials: usize,
    seed: u64,
) -> Result<EqualizerReport> {
    check_dims(constraints.dim(), sol.rho_tau.dim())?;
    match perturbation_directions(constraints, trials, seed) {
        Err(Error::DegenerateNullSpace) => Ok(EqualizerReport {
            samples: 0,
            max_deviation: 0.0,
            max_entropy_excess: 0.0,
            trivial: true,
            pass: true,
        }),
        Err(e) => Err(e),
        Ok(directions) => {
            let s_tau = vne(&sol.rho_tau);
            let lam_min = sol.rho_tau.min_eigenvalue();
            let mut max_dev = 0.0f64;
            let mut max_excess = f64::NEG_INFINITY;
            for v in directions {
                let spectral = v.eigen()?;
                let vnorm = spectral.max().abs().max(spectral.min().abs());
                let mut t = 0.5 * lam_min / vnorm;
                let rho = loop {
                    let cand = sol.rho_tau.matrix().add(&v.scale(t));
                    match DensityMatrix::from_psd(cand) {
                        Ok(r) if r.min_eigenvalue() >= 0.0 => break r,
                        _ => t *= 0.5,
                    }
                };
                let loss = log_loss_unchecked(&rho, &sol.rho_tau);
                max_dev = max_dev.max((loss - sol.equalizer_value).abs());
                max_excess = max_excess.max(vne(&rho) - s_tau);
            }
            Ok(EqualizerReport {
                samples: trials,
                max_deviation: max_dev,
                max_entropy_excess: max_excess,
                trivial: false,
                pass: max_dev <= EQUALIZER_TOL && max_excess <= EQUALIZER_TOL,
            })
        }
    }
}

/// Random symmetric directions projected onto the orthogonal complement of
/// `span{I, A_j}`.
pub fn perturbation_directions(constraints: &ConstraintSet, trials: usize, seed: u64) -> Result<Vec<SymMatrix>> {
    let n = constraints.dim();
    let basis = constraints.span_basis();
    if basis.len() >= n * (n + 1) / 2 {
        return Err(Error::DegenerateNullSpace);
    }
    let mut rng = random::rng(seed);
    let mut out = Vec::with_capacity(trials);
    while out.len() < trials {
        let mut v = random::symmetric(n, &mut rng).into_inner();
        for _ in 0..2 {
            for q in &basis {
                let p = v.dot(q);
                v -= q * p;
            }
        }
        if v.norm() > 1e-8 {
            out.push(SymMatrix::symmetrized(v));
        }
    }
    Ok(out)
}

/// Prior over a finite alphabet paired with one state per symbol.
#[derive(Debug, Clone)]
pub struct CqState {
    px: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl CqState {
    pub fn new(px: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if px.is_empty() {
            return Err(Error::Empty);
        }
        if px.len() != states.len() {
            return Err(Error::LengthMismatch(px.len(), states.len()));
        }
        if px.iter().any(|&p| !(p >= 0.0)) || (px.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument("prior must be a probability vector".into()));
        }
        let n = states[0].dim();
        for s in &states {
            check_dims(n, s.dim())?;
        }
        Ok(Self { px, states })
    }

    pub fn prior(&self) -> &[f64] {
        &self.px
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }
}

/// `S(Q|X) = sum_x p(x) S(rho_x)`.
pub fn conditional_vne(state: &CqState) -> f64 {
    state.px.iter().zip(&state.states).map(|(p, r)| p * vne(r)).sum()
}

/// `sum_x p(x) (-Tr(rho_x log sigma_x))`; `sigma_x` must be strictly positive.
pub fn conditional_log_loss(rho: &CqState, sigma: &CqState) -> Result<f64> {
    if rho.px.len() != sigma.px.len() || rho.px.iter().zip(&sigma.px).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::MismatchedPrior);
    }
    let mut total = 0.0;
    for ((p, r), s) in rho.px.iter().zip(&rho.states).zip(&sigma.states) {
        check_dims(r.dim(), s.dim())?;
        if !(s.min_eigenvalue() > 0.0) {
            return Err(Error::DomainError(s.min_eigenvalue()));
        }
        total += p * log_loss_unchecked(r, s);
    }
    Ok(total)
}

/// `sum_x p(x) D(rho_x || sigma_x)`.
pub fn conditional_divergence(rho: &CqState, sigma: &CqState) -> Result<f64> {
    if rho.px.len() != sigma.px.len() || rho.px.iter().zip(&sigma.px).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::MismatchedPrior);
    }
    let mut total = 0.0;
    for ((p, r), s) in rho.px.iter().zip(&rho.states).zip(&sigma.states) {
        total += p * quantum_relative_entropy(r, s)?.value();
    }
    Ok(total)
}

/// Bayes risk of the quadratic loss, `-sum_x p(x) Tr(rho_x^2)`.
pub fn conditional_quadratic_bayes(rho: &CqState) -> f64 {
    -rho.px.iter().zip(&rho.states).map(|(p, r)| p * r.purity()).sum::<f64>()
}
