//! Max-VNE kernel completion from partially observed entries.
//!
//! The completed kernel is parameterized as `K = s(U) U U^T` with `U` of size
//! `n x r` and `s(U) = n / Tr(U U^T)`, so it is PSD with trace `n` by
//! construction. Observed entries enter through a quadratic penalty and the
//! entropy through one of two surrogates evaluated on the `r x r` Gram matrix
//! `U^T U`, never forming an `n x n` eigendecomposition inside the loop.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::index;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelMatrix};
use crate::random;
use crate::spectral::{vne, DensityMatrix, SymMatrix};

/// Observed kernel entries, stored as sorted upper-triangle pairs `i <= j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMask {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
    include_diagonal: bool,
}

impl ObservationMask {
    /// Pairs are reordered to `i <= j`. With `include_diagonal`, missing
    /// diagonal entries are filled with 1 and any other diagonal value is an
    /// error.
    pub fn new(n: usize, entries: Vec<(usize, usize, f64)>, include_diagonal: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut map = BTreeMap::new();
        for (a, b, v) in entries {
            if a >= n || b >= n {
                return Err(Error::OutOfRange(a, b));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("entry ({a}, {b})")));
            }
            let key = (a.min(b), a.max(b));
            if map.insert(key, v).is_some() {
                return Err(Error::DuplicatePair(key.0, key.1));
            }
        }
        if include_diagonal {
            for i in 0..n {
                let v = *map.entry((i, i)).or_insert(1.0);
                if v != 1.0 {
                    return Err(Error::InvalidArgument(format!("diagonal entry {i} is {v}, expected 1")));
                }
            }
        }
        Ok(Self {
            n,
            entries: map,
            include_diagonal,
        })
    }

    pub fn diagonal_only(n: usize) -> Result<Self> {
        Self::new(n, Vec::new(), true)
    }

    /// Every upper-triangle entry of `k`.
    pub fn full(k: &KernelMatrix) -> Result<Self> {
        let n = k.n();
        let m = k.matrix();
        let entries = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, m.get(i, j)))
            .collect();
        Self::new(n, entries, false)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn include_diagonal(&self) -> bool {
        self.include_diagonal
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn off_diagonal_count(&self) -> usize {
        self.entries.keys().filter(|(i, j)| i != j).count()
    }

    /// Entries in ascending `(i, j)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries.get(&(i.min(j), i.max(j))).copied()
    }

    /// Observed entries in place, zeros elsewhere.
    pub fn zero_imputed(&self) -> SymMatrix {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        SymMatrix::symmetrized(m)
    }
}

/// Outcome of [`feasible_set_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityDiagnostics {
    /// Off-diagonal entries whose two diagonal entries are also observed.
    pub checked_pairs: usize,
}

/// Checks `|K_ij| <= sqrt(K_ii K_jj)` wherever all three entries are observed,
/// and `K_ii >= 0` for observed diagonals.
pub fn feasible_set_check(mask: &ObservationMask) -> Result<FeasibilityDiagnostics> {
    let mut violations = Vec::new();
    let mut checked = 0;
    for (i, j, v) in mask.entries() {
        if i == j {
            if v < 0.0 {
                violations.push((i, j));
            }
            continue;
        }
        if let (Some(a), Some(b)) = (mask.get(i, i), mask.get(j, j)) {
            checked += 1;
            if v.abs() > (a.max(0.0) * b.max(0.0)).sqrt() + 1e-12 {
                violations.push((i, j));
            }
        }
    }
    if violations.is_empty() {
        Ok(FeasibilityDiagnostics { checked_pairs: checked })
    } else {
        Err(Error::InfeasibleObservation(violations))
    }
}

/// Objective value with its gradient with respect to `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub gradient: DMatrix<f64>,
}

fn gram_and_trace(u: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let g = u.tr_mul(u);
    let t = g.trace();
    if !(t > 0.0) {
        return Err(Error::ZeroFactor);
    }
    Ok((g, t))
}

/// Purity `Tr(rho^2) = |U^T U|_F^2 / Tr(U^T U)^2` of `rho = U U^T / Tr(U U^T)`.
pub fn purity_objective(u: &DMatrix<f64>) -> Result<ObjectiveValue> {
    let (g, t) = gram_and_trace(u)?;
    let g2 = g.norm_squared();
    let value = g2 / (t * t);
    let gradient = (u * &g) * (4.0 / (t * t)) - u * (4.0 * g2 / (t * t * t));
    Ok(ObjectiveValue { value, gradient })
}

pub const DEFAULT_LOGDET_FLOOR: f64 = 1e-8;

/// `log det(U^T U / Tr(U^T U) + floor I)`, a Schur-concave surrogate for the
/// von Neumann entropy of `rho = U U^T / Tr(U U^T)`.
pub fn logdet_surrogate_objective(u: &DMatrix<f64>, floor: f64) -> Result<ObjectiveValue> {
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "log-det floor {floor} must be positive"
        )));
    }
    let (g, t) = gram_and_trace(u)?;
    let r = g.nrows();
    let c = &g / t + DMatrix::identity(r, r) * floor;
    let chol = nalgebra::Cholesky::new(c).ok_or(Error::EigenFailure)?;
    let value = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let w = chol.inverse();
    let wg = w.dot(&g);
    let gradient = (u * &w) * (2.0 / t) - u * (2.0 * wg / (t * t));
    Ok(ObjectiveValue { value, gradient })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompletionObjective {
    /// Maximize the log-det surrogate of the von Neumann entropy.
    VneLogDet,
    /// Maximize the order-2 Renyi entropy by minimizing purity.
    Renyi2Purity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamSettings {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
    pub max_iters: usize,
    /// Stop when the objective changes by at most this fraction over
    /// [`AdamSettings::window`] iterations.
    pub objective_tol: f64,
    pub window: usize,
}

impl Default for AdamSettings {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_hat: 1e-8,
            max_iters: 5000,
            objective_tol: 1e-8,
            window: 50,
        }
    }
}

impl AdamSettings {
    fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps_hat > 0.0
            && self.max_iters >= 1
            && self.objective_tol >= 0.0
            && self.window >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("Adam settings out of range".into()))
        }
    }
}

/// Adam state for one parameter matrix.
#[derive(Debug, Clone)]
pub struct Adam {
    settings: AdamSettings,
    m: DMatrix<f64>,
    v: DMatrix<f64>,
    t: i32,
}

impl Adam {
    pub fn new(settings: AdamSettings, rows: usize, cols: usize) -> Self {
        Self {
            settings,
            m: DMatrix::zeros(rows, cols),
            v: DMatrix::zeros(rows, cols),
            t: 0,
        }
    }

    /// In-place descent step on `param`.
    pub fn step(&mut self, param: &mut DMatrix<f64>, grad: &DMatrix<f64>) {
        let s = &self.settings;
        self.t += 1;
        let bc1 = 1.0 - s.beta1.powi(self.t);
        let bc2 = 1.0 - s.beta2.powi(self.t);
        for ((p, g), (m, v)) in param
            .iter_mut()
            .zip(grad.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = s.beta1 * *m + (1.0 - s.beta1) * g;
            *v = s.beta2 * *v + (1.0 - s.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= s.learning_rate * m_hat / (v_hat.sqrt() + s.eps_hat);
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompletionProblem {
    pub mask: ObservationMask,
    pub rank: usize,
    pub objective: CompletionObjective,
    pub penalty_weight: f64,
    pub logdet_floor: f64,
    pub optimizer: AdamSettings,
    pub seed: u64,
}

impl CompletionProblem {
    pub fn new(mask: ObservationMask, objective: CompletionObjective) -> Self {
        let rank = 50.min(mask.n());
        Self {
            mask,
            rank,
            objective,
            penalty_weight: 100.0,
            logdet_floor: DEFAULT_LOGDET_FLOOR,
            optimizer: AdamSettings::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompletionResult {
    pub k_hat: KernelMatrix,
    pub rho_hat: DensityMatrix,
    /// Total objective (entropy term plus penalty) per iteration.
    pub objective_trace: Vec<f64>,
    /// `max |K_hat_ij - K_ij|` over the observed entries.
    pub constraint_residual: f64,
    pub initial_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Penalized objective `obj(U) + lambda sum_Omega (s (U U^T)_ij - K_ij)^2`.
pub(crate) fn penalized_objective(problem: &CompletionProblem, u: &DMatrix<f64>) -> Result<ObjectiveValue> {
    let entropy = match problem.objective {
        CompletionObjective::Renyi2Purity => purity_objective(u)?,
        CompletionObjective::VneLogDet => {
            let j = logdet_surrogate_objective(u, problem.logdet_floor)?;
            ObjectiveValue {
                value: -j.value,
                gradient: -j.gradient,
            }
        }
    };
    let (n, r) = u.shape();
    let ut = u.transpose();
    let t = ut.norm_squared();
    let s = n as f64 / t;
    let lambda = problem.penalty_weight;
    let mut grad_t = DMatrix::<f64>::zeros(r, n);
    let mut penalty = 0.0;
    // d s / d U = -(2 s / t) U; accumulate its coefficient
    let mut scale_coeff = 0.0;
    for (i, j, k) in problem.mask.entries() {
        let ui = ut.column(i);
        let uj = ut.column(j);
        let inner = ui.dot(&uj);
        let e = s * inner - k;
        penalty += e * e;
        let w = 2.0 * lambda * e * s;
        if i == j {
            grad_t.column_mut(i).axpy(2.0 * w, &ui, 1.0);
        } else {
            grad_t.column_mut(i).axpy(w, &uj, 1.0);
            grad_t.column_mut(j).axpy(w, &ui, 1.0);
        }
        scale_coeff += 2.0 * lambda * e * inner;
    }
    grad_t -= &ut * (scale_coeff * 2.0 * s / t);
    Ok(ObjectiveValue {
        value: entropy.value + lambda * penalty,
        gradient: entropy.gradient + grad_t.transpose(),
    })
}

fn residual(mask: &ObservationMask, k: &DMatrix<f64>) -> f64 {
    mask.entries()
        .map(|(i, j, v)| (k[(i, j)] - v).abs())
        .fold(0.0, f64::max)
}

fn completed(u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows() as f64;
    let k = u * u.transpose();
    let s = n / k.trace();
    k * s
}

/// Gaussian factor with entries of standard deviation `1/sqrt(r)`.
pub fn initial_factor(n: usize, rank: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = random::rng(seed);
    let normal = Normal::new(0.0, 1.0 / (rank as f64).sqrt()).expect("positive deviation");
    DMatrix::from_fn(n, rank, |_, _| normal.sample(&mut rng))
}

/// Runs Adam on the penalized objective and returns the completed kernel.
pub fn complete_kernel(problem: &CompletionProblem) -> Result<CompletionResult> {
    let n = problem.mask.n();
    if problem.rank == 0 || problem.rank > n {
        return Err(Error::InvalidArgument(format!(
            "rank {} must lie in [1, {n}]",
            problem.rank
        )));
    }
    if !(problem.penalty_weight > 0.0) {
        return Err(Error::InvalidArgument("penalty weight must be positive".into()));
    }
    problem.optimizer.validate()?;
    feasible_set_check(&problem.mask)?;

    let mut u = initial_factor(n, problem.rank, problem.seed);
    let initial_residual = residual(&problem.mask, &completed(&u));
    let mut adam = Adam::new(problem.optimizer, n, problem.rank);
    let window = problem.optimizer.window;
    let mut trace = Vec::with_capacity(problem.optimizer.max_iters + 1);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..problem.optimizer.max_iters {
        let obj = penalized_objective(problem, &u)?;
        if !obj.value.is_finite() {
            return Err(Error::NonFinite(format!("objective at iteration {it}")));
        }
        trace.push(obj.value);
        if trace.len() > window {
            let old = trace[trace.len() - 1 - window];
            if (obj.value - old).abs() <= problem.optimizer.objective_tol * old.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        adam.step(&mut u, &obj.gradient);
        iterations = it + 1;
    }
    if !converged {
        trace.push(penalized_objective(problem, &u)?.value);
    }
    let k = completed(&u);
    let constraint_residual = residual(&problem.mask, &k);
    let k_sym = SymMatrix::symmetrized(k);
    let rho_hat = DensityMatrix::from_psd(k_sym.clone())?;
    Ok(CompletionResult {
        k_hat: KernelMatrix::trusted(k_sym, KernelKind::Custom),
        rho_hat,
        objective_trace: trace,
        constraint_residual,
        initial_residual,
        iterations,
        converged,
    })
}

impl CompletionResult {
    pub fn vne(&self) -> f64 {
        vne(&self.rho_hat)
    }
}

/// Keeps every diagonal entry and `ceil(fraction * n(n-1)/2)` off-diagonal
/// pairs drawn uniformly without replacement.
pub fn mask_generator(k_true: &KernelMatrix, observe_fraction: f64, seed: u64) -> Result<ObservationMask> {
    if !(observe_fraction > 0.0 && observe_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "observe fraction {observe_fraction} must lie in (0, 1]"
        )));
    }
    let n = k_true.n();
    let total = n * (n - 1) / 2;
    let count = ((observe_fraction * total as f64) - 1e-9).ceil().max(0.0) as usize;
    let count = count.min(total);
    let mut rng = random::rng(seed);
    let m = k_true.matrix();
    let mut entries: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, m.get(i, i))).collect();
    for flat in index::sample(&mut rng, total, count).into_iter() {
        let (i, j) = upper_pair(flat, n);
        entries.push((i, j, m.get(i, j)));
    }
    let unit_diag = (0..n).all(|i| m.get(i, i) == 1.0);
    ObservationMask::new(n, entries, unit_diag)
}

/// Row-major index into the strict upper triangle.
fn upper_pair(mut flat: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if flat < row {
            return (i, i + 1 + flat);
        }
        flat -= row;
        i += 1;
    }
}
