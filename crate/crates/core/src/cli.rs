//! Command-line front end.
//!
//! [`dispatch`] runs one command and returns its exit code and output so the
//! binary stays a thin wrapper. Reports go to stdout (or `--out`); errors go
//! to stderr as a JSON record with exit code 2 and nothing on stdout.
//!
//! `--config <file>` reads `key = value` lines, each treated as `--key=value`
//! placed before the command-line arguments. Options given on the command
//! line win over the file. Unknown keys are rejected like unknown flags.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde_json::Map;

use crate::cluster::{self, ClusterLabels};
use crate::completion::{self, CompletionObjective, CompletionProblem, ObservationMask};
use crate::error::{Error, Result};
use crate::games::{self, MinimaxSettings, NewtonSettings};
use crate::io::{self, Format, Report};
use crate::kernels::{self, EmbeddingMatrix, KernelBundle, KernelKind, KernelMatrix};
use crate::mixture::{self, FeasibleSet, Init, MixtureProblem};
use crate::random;
use crate::spectral::{self, DensityMatrix, TOL_TRACE};

/// Result of one CLI invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Parser, Debug)]
#[command(name = "maxvne", version, about = "Maximum von Neumann entropy toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Read `key = value` options from a file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Include wall-clock timings (reports are then no longer reproducible).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entropies of a kernel or density file.
    #[command(args_override_self = true)]
    Entropy(EntropyArgs),
    /// RBF bandwidths matching a common target entropy.
    #[command(args_override_self = true)]
    Calibrate(CalibrateArgs),
    /// Max-VNE mixture weights over a kernel bundle.
    #[command(args_override_self = true)]
    Mixture(MixtureArgs),
    /// Random observation mask of a kernel.
    #[command(args_override_self = true)]
    Mask(MaskArgs),
    /// Max-VNE completion of a masked kernel.
    #[command(args_override_self = true)]
    Complete(CompleteArgs),
    /// Spectral clustering of a kernel scored against true labels.
    #[command(name = "cluster-eval", args_override_self = true)]
    ClusterEval(ClusterEvalArgs),
    /// Minimax or equalizer verification of a game instance.
    #[command(name = "game-verify", args_override_self = true)]
    GameVerify(GameVerifyArgs),
    /// Mask, complete and cluster in one run, against the zero-imputed baseline.
    #[command(args_override_self = true)]
    Pipeline(PipelineArgs),
    /// Labelled Gaussian-blob embeddings.
    #[command(args_override_self = true)]
    Synth(SynthArgs),
}

const COMMANDS: [&str; 9] = [
    "entropy",
    "calibrate",
    "mixture",
    "mask",
    "complete",
    "cluster-eval",
    "game-verify",
    "pipeline",
    "synth",
];

#[derive(Args, Debug)]
struct EntropyArgs {
    /// Kernel or density file. Kernels are divided by their trace.
    #[arg(long)]
    input: PathBuf,
    /// Extra Renyi orders to report.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Embedding files.
    #[arg(long = "embedding", required = true, value_delimiter = ',')]
    embeddings: Vec<PathBuf>,
    /// Target entropy; defaults to the mean linear-kernel entropy of the inputs.
    #[arg(long)]
    target: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Also write each calibrated kernel, one path per input.
    #[arg(long = "kernel-out", value_delimiter = ',')]
    kernel_out: Vec<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum EmbeddingKernel {
    Linear,
    Cosine,
    /// Fixed `--bandwidth`, or calibrated to `--target` when absent.
    Rbf,
}

#[derive(Args, Debug)]
struct MixtureArgs {
    /// Kernel files in the bundle.
    #[arg(long = "kernel", value_delimiter = ',')]
    kernels: Vec<PathBuf>,
    /// Embedding files, each turned into a kernel of `--embedding-kernel` type.
    #[arg(long = "embedding", value_delimiter = ',')]
    embeddings: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = EmbeddingKernel::Linear)]
    embedding_kernel: EmbeddingKernel,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    target: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    calibration_tol: f64,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    grad_tol: f64,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = ArgAction::Set)]
    backtracking: bool,
    /// Starting weights (uniform when absent).
    #[arg(long, value_delimiter = ',')]
    init: Option<Vec<f64>>,
    /// Per-component lower bounds; with `--upper` restricts to a boxed simplex.
    #[arg(long, value_delimiter = ',')]
    lower: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    upper: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct MaskArgs {
    #[arg(long)]
    kernel: PathBuf,
    /// Fraction of off-diagonal pairs observed.
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long)]
    mask_out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    VneLogdet,
    Renyi2Purity,
}

impl From<ObjectiveArg> for CompletionObjective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::VneLogdet => CompletionObjective::VneLogDet,
            ObjectiveArg::Renyi2Purity => CompletionObjective::Renyi2Purity,
        }
    }
}

#[derive(Args, Debug)]
struct CompletionOptions {
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Renyi2Purity)]
    objective: ObjectiveArg,
    /// Factor rank; defaults to min(50, n).
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = 100.0)]
    penalty_weight: f64,
    #[arg(long, default_value_t = completion::DEFAULT_LOGDET_FLOOR)]
    logdet_floor: f64,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    objective_tol: f64,
    #[arg(long, default_value_t = 50)]
    window: usize,
}

impl CompletionOptions {
    fn problem(&self, mask: ObservationMask, seed: u64) -> CompletionProblem {
        let mut p = CompletionProblem::new(mask, self.objective.into());
        if let Some(r) = self.rank {
            p.rank = r;
        }
        p.penalty_weight = self.penalty_weight;
        p.logdet_floor = self.logdet_floor;
        p.optimizer.learning_rate = self.learning_rate;
        p.optimizer.max_iters = self.max_iters;
        p.optimizer.objective_tol = self.objective_tol;
        p.optimizer.window = self.window;
        p.seed = seed;
        p
    }
}

#[derive(Args, Debug)]
struct CompleteArgs {
    #[arg(long)]
    mask: PathBuf,
    #[command(flatten)]
    options: CompletionOptions,
    #[arg(long)]
    kernel_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClusterEvalArgs {
    /// Kernel file; need not be PSD.
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Cluster count; defaults to the number of true classes.
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GameVerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Tolerance on the minimax gap and margins.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Random strategies (minimax) or feasible perturbations (equalizer) to test.
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Labelled embedding file; the cosine kernel is used.
    #[arg(long, conflicts_with = "kernel")]
    embedding: Option<PathBuf>,
    /// Kernel file, with `--labels`.
    #[arg(long)]
    kernel: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long)]
    clusters: Option<usize>,
    #[command(flatten)]
    options: CompletionOptions,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    per_cluster: usize,
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    #[arg(long)]
    embedding_out: PathBuf,
}

/// Files produced by a command, written only after it succeeds.
type Artifacts = Vec<(PathBuf, Vec<u8>)>;

/// Runs the CLI on `argv` (including the program name).
pub fn dispatch<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let command = argv
        .iter()
        .filter_map(|a| a.to_str())
        .find(|a| COMMANDS.contains(a))
        .map(str::to_owned);
    let fail = |kind: &str, msg: &str| Outcome {
        code: 2,
        stdout: String::new(),
        stderr: io::error_record(command.as_deref(), kind, msg),
    };
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => return fail(e.kind(), &e.to_string()),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: e.to_string(),
                    stderr: String::new(),
                },
                _ => fail("UsageError", e.to_string().trim_end()),
            };
        }
    };
    let start = Instant::now();
    let mut artifacts = Artifacts::new();
    let mut report = match run(&cli, &mut artifacts) {
        Ok(r) => r,
        Err(e) => return fail(e.kind(), &e.to_string()),
    };
    if cli.common.timings {
        let mut t = Map::new();
        t.insert("total_seconds".into(), start.elapsed().as_secs_f64().into());
        report.timings = Some(t);
    }
    let json = report.to_json();
    if let Some(out) = &cli.common.out {
        artifacts.push((out.clone(), json.clone().into_bytes()));
    }
    for (path, bytes) in &artifacts {
        if let Err(e) = std::fs::write(path, bytes) {
            return fail("Io", &format!("{}: {e}", path.display()));
        }
    }
    Outcome {
        code: 0,
        stdout: if cli.common.out.is_some() { String::new() } else { json },
        stderr: String::new(),
    }
}

/// Splices `--config` file entries in right after the subcommand name.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<Option<&str>> = argv.iter().map(|a| a.to_str()).collect();
    let mut config = None;
    let mut explicit = Vec::new();
    let mut i = 1;
    while i < strs.len() {
        if let Some(a) = strs[i] {
            if a == "--" {
                break;
            }
            if let Some(flag) = a.strip_prefix("--") {
                let (name, value) = match flag.split_once('=') {
                    Some((n, v)) => (n, Some(v.to_owned())),
                    None => (flag, None),
                };
                if name == "config" {
                    config = match value {
                        Some(v) => Some(v),
                        None => strs.get(i + 1).copied().flatten().map(str::to_owned),
                    };
                }
                explicit.push(name.to_owned());
            }
        }
        i += 1;
    }
    let Some(path) = config else {
        return Ok(argv);
    };
    let src = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
    let mut extra = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("{path} line {}", ln + 1), "expected key = value"))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Error::parse(
                format!("{path} line {}", ln + 1),
                format!("invalid key {:?}", k.trim()),
            ));
        }
        if !explicit.contains(&key) {
            extra.push(OsString::from(format!("--{key}={}", v.trim())));
        }
    }
    let at = strs
        .iter()
        .position(|a| a.is_some_and(|a| COMMANDS.contains(&a)))
        .map_or(argv.len(), |p| p + 1);
    let mut out = argv;
    out.splice(at..at, extra);
    Ok(out)
}

fn run(cli: &Cli, artifacts: &mut Artifacts) -> Result<Report> {
    let seed = cli.common.seed;
    match &cli.command {
        Command::Entropy(a) => entropy(a),
        Command::Calibrate(a) => calibrate(a, artifacts),
        Command::Mixture(a) => mixture_cmd(a),
        Command::Mask(a) => mask(a, seed, artifacts),
        Command::Complete(a) => complete(a, seed, artifacts),
        Command::ClusterEval(a) => cluster_eval(a, seed, artifacts),
        Command::GameVerify(a) => game_verify(a, seed),
        Command::Pipeline(a) => pipeline(a, seed),
        Command::Synth(a) => synth(a, seed, artifacts),
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn entropy(a: &EntropyArgs) -> Result<Report> {
    let loaded = io::load_matrix(&a.input)?;
    let mut r = Report::new("entropy");
    r.config("input", path_str(&a.input))?;
    r.config("alpha", &a.alpha)?;
    if let Some(w) = loaded.warning() {
        r.warn(w);
    }
    let trace = loaded.matrix.trace();
    let is_density = (trace - 1.0).abs() <= TOL_TRACE;
    let rho = if is_density {
        DensityMatrix::new(loaded.matrix)?
    } else {
        DensityMatrix::from_psd(loaded.matrix)?
    };
    let n = rho.dim();
    r.metric("n", n)?;
    r.metric("trace", trace)?;
    r.metric("is_density", is_density)?;
    r.metric("vne", spectral::vne(&rho))?;
    r.metric("max_entropy", (n as f64).ln())?;
    r.metric("renyi2", spectral::renyi2(&rho))?;
    r.metric("purity", rho.purity())?;
    r.metric("min_eigenvalue", rho.min_eigenvalue())?;
    let mut renyi = Map::new();
    for &alpha in &a.alpha {
        renyi.insert(
            alpha.to_string(),
            io_value(spectral::renyi_entropy(&rho, alpha)?, "renyi")?,
        );
    }
    r.metric("renyi", renyi)?;
    Ok(r)
}

fn io_value(v: f64, what: &str) -> Result<serde_json::Value> {
    if !v.is_finite() {
        return Err(Error::NonFinite(what.into()));
    }
    Ok(v.into())
}

fn load_all_embeddings(paths: &[PathBuf]) -> Result<Vec<EmbeddingMatrix>> {
    paths.iter().map(|p| io::load_embeddings(p)).collect()
}

fn calibrate(a: &CalibrateArgs, artifacts: &mut Artifacts) -> Result<Report> {
    if !a.kernel_out.is_empty() && a.kernel_out.len() != a.embeddings.len() {
        return Err(Error::LengthMismatch(a.embeddings.len(), a.kernel_out.len()));
    }
    let embs = load_all_embeddings(&a.embeddings)?;
    let target = match a.target {
        Some(t) => t,
        None => kernels::mean_linear_vne(&embs)?,
    };
    let mut r = Report::new("calibrate");
    r.config(
        "embeddings",
        a.embeddings.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
    )?;
    r.config("target", a.target)?;
    r.config("tol", a.tol)?;
    r.metric("target", target)?;
    let mut results = Vec::new();
    for (k, e) in embs.iter().enumerate() {
        let c = kernels::calibrate_bandwidth(e, target, a.tol)?;
        if let Some(out) = a.kernel_out.get(k) {
            let kernel = kernels::build_kernel(e, KernelKind::Rbf { bandwidth: c.bandwidth })?;
            artifacts.push((out.clone(), encode_kernel_for(out, &kernel)));
        }
        results.push(c);
    }
    r.metric("calibrations", results)?;
    Ok(r)
}

fn encode_kernel_for(path: &Path, k: &KernelMatrix) -> Vec<u8> {
    match Format::from_path(path) {
        Format::Binary => io::encode_kernel(k),
        Format::Csv => io::kernel_csv(k).into_bytes(),
    }
}

fn mixture_cmd(a: &MixtureArgs) -> Result<Report> {
    let mut r = Report::new("mixture");
    let mut kernels = Vec::new();
    let mut names = Vec::new();
    for p in &a.kernels {
        let loaded = io::load_kernel(p)?;
        if let Some(w) = loaded.warning {
            r.warn(format!("{}: {w}", p.display()));
        }
        kernels.push(loaded.kernel);
        names.push(path_str(p));
    }
    let embs = load_all_embeddings(&a.embeddings)?;
    if !embs.is_empty() {
        let built = embedding_kernels(&embs, a, &mut r)?;
        kernels.extend(built);
        names.extend(a.embeddings.iter().map(|p| path_str(p)));
    }
    if kernels.is_empty() {
        return Err(Error::InvalidArgument(
            "give at least one --kernel or --embedding".into(),
        ));
    }
    let bundle = KernelBundle::new(kernels, names.clone())?;
    let mut problem = MixtureProblem::new(bundle);
    problem.pga.learning_rate = a.learning_rate;
    problem.pga.max_iters = a.max_iters;
    problem.pga.grad_tol = a.grad_tol;
    problem.pga.backtracking = a.backtracking;
    if let Some(init) = &a.init {
        problem.pga.init = Init::Given(init.clone());
    }
    problem.feasible = match (&a.lower, &a.upper) {
        (None, None) => FeasibleSet::FullSimplex,
        (lower, upper) => {
            let m = names.len();
            FeasibleSet::BoxedSimplex {
                lower: lower.clone().unwrap_or_else(|| vec![0.0; m]),
                upper: upper.clone().unwrap_or_else(|| vec![1.0; m]),
            }
        }
    };
    r.config("components", &names)?;
    r.config("embedding_kernel", format!("{:?}", a.embedding_kernel).to_lowercase())?;
    r.config("learning_rate", a.learning_rate)?;
    r.config("max_iters", a.max_iters)?;
    r.config("grad_tol", a.grad_tol)?;
    r.config("backtracking", a.backtracking)?;
    r.config("init", &a.init)?;
    r.config("lower", &a.lower)?;
    r.config("upper", &a.upper)?;
    let sol = mixture::select_mixture(&problem)?;
    r.metric("alpha_star", &sol.alpha_star)?;
    r.metric("vne_star", sol.vne_star)?;
    r.metric("converged", sol.converged)?;
    r.metric("grad_norm", sol.grad_norm)?;
    r.metric("degenerate", sol.degenerate)?;
    r.metric("monotone_violations", sol.monotone_violations)?;
    r.metric("iterations", sol.trajectory.len().saturating_sub(1))?;
    r.metric("concatenation_scales", mixture::concatenation_recipe(&sol))?;
    r.trace("trajectory", &sol.trajectory)?;
    Ok(r)
}

fn embedding_kernels(embs: &[EmbeddingMatrix], a: &MixtureArgs, r: &mut Report) -> Result<Vec<KernelMatrix>> {
    match a.embedding_kernel {
        EmbeddingKernel::Linear => embs
            .iter()
            .map(|e| kernels::build_kernel(e, KernelKind::Linear))
            .collect(),
        EmbeddingKernel::Cosine => embs
            .iter()
            .map(|e| kernels::build_kernel(e, KernelKind::Cosine))
            .collect(),
        EmbeddingKernel::Rbf => {
            let mut bandwidths = Vec::new();
            let target = match (a.bandwidth, a.target) {
                (Some(_), _) => None,
                (None, Some(t)) => Some(t),
                (None, None) => Some(kernels::mean_linear_vne(embs)?),
            };
            let mut out = Vec::new();
            for e in embs {
                let bw = match target {
                    None => a.bandwidth.expect("bandwidth given"),
                    Some(t) => kernels::calibrate_bandwidth(e, t, a.calibration_tol)?.bandwidth,
                };
                bandwidths.push(bw);
                out.push(kernels::build_kernel(e, KernelKind::Rbf { bandwidth: bw })?);
            }
            r.metric("bandwidths", bandwidths)?;
            if let Some(t) = target {
                r.metric("calibration_target", t)?;
            }
            Ok(out)
        }
    }
}

fn mask(a: &MaskArgs, seed: u64, artifacts: &mut Artifacts) -> Result<Report> {
    let loaded = io::load_kernel(&a.kernel)?;
    let m = completion::mask_generator(&loaded.kernel, a.fraction, seed)?;
    let mut r = Report::new("mask");
    if let Some(w) = loaded.warning {
        r.warn(w);
    }
    r.config("kernel", path_str(&a.kernel))?;
    r.config("fraction", a.fraction)?;
    r.config("seed", seed)?;
    r.config("mask_out", path_str(&a.mask_out))?;
    r.metric("n", m.n())?;
    r.metric("observed_off_diagonal", m.off_diagonal_count())?;
    r.metric("stored_entries", m.len())?;
    artifacts.push((a.mask_out.clone(), io::mask_text(&m).into_bytes()));
    Ok(r)
}

fn completion_config(r: &mut Report, o: &CompletionOptions, p: &CompletionProblem) -> Result<()> {
    r.config("objective", CompletionObjective::from(o.objective))?;
    r.config("rank", p.rank)?;
    r.config("penalty_weight", p.penalty_weight)?;
    r.config("logdet_floor", p.logdet_floor)?;
    r.config("optimizer", p.optimizer)?;
    r.config("seed", p.seed)?;
    Ok(())
}

fn completion_metrics(r: &mut Report, res: &completion::CompletionResult) -> Result<()> {
    r.metric("vne", res.vne())?;
    r.metric("renyi2", spectral::renyi2(&res.rho_hat))?;
    r.metric("constraint_residual", res.constraint_residual)?;
    r.metric("initial_residual", res.initial_residual)?;
    r.metric("iterations", res.iterations)?;
    r.metric("converged", res.converged)?;
    r.trace("objective", &res.objective_trace)?;
    Ok(())
}

fn complete(a: &CompleteArgs, seed: u64, artifacts: &mut Artifacts) -> Result<Report> {
    let m = io::load_mask(&a.mask)?;
    let problem = a.options.problem(m, seed);
    let mut r = Report::new("complete");
    r.config("mask", path_str(&a.mask))?;
    completion_config(&mut r, &a.options, &problem)?;
    let res = completion::complete_kernel(&problem)?;
    completion_metrics(&mut r, &res)?;
    if let Some(out) = &a.kernel_out {
        artifacts.push((out.clone(), encode_kernel_for(out, &res.k_hat)));
    }
    Ok(r)
}

fn truth_labels(labels: Vec<usize>, n: usize) -> Result<ClusterLabels> {
    if labels.len() != n {
        return Err(Error::LengthMismatch(n, labels.len()));
    }
    ClusterLabels::from_labels(labels)
}

fn cluster_eval(a: &ClusterEvalArgs, seed: u64, artifacts: &mut Artifacts) -> Result<Report> {
    let loaded = io::load_matrix(&a.kernel)?;
    let truth = truth_labels(io::load_labels(&a.labels)?, loaded.matrix.dim())?;
    let c = a.clusters.unwrap_or(truth.clusters());
    let mut r = Report::new("cluster-eval");
    if let Some(w) = loaded.warning() {
        r.warn(w);
    }
    r.config("kernel", path_str(&a.kernel))?;
    r.config("labels", path_str(&a.labels))?;
    r.config("clusters", c)?;
    r.config("seed", seed)?;
    let pred = cluster::spectral_cluster(&loaded.matrix, c, seed)?;
    let m = cluster::evaluate(&pred, &truth)?;
    r.metric("nmi", m.nmi)?;
    r.metric("ari", m.ari)?;
    r.metric("acc", m.acc)?;
    if let Some(out) = &a.labels_out {
        artifacts.push((out.clone(), io::labels_text(pred.labels()).into_bytes()));
    }
    Ok(r)
}

fn game_verify(a: &GameVerifyArgs, seed: u64) -> Result<Report> {
    let game = io::load_game(&a.instance)?;
    let mut r = Report::new("game-verify");
    r.config("instance", path_str(&a.instance))?;
    r.config("tol", a.tol)?;
    r.config("samples", a.samples)?;
    r.config("seed", seed)?;
    match &game {
        io::GameInstance::Polytope { .. } => {
            let gamma = game.to_polytope()?;
            let settings = MinimaxSettings {
                samples: a.samples,
                seed,
                ..MinimaxSettings::default()
            };
            let rep = games::verify_minimax(&gamma, gamma.eps(), a.tol, &settings)?;
            r.metric("game", "polytope")?;
            r.metric("minimax", rep)?;
        }
        io::GameInstance::Gibbs { .. } => {
            let constraints = game.to_constraints()?;
            let sol = games::solve_gibbs(&constraints, &NewtonSettings::default())?;
            let eq = games::verify_equalizer(&sol, &constraints, a.samples, seed)?;
            r.metric("game", "gibbs")?;
            r.metric("beta", &sol.beta)?;
            r.metric("c", sol.c)?;
            r.metric("equalizer_value", sol.equalizer_value)?;
            r.metric("vne", spectral::vne(&sol.rho_tau))?;
            r.metric("rho_tau_spectrum", sol.rho_tau.spectrum())?;
            r.metric("constraint_residual", games::gibbs_residual(&sol, &constraints)?)?;
            r.metric("newton_iterations", sol.iterations)?;
            r.metric("gradient_fallback", sol.gradient_fallback)?;
            r.metric("equalizer", eq)?;
        }
    }
    Ok(r)
}

fn pipeline(a: &PipelineArgs, seed: u64) -> Result<Report> {
    let mut r = Report::new("pipeline");
    let (kernel, labels) = match (&a.embedding, &a.kernel) {
        (Some(p), None) => {
            let e = io::load_embeddings(p)?;
            let labels = match (&a.labels, e.labels()) {
                (Some(l), _) => io::load_labels(l)?,
                (None, Some(l)) => l.iter().map(|&x| x as usize).collect(),
                (None, None) => {
                    return Err(Error::InvalidArgument(
                        "embedding file has no labels; pass --labels".into(),
                    ))
                }
            };
            r.config("embedding", path_str(p))?;
            (kernels::build_kernel(&e, KernelKind::Cosine)?, labels)
        }
        (None, Some(p)) => {
            let loaded = io::load_kernel(p)?;
            if let Some(w) = loaded.warning {
                r.warn(w);
            }
            let l = a
                .labels
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--kernel needs --labels".into()))?;
            r.config("kernel", path_str(p))?;
            (loaded.kernel, io::load_labels(l)?)
        }
        _ => {
            return Err(Error::InvalidArgument(
                "give exactly one of --embedding or --kernel".into(),
            ))
        }
    };
    let truth = truth_labels(labels, kernel.n())?;
    let c = a.clusters.unwrap_or(truth.clusters());
    let m = completion::mask_generator(&kernel, a.fraction, seed)?;
    let baseline = m.zero_imputed();
    let problem = a.options.problem(m, seed);
    r.config("fraction", a.fraction)?;
    r.config("clusters", c)?;
    completion_config(&mut r, &a.options, &problem)?;
    let res = completion::complete_kernel(&problem)?;

    let base_pred = cluster::spectral_cluster(&baseline, c, seed)?;
    let base = cluster::evaluate(&base_pred, &truth)?;
    let done_pred = cluster::spectral_cluster(res.k_hat.matrix(), c, seed)?;
    let done = cluster::evaluate(&done_pred, &truth)?;
    let full_pred = cluster::spectral_cluster(kernel.matrix(), c, seed)?;
    let full = cluster::evaluate(&full_pred, &truth)?;
    r.metric("n", kernel.n())?;
    r.metric("observed_off_diagonal", problem.mask.off_diagonal_count())?;
    r.metric("zero_imputed", base)?;
    r.metric("completed", done)?;
    r.metric("full_kernel", full)?;
    completion_metrics(&mut r, &res)?;
    Ok(r)
}

fn synth(a: &SynthArgs, seed: u64, artifacts: &mut Artifacts) -> Result<Report> {
    let mut rng = random::rng(seed);
    let e = random::gaussian_blobs(a.per_cluster, a.clusters, a.dim, a.separation, a.noise, &mut rng)?;
    let mut r = Report::new("synth");
    r.config("per_cluster", a.per_cluster)?;
    r.config("clusters", a.clusters)?;
    r.config("dim", a.dim)?;
    r.config("separation", a.separation)?;
    r.config("noise", a.noise)?;
    r.config("seed", seed)?;
    r.metric("n", e.n())?;
    r.metric("d", e.d())?;
    let bytes = match Format::from_path(&a.embedding_out) {
        Format::Binary => io::encode_embeddings(&e),
        Format::Csv => io::embeddings_csv(&e).into_bytes(),
    };
    artifacts.push((a.embedding_out.clone(), bytes));
    Ok(r)
}
