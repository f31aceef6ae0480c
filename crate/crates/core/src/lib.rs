//! Maximum von Neumann entropy toolkit.
//!
//! Spectral entropies and divergences of density matrices, numerical
//! witnesses for the minimax and Gibbs-equalizer results of the Max-VNE
//! game, Max-VNE selection of kernel mixtures, Max-VNE completion of
//! partially observed kernels, and spectral-clustering evaluation.
//!
//! ```
//! use maxvne::{vne, DensityMatrix};
//!
//! let rho = DensityMatrix::maximally_mixed(4);
//! assert!((vne(&rho) - 4f64.ln()).abs() < 1e-12);
//! ```
//!
//! The guide in `book/` walks through each module; its code blocks are
//! compiled and run as doc-tests of this crate.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cluster;
pub mod completion;
pub mod error;
pub mod games;
pub mod io;
pub mod kernels;
pub mod mixture;
pub mod random;
pub mod spectral;

pub use cluster::{acc, ari, nmi, spectral_cluster, ClusterLabels, MetricReport};
pub use completion::{complete_kernel, mask_generator, CompletionObjective, CompletionProblem, ObservationMask};
pub use error::{Error, Result};
pub use games::{solve_gibbs, verify_equalizer, verify_minimax, ConstraintSet, PolytopeAmbiguitySet};
pub use kernels::{build_kernel, calibrate_bandwidth, EmbeddingMatrix, KernelBundle, KernelKind, KernelMatrix};
pub use mixture::{select_mixture, FeasibleSet, MixtureProblem, PgaSettings};
pub use spectral::{
    bregman_divergence, f_loss, log_loss, quantum_relative_entropy, renyi2, renyi_entropy, trace_entropy, vne,
    DensityMatrix, Divergence, EpsilonFloor, FGenerator, SymMatrix,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/entropies.md")]
    mod entropies {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/games.md")]
    mod games {}
    #[doc = include_str!("../../../book/src/mixture.md")]
    mod mixture {}
    #[doc = include_str!("../../../book/src/completion.md")]
    mod completion {}
    #[doc = include_str!("../../../book/src/clustering.md")]
    mod clustering {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
