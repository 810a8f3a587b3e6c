//! Density estimation over half-uniform distributions.
//!
//! Given `k` distributions over `[n]`, each uniform on its support, and a
//! handful of samples from one of them, identify which one produced the
//! samples. The crate provides:
//!
//! - [`subset_index`]: a probe-set index that maps random `ℓ`-subsets of the
//!   domain to the distributions containing them, and answers queries by
//!   scanning only the bucket of a probe contained in the sample set.
//! - [`elimination`]: the linear-scan baseline that discards candidates whose
//!   support misses an observed sample.
//! - [`instance_gen`]: seeded generators for half-uniform, Bernoulli-support
//!   and gap-subset-search instances, and the reduction between the last two.
//! - [`lower_bound`]: KL-divergence machinery and the numeric evaluation of
//!   the space/query-time trade-off, with the closed-form curves.
//! - [`bench`]: operation-counted experiment sweeps with adaptive index size.
//! - [`verify`]: a self-check suite surfaced by the CLI.
//!
//! Cost is measured in membership operations: one call to
//! [`SupportSet::contains`] against a distribution's support or the set of
//! sampled elements.

// Negated float comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

pub mod bench;
pub mod dataset;
pub mod distributions;
pub mod elimination;
pub mod instance_gen;
pub mod lower_bound;
pub mod rng;
pub mod stats;
pub mod subset_index;
pub mod verify;

pub use dataset::Dataset;
pub use distributions::{
    l1_distance, HalfUniformDistribution, OpCounter, QueryMultiset, SupportSet,
};
pub use elimination::{eliminate, CandidateSet, EliminationOutcome};
pub use subset_index::{IndexParams, QueryVariant, SubsetIndex, SubsetOutcome};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("adaptive search aborted: {0}")]
    SearchAborted(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
