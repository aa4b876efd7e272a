//! Batch front end for the `collapse-core` solvers: one subcommand per solver
//! family, flat key=value configuration, deterministic CSV/JSON export and the
//! acceptance driver behind `verify-all`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
pub mod report;

use thiserror::Error;

pub use config::{ConfigError, Param, RunConfig};
pub use output::OutputError;
pub use report::{Diagnostic, RunSummary};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    /// The pipeline itself failed; reported like a failed diagnostic.
    #[error("{0}")]
    Solver(String),
}

impl RunError {
    pub fn solver(e: impl std::fmt::Display) -> Self {
        RunError::Solver(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Size of the worker pool: `COLLAPSE_LAB_THREADS` when set and positive,
/// otherwise rayon's default.
pub fn thread_count() -> Option<usize> {
    std::env::var("COLLAPSE_LAB_THREADS").ok().and_then(|v| v.trim().parse().ok()).filter(|&n: &usize| n > 0)
}

/// Runs `f` on a pool sized by [`thread_count`].
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count() {
        b = b.num_threads(n);
    }
    match b.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
