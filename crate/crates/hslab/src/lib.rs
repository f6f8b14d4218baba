//! Numerical laboratory for tent spaces, Z-spaces and first-order (Dirac) methods
//! for constant-coefficient elliptic boundary value problems on a discretised
//! upper half-space.

pub mod atoms;
pub mod bvp;
pub mod calculus;
pub mod cli;
pub mod exponents;
pub mod fourier;
pub mod grid;
pub mod holo;
pub mod io;
pub mod linalg;
pub mod overlap;
pub mod quasinorms;
pub mod region;
pub mod verify;

pub use num_complex::Complex64 as C64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precond<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}

/// Build the global rayon pool, honouring `HSH_THREADS` when set.
pub fn init_threads() {
    if let Some(n) = std::env::var("HSH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}
