//! Dense exact-diagonalization toolkit for the driven anisotropic Dicke
//! model: a single truncated boson mode coupled to a collective spin of N
//! two-level atoms, with a square-wave drive on the coupling strengths.
//!
//! The crate covers the full pipeline:
//!
//! * [`hilbert`]: truncated product basis, ladder operators, embedding,
//!   parity sectors.
//! * [`model`]: static Hamiltonian, drive operator, square-wave step
//!   generators, second-order effective Hamiltonian.
//! * [`floquet`]: Hermitian propagator exponentials, one-cycle operator,
//!   quasienergy spectra.
//! * [`drives`]: Thue-Morse and Fibonacci pulse sequences with
//!   recursion-level unitaries and drift control, stroboscopic powers.
//! * [`dynamics`]: initial ensembles, long-time evolution engines, boson
//!   number and entanglement entropy records.
//! * [`analysis`]: spectral statistics, critical-line estimate, plateau
//!   detection, heating times, simple least-squares fits.
//!
//! All matrices are dense `Complex64`; the intended production size is
//! N = 10 atoms with a boson cutoff of n_max = 199 (joint dimension 2200),
//! which fits comfortably in memory when work is done per parity sector.

// Links the BLAS/LAPACK provider (system OpenBLAS) into every downstream
// target, including integration tests and the CLI.
extern crate blas_src;

pub mod analysis;
pub mod drives;
pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod hilbert;
mod linalg;
pub mod model;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
