//! Single-outcome probabilities of Gaussian boson sampling interferometers.
//!
//! The main engine ([`tnet`]) evolves outcome projectors backwards through the
//! interferometer as matrix product states/operators (Heisenberg picture),
//! including per-gate photon loss. Three independent references are provided
//! to check it: a Schrödinger-picture tensor-network mode, a brute-force dense
//! Fock-space simulator ([`fockdense`]) and the exact Gaussian/hafnian formula
//! ([`gauss`]). [`analysis`] holds the cutoff-selection rule and the
//! bond-dimension scaling estimates.
//!
//! Conventions used throughout:
//! - modes are indexed from 0; a gate acts on the adjacent pair `(i, i + 1)`;
//! - a two-mode Fock operator is a `(d²)×(d²)` matrix with `d = n_c + 1` and
//!   pair index `n_lo * d + n_hi`;
//! - the squeezer is `S(r) = exp{(r/2)(a² − a†²)}`, so a squeezed vacuum
//!   holds `sinh²(r)` photons on average.

pub mod analysis;
pub mod circuit;
pub mod error;
pub mod fock;
pub mod fockdense;
pub mod gauss;
pub mod tnet;

mod linalg;

pub use num_complex::Complex64 as C64;

pub use error::{GbsError, GbsResult};
pub use fock::FockOutcome;
