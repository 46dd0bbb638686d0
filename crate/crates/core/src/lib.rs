//! Truncated Fock-space simulation of heralded photon addition at the output
//! of a Mach-Zehnder interferometer fed by a coherent state.
//!
//! The crate is organised bottom-up:
//!
//! - [`special`]: Laguerre polynomials and log-factorials.
//! - [`fock`]: single- and two-mode truncated states and branch ensembles.
//! - [`circuit`]: beam splitter, interferometer ports, loss, two-mode squeezer.
//! - [`herald`]: beam-splitter and down-conversion photon addition, subtraction.
//! - [`analytics`]: closed-form success probabilities, moments, SNR, Fisher information.
//! - [`wigner`]: displaced-parity Wigner functions and phase-space heralding.
//! - [`experiment`]: seeded Monte Carlo runs of the post-selected measurement.
//! - [`table`]: self-describing CSV/JSON output tables.

pub mod analytics;
pub mod circuit;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod herald;
pub mod special;
pub mod table;
pub mod wigner;

pub use error::{Error, Result};
pub use fock::{BranchEnsemble, BranchMember, PureState, TwoModeState};
pub use herald::HeraldResult;
pub use special::PolynomialOrder;
