//! Exact tools for punctured q-Steiner systems `S_q(t,k,n;m)`.
//!
//! The crate is organised bottom-up:
//!
//! - [`field`]: table-backed arithmetic in `F_q`, `q <= 16`.
//! - [`subspace`]: canonical RREF subspaces, Grassmannian enumeration and the
//!   puncture / extension / expansion calculus.
//! - [`counting`]: Gaussian coefficients, the extension counts `N`, `C`, `D`,
//!   divisibility conditions, and brute-force oracles for each count.
//! - [`equations`]: the full and uniform covering equation systems with an exact
//!   rational solver.
//! - [`designs`]: design multisets, the streaming verifier, spreads and
//!   parallelisms, and the explicit and recursive constructions.
//! - [`io`]: the line-oriented design and parallelism file formats.

pub mod counting;
pub mod designs;
pub mod equations;
pub mod field;
pub mod io;
pub mod subspace;

pub use counting::{count_c, count_d, count_n, gaussian, necessary_conditions, DivisibilityReport};
pub use designs::{
    DesignMultiset, DesignParams, Parallelism, Spread, SteinerSystem, VerificationReport,
};
pub use equations::{FullSystem, SolveOutcome, SolveStatus, UniformSystem};
pub use field::Field;
pub use subspace::{enumerate_subspaces, rref, Subspace, VirtualExpansion};
