//! Numerical solvers for the infinity-Laplacian Gelfand problem
//!
//! ```text
//! min{ |∇u| − Λ e^u , −Δ∞ u } = 0   in Ω,      u = 0 on ∂Ω
//! ```
//!
//! and for its finite-p counterpart `−Δ_p u = λ e^u`.
//!
//! The crate is organised around a node-centred Cartesian [`GridDomain`] whose
//! interior nodes carry per-direction clip fractions against the true boundary.
//! On top of it:
//!
//! * [`geometry`]: shapes, exact and numerical distance fields, `Λ₁`, the
//!   maximal-distance set and a discrete kink (ridge) indicator.
//! * [`limit`]: the monotone frozen-RHS scheme, the outer minimal-solution
//!   iteration, branch continuation and extinction-threshold bisection.
//! * [`cone`]: explicit cone solutions `α·dist`, the multiplicity curve and the
//!   non-existence classifier.
//! * [`p_solver`]: p-torsion, p-Gelfand minimal branch, eigenvalue and
//!   threshold estimates, a 1D shooting oracle and the p→∞ convergence study.
//! * [`io`] and [`cli`]: CSV/PGM/JSON artifacts and the `gelfand` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cone;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod limit;
mod linalg;
pub mod p_solver;
pub mod verify;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use geometry::{build_domain, GridDomain, NodeKind, Shape, StencilChoice, StencilSet};
pub use limit::{BranchPoint, LimitConfig, SolveReport, SolveStatus};
