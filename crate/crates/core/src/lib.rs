//! Optimal transport under order constraints.
//!
//! An order constraint pins a list of plan entries to the top of the plan's
//! ranking: each pinned entry dominates the next one below it, and the lowest
//! pinned entry dominates every free entry. The crate provides
//!
//! * [`admm::solve`], an ADMM solver alternating two exact projections
//!   ([`projections::project_c1`] and [`projections::project_c2`]),
//! * [`bounds::lower_bound`], a packing-based lower bound on the constrained optimum,
//! * [`search::branch_and_bound`], a best-first search for a diverse set of
//!   low-cost constrained plans,
//! * [`oracle`], slow reference implementations used for verification.

pub mod admm;
pub mod baseline;
pub mod bounds;
pub mod error;
pub mod matrix;
pub mod oracle;
pub mod problem;
pub mod projections;
pub mod search;

pub use admm::{solve, SolverConfig, SolverTrace, Termination, TransportPlan};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use problem::{
    check_membership, feasible_point, objective, validate_problem, MembershipReport, OrderedVariates, Problem,
    Variate,
};
