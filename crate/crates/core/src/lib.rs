//! Message passing on factor graphs that mixes belief propagation (BP) and
//! mean-field (MF) updates.
//!
//! The factor set of a graph is split into a BP part and an MF part. Factors in
//! the BP part exchange sum-product messages, factors in the MF part exchange
//! mean-field messages, and variables sitting on the boundary combine both.
//! The fixed points of the combined update rules are the stationary points of
//! a region-based free energy, which this crate can evaluate and monitor.
//!
//! Module overview:
//!
//! * [`factor_graph`]: variables, factors, BP/MF partitions, region sets and the
//!   JSON graph description format.
//! * [`tabular`]: discrete tables and messages with log-domain arithmetic.
//! * [`gaussian_mf`]: complex Gaussian beliefs in precision form.
//! * [`message_passing`]: the individual update kernels.
//! * [`free_energy`]: free-energy functionals and residual diagnostics.
//! * [`scheduler`]: tree-exact and loopy schedules with convergence traces.
//! * [`exact_oracle`]: brute-force enumeration for small instances.
//! * [`instances`]: seeded random instance generators used by tests and the
//!   verification suite.

pub mod error;
pub mod exact_oracle;
pub mod extended;
pub mod factor_graph;
pub mod free_energy;
pub mod gaussian_mf;
pub mod instances;
pub mod message_passing;
pub mod numeric;
pub mod scheduler;
pub mod tabular;

pub use error::{Error, Result};
pub use extended::Extended;
pub use factor_graph::{
    BpMfPartition, FactorGraph, FactorId, GraphBuilder, Potential, VarId, VarKind,
};
pub use num_complex::Complex64;
