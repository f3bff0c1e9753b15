//! Grand-canonical entropy minimization on bounded domains.
//!
//! The library recovers dual parameters `(μ, λ, β)` from macroscopic
//! constraints `(ρ, u, E)` by minimizing the strictly convex log-partition
//! functional, maps out the feasible constraint set as the interior of a
//! convex hull of paraboloid slabs, and provides discrete Legendre-Fenchel
//! machinery plus a dyadic-box harness for thermodynamic-limit diagnostics.

pub mod domain;
pub mod error;
pub mod feasible_set;
pub mod partition;
pub mod potentials;
pub mod quad;

pub use domain::BoxDomain;
pub use error::{Error, Result};
pub use feasible_set::{FeasibilityStatus, FeasibilityVerdict, MacroState};
pub use partition::{PartitionEstimate, PartitionOpts, ThermoParams};
pub use potentials::{PairPotential, PotentialSpec};
