//! Width-independent approximate solvers for mixed packing and covering
//! linear programs
//!
//! ```text
//! find x >= 0 with Px <= (1 + O(eps)) p and Cx >= c
//! ```
//!
//! where `P` and `C` are nonnegative. Iteration counts depend on the number
//! of constraints and on `eps` only, never on the magnitude of the entries.
//!
//! Modules:
//!
//! - [`instance`]: sparse matrices, instances, JSON format, normalization,
//!   generators.
//! - [`potentials`]: smoothed max/min and the incremental solver state.
//! - [`solvers`]: generic, phased and parallel feasibility algorithms with
//!   runtime tracking of their potential invariants.
//! - [`optimizer`]: `min lambda` with `Px <= lambda p` via feasibility probes.
//! - [`mcf`]: min-cost concurrent multicommodity flow.
//! - [`tomography`]: nonnegative systems `Ax = 1` and a parallel-beam model.
//! - [`oracle`]: exact answers for tiny instances.

pub mod error;
pub mod instance;
pub mod mcf;
pub mod optimizer;
pub mod oracle;
pub mod potentials;
pub mod solvers;
pub mod tomography;

pub use error::{InstanceError, OracleError, PotentialError, SolveError, VerifyError};
pub use instance::{parse_instance, MixedInstance, SparseNonnegMatrix};
pub use solvers::{solve, Algorithm, SolveConfig, SolveOutcome, Status};
