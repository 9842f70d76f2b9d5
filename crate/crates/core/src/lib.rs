//! Pontryagin extremal classification for fully actuated nonholonomic
//! mechanical systems and their kinematic counterparts.
//!
//! Systems are given by expression-valued fields on one chart of ℝⁿ
//! ([`specfile`]). Dynamics live in [`systems`], Hamiltonians and momentum
//! equations in [`hamiltonian`], and the classification of a fixed
//! trajectory as normal, abnormal or strictly abnormal in [`pmp`].

// Index loops mirror the tensor formulas; `!(a < b)` comparisons are meant
// to reject NaN; `Expr::add` and friends are folding builders, not ops.
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::should_implement_trait
)]

pub mod error;
pub mod expr;
pub mod fixtures;
pub mod geometry;
pub mod hamiltonian;
pub mod linalg;
pub mod ode;
pub mod pmp;
pub mod report;
pub mod specfile;
pub mod systems;

pub use error::{Error, ErrorClass, Result};
pub use expr::{parse, Expr, Symbols};
pub use geometry::{Christoffel, ChristoffelSource, Frame, MetricField, SourceKind};
pub use specfile::{load_spec_path, load_spec_str, LoadedSpec, SpecFile};
pub use systems::{ChristoffelPairing, CostSpec, Mode, SystemSpec, Trajectory, TrajectoryKind};
