//! Low-rank matrix recovery from linear measurements by iteratively
//! reweighted least squares (IRLS-p), its factored alternating variant
//! (AIRLS-p), and a vector IRLS for sparse recovery, plus the experiment
//! harness used to compare them.

pub mod acm;
pub mod airls;
pub mod error;
pub mod harness;
pub mod io;
pub mod irls;
pub mod linalg;
pub mod linops;
pub mod lsq;
pub mod objective;
pub mod report;

pub use error::{Error, Result};
pub use linops::{LinearMap, Operator, ProblemInstance, Reference};
pub use lsq::LsStrategy;
pub use objective::{WeightMatrix, WeightSide};
