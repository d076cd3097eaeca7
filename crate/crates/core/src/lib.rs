// index loops mirror the tensor formulas; negated comparisons reject NaN inputs
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Curvature computation for Riemannian metrics given in three representations
//! (coordinate-chart component expressions, left-invariant Lie frames, and
//! closed-form canonical variations of submersions), together with the
//! traceless-Ricci deformation `g_s = g - s * ric0(g)`, the associated
//! tangent/2-vector comparison norms, and margin scans for the pointwise
//! scalar-curvature inequalities they enter.
//!
//! All types are immutable values and all operations are pure; computations
//! are safe to run from any number of threads. Reductions over point sets are
//! performed in deterministic order.

pub mod catalog;
pub mod chart;
pub mod deform;
pub mod expr;
pub mod frame;
pub mod jet;
pub mod linalg;
pub mod submersion;
pub mod verify;

pub use chart::{ChartMetric, CurvatureReport};
pub use deform::{Direction, PointState, ScanResult, Theorem};
pub use expr::Expr;
pub use frame::{FrameMetric, LieAlgebraData};
pub use jet::{Jet, Scalar};
pub use submersion::CanonicalVariationModel;
