//! Max-product and classical Meyer-König and Zeller operators.
//!
//! The core is generic over [`Real`] (`f32` and `f64`). Verification sweeps
//! run in `f64`. Concrete aliases for both widths are exported below.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analysis;
pub mod basis;
pub mod error;
pub mod operators;
pub mod scalar;
pub mod special;
pub mod verify;

pub use analysis::{
    best_alpha_bound, bound_prefactor, distance_transform_bound, grid_modulus, modulus, rate_fit, theorem_bound,
    BoundReport, ModulusEstimate, ModulusMethod, SmoothingExponent, DEFAULT_MODULUS_GRID,
};
pub use basis::{
    certify_truncation, interval_bounds, interval_index, log_basis_weight, log_weight_ratio, node, truncation_index,
    weight_ratio, weighted_distance, BasisPoint, Degree, Reduction, TailCertificate, DEFAULT_INDEX_CAP,
};
pub use error::{Error, Result};
pub use operators::{
    builtin, eval_classical_mkz, eval_distance_transform, eval_max_product_mkz, grid_point, sup_error,
    sup_error_classical, ClassicalWeights, DistanceFunction, EvalResult, FunctionSource, NodeConvention,
    PiecewiseLinear, TestFunction, BUILTIN_NAMES,
};
pub use scalar::{CompensatedSum, Real};
pub use verify::{SweepSpec, VerificationReport, Witness};

pub type TestFunction64 = TestFunction<f64>;
pub type TestFunction32 = TestFunction<f32>;
pub type PiecewiseLinear64 = PiecewiseLinear<f64>;
pub type PiecewiseLinear32 = PiecewiseLinear<f32>;
pub type EvalResult64 = EvalResult<f64>;
pub type EvalResult32 = EvalResult<f32>;
pub type BasisPoint64 = BasisPoint<f64>;
pub type BasisPoint32 = BasisPoint<f32>;
pub type TailCertificate64 = TailCertificate<f64>;
pub type TailCertificate32 = TailCertificate<f32>;
pub type ClassicalWeights64 = ClassicalWeights<f64>;
pub type ClassicalWeights32 = ClassicalWeights<f32>;
pub type ModulusEstimate64 = ModulusEstimate<f64>;
pub type ModulusEstimate32 = ModulusEstimate<f32>;
pub type BoundReport64 = BoundReport<f64>;
pub type BoundReport32 = BoundReport<f32>;
