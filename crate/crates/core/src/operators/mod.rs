//! Maximal operators, product-kernel quadrature, the local grand maximal
//! truncation and kernel condition estimators.

mod apply;
mod conditions;
mod grand;
mod kernel;
mod maximal;
mod norm;

pub use apply::{apply_t, Budget, KernelEvaluator, MAX_CELLS_1D, MAX_CELLS_2D};
pub use conditions::{kernel_hormander_constant, kernel_size_constant, HormanderParams, KernelConditionReport};
pub use grand::{grand_maximal_truncated_local, GrandMaximal, TupleCap};
pub use kernel::{KernelSpec, OperatorSpec, RadialProfile};
pub use maximal::{composed_maximal, composed_maximal_mode, delta_smoothed_maximal, fractional_maximal};
pub use norm::{weighted_norm_estimate, NormEstimate, MAX_NORM_CELLS};
