//! Weight classes, testing constants and refinement traces.

mod appendix;
mod exponents;
mod muckenhoupt;
mod recipes;
mod report;
mod testing;

pub use appendix::{appendix_property_report, AppendixConfig, AppendixReport, PropertyCheck};
pub use exponents::{conjugate, ExponentSet, KernelExponents};
pub use muckenhoupt::{apq_constant, matrix_apq_constant, muckenhoupt_constant, twisted_power};
pub use recipes::{interval_power_average, WeightRecipe};
pub use report::{RefinementTrace, TraceVerdict, WeightConstantReport, DIVERGENCE_RATIO, STABLE_RATIO};
pub use testing::{
    conjugate_sigma, dyadic_testing_constants, matrix_sawyer_constant, maximal_strong_quotient,
    sawyer_testing_constant, tilde_testing_constants, NestedFamily, StrongQuotient, TestingForm, TestingSide,
};
