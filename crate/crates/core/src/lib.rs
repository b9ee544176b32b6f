//! Nonparametric estimation under random left truncation.
//!
//! An interest variable `Y ~ F` is observed together with an independent
//! truncation variable `T ~ G` only when `Y >= T`. This crate provides the
//! product-limit (Lynden-Bell) estimator `F_n` of `F`, function classes with
//! explicit bracket covers, the class-indexed process `φ ↦ √n ∫ φ d(F_n - F)`,
//! its influence-function representation, and a Monte Carlo harness that
//! checks the uniform law of large numbers and the uniform central limit
//! theorem for that process against quadrature-computed limits.
//!
//! Numerical code is generic over the scalar type: counting estimators accept
//! any [`Scalar`] (including exact [`BigRational`]), and code that touches a
//! continuous law accepts any [`Real`] (`f32`, `f64`). The aliases below fix
//! the common `f64` instantiation.

pub mod catalog;
pub mod classes;
pub mod distribution;
pub mod error;
pub mod experiments;
pub mod function;
pub mod influence;
pub mod lynden_bell;
pub mod model;
pub mod process;
pub mod quadrature;
pub mod sampler;
pub mod scalar;
pub mod step;

pub use error::{Assumption, Error, Result};
pub use num_rational::BigRational;
pub use scalar::{Real, Scalar};

pub type Distribution = distribution::ContinuousDistribution<f64>;
pub type Model = model::TruncationModel<f64>;
pub type Sample = sampler::TruncatedSample<f64>;
pub type Step = step::StepFunction<f64>;
pub type Fit = lynden_bell::LyndenBellFit<f64>;
pub type ExactFit = lynden_bell::LyndenBellFit<BigRational>;
pub type Function = function::MeasurableFunction<f64>;
pub type Class = classes::FunctionClass<f64>;
pub type Cover = classes::BracketCover<f64>;
pub type Evaluator = influence::InfluenceEvaluator<f64>;
