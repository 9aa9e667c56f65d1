//! Harmonic vector fields and harmonic maps on warped products `I x_f G`,
//! where `I` is a real interval with `dt^2` and `G` is a 3-dimensional Lie
//! group with a left-invariant metric in Milnor normal form.

pub mod expr;
pub mod families;
pub mod harmonicity;
pub mod lie3;
pub mod ode;
pub mod oracle;
pub mod scalar;
pub mod tension;
pub mod warp;

pub use scalar::{Real, Scalar};

// Double-precision aliases for the common entry points.
pub type UnimodularF64 = lie3::Unimodular<f64>;
pub type NonUnimodularF64 = lie3::NonUnimodular<f64>;
pub type AlgebraF64 = lie3::Algebra<f64>;
pub type LeftInvariantFieldF64 = lie3::LeftInvariantField<f64>;
pub type WarpFunctionF64 = warp::WarpFunction<f64>;
pub type PhiSolutionF64 = warp::PhiSolution<f64>;
pub type PhiSpecF64 = warp::PhiSpec<f64>;
pub type SolveOptionsF64 = warp::SolveOptions<f64>;
pub type IntervalF64 = warp::Interval<f64>;
pub type HarmonicityProblemF64 = harmonicity::HarmonicityProblem<f64>;
pub type HarmonicityReportF64 = harmonicity::HarmonicityReport<f64>;
pub type ClassificationCaseF64 = harmonicity::ClassificationCase<f64>;
pub type SampleSpecF64 = harmonicity::SampleSpec<f64>;
pub type ChartFieldF64 = families::ChartField<f64>;
pub type MapReportF64 = tension::MapReport<f64>;
pub type HarmonicMapCaseF64 = tension::HarmonicMapCase<f64>;
pub type OracleReportF64 = oracle::OracleReport<f64>;
pub type StepsF64 = oracle::Steps<f64>;
