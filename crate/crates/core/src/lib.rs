//! Tikhonov regularization for nonlinear ill-posed problems with convex
//! penalties, plus tools to measure convergence rates empirically.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod operators;
pub mod penalties;
pub mod spaces;
pub mod stability;
pub mod tikhonov;

pub use error::{Error, Result};
pub use operators::{DiagonalMap, ForwardOperator, ReactionDiffusionMap};
pub use penalties::{Penalty, PenaltyName, PenaltyVariant, SubgradientSelection};
pub use spaces::{dual_pair, Element, NormKind, SpaceDescriptor, SpaceKind};
pub use tikhonov::{
    alpha_rule, level_set_check, minimizer_certificates, solve, solve_multistart, AlphaChoice,
    AlphaRule, LevelSetReport, LevelSetSpec, MinimizerCertificates, SolveReport, SolverConfig,
    TikhonovProblem,
};
pub use stability::{
    estimate_holder_distance, estimate_vi_distance, holder_constant_scan, sample_level_set,
    DistanceFunctionTable, DistanceKind, Generation, LevelSetSample, StabilityContext,
    StabilityMetric,
};
pub use harness::{
    fit_rate, make_noisy, run_sweep, Experiment, ExperimentConfig, MetricName, RateFit,
    SweepRow, SweepTable,
};
