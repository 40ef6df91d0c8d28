//! Minimum-description-length (two-part-code / MAP) estimation over
//! countable Bernoulli model classes.
//!
//! The crate provides, in order of the data flow:
//!
//! - [`divergence`]: Bernoulli divergence kernels, binomial probability
//!   primitives, and numeric certifiers for the entropy/sandwich/series
//!   inequalities the loss analysis rests on;
//! - [`model_class`]: exact-rational parameters, complexity codings, and the
//!   concrete class generators (equal-complexity clusters, coded dyadic
//!   grids, polynomial distortions, class files);
//! - [`estimator`]: the selection rules (MAP, maximum likelihood), the
//!   pairwise preference relation, the mixture predictor, and per-n
//!   decision maps;
//! - [`loss_engine`]: exact, accelerated, and Monte-Carlo cumulative
//!   square-loss curves plus the closed-form loss bounds;
//! - [`intervals`]: the nested dyadic-interval construction, complexity-gap
//!   profiles, the gap-series/finite-class bounds, and their certifiers;
//! - [`experiments`]: scenario runners, the consolidated verification
//!   suite, manifests, and CSV/JSON emission.

pub mod divergence;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod intervals;
pub mod loss_engine;
pub mod model_class;
pub(crate) mod util;

pub use divergence::{
    binomial_tail, check_binomial_sandwich, check_entropy_inequalities, check_sum_sqrt_exp,
    extended_kl, kl, log_binomial_pmf, InequalityReport, ProbValue,
};
pub use error::{Error, Result};
pub use estimator::{
    bayes_predictive, beats, mdl_select, ml_select, DecisionMap, ObservationSummary,
};
pub use experiments::{
    run_bound_race, run_counterexample, run_half_kw_check, run_verification_suite, RunManifest,
    ScenarioConfig, VerificationReport,
};
pub use intervals::{
    build_intervals, check_appendix_lemmas, delta_profile, finite_class_bound, gap_series_bound,
    initial_left_steps, uniform_weight_condition, DeltaProfile, DyadicInterval, IntervalStep,
    StepKind,
};
pub use loss_engine::{
    cumulative_loss, instantaneous_bound, instantaneous_loss_enumerated, instantaneous_loss_exact,
    instantaneous_loss_regions, kw_exp_scale, monte_carlo_loss, LossCurve, MonteCarloResult,
    PredictorRule,
};
pub use model_class::{
    builtin_test_classes, dyadic_complexity, CodedParameter, ModelClass, Parameter,
};
