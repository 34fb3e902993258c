//! Numerical laboratory for sublinear expectations.
//!
//! A sublinear expectation is realized as the upper envelope of linear
//! expectations over a finite family of scenario laws, with the law of each
//! path coordinate chosen adaptively. On top of that sit capacities and
//! Choquet integrals, constructors for dependent sequences, maximal
//! inequality checks, and finite-horizon strong-law experiments.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! bottom of this file fix `f64`.

pub mod capacity;
pub mod distribution;
pub mod expectation;
pub mod functional;
pub mod inequality;
pub mod models;
pub mod rng;
pub mod scalar;
pub mod selector;
pub mod series;
pub mod slln;
pub mod stats;

mod simulate;

pub use distribution::{DiscreteDistribution, DistributionError, ScenarioSet};
pub use expectation::{
    extended_expectation, lower_expectation, selector_expectation_exact, truncate,
    upper_expectation_exact, upper_expectation_mc, EstimateKind, EstimateWithCI, ExactOracle,
    ExpectationError, ExtendedExpectation, McPlan, DEFAULT_LEAF_CAP,
};
pub use functional::{LipschitzMeta, RandomFunctional};
pub use scalar::Scalar;
pub use selector::{PathContext, Selector, SelectorPool, TableSelector};
pub use capacity::{
    choquet_integral, choquet_moment, lower_capacity, outer_capacity, survival_of, upper_capacity,
    CapacityError, CapacityKind, CapacityModel, ChoquetMoment, ChoquetValue, ContinuousModel,
    GridSpacing, GridSurvival, MeasurableEvent, StepSurvival, SurvivalFunction,
};
pub use inequality::{
    kolmogorov_constant, max_partial_sum_stats, partial_sum_centers, verify_kolmogorov_maximal,
    verify_rademacher_mensov, verify_truncation_bound, Centering, InequalityError,
    InequalityReport, TruncationMode,
};
pub use models::{
    make_blockwise_m_dependent, make_independent_sequence, make_m_dependent, make_orthogonal,
    orthogonality_certificate, phi, quasi_orthogonal_certificate, BlockStructure, Dependence,
    Glue, ModelError, OrthogonalScheme, SequenceModel,
};
pub use series::{epsilon_sequence, wittmann_subsequence, EpsilonSequence, SeriesError, Subsequence};
pub use slln::{
    check_domination, check_summability, kronecker_check, run_corollary41, run_theorem41,
    run_theorem42, run_theorem43, ConditionResult, ConvergenceReport, Dominator, NormalizerSpec,
    SllnError, SllnPlan, TailBound, Verdict,
};

pub type Distribution = DiscreteDistribution<f64>;
pub type Scenarios = ScenarioSet<f64>;
pub type Functional = RandomFunctional<f64>;
pub type Estimate = EstimateWithCI<f64>;
pub type Oracle = ExactOracle<f64>;
pub type Plan = McPlan<f64>;
pub type Pool = SelectorPool<f64>;
pub type Model = SequenceModel<f64>;
pub type Capacity = CapacityModel<f64>;
pub type Report = InequalityReport<f64>;
pub type Convergence = ConvergenceReport<f64>;
