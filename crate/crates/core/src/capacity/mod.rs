//! Capacities induced by scenario families.
//!
//! The capacity implemented here is `V(A) = sup_P P(A)` over every law the
//! family can generate (every selector, for path events). It satisfies
//! `E[f] <= V(A) <= E[g]` whenever `f <= 1_A <= g`. The largest capacity
//! with that property can only be larger, so `V` is never an overestimate.

mod choquet;
mod interval;

use std::fmt;
use std::sync::Arc;

use num_traits::ToPrimitive;
use thiserror::Error;

pub use choquet::{
    choquet_integral, choquet_moment, survival_of, CapacityKind, ChoquetMoment, ChoquetValue,
    GridSpacing, GridSurvival, StepSurvival, SurvivalFunction,
};
pub use interval::{Interval, IntervalSet, Rational};

use crate::distribution::ScenarioSet;
use crate::expectation::{ExactOracle, ExpectationError};
use crate::functional::RandomFunctional;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("event cannot be evaluated under this model: {0}")]
    NonMeasurableEvent(String),
    #[error("survival grid does not bracket the support and no tail bound was given")]
    UnboundedSupport,
    #[error("invalid survival function: {0}")]
    InvalidSurvival(String),
    #[error("moment order {0} is below 1")]
    InvalidOrder(f64),
    #[error(transparent)]
    Expectation(#[from] ExpectationError),
}

type Predicate<S> = Arc<dyn Fn(&[S]) -> bool + Send + Sync>;

/// An event on driver paths, given by a predicate on a coordinate set.
#[derive(Clone)]
pub struct PathEvent<S> {
    coords: Vec<usize>,
    predicate: Predicate<S>,
    description: String,
}

impl<S> fmt::Debug for PathEvent<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PathEvent({} on {:?})", self.description, self.coords)
    }
}

impl<S: Scalar> PathEvent<S> {
    pub fn indicator(&self) -> RandomFunctional<S> {
        let p = Arc::clone(&self.predicate);
        RandomFunctional::sparse(self.coords.clone(), format!("1{{{}}}", self.description), move |x| {
            if p(x) {
                S::one()
            } else {
                S::zero()
            }
        })
    }

    pub fn holds(&self, values: &[S]) -> bool {
        (self.predicate)(values)
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }
}

#[derive(Debug, Clone)]
pub enum MeasurableEvent<S> {
    Path(PathEvent<S>),
    Intervals(IntervalSet),
}

impl<S: Scalar> MeasurableEvent<S> {
    pub fn path<P>(coords: Vec<usize>, description: impl Into<String>, predicate: P) -> Self
    where
        P: Fn(&[S]) -> bool + Send + Sync + 'static,
    {
        let mut coords = coords;
        coords.sort_unstable();
        coords.dedup();
        MeasurableEvent::Path(PathEvent {
            coords,
            predicate: Arc::new(predicate),
            description: description.into(),
        })
    }

    /// `{f >= t}`.
    pub fn at_least(f: &RandomFunctional<S>, t: S) -> Self {
        let g = f.clone();
        Self::path(f.coords().to_vec(), format!("{} >= {t}", f.label()), move |x| {
            g.evaluate(x) >= t
        })
    }

    /// `{f > t}`.
    pub fn greater_than(f: &RandomFunctional<S>, t: S) -> Self {
        let g = f.clone();
        Self::path(f.coords().to_vec(), format!("{} > {t}", f.label()), move |x| {
            g.evaluate(x) > t
        })
    }

    pub fn intervals(set: IntervalSet) -> Self {
        MeasurableEvent::Intervals(set)
    }

    /// Indicator of a path event.
    pub(crate) fn indicator_of(&self) -> RandomFunctional<S> {
        match self {
            MeasurableEvent::Path(p) => p.indicator(),
            MeasurableEvent::Intervals(_) => unreachable!("interval events have no path indicator"),
        }
    }

    pub fn description(&self) -> String {
        match self {
            MeasurableEvent::Path(p) => p.description.clone(),
            MeasurableEvent::Intervals(s) => format!("{s:?}"),
        }
    }
}

/// A uniform law on `[lo, hi]`; interval probabilities are exact rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformLaw {
    pub lo: Rational,
    pub hi: Rational,
}

impl UniformLaw {
    pub fn probability(&self, set: &IntervalSet) -> Rational {
        set.length_within(self.lo, self.hi) / (self.hi - self.lo)
    }
}

/// Finitely many uniform laws on subintervals of a sample space `omega`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuousModel {
    pub omega: Interval,
    pub measures: Vec<UniformLaw>,
}

impl ContinuousModel {
    /// `omega = [0, 2]` with the Lebesgue laws of `[0, 1]` and `[1, 2]`.
    /// Both halves have capacity one while their intersection `{1}` has
    /// capacity zero.
    pub fn two_halves() -> Self {
        let r = Rational::from_integer;
        Self {
            omega: Interval::closed(r(0), r(2)),
            measures: vec![
                UniformLaw { lo: r(0), hi: r(1) },
                UniformLaw { lo: r(1), hi: r(2) },
            ],
        }
    }

    pub fn upper_capacity_exact(&self, set: &IntervalSet) -> Rational {
        self.measures
            .iter()
            .map(|m| m.probability(set))
            .max()
            .unwrap_or_else(|| Rational::from_integer(0))
    }

    pub fn lower_capacity_exact(&self, set: &IntervalSet) -> Rational {
        Rational::from_integer(1) - self.upper_capacity_exact(&set.complement_within(&self.omega))
    }
}

/// Where capacities are evaluated.
#[derive(Debug, Clone)]
pub enum CapacityModel<S> {
    /// Paths of a Peng-independent driver up to `horizon`.
    Discrete {
        driver: ScenarioSet<S>,
        horizon: usize,
    },
    Continuous(ContinuousModel),
}

fn rational_to<S: Scalar>(q: Rational) -> S {
    S::from_f64_lossy(q.to_f64().expect("rational converts"))
}

/// `V(A) = sup_P P(A)`.
pub fn upper_capacity<S: Scalar>(
    model: &CapacityModel<S>,
    event: &MeasurableEvent<S>,
) -> Result<S, CapacityError> {
    match (model, event) {
        (CapacityModel::Discrete { driver, horizon }, MeasurableEvent::Path(p)) => {
            Ok(ExactOracle::new(driver).upper(&p.indicator(), *horizon)?)
        }
        (CapacityModel::Continuous(m), MeasurableEvent::Intervals(set)) => {
            Ok(rational_to(m.upper_capacity_exact(set)))
        }
        (_, e) => Err(CapacityError::NonMeasurableEvent(e.description())),
    }
}

fn complement<S: Scalar>(model: &CapacityModel<S>, event: &MeasurableEvent<S>) -> MeasurableEvent<S> {
    match (model, event) {
        (CapacityModel::Continuous(m), MeasurableEvent::Intervals(set)) => {
            MeasurableEvent::Intervals(set.complement_within(&m.omega))
        }
        (_, MeasurableEvent::Path(p)) => {
            let pred = Arc::clone(&p.predicate);
            MeasurableEvent::Path(PathEvent {
                coords: p.coords.clone(),
                predicate: Arc::new(move |x| !pred(x)),
                description: format!("not({})", p.description),
            })
        }
        (_, e) => e.clone(),
    }
}

/// `v(A) = 1 - V(A^c)`.
pub fn lower_capacity<S: Scalar>(
    model: &CapacityModel<S>,
    event: &MeasurableEvent<S>,
) -> Result<S, CapacityError> {
    Ok(S::one() - upper_capacity(model, &complement(model, event))?)
}

/// `min(V(A), sum_i V(A_i))` for a finite cover `A ⊆ ∪ A_i` supplied by the
/// caller. A finite family of countably additive laws already makes
/// `sup_P P` countably sub-additive, so this never falls below `V(A)` when
/// the cover is genuine.
pub fn outer_capacity<S: Scalar>(
    model: &CapacityModel<S>,
    event: &MeasurableEvent<S>,
    cover: &[MeasurableEvent<S>],
) -> Result<S, CapacityError> {
    let direct = upper_capacity(model, event)?;
    let mut total = S::zero();
    for part in cover {
        total += upper_capacity(model, part)?;
    }
    Ok(direct.min(total))
}
