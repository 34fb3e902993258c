//! Upper and lower expectations over a Peng-independent driver.
//!
//! The driver draws coordinate `k` from a scenario chosen by a
//! history-dependent selector. For finite discrete scenarios the supremum of
//! linear expectations over all selectors is computed exactly by backward
//! induction: the value at a history is the best one-step average of the
//! values one coordinate later. Coordinates a functional does not read drop
//! out of the recursion, since the value does not depend on them.

use rayon::prelude::*;
use thiserror::Error;

use crate::distribution::ScenarioSet;
use crate::functional::RandomFunctional;
use crate::rng::replication_rng;
use crate::scalar::Scalar;
use crate::selector::{extend_digest, initial_digest, PathContext, Selector, SelectorPool};
use crate::simulate::draw_path;
use crate::stats::RunningStats;

/// Default bound on the number of enumerated leaves.
pub const DEFAULT_LEAF_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpectationError {
    #[error("exact enumeration needs {leaves} leaves, cap is {cap}")]
    EnumerationCapExceeded { leaves: u128, cap: u64 },
    #[error("window {first}..={last} does not fit horizon {horizon}")]
    InvalidWindow {
        first: usize,
        last: usize,
        horizon: usize,
    },
    #[error("truncation level {0} is negative")]
    NegativeTruncationLevel(f64),
    #[error("invalid truncation schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid Monte Carlo plan: {0}")]
    InvalidPlan(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    Exact,
    /// Maximum over a finite selector pool: a lower bound of the upper expectation.
    LowerBoundMc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateWithCI<S> {
    pub value: S,
    pub ci_low: S,
    pub ci_high: S,
    pub replications: usize,
    pub seed: u64,
    pub kind: EstimateKind,
    /// Selector attaining `value`, when one exists.
    pub selector_id: String,
}

impl<S: Scalar> EstimateWithCI<S> {
    pub fn exact(value: S) -> Self {
        Self {
            value,
            ci_low: value,
            ci_high: value,
            replications: 0,
            seed: 0,
            kind: EstimateKind::Exact,
            selector_id: "exact".into(),
        }
    }

    pub fn half_width(&self) -> S {
        self.ci_high - self.value
    }
}

/// Outcome of a limit along a truncation schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtendedExpectation<S> {
    Converged(S),
    /// Successive values did not settle within tolerance; `trail` holds
    /// `E[f^(c)]` for every `c` of the schedule.
    Divergent { trail: Vec<S> },
}

impl<S: Scalar> ExtendedExpectation<S> {
    pub fn value(&self) -> Option<S> {
        match self {
            Self::Converged(v) => Some(*v),
            Self::Divergent { .. } => None,
        }
    }
}

/// Precomputed data for exact evaluation on one scenario family.
#[derive(Debug, Clone)]
pub struct ExactOracle<S> {
    support: Vec<S>,
    /// Per scenario: `(support index, probability)` for its atoms.
    rows: Vec<Vec<(usize, S)>>,
    cap: u64,
}

impl<S: Scalar> ExactOracle<S> {
    pub fn new(driver: &ScenarioSet<S>) -> Self {
        Self::with_cap(driver, DEFAULT_LEAF_CAP)
    }

    pub fn with_cap(driver: &ScenarioSet<S>, cap: u64) -> Self {
        let support = driver.union_support();
        let rows = driver
            .iter()
            .map(|law| {
                law.atoms()
                    .iter()
                    .map(|&(v, p)| {
                        let j = support
                            .binary_search_by(|u| u.partial_cmp(&v).expect("finite"))
                            .expect("atom lies in the union support");
                        (j, p)
                    })
                    .collect()
            })
            .collect();
        Self { support, rows, cap }
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// Union of scenario supports; every value is reachable at every coordinate.
    pub fn support(&self) -> &[S] {
        &self.support
    }

    /// Number of leaves exact evaluation of `f` enumerates.
    pub fn leaves(&self, f: &RandomFunctional<S>) -> u128 {
        let base = self.support.len() as u128;
        let mut acc: u128 = 1;
        for _ in 0..f.arity() {
            acc = acc.saturating_mul(base);
        }
        acc
    }

    pub fn is_enumerable(&self, f: &RandomFunctional<S>) -> bool {
        self.leaves(f) <= self.cap as u128
    }

    fn check(&self, f: &RandomFunctional<S>, horizon: usize) -> Result<(), ExpectationError> {
        let (first, last) = f.window_bounds();
        if first == 0 || last > horizon {
            return Err(ExpectationError::InvalidWindow {
                first,
                last,
                horizon,
            });
        }
        let leaves = self.leaves(f);
        if leaves > self.cap as u128 {
            return Err(ExpectationError::EnumerationCapExceeded {
                leaves,
                cap: self.cap,
            });
        }
        Ok(())
    }

    /// Supremum over all selectors of the linear expectation of `f`.
    pub fn upper(&self, f: &RandomFunctional<S>, horizon: usize) -> Result<S, ExpectationError> {
        self.check(f, horizon)?;
        let depth = f.arity();
        let width = self.support.len();
        let mut scratch = vec![vec![S::zero(); width]; depth];
        let mut buf = Vec::with_capacity(depth);
        Ok(self.backward(f, &mut buf, &mut scratch))
    }

    fn backward(&self, f: &RandomFunctional<S>, buf: &mut Vec<S>, scratch: &mut [Vec<S>]) -> S {
        let Some((children, rest)) = scratch.split_first_mut() else {
            return f.evaluate(buf);
        };
        for (j, &u) in self.support.iter().enumerate() {
            buf.push(u);
            children[j] = self.backward(f, buf, rest);
            buf.pop();
        }
        let mut best = S::neg_infinity();
        for row in &self.rows {
            let v: S = row.iter().map(|&(j, p)| p * children[j]).sum();
            // strict comparison keeps the lowest scenario index on ties
            if v > best {
                best = v;
            }
        }
        best
    }

    pub fn lower(&self, f: &RandomFunctional<S>, horizon: usize) -> Result<S, ExpectationError> {
        Ok(-self.upper(&f.neg(), horizon)?)
    }

    /// `E[f^(c)]` along `schedule`; converged when the last two values differ
    /// by at most `tol`.
    pub fn extended(
        &self,
        f: &RandomFunctional<S>,
        horizon: usize,
        schedule: &[S],
        tol: S,
    ) -> Result<ExtendedExpectation<S>, ExpectationError> {
        if schedule.len() < 3 {
            return Err(ExpectationError::InvalidSchedule(
                "need at least 3 truncation levels".into(),
            ));
        }
        if schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ExpectationError::InvalidSchedule(
                "levels must be strictly increasing".into(),
            ));
        }
        let trail = schedule
            .iter()
            .map(|&c| self.upper(&truncate(f, c)?, horizon))
            .collect::<Result<Vec<S>, _>>()?;
        let n = trail.len();
        if (trail[n - 1] - trail[n - 2]).abs() <= tol {
            Ok(ExtendedExpectation::Converged(trail[n - 1]))
        } else {
            Ok(ExtendedExpectation::Divergent { trail })
        }
    }

    /// Lower counterpart `-E_bar[-f]` of [`ExactOracle::extended`].
    pub fn extended_lower(
        &self,
        f: &RandomFunctional<S>,
        horizon: usize,
        schedule: &[S],
        tol: S,
    ) -> Result<ExtendedExpectation<S>, ExpectationError> {
        Ok(match self.extended(&f.neg(), horizon, schedule, tol)? {
            ExtendedExpectation::Converged(v) => ExtendedExpectation::Converged(-v),
            ExtendedExpectation::Divergent { trail } => ExtendedExpectation::Divergent {
                trail: trail.into_iter().map(|v| -v).collect(),
            },
        })
    }
}

/// `sup` over selectors of `E[f]`, with the default enumeration cap.
pub fn upper_expectation_exact<S: Scalar>(
    driver: &ScenarioSet<S>,
    f: &RandomFunctional<S>,
    horizon: usize,
) -> Result<S, ExpectationError> {
    ExactOracle::new(driver).upper(f, horizon)
}

/// `-E[-f]`.
pub fn lower_expectation<S: Scalar>(
    driver: &ScenarioSet<S>,
    f: &RandomFunctional<S>,
    horizon: usize,
) -> Result<S, ExpectationError> {
    ExactOracle::new(driver).lower(f, horizon)
}

/// `(-c) v f ^ c`, on the same window.
pub fn truncate<S: Scalar>(
    f: &RandomFunctional<S>,
    c: S,
) -> Result<RandomFunctional<S>, ExpectationError> {
    if c < S::zero() || c.is_nan() {
        return Err(ExpectationError::NegativeTruncationLevel(c.to_f64_lossy()));
    }
    let mut out = f.map(format!("trunc({},{c})", f.label()), move |v| v.max(-c).min(c));
    if let Some(meta) = f.lipschitz() {
        out = out.with_lipschitz(meta.constant, meta.power);
    }
    Ok(out)
}

/// `lim_c E[f^(c)]` along a schedule, evaluated on the window's own horizon.
pub fn extended_expectation<S: Scalar>(
    driver: &ScenarioSet<S>,
    f: &RandomFunctional<S>,
    c_schedule: &[S],
    tol: S,
) -> Result<ExtendedExpectation<S>, ExpectationError> {
    let horizon = f.window_bounds().1;
    ExactOracle::new(driver).extended(f, horizon, c_schedule, tol)
}

/// Linear expectation of `f` when every coordinate up to the end of its
/// window is drawn under `selector`. Enumerates all driver paths, so it is
/// only meant for small instances.
pub fn selector_expectation_exact<S: Scalar>(
    driver: &ScenarioSet<S>,
    selector: &Selector<S>,
    f: &RandomFunctional<S>,
) -> S {
    fn rec<S: Scalar>(
        driver: &ScenarioSet<S>,
        selector: &Selector<S>,
        f: &RandomFunctional<S>,
        last: usize,
        path: &mut Vec<S>,
        digest: u64,
    ) -> S {
        if path.len() == last {
            return f.eval_on_path(path);
        }
        let ctx = PathContext {
            step: path.len() + 1,
            history: path.as_slice(),
            digest,
            running_sum: S::zero(),
            next_weight: S::one(),
        };
        let law = driver.get(selector.select(&ctx, driver));
        let mut acc = S::zero();
        for &(v, p) in law.atoms() {
            path.push(v);
            acc += p * rec(driver, selector, f, last, path, extend_digest(digest, v));
            path.pop();
        }
        acc
    }
    let last = f.window_bounds().1;
    rec(driver, selector, f, last, &mut Vec::with_capacity(last), initial_digest())
}

/// Monte Carlo settings for [`upper_expectation_mc`].
#[derive(Debug, Clone)]
pub struct McPlan<S> {
    pub replications: usize,
    pub seed: u64,
    pub pool: SelectorPool<S>,
}

/// Per-selector sample means of `f`; the largest is reported with its 95%
/// normal interval. The result is a lower bound of the upper expectation.
pub fn upper_expectation_mc<S: Scalar>(
    driver: &ScenarioSet<S>,
    f: &RandomFunctional<S>,
    plan: &McPlan<S>,
) -> Result<EstimateWithCI<S>, ExpectationError> {
    if plan.replications < 2 {
        return Err(ExpectationError::InvalidPlan("replications must be >= 2".into()));
    }
    if !plan.pool.is_valid_for(driver) {
        return Err(ExpectationError::InvalidPlan(
            "selector pool references a missing scenario".into(),
        ));
    }
    let last = f.window_bounds().1;
    let mut best: Option<(RunningStats<S>, usize)> = None;
    for (si, selector) in plan.pool.selectors().iter().enumerate() {
        let samples: Vec<S> = (0..plan.replications)
            .into_par_iter()
            .map_init(
                || Vec::with_capacity(last),
                |path, rep| {
                    let mut rng = replication_rng(plan.seed, si as u64, rep as u64);
                    draw_path(driver, selector, last, &mut rng, path, |_| S::one(), |_, _| S::zero());
                    f.eval_on_path(path)
                },
            )
            .collect();
        let stats: RunningStats<S> = samples.into_iter().collect();
        if best.as_ref().map_or(true, |(b, _)| stats.mean() > b.mean()) {
            best = Some((stats, si));
        }
    }
    let (stats, si) = best.expect("pool is nonempty");
    let half = stats.half_width();
    Ok(EstimateWithCI {
        value: stats.mean(),
        ci_low: stats.mean() - half,
        ci_high: stats.mean() + half,
        replications: plan.replications,
        seed: plan.seed,
        kind: EstimateKind::LowerBoundMc,
        selector_id: plan.pool.selectors()[si].id(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::DiscreteDistribution;

    fn pm() -> ScenarioSet<f64> {
        ScenarioSet::point_masses(&[1.0, -1.0]).unwrap()
    }

    fn x(i: usize) -> RandomFunctional<f64> {
        RandomFunctional::coordinate(i)
    }

    #[test]
    fn sup_of_point_masses() {
        assert_eq!(upper_expectation_exact(&pm(), &x(1), 1).unwrap(), 1.0);
        assert_eq!(lower_expectation(&pm(), &x(1), 1).unwrap(), -1.0);
    }

    #[test]
    fn product_of_adaptive_signs() {
        let f = x(1).mul(&x(2));
        assert_eq!(upper_expectation_exact(&pm(), &f, 2).unwrap(), 1.0);
        assert_eq!(upper_expectation_exact(&pm(), &f.neg(), 2).unwrap(), 1.0);
        assert_eq!(lower_expectation(&pm(), &f, 2).unwrap(), -1.0);
    }

    #[test]
    fn singleton_family_is_classical() {
        let d = ScenarioSet::singleton(DiscreteDistribution::uniform(&[-1.0, 1.0]).unwrap());
        assert_eq!(upper_expectation_exact(&d, &x(1), 1).unwrap(), 0.0);
    }

    #[test]
    fn constants_are_preserved() {
        let c = RandomFunctional::constant(2.5);
        assert_eq!(upper_expectation_exact(&pm(), &c, 1).unwrap(), 2.5);
        assert_eq!(lower_expectation(&pm(), &c, 1).unwrap(), 2.5);
    }

    #[test]
    fn window_and_cap_errors() {
        assert!(matches!(
            upper_expectation_exact(&pm(), &x(3), 2),
            Err(ExpectationError::InvalidWindow { .. })
        ));
        let oracle = ExactOracle::with_cap(&pm(), 4);
        let f = RandomFunctional::partial_sum(1, 3);
        assert!(matches!(
            oracle.upper(&f, 3),
            Err(ExpectationError::EnumerationCapExceeded { leaves: 8, cap: 4 })
        ));
    }

    #[test]
    fn truncation_clamps() {
        let five = RandomFunctional::constant(5.0);
        let t = truncate(&five, 3.0).unwrap();
        assert_eq!(t.evaluate(&[0.0]), 3.0);
        let t = truncate(&five.neg(), 3.0).unwrap();
        assert_eq!(t.evaluate(&[0.0]), -3.0);
        let t = truncate(&x(1), 1.0).unwrap();
        let vals: Vec<f64> = [-2.0, 0.0, 2.0].iter().map(|&v| t.evaluate(&[v])).collect();
        assert_eq!(vals, vec![-1.0, 0.0, 1.0]);
        assert!(matches!(
            truncate(&x(1), -1.0),
            Err(ExpectationError::NegativeTruncationLevel(_))
        ));
    }

    #[test]
    fn extended_expectation_cases() {
        let driver = ScenarioSet::new(vec![
            DiscreteDistribution::uniform(&[-1.0, 1.0]).unwrap(),
            DiscreteDistribution::point_mass(0.0),
        ])
        .unwrap();
        let sched = [1.0, 2.0, 4.0, 8.0];
        let e = extended_expectation(&driver, &x(1), &sched, 1e-9).unwrap();
        assert_eq!(e, ExtendedExpectation::Converged(0.0));
        let sq = x(1).map("sq", |v| v * v);
        let e = extended_expectation(&driver, &sq, &sched, 1e-9).unwrap();
        assert_eq!(e, ExtendedExpectation::Converged(1.0));

        let bounded = ScenarioSet::point_masses(&[2.0, -2.0]).unwrap();
        let exact = upper_expectation_exact(&bounded, &x(1), 1).unwrap();
        let oracle = ExactOracle::new(&bounded);
        for c in [2.0, 4.0, 8.0] {
            let v = oracle.upper(&truncate(&x(1), c).unwrap(), 1).unwrap();
            assert_eq!(v, exact);
        }
        assert!(matches!(
            extended_expectation(&bounded, &x(1), &[1.0, 2.0], 1e-9),
            Err(ExpectationError::InvalidSchedule(_))
        ));
    }

    #[test]
    fn extended_expectation_reports_divergence() {
        // schedule too short to reach the support: values keep moving
        let far = ScenarioSet::point_masses(&[100.0]).unwrap();
        let e = extended_expectation(&far, &x(1), &[1.0, 2.0, 3.0], 1e-9).unwrap();
        assert_eq!(
            e,
            ExtendedExpectation::Divergent {
                trail: vec![1.0, 2.0, 3.0]
            }
        );
    }

    #[test]
    fn mc_deterministic_scenarios_hit_the_sup() {
        let f = x(1).mul(&x(2));
        let plan = McPlan {
            replications: 100,
            seed: 3,
            pool: SelectorPool::for_functional(&pm(), 8, 3, &f),
        };
        let est = upper_expectation_mc(&pm(), &f, &plan).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.kind, EstimateKind::LowerBoundMc);
    }

    #[test]
    fn mc_constant_has_zero_width() {
        let c = RandomFunctional::constant(0.1);
        let plan = McPlan {
            replications: 1000,
            seed: 9,
            pool: SelectorPool::standard(&pm(), 4, 9, vec![]),
        };
        let est = upper_expectation_mc(&pm(), &c, &plan).unwrap();
        assert_eq!(est.value, 0.1);
        assert_eq!(est.ci_low, est.ci_high);
    }

    #[test]
    fn mc_rejects_bad_plans() {
        let plan = McPlan {
            replications: 1,
            seed: 0,
            pool: SelectorPool::new(vec![Selector::Constant(0)]),
        };
        assert!(upper_expectation_mc(&pm(), &x(1), &plan).is_err());
        let plan = McPlan {
            replications: 10,
            seed: 0,
            pool: SelectorPool::new(vec![Selector::Constant(5)]),
        };
        assert!(upper_expectation_mc(&pm(), &x(1), &plan).is_err());
    }
}
