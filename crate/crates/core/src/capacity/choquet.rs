//! Choquet integrals `C_V[X] = ∫_0^∞ V(X>=t)dt + ∫_{-∞}^0 (V(X>=t) - 1)dt`.
//!
//! Both the positive and the negative part live in one survival function
//! over the whole real line; the integral of a survival function equal to
//! one below `a` is `a + ∫_a^∞ V(X>=t)dt`.

use crate::distribution::ScenarioSet;
use crate::expectation::{ExactOracle, ExpectationError};
use crate::functional::RandomFunctional;
use crate::scalar::Scalar;

use super::{CapacityError, CapacityModel, MeasurableEvent};

/// Exact step survival function `t -> V(X >= t)`.
///
/// `points` are the values of `X`, strictly increasing; `levels[j]` is the
/// capacity of `{X >= points[j]}` and holds on `(points[j-1], points[j]]`.
/// The first level is one and the function vanishes beyond the last point.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSurvival<S> {
    points: Vec<S>,
    levels: Vec<S>,
}

impl<S: Scalar> StepSurvival<S> {
    pub fn new(points: Vec<S>, levels: Vec<S>) -> Result<Self, CapacityError> {
        if points.is_empty() || points.len() != levels.len() {
            return Err(CapacityError::InvalidSurvival(
                "points and levels must be nonempty and of equal length".into(),
            ));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CapacityError::InvalidSurvival(
                "points must be strictly increasing".into(),
            ));
        }
        let tol = S::exact_tolerance();
        if (levels[0] - S::one()).abs() > tol {
            return Err(CapacityError::InvalidSurvival(
                "survival must equal one at the smallest value".into(),
            ));
        }
        if levels
            .iter()
            .any(|&l| !(l >= -tol && l <= S::one() + tol))
            || levels.windows(2).any(|w| w[1] > w[0] + tol)
        {
            return Err(CapacityError::InvalidSurvival(
                "levels must be nonincreasing within [0, 1]".into(),
            ));
        }
        Ok(Self { points, levels })
    }

    /// `t -> max_k P_k(X >= t)` for `X` distributed as one scenario of `driver`.
    pub fn from_scenarios(driver: &ScenarioSet<S>) -> Self {
        let points = driver.union_support();
        let levels = points
            .iter()
            .map(|&u| {
                driver
                    .iter()
                    .map(|law| {
                        law.atoms()
                            .iter()
                            .filter(|(v, _)| *v >= u)
                            .map(|&(_, p)| p)
                            .sum::<S>()
                    })
                    .fold(S::zero(), S::max)
            })
            .collect::<Vec<_>>();
        let mut levels = levels;
        levels[0] = S::one();
        Self { points, levels }
    }

    pub fn points(&self) -> &[S] {
        &self.points
    }

    pub fn levels(&self) -> &[S] {
        &self.levels
    }

    /// `V(X >= t)`.
    pub fn at(&self, t: S) -> S {
        let j = self.points.partition_point(|&u| u < t);
        self.levels.get(j).copied().unwrap_or_else(S::zero)
    }

    /// `V(X > t)`.
    pub fn strictly_above(&self, t: S) -> S {
        let j = self.points.partition_point(|&u| u <= t);
        self.levels.get(j).copied().unwrap_or_else(S::zero)
    }

    pub fn integral(&self) -> S {
        let mut acc = self.points[0];
        for j in 1..self.points.len() {
            acc += self.levels[j] * (self.points[j] - self.points[j - 1]);
        }
        acc
    }

    /// `∫_a^b V(X>=t)dt`; `b` may be infinite.
    pub fn integral_over(&self, a: S, b: S) -> S {
        if !(a < b) {
            return S::zero();
        }
        let lo = self.points[0];
        let mut acc = S::zero();
        if a < lo {
            acc += b.min(lo) - a;
        }
        for j in 1..self.points.len() {
            let left = self.points[j - 1].max(a);
            let right = self.points[j].min(b);
            if right > left {
                acc += self.levels[j] * (right - left);
            }
        }
        acc
    }

    /// Survival of `h(X)` for nondecreasing `h` on the support.
    fn push_forward<H: Fn(S) -> S>(&self, h: H) -> Self {
        let points = self.points.iter().map(|&u| h(u)).collect();
        Self {
            points,
            levels: self.levels.clone(),
        }
    }

    /// Samples the survival function on `n` points bracketing the support.
    pub fn to_grid(&self, n: usize, spacing: GridSpacing) -> Result<GridSurvival<S>, CapacityError> {
        let ts = grid_points(&self.points, n, spacing)?;
        let mut vs = Vec::with_capacity(ts.len());
        let mut seen = None;
        for &t in &ts {
            // the second copy of a knot carries the right limit
            let v = if seen == Some(t) { self.strictly_above(t) } else { self.at(t) };
            seen = Some(t);
            vs.push(v);
        }
        GridSurvival::new(ts, vs, None)
    }
}

/// How grid points are laid out over the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpacing {
    /// Equally spaced points; no knowledge of the jump locations.
    Uniform,
    /// Geometric refinement next to the lower end, linear elsewhere, and a
    /// doubled knot at every jump of the survival function.
    Adaptive,
}

fn grid_points<S: Scalar>(knots: &[S], n: usize, spacing: GridSpacing) -> Result<Vec<S>, CapacityError> {
    if n < 16 {
        return Err(CapacityError::InvalidSurvival(format!(
            "grid needs at least 16 points, got {n}"
        )));
    }
    let lo = knots[0];
    let top = knots[knots.len() - 1];
    let width = (top - lo).max(S::one());
    // one extra linear step above the largest value lets the survival reach zero
    let hi = top + width / S::from_usize_lossy(n);
    let span = hi - lo;
    let mut ts = Vec::with_capacity(n);
    match spacing {
        GridSpacing::Uniform => {
            for i in 0..n {
                ts.push(lo + span * S::from_usize_lossy(i) / S::from_usize_lossy(n - 1));
            }
        }
        GridSpacing::Adaptive => {
            let doubled = 2 * knots.len() + 1;
            if doubled + 8 > n {
                return Err(CapacityError::InvalidSurvival(format!(
                    "{n} points cannot hold {} knots",
                    knots.len()
                )));
            }
            let free = n - doubled;
            let n_geo = (free / 8).min(40);
            let n_lin = free - n_geo;
            let two = S::one() + S::one();
            let mut scale = span;
            for _ in 0..n_geo {
                scale = scale / two;
                ts.push(lo + scale);
            }
            for i in 1..=n_lin {
                ts.push(lo + span * S::from_usize_lossy(i) / S::from_usize_lossy(n_lin + 1));
            }
            for &k in knots {
                ts.push(k);
                ts.push(k);
            }
            ts.push(hi);
            ts.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
        }
    }
    Ok(ts)
}

/// Survival values on a grid; equal consecutive points are allowed and
/// describe a jump.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSurvival<S> {
    ts: Vec<S>,
    vs: Vec<S>,
    tail_bound: Option<S>,
}

impl<S: Scalar> GridSurvival<S> {
    /// `tail_bound` bounds the mass the grid misses outside `[ts[0], ts[n-1]]`,
    /// i.e. `∫_{t_n}^∞ V dt + ∫_{-∞}^{t_0} (1 - V) dt`.
    pub fn new(ts: Vec<S>, vs: Vec<S>, tail_bound: Option<S>) -> Result<Self, CapacityError> {
        if ts.len() < 16 || ts.len() != vs.len() {
            return Err(CapacityError::InvalidSurvival(format!(
                "grid needs at least 16 points and one value per point, got {} and {}",
                ts.len(),
                vs.len()
            )));
        }
        if ts.windows(2).any(|w| w[1] < w[0]) {
            return Err(CapacityError::InvalidSurvival("grid must be nondecreasing".into()));
        }
        Ok(Self { ts, vs, tail_bound })
    }

    pub fn points(&self) -> &[S] {
        &self.ts
    }

    pub fn values(&self) -> &[S] {
        &self.vs
    }

    pub fn tail_bound(&self) -> Option<S> {
        self.tail_bound
    }

    /// Trapezoid sum with error bound `Σ |Δv| h / 2`, which is rigorous for
    /// a nonincreasing survival function.
    pub fn integrate(&self) -> Result<ChoquetValue<S>, CapacityError> {
        let tol = S::exact_tolerance();
        let n = self.ts.len();
        let brackets = (self.vs[0] - S::one()).abs() <= tol && self.vs[n - 1].abs() <= tol;
        let missed = match (brackets, self.tail_bound) {
            (true, _) => S::zero(),
            (false, Some(b)) => b,
            (false, None) => return Err(CapacityError::UnboundedSupport),
        };
        let half = S::from_f64_lossy(0.5);
        let mut value = self.ts[0];
        let mut err = missed;
        for i in 1..n {
            let h = self.ts[i] - self.ts[i - 1];
            value += half * (self.vs[i] + self.vs[i - 1]) * h;
            err += half * (self.vs[i] - self.vs[i - 1]).abs() * h;
        }
        Ok(ChoquetValue {
            value,
            error_bound: err,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurvivalFunction<S> {
    Step(StepSurvival<S>),
    Grid(GridSurvival<S>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoquetValue<S> {
    pub value: S,
    /// Zero for step functions.
    pub error_bound: S,
}

pub fn choquet_integral<S: Scalar>(survival: &SurvivalFunction<S>) -> Result<ChoquetValue<S>, CapacityError> {
    match survival {
        SurvivalFunction::Step(s) => Ok(ChoquetValue {
            value: s.integral(),
            error_bound: S::zero(),
        }),
        SurvivalFunction::Grid(g) => g.integrate(),
    }
}

/// Which capacity the survival function is taken under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapacityKind {
    Upper,
    Lower,
}

fn value_set<S: Scalar>(oracle: &ExactOracle<S>, f: &RandomFunctional<S>) -> Result<Vec<S>, CapacityError> {
    let leaves = oracle.leaves(f);
    if leaves > oracle.cap() as u128 {
        return Err(ExpectationError::EnumerationCapExceeded {
            leaves,
            cap: oracle.cap(),
        }
        .into());
    }
    let support = oracle.support();
    let arity = f.arity();
    let mut idx = vec![0usize; arity];
    let mut buf: Vec<S> = vec![support[0]; arity];
    let mut out = Vec::with_capacity(leaves as usize);
    loop {
        out.push(f.evaluate(&buf));
        let mut pos = arity;
        loop {
            if pos == 0 {
                out.sort_by(|a, b| a.partial_cmp(b).expect("finite functional values"));
                out.dedup();
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < support.len() {
                buf[pos] = support[idx[pos]];
                break;
            }
            idx[pos] = 0;
            buf[pos] = support[0];
        }
    }
}

/// Exact step survival of `f` under a discrete model: one capacity
/// evaluation per value `f` can take.
pub fn survival_of<S: Scalar>(
    model: &CapacityModel<S>,
    f: &RandomFunctional<S>,
    kind: CapacityKind,
) -> Result<StepSurvival<S>, CapacityError> {
    let CapacityModel::Discrete { driver, horizon } = model else {
        return Err(CapacityError::NonMeasurableEvent(format!(
            "{} is not a path functional of this model",
            f.label()
        )));
    };
    let oracle = ExactOracle::new(driver);
    let values = value_set(&oracle, f)?;
    let mut levels = Vec::with_capacity(values.len());
    levels.push(S::one());
    for &u in &values[1..] {
        let level = match kind {
            CapacityKind::Upper => oracle.upper(&MeasurableEvent::at_least(f, u).indicator_of(), *horizon)?,
            CapacityKind::Lower => oracle.lower(&MeasurableEvent::at_least(f, u).indicator_of(), *horizon)?,
        };
        levels.push(level.max(S::zero()).min(S::one()));
    }
    StepSurvival::new(values, levels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoquetMoment<S> {
    /// `C_V[|f|^r]`.
    pub moment: ChoquetValue<S>,
    /// `∫_1^∞ V(|f| >= m) dm`.
    pub tail_integral: S,
    /// Whether the moment dominates the tail integral.
    pub dominates: bool,
}

/// `C_V[|f|^r]` under the upper capacity, exact or on a grid of `n` points.
pub fn choquet_moment<S: Scalar>(
    model: &CapacityModel<S>,
    f: &RandomFunctional<S>,
    r: S,
    grid: Option<(usize, GridSpacing)>,
) -> Result<ChoquetMoment<S>, CapacityError> {
    if !(r >= S::one()) {
        return Err(CapacityError::InvalidOrder(r.to_f64_lossy()));
    }
    let abs = survival_of(model, &f.abs(), CapacityKind::Upper)?;
    let powered = abs.push_forward(|u| u.powf(r));
    let moment = match grid {
        None => choquet_integral(&SurvivalFunction::Step(powered))?,
        Some((n, spacing)) => choquet_integral(&SurvivalFunction::Grid(powered.to_grid(n, spacing)?))?,
    };
    let tail_integral = abs.integral_over(S::one(), S::infinity());
    let dominates = moment.value + moment.error_bound + S::exact_tolerance() >= tail_integral;
    Ok(ChoquetMoment {
        moment,
        tail_integral,
        dominates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::DiscreteDistribution;

    fn two_scenarios() -> ScenarioSet<f64> {
        ScenarioSet::new(vec![
            DiscreteDistribution::uniform(&[0.0, 2.0]).unwrap(),
            DiscreteDistribution::point_mass(1.0),
        ])
        .unwrap()
    }

    #[test]
    fn step_examples() {
        let s = StepSurvival::from_scenarios(&two_scenarios());
        assert_eq!(s.levels(), &[1.0, 1.0, 0.5]);
        assert_eq!(s.integral(), 1.5);
        let u = ScenarioSet::singleton(DiscreteDistribution::uniform(&[0.0f64, 1.0, 2.0]).unwrap());
        assert!((StepSurvival::from_scenarios(&u).integral() - 1.0).abs() < 1e-12);
        let ind = StepSurvival::new(vec![0.0, 1.0], vec![1.0, 0.3]).unwrap();
        assert_eq!(ind.integral(), 0.3);
    }

    #[test]
    fn negative_values_integrate_like_a_mean() {
        let u = ScenarioSet::singleton(DiscreteDistribution::uniform(&[-3.0f64, -1.0, 1.0]).unwrap());
        assert!((StepSurvival::from_scenarios(&u).integral() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn survival_from_model_matches_scenarios() {
        let model = CapacityModel::Discrete {
            driver: two_scenarios(),
            horizon: 1,
        };
        let s = survival_of(&model, &RandomFunctional::coordinate(1), CapacityKind::Upper).unwrap();
        assert_eq!(s, StepSurvival::from_scenarios(&two_scenarios()));
        let low = survival_of(&model, &RandomFunctional::coordinate(1), CapacityKind::Lower).unwrap();
        assert_eq!(low.levels(), &[1.0, 0.5, 0.0]);
    }

    #[test]
    fn grid_with_knots_matches_exact() {
        let s = StepSurvival::from_scenarios(&two_scenarios());
        for spacing in [GridSpacing::Adaptive, GridSpacing::Uniform] {
            let g = s.to_grid(1 << 12, spacing).unwrap();
            let c = g.integrate().unwrap();
            assert!((c.value - 1.5).abs() <= c.error_bound + 1e-12);
        }
        let c = s.to_grid(1 << 12, GridSpacing::Adaptive).unwrap().integrate().unwrap();
        assert!((c.value - 1.5).abs() < 1e-6);
    }

    #[test]
    fn uniform_grid_converges() {
        let s = StepSurvival::new(vec![0.1f64, 0.7, 3.3, 7.9], vec![1.0, 0.6, 0.35, 0.2]).unwrap();
        let exact = s.integral();
        let coarse = s.to_grid(64, GridSpacing::Uniform).unwrap().integrate().unwrap();
        let fine = s.to_grid(4096, GridSpacing::Uniform).unwrap().integrate().unwrap();
        assert!((fine.value - exact).abs() <= (coarse.value - exact).abs() + 1e-15);
        assert!(fine.error_bound < coarse.error_bound);
    }

    #[test]
    fn grid_requires_bracketing() {
        let ts: Vec<f64> = (0..16).map(f64::from).collect();
        let vs = vec![1.0; 16];
        let g = GridSurvival::new(ts.clone(), vs.clone(), None).unwrap();
        assert_eq!(g.integrate(), Err(CapacityError::UnboundedSupport));
        let g = GridSurvival::new(ts, vs, Some(2.0)).unwrap();
        assert_eq!(g.integrate().unwrap().error_bound, 2.0);
        assert!(GridSurvival::new(vec![0.0; 4], vec![1.0; 4], None).is_err());
    }

    #[test]
    fn moments() {
        let model = CapacityModel::Discrete {
            driver: two_scenarios(),
            horizon: 1,
        };
        let x = RandomFunctional::coordinate(1);
        let m = choquet_moment(&model, &x, 2.0, None).unwrap();
        // levels 1, 1, 0.5 at values 0, 1, 4
        assert_eq!(m.moment.value, 2.5);
        assert_eq!(m.tail_integral, 0.5);
        assert!(m.dominates);
        let bounded = CapacityModel::Discrete {
            driver: ScenarioSet::symmetric_signs(&[1.0]).unwrap(),
            horizon: 1,
        };
        let b = choquet_moment(&bounded, &x, 3.0, None).unwrap();
        assert_eq!(b.tail_integral, 0.0);
        assert!(choquet_moment(&bounded, &x, 0.5, None).is_err());
    }
}
