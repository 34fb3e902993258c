//! Numerical checks of truncation, maximal and Rademacher–Mensov
//! inequalities. Monte Carlo left-hand sides are maxima over a selector
//! pool, hence lower bounds: a reported violation is a real one.

use thiserror::Error;

use crate::capacity::{survival_of, CapacityError, CapacityKind, CapacityModel};
use crate::expectation::{truncate, EstimateKind, ExactOracle, ExpectationError, McPlan};
use crate::functional::RandomFunctional;
use crate::models::{Dependence, ModelError, SequenceModel};
use crate::scalar::Scalar;
use crate::simulate::model_statistics;
use crate::stats::{RunningStats, NORMAL_Q975};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InequalityError {
    #[error("no usable orthogonality certificate: {0}")]
    MissingCertificate(String),
    #[error("partial-sum centering unavailable: {0}")]
    CenteringUnavailable(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error(transparent)]
    Expectation(#[from] ExpectationError),
}

/// Both sides of an inequality on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport<S> {
    pub n: usize,
    pub x_grid: Vec<S>,
    pub lhs: Vec<S>,
    /// 95% interval of `lhs`; degenerate in exact mode.
    pub lhs_ci: Vec<(S, S)>,
    pub rhs: Vec<S>,
    pub ratio: Vec<S>,
    pub pass: Vec<bool>,
    pub constant_used: S,
    /// Slack allowed for rounding: `pass[i] ⇔ lhs[i] <= rhs[i] + tolerance`.
    pub tolerance: S,
    pub kind: EstimateKind,
    /// Selector attaining `lhs[i]`; empty in exact mode.
    pub selector_ids: Vec<String>,
    pub replications: usize,
    pub seed: u64,
}

impl<S: Scalar> InequalityReport<S> {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }

    /// `min(rhs - lhs)`.
    pub fn min_slack(&self) -> S {
        self.lhs
            .iter()
            .zip(&self.rhs)
            .map(|(&l, &r)| r - l)
            .fold(S::infinity(), S::min)
    }

    fn assemble(
        n: usize,
        x_grid: Vec<S>,
        lhs: Vec<S>,
        lhs_ci: Vec<(S, S)>,
        rhs: Vec<S>,
        constant_used: S,
        tolerance: S,
        kind: EstimateKind,
        selector_ids: Vec<String>,
        replications: usize,
        seed: u64,
    ) -> Self {
        let ratio = lhs
            .iter()
            .zip(&rhs)
            .map(|(&l, &r)| {
                if r > S::zero() {
                    l / r
                } else if l <= S::zero() {
                    S::zero()
                } else {
                    S::infinity()
                }
            })
            .collect();
        let pass = lhs.iter().zip(&rhs).map(|(&l, &r)| l <= r + tolerance).collect();
        Self {
            n,
            x_grid,
            lhs,
            lhs_ci,
            rhs,
            ratio,
            pass,
            constant_used,
            tolerance,
            kind,
            selector_ids,
            replications,
            seed,
        }
    }
}

fn validate_plan<S: Scalar>(model: &SequenceModel<S>, plan: &McPlan<S>) -> Result<(), InequalityError> {
    if plan.replications < 2 {
        return Err(InequalityError::InvalidInput("replications must be >= 2".into()));
    }
    if !plan.pool.is_valid_for(model.driver()) {
        return Err(InequalityError::InvalidInput(
            "selector pool references a missing scenario".into(),
        ));
    }
    Ok(())
}

fn indicator_ci<S: Scalar>(p: S, reps: usize) -> (S, S) {
    let z = S::from_f64_lossy(NORMAL_Q975);
    let half = z * (p * (S::one() - p) / S::from_usize_lossy(reps)).sqrt();
    ((p - half).max(S::zero()), (p + half).min(S::one()))
}

/// How the truncation bound is evaluated.
#[derive(Debug, Clone)]
pub enum TruncationMode<S> {
    Exact,
    MonteCarlo(McPlan<S>),
}

/// `Ê[|f| ∧ c] <= ∫_0^c V(|f| > x) dx` on `c_grid`.
pub fn verify_truncation_bound<S: Scalar>(
    model: &CapacityModel<S>,
    f: &RandomFunctional<S>,
    c_grid: &[S],
    mode: &TruncationMode<S>,
) -> Result<InequalityReport<S>, InequalityError> {
    if c_grid.iter().any(|&c| c < S::zero()) || c_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(InequalityError::InvalidInput(
            "c grid must be nonnegative and increasing".into(),
        ));
    }
    let CapacityModel::Discrete { driver, horizon } = model else {
        return Err(CapacityError::NonMeasurableEvent(f.label().to_string()).into());
    };
    let abs = f.abs();
    match mode {
        TruncationMode::Exact => {
            let oracle = ExactOracle::new(driver);
            let survival = survival_of(model, &abs, CapacityKind::Upper)?;
            let mut lhs = Vec::with_capacity(c_grid.len());
            let mut rhs = Vec::with_capacity(c_grid.len());
            for &c in c_grid {
                lhs.push(oracle.upper(&truncate(&abs, c)?, *horizon)?);
                rhs.push(survival.integral_over(S::zero(), c));
            }
            let ci = lhs.iter().map(|&l| (l, l)).collect();
            Ok(InequalityReport::assemble(
                *horizon,
                c_grid.to_vec(),
                lhs,
                ci,
                rhs,
                S::one(),
                S::exact_tolerance(),
                EstimateKind::Exact,
                Vec::new(),
                0,
                0,
            ))
        }
        TruncationMode::MonteCarlo(plan) => {
            let probe = crate::models::make_independent_sequence(driver.clone(), *horizon)?;
            let lifted = RandomFunctional::window(1, *horizon, abs.label().to_string(), {
                let abs = abs.clone();
                move |y| abs.eval_on_path(y)
            });
            validate_plan(&probe, plan)?;
            let samples = model_statistics(&probe, &plan.pool, plan.replications, plan.seed, None, |y| {
                lifted.evaluate(y)
            });
            let mut sorted = samples.clone();
            for xs in &mut sorted {
                xs.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
            }
            let mut knots: Vec<S> = sorted.iter().flatten().copied().collect();
            knots.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
            knots.dedup();
            // pointwise maximum of the empirical survival functions x -> P_s(|f| > x)
            let above = |a: S| {
                sorted
                    .iter()
                    .map(|xs| {
                        let k = xs.partition_point(|&v| v <= a);
                        S::from_usize_lossy(xs.len() - k) / S::from_usize_lossy(xs.len())
                    })
                    .fold(S::zero(), S::max)
            };
            let mut lhs = Vec::new();
            let mut ci = Vec::new();
            let mut ids = Vec::new();
            let mut rhs = Vec::new();
            for &c in c_grid {
                let truncated: Vec<Vec<S>> =
                    samples.iter().map(|xs| xs.iter().map(|&x| x.min(c)).collect()).collect();
                let (stats, si) = best_mean(&truncated);
                let h = stats.half_width();
                lhs.push(stats.mean());
                ci.push((stats.mean() - h, stats.mean() + h));
                ids.push(plan.pool.selectors()[si].id());
                let mut integral = S::zero();
                let mut a = S::zero();
                for &b in knots.iter().filter(|&&b| b > S::zero() && b < c).chain(std::iter::once(&c)) {
                    integral += (b - a) * above(a);
                    a = b;
                }
                rhs.push(integral);
            }
            Ok(InequalityReport::assemble(
                *horizon,
                c_grid.to_vec(),
                lhs,
                ci,
                rhs,
                S::one(),
                S::exact_tolerance(),
                EstimateKind::LowerBoundMc,
                ids,
                plan.replications,
                plan.seed,
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// `S_k - Ê[S_k]`.
    Upper,
    /// `S_k - ε̂[S_k]`.
    Lower,
    None,
}

/// `Ê[S_k]` (or `ε̂[S_k]`) for `k = 1..=n`.
///
/// When every output is mean-certain (`Ê[Y_k] = ε̂[Y_k]`) the partial sums
/// are additive whatever the dependence, since
/// `Ê[X] + ε̂[Y] <= Ê[X + Y] <= Ê[X] + Ê[Y]`. Independent sequences are
/// additive as well. Otherwise each `S_k` is enumerated exactly.
pub fn partial_sum_centers<S: Scalar>(
    model: &SequenceModel<S>,
    centering: Centering,
) -> Result<Vec<S>, InequalityError> {
    let n = model.horizon();
    if centering == Centering::None {
        return Ok(vec![S::zero(); n]);
    }
    let (up, low) = model.output_means()?;
    let tol = S::exact_tolerance();
    let certain = up.iter().zip(&low).all(|(&u, &l)| (u - l).abs() <= tol);
    if certain || *model.dependence() == Dependence::Independent {
        let terms = if centering == Centering::Upper { up } else { low };
        let mut acc = S::zero();
        return Ok(terms
            .into_iter()
            .map(|t| {
                acc += t;
                acc
            })
            .collect());
    }
    let oracle = model.oracle();
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let s = model.partial_sum(k)?;
        if !oracle.is_enumerable(&s) {
            return Err(InequalityError::CenteringUnavailable(format!(
                "S_{k} is neither additive nor enumerable"
            )));
        }
        out.push(match centering {
            Centering::Upper => oracle.upper(&s, model.driver_horizon())?,
            _ => oracle.lower(&s, model.driver_horizon())?,
        });
    }
    Ok(out)
}

/// Per-replication values of `max_{k<=n} (S_k - center_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximalStatistic<S> {
    pub n: usize,
    pub centering: Centering,
    pub selector_ids: Vec<String>,
    /// `values[selector][replication]`.
    pub values: Vec<Vec<S>>,
}

pub fn max_partial_sum_stats<S: Scalar>(
    model: &SequenceModel<S>,
    plan: &McPlan<S>,
    centering: Centering,
) -> Result<MaximalStatistic<S>, InequalityError> {
    validate_plan(model, plan)?;
    let centers = partial_sum_centers(model, centering)?;
    let values = model_statistics(model, &plan.pool, plan.replications, plan.seed, None, |y| {
        let mut s = S::zero();
        let mut best = S::neg_infinity();
        for (k, &v) in y.iter().enumerate() {
            s += v;
            best = best.max(s - centers[k]);
        }
        best
    });
    Ok(MaximalStatistic {
        n: model.horizon(),
        centering,
        selector_ids: plan.pool.selectors().iter().map(|s| s.id()).collect(),
        values,
    })
}

/// Default constant for the m-dependent maximal inequality:
/// `(m+1)(m+2)(2m+3)/6` when `n < m + 1`, else `c_kol (m+1)^2` where
/// `c_kol` is the constant of the independent case.
pub fn kolmogorov_constant<S: Scalar>(m: usize, n: usize, c_kol: S) -> S {
    let m1 = S::from_usize_lossy(m + 1);
    if n < m + 1 {
        let m2 = S::from_usize_lossy(m + 2);
        let m3 = S::from_usize_lossy(2 * m + 3);
        m1 * m2 * m3 / S::from_f64_lossy(6.0)
    } else {
        c_kol * m1 * m1
    }
}

/// `x = λ sqrt(Σ Ê[X_i^2])`, which keeps the exceedance level comparable
/// across horizons.
pub fn relative_x_grid<S: Scalar>(model: &SequenceModel<S>, lambdas: &[S]) -> Result<Vec<S>, InequalityError> {
    let total: S = model.output_second_moments()?.into_iter().sum();
    Ok(lambdas.iter().map(|&l| l * total.sqrt()).collect())
}

/// `V(max_k Σ_{i<=k} (X_i - Ê[X_i]) >= x) <= C x^{-2} Σ Ê[X_i^2]`.
pub fn verify_kolmogorov_maximal<S: Scalar>(
    model: &SequenceModel<S>,
    x_grid: &[S],
    plan: &McPlan<S>,
    constant: Option<S>,
) -> Result<InequalityReport<S>, InequalityError> {
    validate_plan(model, plan)?;
    if x_grid.iter().any(|&x| !(x > S::zero())) {
        return Err(InequalityError::InvalidInput("x grid must be positive".into()));
    }
    let n = model.horizon();
    let m = model.m().ok_or_else(|| {
        InequalityError::InvalidInput("model has no dependence range m".into())
    })?;
    let constant = constant.unwrap_or_else(|| kolmogorov_constant(m, n, S::one()));
    let (means, _) = model.output_means()?;
    let second: S = model.output_second_moments()?.into_iter().sum();
    let maxima = model_statistics(model, &plan.pool, plan.replications, plan.seed, None, |y| {
        let mut s = S::zero();
        let mut best = S::neg_infinity();
        for (k, &v) in y.iter().enumerate() {
            s += v - means[k];
            best = best.max(s);
        }
        best
    });
    let reps = S::from_usize_lossy(plan.replications);
    let mut lhs = Vec::with_capacity(x_grid.len());
    let mut ids = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let (si, count) = maxima
            .iter()
            .enumerate()
            .map(|(si, vals)| (si, vals.iter().filter(|&&v| v >= x).count()))
            .fold((0, 0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        lhs.push(S::from_usize_lossy(count) / reps);
        ids.push(plan.pool.selectors()[si].id());
    }
    let rhs = x_grid.iter().map(|&x| constant * second / (x * x)).collect();
    let ci = lhs.iter().map(|&p| indicator_ci(p, plan.replications)).collect();
    Ok(InequalityReport::assemble(
        n,
        x_grid.to_vec(),
        lhs,
        ci,
        rhs,
        constant,
        S::zero(),
        EstimateKind::LowerBoundMc,
        ids,
        plan.replications,
        plan.seed,
    ))
}

/// `lhs x^2 / Σ Ê[X_i^2]` per grid point; stable in `n` when the maximal
/// inequality holds with an `n`-free constant.
pub fn normalized_exceedance<S: Scalar>(
    report: &InequalityReport<S>,
    model: &SequenceModel<S>,
) -> Result<Vec<S>, InequalityError> {
    let second: S = model.output_second_moments()?.into_iter().sum();
    Ok(report
        .lhs
        .iter()
        .zip(&report.x_grid)
        .map(|(&l, &x)| l * x * x / second)
        .collect())
}

/// `(log2 4n)^2`.
pub fn rademacher_mensov_factor<S: Scalar>(n: usize) -> S {
    let l = S::from_usize_lossy(4 * n).log2();
    l * l
}

/// Largest number of leaves for which the maximal functional is evaluated
/// exactly instead of by simulation.
pub const RM_EXACT_LEAVES: u128 = 1 << 16;

/// `Ê[max_k (Σ_{j<=k} c_j X_j)^2] <= (1 + 2 Σ_{j>=1} f(j)) (log2 4n)^2 Σ c_j^2`,
/// with the inflation only when `quasi_f` is given.
pub fn verify_rademacher_mensov<S: Scalar>(
    model: &SequenceModel<S>,
    c: &[S],
    plan: &McPlan<S>,
    quasi_f: Option<&[S]>,
) -> Result<InequalityReport<S>, InequalityError> {
    let n = model.horizon();
    if c.len() != n {
        return Err(InequalityError::InvalidInput(format!(
            "{} coefficients for horizon {n}",
            c.len()
        )));
    }
    let cert = model
        .certificate()
        .ok_or_else(|| InequalityError::MissingCertificate("model carries none".into()))?;
    let tol = S::exact_tolerance();
    if !cert.passes() {
        return Err(InequalityError::MissingCertificate(format!(
            "certificate reports violation {}",
            cert.max_violation
        )));
    }
    if cert.max_second_moment() > S::one() + S::from_f64_lossy(1e-9) {
        return Err(InequalityError::MissingCertificate(
            "outputs are not normalized: max E[X^2] exceeds 1".into(),
        ));
    }
    let inflation = match quasi_f {
        None => {
            if cert.f.iter().skip(1).any(|&v| v > tol) {
                return Err(InequalityError::MissingCertificate(
                    "certificate is quasi-orthogonal only; supply f".into(),
                ));
            }
            S::one()
        }
        Some(f) => {
            let covered = cert
                .f
                .iter()
                .enumerate()
                .skip(1)
                .all(|(j, &v)| v <= f.get(j).copied().unwrap_or_else(S::zero) + tol);
            if !covered {
                return Err(InequalityError::MissingCertificate(
                    "certificate f exceeds the supplied f".into(),
                ));
            }
            let two = S::one() + S::one();
            S::one() + two * f.iter().skip(1).copied().sum::<S>()
        }
    };
    let sum_c2: S = c.iter().map(|&v| v * v).sum();
    let rhs = inflation * rademacher_mensov_factor::<S>(n) * sum_c2;
    let coeffs = c.to_vec();
    let max_sq = move |y: &[S]| {
        let mut s = S::zero();
        let mut best = S::zero();
        for (k, &v) in y.iter().enumerate() {
            s += coeffs[k] * v;
            best = best.max(s * s);
        }
        best
    };
    let oracle = model.oracle();
    let g = RandomFunctional::window(1, n, "max_sq", max_sq.clone());
    let lifted = model.lift(&g)?;
    if oracle.leaves(&lifted) <= RM_EXACT_LEAVES {
        let v = oracle.upper(&lifted, model.driver_horizon())?;
        return Ok(InequalityReport::assemble(
            n,
            vec![S::from_usize_lossy(n)],
            vec![v],
            vec![(v, v)],
            vec![rhs],
            inflation,
            tol,
            EstimateKind::Exact,
            Vec::new(),
            0,
            0,
        ));
    }
    validate_plan(model, plan)?;
    let samples = model_statistics(model, &plan.pool, plan.replications, plan.seed, Some(c), max_sq);
    let (stats, si) = best_mean(&samples);
    let h = stats.half_width();
    Ok(InequalityReport::assemble(
        n,
        vec![S::from_usize_lossy(n)],
        vec![stats.mean()],
        vec![(stats.mean() - h, stats.mean() + h)],
        vec![rhs],
        inflation,
        S::zero(),
        EstimateKind::LowerBoundMc,
        vec![plan.pool.selectors()[si].id()],
        plan.replications,
        plan.seed,
    ))
}

/// Largest per-selector mean; ties keep the earlier selector.
pub(crate) fn best_mean<S: Scalar>(samples: &[Vec<S>]) -> (RunningStats<S>, usize) {
    let mut best: Option<(RunningStats<S>, usize)> = None;
    for (si, xs) in samples.iter().enumerate() {
        let stats: RunningStats<S> = xs.iter().copied().collect();
        if best.as_ref().map_or(true, |(b, _)| stats.mean() > b.mean()) {
            best = Some((stats, si));
        }
    }
    best.expect("pool is nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{DiscreteDistribution, ScenarioSet};
    use crate::models::{
        make_independent_sequence, make_m_dependent, make_orthogonal, orthogonality_certificate,
        quasi_orthogonal_certificate, OrthogonalScheme,
    };
    use crate::selector::SelectorPool;

    fn signs() -> ScenarioSet<f64> {
        ScenarioSet::symmetric_signs(&[1.0]).unwrap()
    }

    fn plan(driver: &ScenarioSet<f64>, reps: usize) -> McPlan<f64> {
        McPlan {
            replications: reps,
            seed: 11,
            pool: SelectorPool::for_partial_sums(driver, 8, 11),
        }
    }

    #[test]
    fn truncation_examples() {
        let u = ScenarioSet::singleton(DiscreteDistribution::uniform(&[0.0f64, 1.0, 2.0]).unwrap());
        let model = CapacityModel::Discrete { driver: u, horizon: 1 };
        let x = RandomFunctional::coordinate(1);
        let r = verify_truncation_bound(&model, &x, &[0.0, 1.0, 3.0], &TruncationMode::Exact).unwrap();
        assert_eq!(r.lhs[0], 0.0);
        assert_eq!(r.rhs[0], 0.0);
        assert!((r.lhs[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.rhs[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!(r.all_pass());
        let pm = ScenarioSet::point_masses(&[1.0, -1.0]).unwrap();
        let model = CapacityModel::Discrete { driver: pm.clone(), horizon: 2 };
        let f = x.mul(&RandomFunctional::coordinate(2)).scale(0.5);
        let r = verify_truncation_bound(&model, &f, &[2.0], &TruncationMode::Exact).unwrap();
        assert_eq!(r.lhs[0], 0.5);
        assert!(r.rhs[0] >= r.lhs[0]);
        let mc = verify_truncation_bound(&model, &f, &[0.25, 2.0], &TruncationMode::MonteCarlo(plan(&pm, 50)))
            .unwrap();
        assert!(mc.all_pass());
    }

    #[test]
    fn centers() {
        let pm = ScenarioSet::point_masses(&[1.0, -1.0]).unwrap();
        let ind = make_independent_sequence(pm.clone(), 3).unwrap();
        assert_eq!(partial_sum_centers(&ind, Centering::Upper).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(partial_sum_centers(&ind, Centering::Lower).unwrap(), vec![-1.0, -2.0, -3.0]);
        let prod = RandomFunctional::window(1, 2, "ab", |x| x[0] * x[1]);
        let dep = make_m_dependent(pm, &prod, 1, 3).unwrap();
        let c = partial_sum_centers(&dep, Centering::Upper).unwrap();
        assert_eq!(c, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn deterministic_model_has_zero_maximal_statistic() {
        let d = ScenarioSet::singleton(DiscreteDistribution::point_mass(0.7));
        let m = make_independent_sequence(d.clone(), 5).unwrap();
        let s = max_partial_sum_stats(&m, &plan(&d, 10), Centering::Upper).unwrap();
        assert!(s.values.iter().flatten().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn kolmogorov_classical_case() {
        let m = make_independent_sequence(signs(), 64).unwrap();
        let r = verify_kolmogorov_maximal(&m, &[16.0, 65.0], &plan(&signs(), 2000), None).unwrap();
        assert_eq!(r.constant_used, 1.0);
        assert_eq!(r.rhs[0], 0.25);
        assert!(r.all_pass());
        assert_eq!(r.lhs[1], 0.0);
        assert_eq!(kolmogorov_constant::<f64>(2, 2, 1.0), 3.0 * 4.0 * 7.0 / 6.0);
        assert_eq!(kolmogorov_constant::<f64>(2, 10, 1.0), 9.0);
    }

    #[test]
    fn rademacher_mensov_exact_small() {
        let m = make_orthogonal(4, OrthogonalScheme::SymmetricSigns(signs())).unwrap();
        let cert = orthogonality_certificate(&m, 100).unwrap();
        let m = m.with_certificate(cert);
        let r = verify_rademacher_mensov(&m, &[1.0; 4], &plan(&signs(), 10), None).unwrap();
        assert_eq!(r.rhs[0], 64.0);
        assert_eq!(r.kind, EstimateKind::Exact);
        // E[max_k S_k^2] over the 16 sign paths
        let mut brute = 0.0;
        for bits in 0..16u32 {
            let mut s = 0.0f64;
            let mut best = 0.0f64;
            for j in 0..4 {
                s += if bits >> j & 1 == 1 { 1.0 } else { -1.0 };
                best = best.max(s * s);
            }
            brute += best / 16.0;
        }
        assert!((r.lhs[0] - brute).abs() < 1e-12);
        let z = verify_rademacher_mensov(&m, &[0.0; 4], &plan(&signs(), 10), None).unwrap();
        assert_eq!((z.lhs[0], z.rhs[0]), (0.0, 0.0));
        assert!(z.all_pass());
    }

    #[test]
    fn rademacher_mensov_requires_certificate() {
        let m = make_orthogonal(4, OrthogonalScheme::SymmetricSigns(signs())).unwrap();
        assert!(matches!(
            verify_rademacher_mensov(&m, &[1.0; 4], &plan(&signs(), 10), None),
            Err(InequalityError::MissingCertificate(_))
        ));
        let avg = RandomFunctional::window(1, 2, "avg", |x| (x[0] + x[1]) / 2f64.sqrt());
        let q = make_m_dependent(signs(), &avg, 1, 4).unwrap();
        let cert = quasi_orthogonal_certificate(&q, &[1.0, 0.5], 100).unwrap();
        let q = q.with_certificate(cert);
        assert!(verify_rademacher_mensov(&q, &[1.0; 4], &plan(&signs(), 10), None).is_err());
        let r = verify_rademacher_mensov(&q, &[1.0; 4], &plan(&signs(), 10), Some(&[1.0, 0.5])).unwrap();
        assert_eq!(r.constant_used, 2.0);
        assert!(r.all_pass());
    }

    #[test]
    fn rademacher_mensov_monte_carlo_scales() {
        let two = ScenarioSet::symmetric_signs(&[1.0, 0.5]).unwrap();
        let m = make_orthogonal(32, OrthogonalScheme::SymmetricSigns(two.clone())).unwrap();
        let cert = orthogonality_certificate(&m, 64).unwrap();
        let m = m.with_certificate(cert);
        let c: Vec<f64> = (0..32).map(|j| ((j % 5) as f64 - 2.0) / 3.0).collect();
        let c2: Vec<f64> = c.iter().map(|v| v * 2.0).collect();
        let p = plan(&two, 200);
        let a = verify_rademacher_mensov(&m, &c, &p, None).unwrap();
        let b = verify_rademacher_mensov(&m, &c2, &p, None).unwrap();
        assert_eq!(a.kind, EstimateKind::LowerBoundMc);
        assert_eq!(b.lhs[0], 4.0 * a.lhs[0]);
        assert_eq!(b.rhs[0], 4.0 * a.rhs[0]);
        assert!(a.all_pass());
    }
}
