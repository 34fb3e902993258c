//! Finite-horizon strong-law experiments.
//!
//! A finite run cannot verify a limit. What it can do is check every
//! hypothesis that is decidable on the horizon, then watch the worst
//! normalized deviation over a selector pool shrink across checkpoints.
//! A failed hypothesis is an error, never a silent run.

use std::collections::HashMap;

use thiserror::Error;

use crate::capacity::{
    choquet_moment, survival_of, CapacityError, CapacityKind, CapacityModel, ChoquetMoment,
    StepSurvival,
};
use crate::expectation::{truncate, ExpectationError, ExtendedExpectation, McPlan};
use crate::functional::RandomFunctional;
use crate::inequality::{best_mean, rademacher_mensov_factor};
use crate::models::{phi_table, BlockStructure, Dependence, ModelError, SequenceModel};
use crate::scalar::{compensated_sum, Scalar};
use crate::series::{epsilon_sequence, SeriesError};
use crate::simulate::model_statistics;

/// Outcome of one hypothesis check, widened to `f64` for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    pub detail: String,
}

impl ConditionResult {
    fn new(name: &str, passed: bool, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value,
            bound,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SllnError {
    #[error("hypothesis unmet: {condition}: {detail}")]
    HypothesisUnmet {
        condition: String,
        detail: String,
        /// Every check run before (and including) the failing one.
        conditions: Vec<ConditionResult>,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error(transparent)]
    Expectation(#[from] ExpectationError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

fn require(conditions: &mut Vec<ConditionResult>, c: ConditionResult) -> Result<(), SllnError> {
    let failed = !c.passed;
    let (condition, detail) = (c.name.clone(), c.detail.clone());
    conditions.push(c);
    if failed {
        return Err(SllnError::HypothesisUnmet {
            condition,
            detail,
            conditions: conditions.clone(),
        });
    }
    Ok(())
}

/// The sequence `a_n` dividing `S_n`.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalizerSpec<S> {
    /// Explicit `a_1, a_2, ...`; must start at or above 1 and not decrease.
    Custom(Vec<S>),
    /// `n^{1/r} Φ(n)` with `r ∈ [1, 2)`.
    PowerPhi { r: S, blocks: BlockStructure },
    /// `a_n = n`.
    Linear,
}

fn check_order<S: Scalar>(r: S) -> Result<(), SllnError> {
    if !(r >= S::one() && r < S::from_f64_lossy(2.0)) {
        return Err(SllnError::InvalidInput(format!("r must lie in [1,2), got {r}")));
    }
    Ok(())
}

/// `n^{1/r}`, exact for `r = 1`.
fn root<S: Scalar>(n: usize, r: S) -> S {
    let x = S::from_usize_lossy(n);
    if r == S::one() {
        x
    } else {
        x.powf(S::one() / r)
    }
}

impl<S: Scalar> NormalizerSpec<S> {
    /// `a_1..=a_horizon`.
    pub fn values(&self, horizon: usize) -> Result<Vec<S>, SllnError> {
        match self {
            NormalizerSpec::Linear => Ok((1..=horizon).map(S::from_usize_lossy).collect()),
            NormalizerSpec::Custom(a) => {
                if a.len() < horizon {
                    return Err(SllnError::InvalidInput(format!(
                        "{} normalizer values for horizon {horizon}",
                        a.len()
                    )));
                }
                let a = &a[..horizon];
                if a.iter().any(|v| !v.is_finite()) || a.first().is_some_and(|&v| v < S::one()) {
                    return Err(SllnError::InvalidInput("a_n must be finite with a_1 >= 1".into()));
                }
                if a.windows(2).any(|w| w[1] < w[0]) {
                    return Err(SllnError::InvalidInput("a_n must be nondecreasing".into()));
                }
                Ok(a.to_vec())
            }
            NormalizerSpec::PowerPhi { r, blocks } => {
                check_order(*r)?;
                if blocks.horizon() < horizon {
                    return Err(SllnError::InvalidInput(format!(
                        "block structure covers {} outputs, need {horizon}",
                        blocks.horizon()
                    )));
                }
                let phi = phi_table(blocks);
                Ok((1..=horizon)
                    .map(|n| root(n, *r) * S::from_usize_lossy(phi[n - 1]))
                    .collect())
            }
        }
    }
}

/// Closed-form bound on the tail `Σ_{k>N} w_k t_k` of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailBound<S> {
    Value(S),
    /// Summand at most `coefficient k^{-p} (log2 k)^q` beyond the prefix.
    PowerLog { coefficient: S, p: S, q: u32 },
}

impl<S: Scalar> TailBound<S> {
    /// Bound on the sum over `k > n`.
    ///
    /// For `PowerLog` the summand decreases once `ln k >= q/p`, so the sum is
    /// below `∫_n^∞`, which is `(ln 2)^{-q} Γ(q+1, z) / (p-1)^{q+1}` with
    /// `z = (p-1) ln n`, and `Γ(q+1, z) = q! e^{-z} Σ_{i<=q} z^i/i!`.
    pub fn after(&self, n: usize) -> Result<S, SllnError> {
        match *self {
            TailBound::Value(v) => {
                if !(v >= S::zero()) || !v.is_finite() {
                    return Err(SllnError::InvalidInput("tail bound must be finite and >= 0".into()));
                }
                Ok(v)
            }
            TailBound::PowerLog { coefficient, p, q } => {
                if !(p > S::one()) || !(coefficient >= S::zero()) {
                    return Err(SllnError::InvalidInput(
                        "power-log tail needs p > 1 and a nonnegative coefficient".into(),
                    ));
                }
                let ln_n = S::from_usize_lossy(n.max(1)).ln();
                if ln_n < S::from_u32(q).unwrap() / p {
                    return Err(SllnError::InvalidInput(format!(
                        "power-log tail is not monotone beyond {n}"
                    )));
                }
                let pm1 = p - S::one();
                let z = pm1 * ln_n;
                let mut term = S::one();
                let mut acc = S::zero();
                // Σ_{i<=q} (q!/i!) z^i, built from i = q downwards
                for i in (0..=q).rev() {
                    acc += term * z.powi(i as i32);
                    term = term * S::from_u32(i.max(1)).unwrap();
                }
                let ln2 = S::from_f64_lossy(std::f64::consts::LN_2);
                Ok(coefficient * (-z).exp() * acc / (ln2.powi(q as i32) * pm1.powi(q as i32 + 1)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summability {
    /// A rigorous tail bound was supplied, or every term vanishes.
    Converged,
    /// No tail given; the summands decay faster than `k^{-1}` on the last
    /// half of the prefix.
    Heuristic,
    NotConvergedOnPrefix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityReport<S> {
    pub partial_sums: Vec<S>,
    pub total: S,
    pub tail_bound: Option<S>,
    /// Fitted decay exponent of the summands on the last half of the prefix.
    pub decay: Option<S>,
    pub verdict: Summability,
}

impl<S: Scalar> SummabilityReport<S> {
    pub fn converged(&self) -> bool {
        self.verdict != Summability::NotConvergedOnPrefix
    }

    /// `total + tail_bound` when a tail was supplied.
    pub fn upper_bound(&self) -> Option<S> {
        self.tail_bound.map(|t| self.total + t)
    }
}

/// Decay exponents at or below this are read as divergence.
const DECAY_MARGIN: f64 = 1.05;

/// Partial sums of `Σ w_k t_k` over the prefix with an optional tail.
pub fn check_summability<S: Scalar>(
    terms: &[S],
    weights: &[S],
    tail: Option<&TailBound<S>>,
) -> Result<SummabilityReport<S>, SllnError> {
    if terms.len() != weights.len() {
        return Err(SllnError::InvalidInput(format!(
            "{} terms but {} weights",
            terms.len(),
            weights.len()
        )));
    }
    let summands: Vec<S> = terms.iter().zip(weights).map(|(&t, &w)| t * w).collect();
    if summands.iter().any(|&s| !(s >= S::zero()) || !s.is_finite()) {
        return Err(SllnError::InvalidInput("summands must be finite and nonnegative".into()));
    }
    let mut acc = S::zero();
    let partial_sums: Vec<S> = summands
        .iter()
        .map(|&s| {
            acc += s;
            acc
        })
        .collect();
    let total = compensated_sum(summands.iter().copied());
    let tail_bound = tail.map(|t| t.after(summands.len())).transpose()?;
    let n = summands.len();
    let half: Vec<(S, S)> = summands
        .iter()
        .enumerate()
        .skip(n / 2)
        .filter(|(_, &s)| s > S::zero())
        .map(|(i, &s)| (S::from_usize_lossy(i + 1).ln(), s.ln()))
        .collect();
    let decay = (half.len() >= 8).then(|| -least_squares_slope(&half));
    let verdict = if tail_bound.is_some() || summands.iter().all(|&s| s == S::zero()) {
        Summability::Converged
    } else if half.is_empty() && n > 0 {
        Summability::Heuristic
    } else if decay.is_some_and(|d| d > S::from_f64_lossy(DECAY_MARGIN)) {
        Summability::Heuristic
    } else {
        Summability::NotConvergedOnPrefix
    };
    Ok(SummabilityReport {
        partial_sums,
        total,
        tail_bound,
        decay,
        verdict,
    })
}

fn least_squares_slope<S: Scalar>(pts: &[(S, S)]) -> S {
    let n = S::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<S>() / n;
    let my = pts.iter().map(|p| p.1).sum::<S>() / n;
    let sxy: S = pts.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: S = pts.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `(1/n) Σ_{k<=n} V(|X_k| > t)` against `C V(|Z| > t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationCheck<S> {
    pub t_grid: Vec<S>,
    pub checkpoints: Vec<usize>,
    /// `lhs[checkpoint][t]`.
    pub lhs: Vec<Vec<S>>,
    /// Largest left-hand side over every `n` up to the horizon, per `t`.
    pub worst_lhs: Vec<S>,
    pub worst_n: Vec<usize>,
    pub rhs: Vec<S>,
    pub c: S,
    /// `pass[t] ⇔ worst_lhs[t] <= rhs[t]` up to rounding.
    pub pass: Vec<bool>,
    pub r: S,
    /// `C_V[|Z|^r]`.
    pub z_moment: ChoquetMoment<S>,
}

impl<S: Scalar> DominationCheck<S> {
    pub fn passes(&self) -> bool {
        self.pass.iter().all(|&p| p) && self.z_moment.moment.value.is_finite()
    }
}

/// Upper survival of `|Y_k|`, one per law class.
fn output_abs_survivals<S: Scalar>(model: &SequenceModel<S>) -> Result<Vec<StepSurvival<S>>, SllnError> {
    let cap = CapacityModel::Discrete {
        driver: model.driver().clone(),
        horizon: model.driver_horizon(),
    };
    let mut cache: HashMap<usize, StepSurvival<S>> = HashMap::new();
    let mut out = Vec::with_capacity(model.horizon());
    for k in 1..=model.horizon() {
        let class = model.law_class(k);
        if !cache.contains_key(&class) {
            let s = survival_of(&cap, &model.output(k).abs(), CapacityKind::Upper)?;
            cache.insert(class, s);
        }
        out.push(cache[&class].clone());
    }
    Ok(out)
}

pub fn check_domination<S: Scalar>(
    model: &SequenceModel<S>,
    z_model: &CapacityModel<S>,
    z: &RandomFunctional<S>,
    c: S,
    t_grid: &[S],
    r: S,
    checkpoints: &[usize],
) -> Result<DominationCheck<S>, SllnError> {
    check_order(r)?;
    check_checkpoints(checkpoints, model.horizon())?;
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > S::zero())) {
        return Err(SllnError::InvalidInput("t grid must be nonempty and positive".into()));
    }
    if !(c > S::zero()) {
        return Err(SllnError::InvalidInput("C must be positive".into()));
    }
    let survivals = output_abs_survivals(model)?;
    let z_surv = survival_of(z_model, &z.abs(), CapacityKind::Upper)?;
    let rhs: Vec<S> = t_grid.iter().map(|&t| c * z_surv.strictly_above(t)).collect();
    let mut sums = vec![S::zero(); t_grid.len()];
    let mut worst_lhs = vec![S::neg_infinity(); t_grid.len()];
    let mut worst_n = vec![0; t_grid.len()];
    let mut lhs = Vec::with_capacity(checkpoints.len());
    let mut next_cp = 0;
    for (idx, s) in survivals.iter().enumerate() {
        let n = idx + 1;
        let nn = S::from_usize_lossy(n);
        for (ti, &t) in t_grid.iter().enumerate() {
            sums[ti] += s.strictly_above(t);
            let v = sums[ti] / nn;
            if v > worst_lhs[ti] {
                worst_lhs[ti] = v;
                worst_n[ti] = n;
            }
        }
        if next_cp < checkpoints.len() && checkpoints[next_cp] == n {
            lhs.push(sums.iter().map(|&v| v / nn).collect());
            next_cp += 1;
        }
    }
    let tol = S::exact_tolerance();
    let pass = worst_lhs.iter().zip(&rhs).map(|(&l, &r)| l <= r + tol).collect();
    let z_moment = choquet_moment(z_model, z, r, None)?;
    Ok(DominationCheck {
        t_grid: t_grid.to_vec(),
        checkpoints: checkpoints.to_vec(),
        lhs,
        worst_lhs,
        worst_n,
        rhs,
        c,
        pass,
        r,
        z_moment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconclusive,
    Violated,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Violated => "violated",
        }
    }
}

/// Consistent when the final worst ratio is below `band` and the ratios
/// strictly decrease over the last three checkpoints (or already vanish
/// there). Violated when the final value sits at or above both the band and
/// the first checkpoint.
pub fn verdict<S: Scalar>(worst: &[S], band: S) -> Verdict {
    let Some(&last) = worst.last() else {
        return Verdict::Inconclusive;
    };
    let tail = &worst[worst.len().saturating_sub(3)..];
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    let vanished = tail.iter().all(|&v| v <= S::exact_tolerance());
    if last < band && (decreasing || vanished) {
        Verdict::Consistent
    } else if last >= band && last >= worst[0] {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

/// Monte Carlo settings of a convergence run.
#[derive(Debug, Clone)]
pub struct SllnPlan<S> {
    pub mc: McPlan<S>,
    pub checkpoints: Vec<usize>,
    /// Consistency threshold for the worst ratio at the final checkpoint.
    pub band: S,
}

/// Truncation events `|X_k| > k^{1/r}` seen along simulated paths.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationDiagnostics<S> {
    pub r: S,
    /// First index from which `k^{1/r}` exceeds every attainable `|X_k|`.
    pub bound_index: usize,
    /// Over all paths.
    pub events: usize,
    pub last_event: Option<usize>,
    pub events_beyond_bound: usize,
    /// `Σ_{k<=n} (Ē[X_k] - Ê[X_k^{(k^{1/r})}]) / n^{1/r}` per checkpoint.
    pub drift: Vec<S>,
}

impl<S> TruncationDiagnostics<S> {
    pub fn passes(&self) -> bool {
        self.events_beyond_bound == 0
    }
}

/// `max_{2^k < n <= 2^{k+1}} |S_n - S_{2^k}|` and its mean square.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockIncrement<S> {
    pub k: u32,
    /// Worst over paths, divided by `2^{k+1}`.
    pub worst: S,
    /// Largest per-selector mean of `max (S_n - S_{2^k})^2`.
    pub mean_square: S,
    pub mean_square_ci: (S, S),
    /// Inflated maximal bound `(1 + 2 Σ f) (k+2)^2 Σ σ^2` over the block.
    pub rm_bound: S,
    /// `sqrt(a_{2^k} / b_{2^k})` from the summability series.
    pub epsilon: S,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<S> {
    pub experiment: &'static str,
    pub checkpoints: Vec<usize>,
    pub normalizers: Vec<S>,
    /// `max (S_n - Σ Ē[X_k]) / a_n` over the pool.
    pub worst_upper: Vec<S>,
    /// `min (S_n - Σ ε̄[X_k]) / a_n` over the pool.
    pub worst_lower: Vec<S>,
    /// `max(worst_upper, -worst_lower)`.
    pub worst_abs: Vec<S>,
    /// Selector attaining `worst_abs`.
    pub selector_ids: Vec<String>,
    pub band: S,
    pub conditions: Vec<ConditionResult>,
    pub verdict: Verdict,
    pub truncation: Option<TruncationDiagnostics<S>>,
    pub blocks: Vec<BlockIncrement<S>>,
    pub replications: usize,
    pub seed: u64,
}

impl<S: Scalar> ConvergenceReport<S> {
    /// Consistent verdict and every diagnostic passes.
    pub fn passes(&self) -> bool {
        self.verdict == Verdict::Consistent
            && self.truncation.as_ref().map_or(true, |t| t.passes())
            && self.blocks.iter().all(|b| b.pass)
    }
}

fn check_checkpoints(checkpoints: &[usize], horizon: usize) -> Result<(), SllnError> {
    if checkpoints.is_empty() {
        return Err(SllnError::InvalidInput("no checkpoints".into()));
    }
    if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SllnError::InvalidInput(
            "checkpoints must be positive and strictly increasing".into(),
        ));
    }
    if *checkpoints.last().unwrap() > horizon {
        return Err(SllnError::InvalidInput(format!(
            "checkpoint {} beyond horizon {horizon}",
            checkpoints.last().unwrap()
        )));
    }
    Ok(())
}

fn validate_plan<S: Scalar>(model: &SequenceModel<S>, plan: &SllnPlan<S>) -> Result<(), SllnError> {
    check_checkpoints(&plan.checkpoints, model.horizon())?;
    if plan.mc.replications < 2 {
        return Err(SllnError::InvalidInput("replications must be >= 2".into()));
    }
    if !plan.mc.pool.is_valid_for(model.driver()) {
        return Err(SllnError::InvalidInput(
            "selector pool references a missing scenario".into(),
        ));
    }
    if !(plan.band > S::zero()) {
        return Err(SllnError::InvalidInput("band must be positive".into()));
    }
    Ok(())
}

struct PathSummary<S> {
    up: Vec<S>,
    low: Vec<S>,
    incr: Vec<S>,
    incr_sq: Vec<S>,
    trunc_events: usize,
    trunc_last: usize,
    trunc_beyond: usize,
}

struct Probe<'a, S> {
    /// Cumulative upper and lower centers, indexed by `n - 1`.
    up_centers: &'a [S],
    low_centers: &'a [S],
    norms: &'a [S],
    dyadic_blocks: bool,
    /// Truncation levels `k^{1/r}` and the index beyond which events must
    /// not occur.
    truncation: Option<(&'a [S], usize)>,
}

struct Simulated<S> {
    worst_upper: Vec<S>,
    worst_lower: Vec<S>,
    worst_abs: Vec<S>,
    selector_ids: Vec<String>,
    incr_worst: Vec<S>,
    incr_mean_sq: Vec<(S, (S, S))>,
    trunc_events: usize,
    trunc_last: Option<usize>,
    trunc_beyond: usize,
}

fn simulate<S: Scalar>(model: &SequenceModel<S>, plan: &SllnPlan<S>, probe: &Probe<'_, S>) -> Simulated<S> {
    let cps = &plan.checkpoints;
    let n_max = *cps.last().unwrap();
    let summaries = model_statistics(model, &plan.mc.pool, plan.mc.replications, plan.mc.seed, None, |y| {
        let mut s = S::zero();
        let mut up = Vec::with_capacity(cps.len());
        let mut low = Vec::with_capacity(cps.len());
        let mut incr = Vec::new();
        let mut incr_sq = Vec::new();
        let (mut base, mut block_abs, mut block_sq) = (S::zero(), S::zero(), S::zero());
        let mut next_pow = 1usize;
        let (mut trunc_events, mut trunc_last, mut trunc_beyond) = (0, 0, 0);
        let mut ci = 0;
        for (idx, &v) in y[..n_max].iter().enumerate() {
            let n = idx + 1;
            s += v;
            if let Some((levels, bound)) = probe.truncation {
                if v.abs() > levels[idx] {
                    trunc_events += 1;
                    trunc_last = n;
                    if n >= bound {
                        trunc_beyond += 1;
                    }
                }
            }
            if probe.dyadic_blocks {
                if n == next_pow {
                    if n > 1 {
                        incr.push(block_abs);
                        incr_sq.push(block_sq);
                    }
                    base = s;
                    block_abs = S::zero();
                    block_sq = S::zero();
                    next_pow *= 2;
                } else {
                    let d = s - base;
                    block_abs = block_abs.max(d.abs());
                    block_sq = block_sq.max(d * d);
                }
            }
            if ci < cps.len() && cps[ci] == n {
                up.push((s - probe.up_centers[idx]) / probe.norms[idx]);
                low.push((s - probe.low_centers[idx]) / probe.norms[idx]);
                ci += 1;
            }
        }
        PathSummary {
            up,
            low,
            incr,
            incr_sq,
            trunc_events,
            trunc_last,
            trunc_beyond,
        }
    });
    let ids: Vec<String> = plan.mc.pool.selectors().iter().map(|s| s.id()).collect();
    let n_cp = cps.len();
    let mut worst_upper = vec![S::neg_infinity(); n_cp];
    let mut worst_lower = vec![S::infinity(); n_cp];
    let mut worst_abs = vec![S::neg_infinity(); n_cp];
    let mut selector_ids = vec![String::new(); n_cp];
    let n_blocks = summaries[0][0].incr.len();
    let mut incr_worst = vec![S::zero(); n_blocks];
    let (mut trunc_events, mut trunc_last, mut trunc_beyond) = (0, 0, 0);
    for (si, paths) in summaries.iter().enumerate() {
        for p in paths {
            for i in 0..n_cp {
                worst_upper[i] = worst_upper[i].max(p.up[i]);
                worst_lower[i] = worst_lower[i].min(p.low[i]);
                let a = p.up[i].max(-p.low[i]);
                if a > worst_abs[i] {
                    worst_abs[i] = a;
                    selector_ids[i] = ids[si].clone();
                }
            }
            for (w, &v) in incr_worst.iter_mut().zip(&p.incr) {
                *w = w.max(v);
            }
            trunc_events += p.trunc_events;
            trunc_last = trunc_last.max(p.trunc_last);
            trunc_beyond += p.trunc_beyond;
        }
    }
    let incr_mean_sq = (0..n_blocks)
        .map(|b| {
            let samples: Vec<Vec<S>> = summaries
                .iter()
                .map(|paths| paths.iter().map(|p| p.incr_sq[b]).collect())
                .collect();
            let (stats, _) = best_mean(&samples);
            let h = stats.half_width();
            (stats.mean(), (stats.mean() - h, stats.mean() + h))
        })
        .collect();
    Simulated {
        worst_upper,
        worst_lower,
        worst_abs,
        selector_ids,
        incr_worst,
        incr_mean_sq,
        trunc_events,
        trunc_last: (trunc_last > 0).then_some(trunc_last),
        trunc_beyond,
    }
}

fn cumulative<S: Scalar>(terms: &[S]) -> Vec<S> {
    let mut acc = S::zero();
    terms
        .iter()
        .map(|&t| {
            acc += t;
            acc
        })
        .collect()
}

fn max_abs<S: Scalar>(xs: &[S]) -> S {
    xs.iter().fold(S::zero(), |m, &v| m.max(v.abs()))
}

fn mean_zero_condition<S: Scalar>(
    model: &SequenceModel<S>,
    both: bool,
) -> Result<(ConditionResult, Vec<S>, Vec<S>), SllnError> {
    let (up, low) = model.output_means()?;
    let dev = if both {
        max_abs(&up).max(max_abs(&low))
    } else {
        max_abs(&up)
    };
    let tol = S::exact_tolerance();
    let name = if both { "mean_zero_both_sides" } else { "mean_zero" };
    let c = ConditionResult::new(
        name,
        dev <= tol,
        dev.to_f64_lossy(),
        tol.to_f64_lossy(),
        format!("largest |mean| over outputs is {dev}"),
    );
    Ok((c, up, low))
}

fn summability_condition<S: Scalar>(name: &str, report: &SummabilityReport<S>) -> ConditionResult {
    let bound = report.upper_bound().unwrap_or(S::infinity());
    ConditionResult::new(
        name,
        report.converged(),
        report.total.to_f64_lossy(),
        bound.to_f64_lossy(),
        format!("{:?} on the prefix", report.verdict),
    )
}

/// Strong law for m-dependent sequences with `Ê[X_n] = ε̂[X_n] = 0` and
/// `Σ Ê[X_n^2]/a_n^2 < ∞`.
pub fn run_theorem41<S: Scalar>(
    model: &SequenceModel<S>,
    normalizer: &NormalizerSpec<S>,
    plan: &SllnPlan<S>,
    tail: Option<&TailBound<S>>,
) -> Result<ConvergenceReport<S>, SllnError> {
    validate_plan(model, plan)?;
    let n = model.horizon();
    let norms = normalizer.values(n)?;
    let mut conditions = Vec::new();
    let m = model.m();
    require(
        &mut conditions,
        ConditionResult::new(
            "m_dependent",
            m.is_some(),
            m.map_or(f64::NAN, |m| m as f64),
            f64::NAN,
            format!("{:?}", model.dependence()),
        ),
    )?;
    let (mean, _, _) = mean_zero_condition(model, true)?;
    require(&mut conditions, mean)?;
    let second = model.output_second_moments()?;
    let weights: Vec<S> = norms.iter().map(|&a| S::one() / (a * a)).collect();
    let summ = check_summability(&second, &weights, tail)?;
    require(&mut conditions, summability_condition("summability", &summ))?;
    let zeros = vec![S::zero(); n];
    let sim = simulate(
        model,
        plan,
        &Probe {
            up_centers: &zeros,
            low_centers: &zeros,
            norms: &norms,
            dyadic_blocks: false,
            truncation: None,
        },
    );
    Ok(assemble("thm41", model, plan, &norms, sim, conditions, None, Vec::new()))
}

#[allow(clippy::too_many_arguments)]
fn assemble<S: Scalar>(
    experiment: &'static str,
    _model: &SequenceModel<S>,
    plan: &SllnPlan<S>,
    norms: &[S],
    sim: Simulated<S>,
    conditions: Vec<ConditionResult>,
    truncation: Option<TruncationDiagnostics<S>>,
    blocks: Vec<BlockIncrement<S>>,
) -> ConvergenceReport<S> {
    let verdict = verdict(&sim.worst_abs, plan.band);
    ConvergenceReport {
        experiment,
        checkpoints: plan.checkpoints.clone(),
        normalizers: plan.checkpoints.iter().map(|&n| norms[n - 1]).collect(),
        worst_upper: sim.worst_upper,
        worst_lower: sim.worst_lower,
        worst_abs: sim.worst_abs,
        selector_ids: sim.selector_ids,
        band: plan.band,
        conditions,
        verdict,
        truncation,
        blocks,
        replications: plan.mc.replications,
        seed: plan.mc.seed,
    }
}

/// The random variable `Z` that dominates the tails of the sequence.
#[derive(Debug, Clone)]
pub struct Dominator<S> {
    pub model: CapacityModel<S>,
    pub z: RandomFunctional<S>,
    /// The constant `C`.
    pub c: S,
    pub t_grid: Vec<S>,
}

/// Truncation levels `2^j k^{1/r}`, `j = 0..=6`.
fn extended_schedule<S: Scalar>(level: S) -> Vec<S> {
    (0..=6).map(|j| level * S::from_f64_lossy(2f64.powi(j))).collect()
}

/// Strong law for blockwise m-dependent sequences under tail domination,
/// normalized by `n^{1/r} Φ(n)` and centered by extended expectations.
pub fn run_theorem42<S: Scalar>(
    model: &SequenceModel<S>,
    dominator: &Dominator<S>,
    r: S,
    plan: &SllnPlan<S>,
) -> Result<ConvergenceReport<S>, SllnError> {
    validate_plan(model, plan)?;
    check_order(r)?;
    let n = model.horizon();
    let mut conditions = Vec::new();
    let blocks = match model.dependence() {
        Dependence::Blockwise { blocks, .. } => Some(blocks.clone()),
        _ => None,
    };
    require(
        &mut conditions,
        ConditionResult::new(
            "blockwise_m_dependent",
            blocks.is_some(),
            f64::NAN,
            f64::NAN,
            format!("{:?}", model.dependence()),
        ),
    )?;
    let blocks = blocks.unwrap();
    let dom = check_domination(
        model,
        &dominator.model,
        &dominator.z,
        dominator.c,
        &dominator.t_grid,
        r,
        &plan.checkpoints,
    )?;
    let worst_gap = dom
        .worst_lhs
        .iter()
        .zip(&dom.rhs)
        .map(|(&l, &r)| l - r)
        .fold(S::neg_infinity(), S::max);
    require(
        &mut conditions,
        ConditionResult::new(
            "tail_domination",
            dom.pass.iter().all(|&p| p),
            worst_gap.to_f64_lossy(),
            0.0,
            "max over t of (1/n) Σ V(|X_k|>t) - C V(|Z|>t)",
        ),
    )?;
    let moment = dom.z_moment.moment.value + dom.z_moment.moment.error_bound;
    require(
        &mut conditions,
        ConditionResult::new(
            "z_moment_finite",
            moment.is_finite(),
            moment.to_f64_lossy(),
            f64::INFINITY,
            format!("C_V[|Z|^{r}]"),
        ),
    )?;
    let norms = NormalizerSpec::PowerPhi { r, blocks }.values(n)?;

    let survivals = output_abs_survivals(model)?;
    let bounds: Vec<S> = survivals
        .iter()
        .map(|s| s.points().last().copied().unwrap_or_else(S::zero).abs())
        .collect();
    let levels: Vec<S> = (1..=n).map(|k| root(k, r)).collect();
    let bound_index = (1..=n).filter(|&k| bounds[k - 1] > levels[k - 1]).max().map_or(1, |k| k + 1);

    let (up, low) = model.output_means()?;
    let oracle = model.oracle();
    let h = model.driver_horizon();
    let tol = S::from_f64_lossy(1e-6);
    let mut ext_up = up.clone();
    let mut ext_low = low.clone();
    let mut trunc_up = up.clone();
    for k in 1..bound_index.min(n + 1) {
        if bounds[k - 1] <= levels[k - 1] {
            continue;
        }
        let f = model.output(k);
        let schedule = extended_schedule(levels[k - 1]);
        let hi = oracle.extended(f, h, &schedule, tol)?;
        let lo = oracle.extended_lower(f, h, &schedule, tol)?;
        let (ExtendedExpectation::Converged(hi), ExtendedExpectation::Converged(lo)) = (hi, lo) else {
            require(
                &mut conditions,
                ConditionResult::new(
                    "extended_expectation",
                    false,
                    k as f64,
                    f64::NAN,
                    format!("truncated expectations of X_{k} do not settle"),
                ),
            )?;
            unreachable!();
        };
        ext_up[k - 1] = hi;
        ext_low[k - 1] = lo;
        trunc_up[k - 1] = oracle.upper(&truncate(f, levels[k - 1])?, h)?;
    }
    conditions.push(ConditionResult::new(
        "extended_expectation",
        true,
        0.0,
        tol.to_f64_lossy(),
        "truncation schedule 2^j k^(1/r), j = 0..6",
    ));

    let up_centers = cumulative(&ext_up);
    let low_centers = cumulative(&ext_low);
    let sim = simulate(
        model,
        plan,
        &Probe {
            up_centers: &up_centers,
            low_centers: &low_centers,
            norms: &norms,
            dyadic_blocks: false,
            truncation: Some((&levels, bound_index)),
        },
    );
    let gaps: Vec<S> = ext_up.iter().zip(&trunc_up).map(|(&e, &t)| e - t).collect();
    let gap_sums = cumulative(&gaps);
    let drift = plan
        .checkpoints
        .iter()
        .map(|&n| gap_sums[n - 1] / root(n, r))
        .collect();
    let truncation = TruncationDiagnostics {
        r,
        bound_index,
        events: sim.trunc_events,
        last_event: sim.trunc_last,
        events_beyond_bound: sim.trunc_beyond,
        drift,
    };
    Ok(assemble(
        "thm42",
        model,
        plan,
        &norms,
        sim,
        conditions,
        Some(truncation),
        Vec::new(),
    ))
}

/// Strong law for orthogonal sequences with `Ê[X_n] = 0` and
/// `Σ σ_k^2 (log2 k)^2 / k^2 < ∞`.
pub fn run_theorem43<S: Scalar>(
    model: &SequenceModel<S>,
    plan: &SllnPlan<S>,
    tail: Option<&TailBound<S>>,
) -> Result<ConvergenceReport<S>, SllnError> {
    run_orthogonal("thm43", model, plan, tail, None)
}

/// As [`run_theorem43`] for quasi-orthogonal sequences; block bounds are
/// inflated by `1 + 2 Σ_{j>=1} f(j)`.
pub fn run_corollary41<S: Scalar>(
    model: &SequenceModel<S>,
    f: &[S],
    plan: &SllnPlan<S>,
    tail: Option<&TailBound<S>>,
) -> Result<ConvergenceReport<S>, SllnError> {
    run_orthogonal("cor41", model, plan, tail, Some(f))
}

/// Weights `(log2 k)^2 / k^2`.
pub fn orthogonal_weights<S: Scalar>(n: usize) -> Vec<S> {
    (1..=n)
        .map(|k| {
            let kk = S::from_usize_lossy(k);
            let l = kk.log2();
            l * l / (kk * kk)
        })
        .collect()
}

fn run_orthogonal<S: Scalar>(
    experiment: &'static str,
    model: &SequenceModel<S>,
    plan: &SllnPlan<S>,
    tail: Option<&TailBound<S>>,
    quasi_f: Option<&[S]>,
) -> Result<ConvergenceReport<S>, SllnError> {
    validate_plan(model, plan)?;
    let n = model.horizon();
    let tol = S::exact_tolerance();
    let mut conditions = Vec::new();
    let cert = model.certificate();
    require(
        &mut conditions,
        ConditionResult::new(
            "certificate_present",
            cert.is_some(),
            f64::NAN,
            f64::NAN,
            "model must carry an orthogonality certificate",
        ),
    )?;
    let cert = cert.unwrap();
    require(
        &mut conditions,
        ConditionResult::new(
            "orthogonality",
            cert.passes(),
            cert.max_violation.to_f64_lossy(),
            tol.to_f64_lossy(),
            format!("{} pairs checked, {} skipped", cert.pairs.len(), cert.skipped),
        ),
    )?;
    let inflation = match quasi_f {
        None => {
            let beyond = cert.f.iter().skip(1).copied().fold(S::zero(), S::max);
            require(
                &mut conditions,
                ConditionResult::new(
                    "f_vanishes_off_diagonal",
                    beyond <= tol,
                    beyond.to_f64_lossy(),
                    tol.to_f64_lossy(),
                    "certificate is quasi-orthogonal only",
                ),
            )?;
            S::one()
        }
        Some(f) => {
            let excess = cert
                .f
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &v)| v - f.get(j).copied().unwrap_or_else(S::zero))
                .fold(S::zero(), S::max);
            require(
                &mut conditions,
                ConditionResult::new(
                    "f_covers_certificate",
                    excess <= tol,
                    excess.to_f64_lossy(),
                    tol.to_f64_lossy(),
                    "certificate f must not exceed the supplied f",
                ),
            )?;
            let two = S::one() + S::one();
            S::one() + two * f.iter().skip(1).copied().sum::<S>()
        }
    };
    let (mean, _, low) = mean_zero_condition(model, false)?;
    require(&mut conditions, mean)?;
    let second = model.output_second_moments()?;
    let weights = orthogonal_weights::<S>(n);
    let summ = check_summability(&second, &weights, tail)?;
    require(&mut conditions, summability_condition("summability", &summ))?;

    let norms = NormalizerSpec::Linear.values(n)?;
    let zeros = vec![S::zero(); n];
    let low_centers = cumulative(&low);
    let sim = simulate(
        model,
        plan,
        &Probe {
            up_centers: &zeros,
            low_centers: &low_centers,
            norms: &norms,
            dyadic_blocks: true,
            truncation: None,
        },
    );
    let summands: Vec<S> = second.iter().zip(&weights).map(|(&s, &w)| s * w).collect();
    let tail_value = summ.tail_bound.unwrap_or_else(S::zero);
    let eps = epsilon_sequence(&summands, tail_value)?;
    let sigma_sums = cumulative(&second);
    let blocks = sim
        .incr_worst
        .iter()
        .zip(&sim.incr_mean_sq)
        .enumerate()
        .map(|(k, (&worst, &(ms, ci)))| {
            let lo = 1usize << k;
            let hi = lo * 2;
            let block_sigma = sigma_sums[hi - 1] - sigma_sums[lo - 1];
            let rm_bound = inflation * rademacher_mensov_factor::<S>(lo) * block_sigma;
            BlockIncrement {
                k: k as u32,
                worst: worst / S::from_usize_lossy(hi),
                mean_square: ms,
                mean_square_ci: ci,
                rm_bound,
                epsilon: eps.ratios[lo - 1].sqrt(),
                pass: ms <= rm_bound + tol,
            }
        })
        .collect();
    let mut report = assemble(experiment, model, plan, &norms, sim, conditions, None, blocks);
    report.conditions.push(ConditionResult::new(
        "inflation",
        true,
        inflation.to_f64_lossy(),
        f64::NAN,
        "factor applied to block maximal bounds",
    ));
    Ok(report)
}

/// Numerical Kronecker step: if `R_n = Σ_{k<=n} x_k/a_k` settles, then
/// `(1/a_n) Σ_{k<=n} x_k` is small.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerReport<S> {
    /// `R_1..R_n`.
    pub series: Vec<S>,
    /// `(1/a_k) Σ_{j<=k} x_j`.
    pub averages: Vec<S>,
    /// `max |R_j - R_l|` over the last half of the prefix.
    pub oscillation: S,
    pub tolerance: S,
    pub hypothesis_met: bool,
    /// `min_m [ (a_m/a_n) max_{j<m} |R_n - R_j| + max_{m<=j<n} |R_n - R_j| ]`.
    pub bound: S,
    /// `Some(|average_n| <= bound)` when the hypothesis holds.
    pub conclusion: Option<bool>,
}

pub fn kronecker_check<S: Scalar>(x: &[S], a: &[S], tol: S) -> Result<KroneckerReport<S>, SllnError> {
    let n = x.len();
    if n == 0 || a.len() != n {
        return Err(SllnError::InvalidInput("x and a must be nonempty and of equal length".into()));
    }
    if a.iter().any(|&v| !(v > S::zero())) || a.windows(2).any(|w| w[1] < w[0]) {
        return Err(SllnError::InvalidInput("a must be positive and nondecreasing".into()));
    }
    let series = cumulative(&x.iter().zip(a).map(|(&x, &a)| x / a).collect::<Vec<_>>());
    let sums = cumulative(x);
    let averages: Vec<S> = sums.iter().zip(a).map(|(&s, &a)| s / a).collect();
    let last_half = &series[n / 2..];
    let hi = last_half.iter().copied().fold(S::neg_infinity(), S::max);
    let lo = last_half.iter().copied().fold(S::infinity(), S::min);
    let oscillation = hi - lo;
    let hypothesis_met = oscillation < tol;

    // R_0 = 0 precedes the series
    let rn = series[n - 1];
    let dev = |j: usize| if j == 0 { rn.abs() } else { (rn - series[j - 1]).abs() };
    let mut suffix = vec![S::zero(); n + 1];
    for j in (0..n).rev() {
        suffix[j] = suffix[j + 1].max(dev(j));
    }
    let mut prefix = S::zero();
    let mut bound = S::infinity();
    for m in 1..=n {
        prefix = prefix.max(dev(m - 1));
        let v = a[m - 1] / a[n - 1] * prefix + suffix[m];
        bound = bound.min(v);
    }
    let slack = S::exact_tolerance() * (S::one() + bound);
    let conclusion = hypothesis_met.then(|| averages[n - 1].abs() <= bound + slack);
    Ok(KroneckerReport {
        series,
        averages,
        oscillation,
        tolerance: tol,
        hypothesis_met,
        bound,
        conclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::ScenarioSet;
    use crate::models::{
        make_blockwise_m_dependent, make_m_dependent, make_orthogonal, orthogonality_certificate,
        Glue, OrthogonalScheme,
    };
    use crate::selector::SelectorPool;

    fn signs() -> ScenarioSet<f64> {
        ScenarioSet::symmetric_signs(&[1.0]).unwrap()
    }

    fn plan(driver: &ScenarioSet<f64>, checkpoints: Vec<usize>, reps: usize, band: f64) -> SllnPlan<f64> {
        SllnPlan {
            mc: McPlan {
                replications: reps,
                seed: 5,
                pool: SelectorPool::for_partial_sums(driver, 8, 5),
            },
            checkpoints,
            band,
        }
    }

    #[test]
    fn summability_examples() {
        let n = 10_000;
        let ones = vec![1.0; n];
        let inv_sq: Vec<f64> = (1..=n).map(|k| 1.0 / (k * k) as f64).collect();
        let r = check_summability(&ones, &inv_sq, None).unwrap();
        assert_eq!(r.verdict, Summability::Heuristic);
        assert!((r.total - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-4);
        let ks: Vec<f64> = (1..=n).map(|k| k as f64).collect();
        let r = check_summability(&ks, &inv_sq, None).unwrap();
        assert_eq!(r.verdict, Summability::NotConvergedOnPrefix);
        let r = check_summability(&vec![0.0; 10], &vec![1.0; 10], None).unwrap();
        assert_eq!(r.verdict, Summability::Converged);
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn power_log_tail_dominates_brute_force() {
        let tail = TailBound::PowerLog { coefficient: 1.0f64, p: 2.0, q: 0 };
        // Σ_{k>100} k^-2 < 1/100
        let b = tail.after(100).unwrap();
        assert!((b - 0.01).abs() < 1e-12);
        let tail = TailBound::PowerLog { coefficient: 1.0, p: 1.5, q: 2 };
        let n = 64;
        let brute: f64 = (n + 1..2_000_000)
            .map(|k| (k as f64).powf(-1.5) * (k as f64).log2().powi(2))
            .sum();
        assert!(tail.after(n).unwrap() >= brute);
        assert!(tail.after(2).is_err());
    }

    #[test]
    fn normalizers() {
        let blocks = BlockStructure::powers_of_two(64).unwrap();
        let v = NormalizerSpec::PowerPhi { r: 1.0, blocks }.values(64).unwrap();
        assert_eq!(v, (1..=64).map(|n| n as f64).collect::<Vec<_>>());
        assert!(NormalizerSpec::Custom(vec![0.5, 1.0]).values(2).is_err());
        assert!(NormalizerSpec::Custom(vec![2.0, 1.0]).values(2).is_err());
        let unit = BlockStructure::unit(8).unwrap();
        assert!(NormalizerSpec::PowerPhi { r: 2.0, blocks: unit }.values(8).is_err());
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(verdict(&[0.4, 0.2, 0.1, 0.05], 0.1), Verdict::Consistent);
        assert_eq!(verdict(&[0.4, 0.2, 0.3, 0.05], 0.1), Verdict::Inconclusive);
        assert_eq!(verdict(&[0.1, 0.2, 0.3], 0.1), Verdict::Violated);
        assert_eq!(verdict(&[0.0, 0.0, 0.0], 0.1), Verdict::Consistent);
    }

    #[test]
    fn domination_identical_laws() {
        let model = make_m_dependent(signs(), &RandomFunctional::coordinate(1), 0, 16).unwrap();
        let z_model = CapacityModel::Discrete { driver: signs(), horizon: 1 };
        let z = RandomFunctional::coordinate(1);
        let d = check_domination(&model, &z_model, &z, 1.0, &[0.5, 1.5], 1.0, &[4, 16]).unwrap();
        assert!(d.passes());
        for (l, r) in d.worst_lhs.iter().zip(&d.rhs) {
            assert!((l - r).abs() < 1e-12);
        }
        assert_eq!(d.rhs[1], 0.0);
        let heavy = ScenarioSet::symmetric_signs(&[2.0]).unwrap();
        let z_model = CapacityModel::Discrete { driver: heavy, horizon: 1 };
        let d = check_domination(&model, &z_model, &z, 1.0, &[0.5, 1.0, 1.5], 1.5, &[16]).unwrap();
        assert!(d.passes());
        assert!(d.z_moment.moment.value > 2.0);
    }

    #[test]
    fn telescoping_window_is_bounded() {
        let diff = RandomFunctional::window(1, 2, "diff", |x| x[1] - x[0]);
        let model = make_m_dependent(signs(), &diff, 1, 256).unwrap();
        let p = plan(model.driver(), vec![64, 128, 256], 50, 0.05);
        let r = run_theorem41(&model, &NormalizerSpec::Linear, &p, None).unwrap();
        for (&w, &n) in r.worst_abs.iter().zip(&r.checkpoints) {
            assert!(w <= 2.0 / n as f64 + 1e-15);
        }
        assert_eq!(r.verdict, Verdict::Consistent);
    }

    #[test]
    fn zero_model_and_unmet_hypotheses() {
        let zero = ScenarioSet::point_masses(&[0.0]).unwrap();
        let model = make_m_dependent(zero, &RandomFunctional::coordinate(1), 0, 64).unwrap();
        let p = plan(model.driver(), vec![16, 32, 64], 4, 0.01);
        let r = run_theorem41(&model, &NormalizerSpec::Linear, &p, None).unwrap();
        assert_eq!(r.worst_abs, vec![0.0; 3]);
        assert_eq!(r.verdict, Verdict::Consistent);
        let biased = ScenarioSet::point_masses(&[1.0, -1.0]).unwrap();
        let model = make_m_dependent(biased, &RandomFunctional::coordinate(1), 0, 64).unwrap();
        let err = run_theorem41(&model, &NormalizerSpec::Linear, &p, None).unwrap_err();
        assert!(matches!(err, SllnError::HypothesisUnmet { ref condition, .. } if condition == "mean_zero_both_sides"));
        // Σ 1/n with a_n = sqrt(n) diverges
        let model = make_m_dependent(signs(), &RandomFunctional::coordinate(1), 0, 64).unwrap();
        let a = (1..=64).map(|n| (n as f64).sqrt()).collect();
        let err = run_theorem41(&model, &NormalizerSpec::Custom(a), &p, None).unwrap_err();
        assert!(matches!(err, SllnError::HypothesisUnmet { ref condition, .. } if condition == "summability"));
    }

    #[test]
    fn theorem42_reduces_to_linear_normalizer() {
        let blocks = BlockStructure::powers_of_two(256).unwrap();
        let model =
            make_blockwise_m_dependent(&blocks, signs(), &RandomFunctional::coordinate(1), 0, Glue::FreshDriverPerBlock)
                .unwrap();
        let dom = Dominator {
            model: CapacityModel::Discrete { driver: signs(), horizon: 1 },
            z: RandomFunctional::coordinate(1),
            c: 1.0,
            t_grid: vec![0.5, 1.0, 2.0],
        };
        let p = plan(model.driver(), vec![64, 128, 256], 20, 0.5);
        let r = run_theorem42(&model, &dom, 1.0, &p).unwrap();
        assert_eq!(r.normalizers, vec![64.0, 128.0, 256.0]);
        let t = r.truncation.unwrap();
        assert_eq!(t.bound_index, 1);
        assert_eq!(t.events, 0);
        assert_eq!(t.drift, vec![0.0; 3]);
    }

    #[test]
    fn theorem42_truncation_beyond_index() {
        let unit = BlockStructure::unit(256).unwrap();
        let big = ScenarioSet::symmetric_signs(&[3.0]).unwrap();
        let model =
            make_blockwise_m_dependent(&unit, big.clone(), &RandomFunctional::coordinate(1), 0, Glue::FreshDriverPerBlock)
                .unwrap();
        let dom = Dominator {
            model: CapacityModel::Discrete { driver: big, horizon: 1 },
            z: RandomFunctional::coordinate(1),
            c: 1.0,
            t_grid: vec![1.0, 2.0, 4.0],
        };
        let p = plan(model.driver(), vec![64, 128, 256], 10, 1.0);
        let r = run_theorem42(&model, &dom, 1.5, &p).unwrap();
        let t = r.truncation.unwrap();
        // k^{2/3} >= 3 from k = 6 (5.196) on
        assert_eq!(t.bound_index, 6);
        assert!(t.events > 0);
        assert_eq!(t.events_beyond_bound, 0);
        assert!(t.last_event.unwrap() < 6);
        // Φ doubles along the dyadic points for unit blocks
        assert_eq!(r.normalizers[2], 256f64.powf(1.0 / 1.5) * 256.0);
    }

    #[test]
    fn theorem43_signs_and_missing_certificate() {
        let model = make_orthogonal(256, OrthogonalScheme::SymmetricSigns(signs())).unwrap();
        let p = plan(model.driver(), vec![64, 128, 256], 40, 1.0);
        let err = run_theorem43(&model, &p, None).unwrap_err();
        assert!(matches!(err, SllnError::HypothesisUnmet { ref condition, .. } if condition == "certificate_present"));
        let cert = orthogonality_certificate(&model, 300).unwrap();
        let model = model.with_certificate(cert);
        let r = run_theorem43(&model, &p, None).unwrap();
        assert_eq!(r.blocks.len(), 8);
        assert!(r.blocks.iter().all(|b| b.pass));
        let f = [1.0, 0.0];
        let q = run_corollary41(&model, &f, &p, None).unwrap();
        assert_eq!(q.worst_abs, r.worst_abs);
        assert_eq!(q.blocks, r.blocks);
    }

    #[test]
    fn kronecker_examples() {
        let n = 10_000;
        let x: Vec<f64> = (1..=n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / k as f64).collect();
        let a: Vec<f64> = (1..=n).map(|k| k as f64).collect();
        let r = kronecker_check(&x, &a, 1e-6).unwrap();
        assert!(r.hypothesis_met);
        assert_eq!(r.conclusion, Some(true));
        assert!(r.averages[n - 1].abs() < 1e-4);
        let r = kronecker_check(&vec![0.0; 10], &a[..10], 1e-6).unwrap();
        assert_eq!(r.averages[9], 0.0);
        let r = kronecker_check(&a, &a, 1e-6).unwrap();
        assert!(!r.hypothesis_met);
        assert_eq!(r.conclusion, None);
    }

    #[test]
    fn symmetric_runs_mirror_under_sign_flip() {
        let m1 = RandomFunctional::window(1, 2, "avg", |x: &[f64]| (x[0] + x[1]) / 2.0);
        let model = make_m_dependent(signs(), &m1, 1, 128).unwrap();
        let neg = make_m_dependent(signs(), &m1.neg(), 1, 128).unwrap();
        let p = SllnPlan {
            mc: McPlan {
                replications: 30,
                seed: 9,
                pool: SelectorPool::new(vec![crate::selector::Selector::Constant(0)]),
            },
            checkpoints: vec![32, 64, 128],
            band: 1.0,
        };
        let a = run_theorem41(&model, &NormalizerSpec::Linear, &p, None).unwrap();
        let b = run_theorem41(&neg, &NormalizerSpec::Linear, &p, None).unwrap();
        for i in 0..3 {
            assert_eq!(a.worst_upper[i], -b.worst_lower[i]);
            assert_eq!(a.worst_lower[i], -b.worst_upper[i]);
        }
    }
}
