//! Dispatch from a validated config to report rows.

use rand::Rng;
use sublaw_core::capacity::{Interval, IntervalSet, Rational};
use sublaw_core::inequality::{normalized_exceedance, relative_x_grid};
use sublaw_core::rng::{derive_seed, replication_rng};
use sublaw_core::series::wittmann_step_holds;
use sublaw_core::slln::TailBound;
use sublaw_core::{
    choquet_integral, epsilon_sequence, make_blockwise_m_dependent, make_independent_sequence,
    make_m_dependent, make_orthogonal, quasi_orthogonal_certificate, run_corollary41, run_theorem41,
    run_theorem42, run_theorem43, upper_capacity, verify_kolmogorov_maximal, verify_rademacher_mensov,
    verify_truncation_bound, wittmann_subsequence, BlockStructure, CapacityKind, CapacityModel,
    ContinuousModel, ConvergenceReport, DiscreteDistribution, Dominator, ExactOracle, GridSpacing,
    MeasurableEvent, McPlan, NormalizerSpec, OrthogonalScheme, RandomFunctional, ScenarioSet,
    SelectorPool, SequenceModel, SllnError, SllnPlan, StepSurvival, SurvivalFunction, TruncationMode,
};

use crate::config::{BlocksSpec, Experiment, ExperimentConfig, ModelKind, ModelSpec, NormalizerChoice};
use crate::instances::{axiom_instances, random_functional, random_scenarios};
use crate::registry;
use crate::report::ReportRow;

/// Tolerance for identities that hold exactly in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Pass,
    HypothesisUnmet(String),
    Violated,
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::HypothesisUnmet(_) => 2,
            Status::Violated => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub rows: Vec<ReportRow>,
    pub status: Status,
}

impl Outcome {
    fn from_rows(rows: Vec<ReportRow>) -> Self {
        let status = if rows.iter().all(|r| r.pass) {
            Status::Pass
        } else {
            Status::Violated
        };
        Self { rows, status }
    }
}

/// A run that could not produce rows: the config describes something the
/// library rejects.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct RunError(pub String);

fn fail<E: std::fmt::Display>(e: E) -> RunError {
    RunError(e.to_string())
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    match cfg.experiment {
        Experiment::Axioms => Ok(Outcome::from_rows(axioms(cfg)?)),
        Experiment::Capacity => Ok(Outcome::from_rows(capacity(cfg)?)),
        Experiment::Choquet => Ok(Outcome::from_rows(choquet(cfg)?)),
        Experiment::Maximal => Ok(Outcome::from_rows(maximal(cfg)?)),
        Experiment::RademacherMensov => Ok(Outcome::from_rows(rademacher_mensov(cfg)?)),
        Experiment::SeqLemma => Ok(Outcome::from_rows(seq_lemma(cfg)?)),
        Experiment::Thm41 | Experiment::Thm42 | Experiment::Thm43 | Experiment::Cor41 => convergence(cfg),
    }
}

// ---- models ----

fn blocks_of(spec: &ModelSpec) -> Result<BlockStructure, RunError> {
    let h = spec.horizon;
    match &spec.blocks {
        BlocksSpec::PowersOfTwo => BlockStructure::powers_of_two(h),
        BlocksSpec::Unit => BlockStructure::unit(h),
        BlocksSpec::Regular(l) => BlockStructure::regular(*l, h),
        BlocksSpec::Cuts(c) => BlockStructure::new(c.clone(), h),
    }
    .map_err(fail)
}

/// Builds the configured model; certificates are attached separately.
pub fn build_model(spec: &ModelSpec) -> Result<SequenceModel<f64>, RunError> {
    let theta = spec.scenarios.clone();
    let g = || registry::window::<f64>(&spec.window, spec.m).map_err(RunError);
    let model = match spec.kind {
        ModelKind::Independent => make_independent_sequence(theta, spec.horizon),
        ModelKind::MDependent => make_m_dependent(theta, &g()?, spec.m, spec.horizon),
        ModelKind::Blockwise => make_blockwise_m_dependent(&blocks_of(spec)?, theta, &g()?, spec.m, spec.glue),
        ModelKind::Orthogonal => {
            let scheme = match spec.scheme.as_str() {
                "haar_like" => OrthogonalScheme::HaarLike(theta),
                _ => OrthogonalScheme::SymmetricSigns(theta),
            };
            make_orthogonal(spec.horizon, scheme)
        }
    }
    .map_err(fail)?;
    match spec.scale_exponent {
        None => Ok(model),
        Some(e) => {
            let scales: Vec<f64> = (1..=spec.horizon).map(|k| (k as f64).powf(e)).collect();
            model.with_scales(&scales).map_err(fail)
        }
    }
}

fn with_certificate(model: SequenceModel<f64>, f: &[f64], pairs: usize) -> Result<SequenceModel<f64>, RunError> {
    let cert = quasi_orthogonal_certificate(&model, f, pairs).map_err(fail)?;
    Ok(model.with_certificate(cert))
}

fn pool_for(driver: &ScenarioSet<f64>, size: usize, seed: u64) -> SelectorPool<f64> {
    SelectorPool::for_partial_sums(driver, size, seed)
}

// ---- strong-law runs ----

fn convergence(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let exp = cfg.experiment.id();
    let spec = cfg.model.as_ref().expect("validated");
    let mut model = build_model(spec)?;
    let plan = SllnPlan {
        mc: McPlan {
            replications: cfg.plan.replications,
            seed: cfg.seed,
            pool: pool_for(model.driver(), cfg.plan.selector_pool_size, cfg.seed),
        },
        checkpoints: cfg.plan.checkpoints.clone(),
        band: cfg.band.expect("validated"),
    };
    let mut extra = Vec::new();
    let result = match cfg.experiment {
        Experiment::Thm41 => {
            let normalizer = match &cfg.normalizer {
                NormalizerChoice::Linear => NormalizerSpec::Linear,
                NormalizerChoice::Custom(v) => NormalizerSpec::Custom(v.clone()),
                NormalizerChoice::Formula(f) => {
                    NormalizerSpec::Custom(registry::normalizer(f, spec.horizon).map_err(RunError)?)
                }
                NormalizerChoice::PowerPhi => NormalizerSpec::PowerPhi {
                    r: cfg.r,
                    blocks: blocks_of(spec)?,
                },
            };
            run_theorem41(&model, &normalizer, &plan, cfg.tail.as_ref())
        }
        Experiment::Thm42 => {
            let z = cfg.z.as_ref().expect("validated");
            let dominator = Dominator {
                model: CapacityModel::Discrete {
                    driver: z.scenarios.clone(),
                    horizon: z.m + 1,
                },
                z: registry::window(&z.window, z.m).map_err(RunError)?,
                c: z.c,
                t_grid: z.t_grid.clone(),
            };
            let dom = sublaw_core::check_domination(
                &model,
                &dominator.model,
                &dominator.z,
                dominator.c,
                &dominator.t_grid,
                cfg.r,
                &cfg.plan.checkpoints,
            );
            if let Ok(d) = &dom {
                for (i, &t) in d.t_grid.iter().enumerate() {
                    extra.push(
                        ReportRow::check(exp, d.worst_n[i], format!("domination[t={t}]"), d.worst_lhs[i], d.rhs[i] + EXACT_TOL, cfg.seed),
                    );
                }
                extra.push(ReportRow::record(exp, 0, format!("z_moment[r={}]", cfg.r), d.z_moment.moment.value, cfg.seed));
            }
            run_theorem42(&model, &dominator, cfg.r, &plan)
        }
        Experiment::Thm43 => {
            model = with_certificate(model, &[1.0], spec.certificate_pairs)?;
            run_theorem43(&model, &plan, cfg.tail.as_ref())
        }
        Experiment::Cor41 => {
            let f = spec.quasi_f.clone().expect("validated");
            model = with_certificate(model, &f, spec.certificate_pairs)?;
            run_corollary41(&model, &f, &plan, cfg.tail.as_ref())
        }
        _ => unreachable!("not a convergence run"),
    };
    match result {
        Ok(report) => {
            let mut rows = convergence_rows(&report, cfg.seed);
            rows.extend(extra);
            Ok(Outcome::from_rows(rows))
        }
        Err(SllnError::HypothesisUnmet {
            condition,
            conditions,
            ..
        }) => {
            let mut rows: Vec<ReportRow> = conditions.iter().map(|c| condition_row(exp, c, cfg.seed)).collect();
            rows.extend(extra);
            Ok(Outcome {
                rows,
                status: Status::HypothesisUnmet(condition),
            })
        }
        Err(e) => Err(fail(e)),
    }
}

fn condition_row(exp: &str, c: &sublaw_core::ConditionResult, seed: u64) -> ReportRow {
    let name = format!("condition:{}", c.name);
    let faithful = c.value.is_finite() && c.bound.is_finite() && (c.value <= c.bound) == c.passed;
    if c.passed && c.value.is_finite() && c.bound.is_nan() {
        // informational: a quantity with no bound of its own
        ReportRow::record(exp, 0, name, c.value, seed)
    } else if faithful {
        ReportRow::check(exp, 0, name, c.value, c.bound, seed)
    } else {
        ReportRow::check(exp, 0, name, if c.passed { 0.0 } else { 1.0 }, 0.0, seed)
    }
}

/// Rows of a finished convergence run. `worst_abs` at the final checkpoint
/// is checked against the band, the last two steps against their
/// predecessors, and the final value against the first.
pub fn convergence_rows(report: &ConvergenceReport<f64>, seed: u64) -> Vec<ReportRow> {
    let exp = report.experiment;
    let mut rows: Vec<ReportRow> = report.conditions.iter().map(|c| condition_row(exp, c, seed)).collect();
    let k = report.checkpoints.len();
    for (i, &n) in report.checkpoints.iter().enumerate() {
        let w = report.worst_abs[i];
        rows.push(ReportRow::record(exp, n, "normalizer", report.normalizers[i], seed));
        rows.push(ReportRow::record(exp, n, "worst_upper", report.worst_upper[i], seed));
        rows.push(ReportRow::record(exp, n, "neg_worst_lower", -report.worst_lower[i], seed));
        let sel = report.selector_ids[i].clone();
        if i + 1 == k {
            rows.push(ReportRow::check(exp, n, "worst_abs", w, report.band, seed).with_selector(sel.clone()));
            rows.push(ReportRow::check(exp, n, "worst_abs_vs_first", w, report.worst_abs[0], seed).with_selector(sel.clone()));
        } else {
            rows.push(ReportRow::record(exp, n, "worst_abs", w, seed).with_selector(sel.clone()));
        }
        if i >= 1 && i + 3 > k {
            rows.push(
                ReportRow::check(exp, n, "worst_abs_decrease", w, report.worst_abs[i - 1], seed).with_selector(sel),
            );
        }
    }
    if let Some(t) = &report.truncation {
        rows.push(ReportRow::check(exp, t.bound_index, "truncation_events_beyond_index", t.events_beyond_bound as f64, 0.0, seed));
        rows.push(ReportRow::record(exp, t.last_event.unwrap_or(0), "truncation_events", t.events as f64, seed));
        for (&n, &d) in report.checkpoints.iter().zip(&t.drift) {
            rows.push(ReportRow::record(exp, n, "drift", d, seed));
        }
    }
    let eps_first = report.blocks.first().map(|b| b.epsilon);
    for b in &report.blocks {
        let n = 1usize << (b.k + 1);
        rows.push(
            ReportRow::check(exp, n, "block_mean_square", b.mean_square, b.rm_bound, seed)
                .with_ci(b.mean_square_ci.0, b.mean_square_ci.1),
        );
        rows.push(ReportRow::record(exp, n, "block_increment", b.worst, seed));
        rows.push(ReportRow::check(exp, n, "block_epsilon", b.epsilon, eps_first.unwrap_or(b.epsilon), seed));
    }
    let consistent = report.verdict == sublaw_core::Verdict::Consistent;
    rows.push(ReportRow::check(
        exp,
        *report.checkpoints.last().unwrap_or(&0),
        format!("verdict:{}", report.verdict.as_str()),
        if consistent { 0.0 } else { 1.0 },
        0.0,
        seed,
    ));
    rows
}

// ---- exact suites ----

/// Largest violation of each axiom over the instance set.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AxiomViolations {
    pub monotonicity: f64,
    pub constant_preserving: f64,
    pub sub_additivity: f64,
    pub positive_homogeneity: f64,
    pub cash_translatability: f64,
    pub lower_below_upper: f64,
    /// `|Ê[Σ X_i] - Σ Ê[X_i]|` on the same drivers.
    pub independence_additivity: f64,
}

pub fn axiom_violations(seed: u64, count: usize) -> Result<AxiomViolations, RunError> {
    let mut v = AxiomViolations::default();
    for inst in axiom_instances(seed, count) {
        let o = ExactOracle::new(&inst.driver);
        let h = inst.horizon;
        let up = |f: &RandomFunctional<f64>| o.upper(f, h).map_err(fail);
        let ef = up(&inst.f)?;
        let eg = up(&inst.g)?;
        let dominating = inst.f.add(&inst.g.abs());
        v.monotonicity = v.monotonicity.max(ef - up(&dominating)?);
        let c = RandomFunctional::constant(inst.constant);
        v.constant_preserving = v.constant_preserving.max((o.upper(&c, 1).map_err(fail)? - inst.constant).abs());
        v.sub_additivity = v.sub_additivity.max(up(&inst.f.add(&inst.g))? - ef - eg);
        v.positive_homogeneity = v
            .positive_homogeneity
            .max((up(&inst.f.scale(inst.lambda))? - inst.lambda * ef).abs());
        v.cash_translatability = v
            .cash_translatability
            .max((up(&inst.f.add_constant(inst.constant))? - ef - inst.constant).abs());
        v.lower_below_upper = v.lower_below_upper.max(o.lower(&inst.f, h).map_err(fail)? - ef);
        let sum = o.upper(&RandomFunctional::partial_sum(1, h), h).map_err(fail)?;
        let mut parts = 0.0;
        for i in 1..=h {
            parts += o.upper(&RandomFunctional::coordinate(i), h).map_err(fail)?;
        }
        v.independence_additivity = v.independence_additivity.max((sum - parts).abs());
    }
    Ok(v)
}

fn axioms(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>, RunError> {
    let n = cfg.suite.instances;
    let v = axiom_violations(cfg.seed, n)?;
    let exp = "axioms";
    let s = cfg.seed;
    Ok(vec![
        ReportRow::check(exp, n, "monotonicity", v.monotonicity.max(0.0), EXACT_TOL, s),
        ReportRow::check(exp, n, "constant_preserving", v.constant_preserving, EXACT_TOL, s),
        ReportRow::check(exp, n, "sub_additivity", v.sub_additivity.max(0.0), EXACT_TOL, s),
        ReportRow::check(exp, n, "positive_homogeneity", v.positive_homogeneity, EXACT_TOL, s),
        ReportRow::check(exp, n, "cash_translatability", v.cash_translatability, EXACT_TOL, s),
        ReportRow::check(exp, n, "lower_below_upper", v.lower_below_upper.max(0.0), EXACT_TOL, s),
        ReportRow::check(exp, n, "independence_additivity", v.independence_additivity, 0.0, s),
    ])
}

fn closed(a: i64, b: i64) -> MeasurableEvent<f64> {
    let r = Rational::from_integer;
    MeasurableEvent::intervals(IntervalSet::single(Interval::closed(r(a), r(b))))
}

/// Worst slack `min(rhs - lhs)` of the exact truncation bound over random
/// instances, `c_values` levels each.
pub fn truncation_min_slack(seed: u64, count: usize, c_values: usize) -> Result<f64, RunError> {
    let mut worst = f64::INFINITY;
    for i in 0..count {
        let mut rng = replication_rng(seed, 0x7C0, i as u64);
        let driver = random_scenarios(&mut rng, 3, 4);
        let horizon = rng.gen_range(1..=3);
        let f = random_functional(&mut rng, horizon, "f");
        let model = CapacityModel::Discrete { driver, horizon };
        let top = c_values.max(2) - 1;
        let grid: Vec<f64> = (0..c_values).map(|k| 3.0 * k as f64 / top as f64).collect();
        let report = verify_truncation_bound(&model, &f, &grid, &TruncationMode::Exact).map_err(fail)?;
        worst = worst.min(report.min_slack());
    }
    Ok(worst)
}

fn capacity(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>, RunError> {
    let exp = "capacity";
    let s = cfg.seed;
    let m = CapacityModel::<f64>::Continuous(ContinuousModel::two_halves());
    let v = |e: &MeasurableEvent<f64>| upper_capacity(&m, e).map_err(fail);
    let mut rows = Vec::new();
    for (label, event, expected) in [
        ("V([0,1])", closed(0, 1), 1.0),
        ("V([1,2])", closed(1, 2), 1.0),
        ("V({1})", closed(1, 1), 0.0),
    ] {
        let value = v(&event)?;
        rows.push(ReportRow::record(exp, 0, label, value, s));
        rows.push(ReportRow::check(exp, 0, format!("abs_error:{label}"), (value - expected).abs(), 0.0, s));
    }
    let whole = v(&closed(0, 2))?;
    rows.push(ReportRow::check(exp, 0, "sub_additivity:V([0,2])-V([0,1])-V([1,2])", whole - 2.0, 0.0, s));
    let low = sublaw_core::lower_capacity(&m, &closed(0, 1)).map_err(fail)?;
    rows.push(ReportRow::check(exp, 0, "lower_minus_upper:[0,1]", low - v(&closed(0, 1))?, 0.0, s));
    let slack = truncation_min_slack(s, cfg.suite.instances, cfg.suite.c_values)?;
    rows.push(ReportRow::check(
        exp,
        cfg.suite.instances * cfg.suite.c_values,
        "truncation_bound_neg_slack",
        -slack,
        EXACT_TOL,
        s,
    ));
    Ok(rows)
}

/// `(max |step - adaptive grid|, max |singleton Choquet - mean|,
/// max (|step - uniform grid| - error bound))` over random instances.
pub fn choquet_discrepancies(seed: u64, count: usize, points: usize) -> Result<(f64, f64, f64), RunError> {
    let (mut grid_gap, mut mean_gap, mut bound_gap) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for i in 0..count {
        let mut rng = replication_rng(seed, 0xC40, i as u64);
        let theta = random_scenarios(&mut rng, 3, 4);
        let step = StepSurvival::from_scenarios(&theta);
        let exact = step.integral();
        let adaptive = choquet_integral(&SurvivalFunction::Grid(step.to_grid(points, GridSpacing::Adaptive).map_err(fail)?))
            .map_err(fail)?;
        grid_gap = grid_gap.max((exact - adaptive.value).abs());
        let uniform = choquet_integral(&SurvivalFunction::Grid(step.to_grid(points, GridSpacing::Uniform).map_err(fail)?))
            .map_err(fail)?;
        bound_gap = bound_gap.max((exact - uniform.value).abs() - uniform.error_bound);
        let law: DiscreteDistribution<f64> = theta.get(0).clone();
        let single = StepSurvival::from_scenarios(&ScenarioSet::singleton(law.clone())).integral();
        mean_gap = mean_gap.max((single - law.mean()).abs());
    }
    Ok((grid_gap, mean_gap, bound_gap))
}

fn choquet(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>, RunError> {
    let exp = "choquet";
    let s = cfg.seed;
    let n = cfg.suite.instances;
    let (grid_gap, mean_gap, bound_gap) = choquet_discrepancies(s, n, cfg.suite.grid_points)?;
    let mut rows = vec![
        ReportRow::check(exp, cfg.suite.grid_points, "step_vs_grid_abs_diff", grid_gap, 1e-6, s),
        ReportRow::check(exp, n, "singleton_vs_mean_abs_diff", mean_gap, EXACT_TOL, s),
        ReportRow::check(exp, cfg.suite.grid_points, "uniform_grid_error_minus_bound", bound_gap, EXACT_TOL, s),
    ];
    // the upper and lower survival functions bracket the mean of every law
    let model = CapacityModel::Discrete {
        driver: cfg.model.as_ref().map_or_else(
            || ScenarioSet::symmetric_signs(&[1.0, 0.5]).expect("valid"),
            |m| m.scenarios.clone(),
        ),
        horizon: 1,
    };
    let x = RandomFunctional::coordinate(1);
    let hi = sublaw_core::survival_of(&model, &x, CapacityKind::Upper).map_err(fail)?.integral();
    let lo = sublaw_core::survival_of(&model, &x, CapacityKind::Lower).map_err(fail)?.integral();
    rows.push(ReportRow::record(exp, 1, "choquet_upper[X1]", hi, s));
    rows.push(ReportRow::check(exp, 1, "choquet_lower_minus_upper[X1]", lo - hi, 0.0, s));
    Ok(rows)
}

fn maximal(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>, RunError> {
    let exp = "maximal";
    let s = cfg.seed;
    let theta = cfg.model.as_ref().map_or_else(
        || ScenarioSet::symmetric_signs(&[1.0]).expect("valid"),
        |m| m.scenarios.clone(),
    );
    let mut rows = Vec::new();
    for &m in &cfg.suite.m_values {
        let g = registry::window::<f64>("normalized_sum", m).map_err(RunError)?;
        let mut normalized: Vec<Vec<f64>> = Vec::new();
        for (ni, &n) in cfg.suite.n_values.iter().enumerate() {
            let model = make_m_dependent(theta.clone(), &g, m, n).map_err(fail)?;
            let plan = McPlan {
                replications: cfg.plan.replications,
                seed: derive_seed(s, m as u64, ni as u64),
                pool: pool_for(model.driver(), cfg.plan.selector_pool_size, s),
            };
            let xs = relative_x_grid(&model, &cfg.suite.lambdas).map_err(fail)?;
            let report = verify_kolmogorov_maximal(&model, &xs, &plan, None).map_err(fail)?;
            for i in 0..xs.len() {
                rows.push(
                    ReportRow::check(exp, n, format!("kolmogorov[m={m},lambda={}]", cfg.suite.lambdas[i]), report.lhs[i], report.rhs[i], plan.seed)
                        .with_ci(report.lhs_ci[i].0, report.lhs_ci[i].1)
                        .with_selector(report.selector_ids[i].clone()),
                );
            }
            normalized.push(normalized_exceedance(&report, &model).map_err(fail)?);
        }
        for (li, &lambda) in cfg.suite.lambdas.iter().enumerate() {
            let vals: Vec<f64> = normalized.iter().map(|v| v[li]).collect();
            let hi = vals.iter().copied().fold(0.0, f64::max);
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let spread = if hi == 0.0 {
                1.0
            } else if lo == 0.0 {
                f64::MAX
            } else {
                hi / lo
            };
            rows.push(ReportRow::check(exp, 0, format!("stability[m={m},lambda={lambda}]"), spread, 2.0, s));
        }
    }
    Ok(rows)
}

/// A scheme of the Rademacher–Mensov suite at horizon `n`, without a
/// certificate, and the `f` passed to the check (none for orthonormal
/// schemes). `model` takes the config's own model and `quasi_f`.
pub fn rm_model(
    scheme: &str,
    n: usize,
    custom: Option<&ModelSpec>,
) -> Result<(SequenceModel<f64>, Option<Vec<f64>>), RunError> {
    let signs = ScenarioSet::symmetric_signs(&[1.0]).expect("valid");
    Ok(match scheme {
        "symmetric_signs" => (make_orthogonal(n, OrthogonalScheme::SymmetricSigns(signs)).map_err(fail)?, None),
        "haar_like" => (make_orthogonal(n, OrthogonalScheme::HaarLike(signs)).map_err(fail)?, None),
        "two_scenario" => {
            let two = ScenarioSet::symmetric_signs(&[1.0, 0.5]).expect("valid");
            (make_orthogonal(n, OrthogonalScheme::SymmetricSigns(two)).map_err(fail)?, None)
        }
        "quasi_m1" => {
            let g = registry::window::<f64>("normalized_sum", 1).map_err(RunError)?;
            (make_m_dependent(signs, &g, 1, n).map_err(fail)?, Some(vec![1.0, 0.5]))
        }
        "model" => {
            let spec = custom.ok_or_else(|| RunError("scheme `model` needs a [model] section".into()))?;
            let mut spec = spec.clone();
            spec.horizon = n;
            (build_model(&spec)?, spec.quasi_f.clone())
        }
        other => return Err(RunError(format!("unknown scheme `{other}`"))),
    })
}

/// Coefficients uniform on `[-1, 1]`.
pub fn rm_coefficients(seed: u64, scheme_index: usize, vector: usize, n: usize) -> Vec<f64> {
    let mut rng = replication_rng(seed, 0x4D00 + scheme_index as u64, vector as u64);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn rademacher_mensov(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>, RunError> {
    let exp = "rademacher_mensov";
    let s = cfg.seed;
    let pairs = cfg.model.as_ref().map_or(2000, |m| m.certificate_pairs);
    let mut rows = Vec::new();
    for (si, scheme) in cfg.suite.schemes.iter().enumerate() {
        for &n in &cfg.suite.n_values {
            let (model, f) = rm_model(scheme, n, cfg.model.as_ref())?;
            let cert_f = f.clone().unwrap_or_else(|| vec![1.0]);
            let cert = quasi_orthogonal_certificate(&model, &cert_f, pairs).map_err(fail)?;
            let tol = 1e-9;
            let normalized = cert.max_second_moment() - 1.0;
            rows.push(ReportRow::check(exp, n, format!("certificate_violation[{scheme}]"), cert.max_violation, tol, s));
            rows.push(ReportRow::check(exp, n, format!("second_moment_excess[{scheme}]"), normalized, tol, s));
            if cert.max_violation > tol || normalized > tol {
                continue;
            }
            let model = model.with_certificate(cert);
            let pool = pool_for(model.driver(), cfg.plan.selector_pool_size, s);
            for v in 0..cfg.suite.vectors {
                let c = rm_coefficients(s, si, v, n);
                let plan = McPlan {
                    replications: cfg.plan.replications,
                    seed: derive_seed(s, si as u64, (n * 1000 + v) as u64),
                    pool: pool.clone(),
                };
                let r = verify_rademacher_mensov(&model, &c, &plan, f.as_deref()).map_err(fail)?;
                rows.push(
                    ReportRow::check(exp, n, format!("rm[{scheme},v={v}]"), r.lhs[0], r.rhs[0] + r.tolerance, plan.seed)
                        .with_ci(r.lhs_ci[0].0, r.lhs_ci[0].1)
                        .with_selector(r.selector_ids.first().cloned().unwrap_or_default()),
                );
            }
        }
    }
    Ok(rows)
}

/// `(max telescoping error, max ratio increase)` of the ε-construction.
pub fn epsilon_checks(a: &[f64], tail: f64) -> Result<(f64, f64), RunError> {
    let e = epsilon_sequence(a, tail).map_err(fail)?;
    let root1 = e.tails[0].sqrt();
    let mut acc = 0.0;
    let mut tele = 0.0f64;
    for (i, &b) in e.b.iter().enumerate() {
        acc += b;
        tele = tele.max((acc - (root1 - e.tails[i + 1].sqrt())).abs());
    }
    let rise = e.ratios.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    Ok((tele, rise))
}

/// Pairs of consecutive Wittmann indices that fail either inequality.
pub fn wittmann_violations(a: &[f64], m: f64) -> Result<(usize, usize), RunError> {
    let sub = wittmann_subsequence(a, m).map_err(fail)?;
    let bad = sub
        .indices
        .windows(2)
        .filter(|w| !wittmann_step_holds(a, m, w[0], w[1]))
        .count();
    Ok((sub.indices.len(), bad))
}

pub fn wittmann_sequences(len: usize) -> Vec<(&'static str, Vec<f64>)> {
    let pow_len = len.min(60);
    vec![
        ("n", (1..=len).map(|n| n as f64).collect()),
        ("n^2", (1..=len).map(|n| (n * n) as f64).collect()),
        ("2^n", (1..=pow_len).map(|n| 2f64.powi(n as i32)).collect()),
    ]
}

fn seq_lemma(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>, RunError> {
    let exp = "seq_lemma";
    let s = cfg.seed;
    let n = cfg.suite.sequence_length;
    let mut rows = Vec::new();
    let geometric: Vec<f64> = (1..=n).map(|k| 4f64.powi(-(k as i32))).collect();
    let geo_tail = 4f64.powi(-(n as i32)) / 3.0;
    let poly: Vec<f64> = (1..=n).map(|k| 1.0 / (k * k) as f64).collect();
    let poly_tail = TailBound::PowerLog {
        coefficient: 1.0,
        p: 2.0,
        q: 0,
    }
    .after(n)
    .map_err(fail)?;
    for (label, a, tail) in [("geometric", &geometric, geo_tail), ("polynomial", &poly, poly_tail)] {
        let (tele, rise) = epsilon_checks(a, tail)?;
        rows.push(ReportRow::check(exp, n, format!("telescoping_error:{label}"), tele, EXACT_TOL, s));
        rows.push(ReportRow::check(exp, n, format!("ratio_increase:{label}"), rise, 0.0, s));
    }
    for (label, a) in wittmann_sequences(n) {
        for &m in &cfg.suite.m_factors {
            let (terms, bad) = wittmann_violations(&a, m)?;
            rows.push(ReportRow::record(exp, a.len(), format!("wittmann_terms[a={label},M={m}]"), terms as f64, s));
            rows.push(ReportRow::check(exp, a.len(), format!("wittmann_violations[a={label},M={m}]"), bad as f64, 0.0, s));
        }
    }
    Ok(rows)
}

// ---- oracle ----

/// Exact `Ê`, `ε̂` and upper / lower Choquet integrals of the configured
/// window function on the model's scenario family.
pub fn oracle(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>, RunError> {
    let spec = cfg
        .oracle
        .as_ref()
        .ok_or_else(|| RunError("config has no [oracle] section".into()))?;
    let theta = cfg
        .model
        .as_ref()
        .map(|m| m.scenarios.clone())
        .ok_or_else(|| RunError("oracle needs model.scenarios".into()))?;
    let g = registry::window::<f64>(&spec.window, spec.m).map_err(RunError)?;
    let f = if spec.offset > 1 { g.shifted(spec.offset - 1) } else { g };
    let horizon = f.window_bounds().1;
    let o = ExactOracle::new(&theta);
    let model = CapacityModel::Discrete {
        driver: theta.clone(),
        horizon,
    };
    let exp = "oracle";
    let s = cfg.seed;
    let hi = sublaw_core::survival_of(&model, &f, CapacityKind::Upper).map_err(fail)?;
    let lo = sublaw_core::survival_of(&model, &f, CapacityKind::Lower).map_err(fail)?;
    Ok(vec![
        ReportRow::record(exp, horizon, format!("upper_expectation[{}]", spec.window), o.upper(&f, horizon).map_err(fail)?, s),
        ReportRow::record(exp, horizon, format!("lower_expectation[{}]", spec.window), o.lower(&f, horizon).map_err(fail)?, s),
        ReportRow::record(exp, horizon, format!("choquet_upper[{}]", spec.window), hi.integral(), s),
        ReportRow::record(exp, horizon, format!("choquet_lower[{}]", spec.window), lo.integral(), s),
    ])
}
