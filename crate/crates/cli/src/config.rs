//! Experiment configuration: one TOML file per run.
//!
//! Loading never stops at the first problem. Every field is checked and all
//! failures come back together.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sublaw_core::{DiscreteDistribution, Glue, ScenarioSet, TailBound};
use thiserror::Error;

use crate::registry;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{} validation error(s):\n{}", .0.len(), join_errors(.0))]
    Validation(Vec<FieldError>),
}

fn join_errors(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(|e| format!("  {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Axioms,
    Capacity,
    Choquet,
    Maximal,
    RademacherMensov,
    Thm41,
    Thm42,
    Thm43,
    Cor41,
    SeqLemma,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Axioms,
        Experiment::Capacity,
        Experiment::Choquet,
        Experiment::Maximal,
        Experiment::RademacherMensov,
        Experiment::Thm41,
        Experiment::Thm42,
        Experiment::Thm43,
        Experiment::Cor41,
        Experiment::SeqLemma,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Experiment::Axioms => "axioms",
            Experiment::Capacity => "capacity",
            Experiment::Choquet => "choquet",
            Experiment::Maximal => "maximal",
            Experiment::RademacherMensov => "rademacher_mensov",
            Experiment::Thm41 => "thm41",
            Experiment::Thm42 => "thm42",
            Experiment::Thm43 => "thm43",
            Experiment::Cor41 => "cor41",
            Experiment::SeqLemma => "seq_lemma",
        }
    }

    pub fn parse(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.id() == id)
    }

    /// Strong-law runs need a model, a plan and a band.
    pub fn is_convergence_run(&self) -> bool {
        matches!(
            self,
            Experiment::Thm41 | Experiment::Thm42 | Experiment::Thm43 | Experiment::Cor41
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Independent,
    MDependent,
    Blockwise,
    Orthogonal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlocksSpec {
    PowersOfTwo,
    Unit,
    Regular(usize),
    Cuts(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub scenarios: ScenarioSet<f64>,
    pub window: String,
    pub m: usize,
    pub horizon: usize,
    pub blocks: BlocksSpec,
    pub glue: Glue,
    pub scheme: String,
    /// `Y_k -> k^e Y_k`.
    pub scale_exponent: Option<f64>,
    pub certificate_pairs: usize,
    pub quasi_f: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormalizerChoice {
    Linear,
    Custom(Vec<f64>),
    Formula(String),
    PowerPhi,
}

#[derive(Debug, Clone)]
pub struct ZSpec {
    pub scenarios: ScenarioSet<f64>,
    pub window: String,
    pub m: usize,
    pub c: f64,
    pub t_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanSpec {
    pub replications: usize,
    pub checkpoints: Vec<usize>,
    pub selector_pool_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSpec {
    pub instances: usize,
    pub grid_points: usize,
    pub c_values: usize,
    pub n_values: Vec<usize>,
    pub m_values: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub vectors: usize,
    pub schemes: Vec<String>,
    pub sequence_length: usize,
    pub m_factors: Vec<f64>,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            instances: 100,
            grid_points: 4096,
            c_values: 8,
            n_values: vec![32, 64, 128],
            m_values: vec![0, 1, 2],
            lambdas: vec![1.0, 1.5, 2.0],
            vectors: 20,
            schemes: vec![
                "symmetric_signs".into(),
                "haar_like".into(),
                "two_scenario".into(),
                "quasi_m1".into(),
            ],
            sequence_length: 64,
            m_factors: vec![1.5, 2.0, 4.0],
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleSpec {
    pub window: String,
    pub m: usize,
    /// Index of the first coordinate the functional reads.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// A fully validated configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub model: Option<ModelSpec>,
    pub normalizer: NormalizerChoice,
    pub r: f64,
    pub z: Option<ZSpec>,
    pub tail: Option<TailBound<f64>>,
    pub plan: PlanSpec,
    pub band: Option<f64>,
    pub suite: SuiteSpec,
    pub oracle: Option<OracleSpec>,
    pub output: OutputSpec,
}

// ---- raw serde layer ----

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    seed: Option<u64>,
    r: Option<f64>,
    model: Option<RawModel>,
    normalizer: Option<RawNormalizer>,
    z: Option<RawZ>,
    tail: Option<RawTail>,
    plan: Option<RawPlan>,
    bands: Option<RawBands>,
    suite: Option<RawSuite>,
    oracle: Option<RawOracle>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    values: Option<Vec<f64>>,
    atoms: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlocks {
    kind: String,
    length: Option<usize>,
    cuts: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: Option<String>,
    scenarios: Option<Vec<RawScenario>>,
    window: Option<String>,
    m: Option<usize>,
    horizon: Option<usize>,
    blocks: Option<RawBlocks>,
    glue: Option<String>,
    scheme: Option<String>,
    scale_exponent: Option<f64>,
    certificate_pairs: Option<usize>,
    quasi_f: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNormalizer {
    kind: String,
    values: Option<Vec<f64>>,
    formula: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawZ {
    scenarios: Option<Vec<RawScenario>>,
    window: Option<String>,
    m: Option<usize>,
    c: Option<f64>,
    t_grid: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTail {
    kind: String,
    value: Option<f64>,
    coefficient: Option<f64>,
    p: Option<f64>,
    q: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    replications: Option<usize>,
    checkpoints: Option<Vec<usize>>,
    selector_pool_size: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBands {
    worst_ratio: Option<f64>,
    golden_file: Option<PathBuf>,
    golden_key: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    instances: Option<usize>,
    grid_points: Option<usize>,
    c_values: Option<usize>,
    n_values: Option<Vec<usize>>,
    m_values: Option<Vec<usize>>,
    lambdas: Option<Vec<f64>>,
    vectors: Option<usize>,
    schemes: Option<Vec<String>>,
    sequence_length: Option<usize>,
    m_factors: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    window: String,
    m: Option<usize>,
    offset: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    format: Option<String>,
}

/// Golden pilot data: `[bands.<key>] worst_ratio = ...`.
#[derive(Debug, Deserialize)]
struct GoldenFile {
    bands: std::collections::BTreeMap<String, GoldenBand>,
}

#[derive(Debug, Deserialize)]
struct GoldenBand {
    worst_ratio: f64,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

/// Parses and validates `text`; relative paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let mut v = Validator::default();
    let cfg = v.config(raw, base);
    if v.errors.is_empty() {
        Ok(cfg.expect("no errors means a config was built"))
    } else {
        Err(ConfigError::Validation(v.errors))
    }
}

#[derive(Default)]
struct Validator {
    errors: Vec<FieldError>,
}

impl Validator {
    fn err(&mut self, field: &str, message: impl Into<String>) {
        self.errors.push(FieldError {
            field: field.into(),
            message: message.into(),
        });
    }

    fn scenarios(&mut self, field: &str, raw: Option<Vec<RawScenario>>) -> Option<ScenarioSet<f64>> {
        let Some(raw) = raw else {
            self.err(field, "missing");
            return None;
        };
        if raw.is_empty() {
            self.err(field, "at least one scenario is required");
            return None;
        }
        let mut laws = Vec::new();
        for (i, s) in raw.into_iter().enumerate() {
            let f = format!("{field}[{i}]");
            let law = match (s.values, s.atoms) {
                (Some(v), None) => DiscreteDistribution::uniform(&v),
                (None, Some(a)) => DiscreteDistribution::new(a),
                _ => {
                    self.err(&f, "give exactly one of `values` or `atoms`");
                    continue;
                }
            };
            match law {
                Ok(l) => laws.push(l),
                Err(e) => self.err(&f, e.to_string()),
            }
        }
        if laws.is_empty() {
            return None;
        }
        match ScenarioSet::new(laws) {
            Ok(s) => Some(s),
            Err(e) => {
                self.err(field, e.to_string());
                None
            }
        }
    }

    fn model(&mut self, raw: RawModel) -> Option<ModelSpec> {
        let kind = match raw.kind.as_deref().unwrap_or("m_dependent") {
            "independent" => Some(ModelKind::Independent),
            "m_dependent" => Some(ModelKind::MDependent),
            "blockwise" => Some(ModelKind::Blockwise),
            "orthogonal" => Some(ModelKind::Orthogonal),
            other => {
                self.err("model.kind", format!("unknown kind `{other}`"));
                None
            }
        };
        let scenarios = self.scenarios("model.scenarios", raw.scenarios);
        let m = raw.m.unwrap_or(0);
        let window = raw.window.unwrap_or_else(|| "identity".into());
        if let Err(e) = registry::window::<f64>(&window, m) {
            self.err("model.window", e);
        }
        let horizon = raw.horizon.unwrap_or(0);
        if horizon == 0 {
            self.err("model.horizon", "must be a positive integer");
        }
        let blocks = match raw.blocks {
            None => BlocksSpec::PowersOfTwo,
            Some(b) => match b.kind.as_str() {
                "powers_of_two" => BlocksSpec::PowersOfTwo,
                "unit" => BlocksSpec::Unit,
                "regular" => match b.length {
                    Some(l) if l > 0 => BlocksSpec::Regular(l),
                    _ => {
                        self.err("model.blocks.length", "regular blocks need a positive length");
                        BlocksSpec::Unit
                    }
                },
                "cuts" => match b.cuts {
                    Some(c) => BlocksSpec::Cuts(c),
                    None => {
                        self.err("model.blocks.cuts", "missing");
                        BlocksSpec::Unit
                    }
                },
                other => {
                    self.err("model.blocks.kind", format!("unknown block kind `{other}`"));
                    BlocksSpec::Unit
                }
            },
        };
        let glue = match raw.glue.as_deref().unwrap_or("fresh") {
            "fresh" => Glue::FreshDriverPerBlock,
            "shared" => Glue::SharedBoundary,
            other => {
                self.err("model.glue", format!("unknown glue `{other}`"));
                Glue::FreshDriverPerBlock
            }
        };
        let scheme = raw.scheme.unwrap_or_else(|| "symmetric_signs".into());
        if !["symmetric_signs", "haar_like"].contains(&scheme.as_str()) {
            self.err("model.scheme", format!("unknown scheme `{scheme}`"));
        }
        if let Some(e) = raw.scale_exponent {
            if !e.is_finite() {
                self.err("model.scale_exponent", "must be finite");
            }
        }
        if let Some(f) = &raw.quasi_f {
            if f.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                self.err("model.quasi_f", "entries must be finite and nonnegative");
            }
        }
        Some(ModelSpec {
            kind: kind?,
            scenarios: scenarios?,
            window,
            m,
            horizon,
            blocks,
            glue,
            scheme,
            scale_exponent: raw.scale_exponent,
            certificate_pairs: raw.certificate_pairs.unwrap_or(4096),
            quasi_f: raw.quasi_f,
        })
    }

    fn tail(&mut self, raw: RawTail) -> Option<TailBound<f64>> {
        match raw.kind.as_str() {
            "value" => match raw.value {
                Some(v) if v >= 0.0 && v.is_finite() => Some(TailBound::Value(v)),
                _ => {
                    self.err("tail.value", "must be finite and nonnegative");
                    None
                }
            },
            "power_log" => {
                let coefficient = raw.coefficient.unwrap_or(1.0);
                let q = raw.q.unwrap_or(0);
                match raw.p {
                    Some(p) if p > 1.0 => Some(TailBound::PowerLog { coefficient, p, q }),
                    _ => {
                        self.err("tail.p", "power_log tails need p > 1");
                        None
                    }
                }
            }
            other => {
                self.err("tail.kind", format!("unknown tail kind `{other}`"));
                None
            }
        }
    }

    fn band(&mut self, raw: RawBands, base: &Path) -> Option<f64> {
        if let Some(b) = raw.worst_ratio {
            if !(b > 0.0) || !b.is_finite() {
                self.err("bands.worst_ratio", "must be positive");
                return None;
            }
            return Some(b);
        }
        let (Some(file), Some(key)) = (raw.golden_file, raw.golden_key) else {
            self.err("bands", "give `worst_ratio` or both `golden_file` and `golden_key`");
            return None;
        };
        let path = base.join(file);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                self.err("bands.golden_file", format!("cannot read {}: {e}", path.display()));
                return None;
            }
        };
        match toml::from_str::<GoldenFile>(&text) {
            Ok(g) => match g.bands.get(&key) {
                Some(b) => Some(b.worst_ratio),
                None => {
                    self.err("bands.golden_key", format!("no band `{key}` in {}", path.display()));
                    None
                }
            },
            Err(e) => {
                self.err("bands.golden_file", format!("malformed golden file: {}", e.message()));
                None
            }
        }
    }

    fn config(&mut self, raw: RawConfig, base: &Path) -> Option<ExperimentConfig> {
        let experiment = match raw.experiment.as_deref() {
            None => {
                self.err("experiment", "missing");
                None
            }
            Some(id) => {
                let e = Experiment::parse(id);
                if e.is_none() {
                    self.err("experiment", format!("unknown experiment `{id}`"));
                }
                e
            }
        };
        if raw.seed.is_none() {
            self.err("seed", "missing; every run needs an explicit seed");
        }
        let r = raw.r.unwrap_or(1.0);
        if !(1.0..2.0).contains(&r) {
            self.err("r", "r must lie in [1,2)");
        }
        let model = raw.model.and_then(|m| self.model(m));

        let normalizer = match raw.normalizer {
            None => NormalizerChoice::Linear,
            Some(n) => match n.kind.as_str() {
                "linear" => NormalizerChoice::Linear,
                "power_phi" => NormalizerChoice::PowerPhi,
                "custom" => match (n.values, n.formula) {
                    (Some(v), None) => NormalizerChoice::Custom(v),
                    (None, Some(f)) => {
                        if registry::normalizer(&f, 1).is_err() {
                            self.err("normalizer.formula", format!("unknown formula `{f}`"));
                        }
                        NormalizerChoice::Formula(f)
                    }
                    _ => {
                        self.err("normalizer", "custom normalizers need exactly one of `values` or `formula`");
                        NormalizerChoice::Linear
                    }
                },
                other => {
                    self.err("normalizer.kind", format!("unknown kind `{other}`"));
                    NormalizerChoice::Linear
                }
            },
        };

        let z = raw.z.and_then(|z| {
            let scenarios = self.scenarios("z.scenarios", z.scenarios);
            let window = z.window.unwrap_or_else(|| "identity".into());
            let m = z.m.unwrap_or(0);
            if let Err(e) = registry::window::<f64>(&window, m) {
                self.err("z.window", e);
            }
            let c = z.c.unwrap_or(1.0);
            if !(c > 0.0) || !c.is_finite() {
                self.err("z.c", "C must be positive");
            }
            let t_grid = z.t_grid.unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0]);
            if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0)) {
                self.err("z.t_grid", "must be nonempty and positive");
            }
            Some(ZSpec {
                scenarios: scenarios?,
                window,
                m,
                c,
                t_grid,
            })
        });

        let tail = raw.tail.and_then(|t| self.tail(t));

        let raw_plan = raw.plan.unwrap_or(RawPlan {
            replications: None,
            checkpoints: None,
            selector_pool_size: None,
        });
        let plan = PlanSpec {
            replications: raw_plan.replications.unwrap_or(32),
            checkpoints: raw_plan.checkpoints.unwrap_or_default(),
            selector_pool_size: raw_plan.selector_pool_size.unwrap_or(32),
        };
        if plan.replications < 2 {
            self.err("plan.replications", "must be at least 2");
        }
        if plan.selector_pool_size == 0 {
            self.err("plan.selector_pool_size", "must be positive");
        }
        if plan.checkpoints.iter().any(|&c| c == 0) {
            self.err("plan.checkpoints", "must be positive");
        }
        if plan.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            self.err("plan.checkpoints", "must be strictly increasing");
        }

        let band = raw.bands.and_then(|b| self.band(b, base));

        let mut suite = SuiteSpec::default();
        if let Some(s) = raw.suite {
            macro_rules! take {
                ($($f:ident),*) => { $( if let Some(v) = s.$f { suite.$f = v; } )* };
            }
            take!(
                instances,
                grid_points,
                c_values,
                n_values,
                m_values,
                lambdas,
                vectors,
                schemes,
                sequence_length,
                m_factors
            );
        }
        for s in &suite.schemes {
            if !["symmetric_signs", "haar_like", "two_scenario", "quasi_m1", "model"].contains(&s.as_str()) {
                self.err("suite.schemes", format!("unknown scheme `{s}`"));
            } else if s == "model" && model.is_none() {
                self.err("suite.schemes", "scheme `model` needs a [model] section");
            }
        }
        if suite.grid_points < 16 {
            self.err("suite.grid_points", "need at least 16 grid points");
        }
        if suite.m_factors.iter().any(|&m| !(m > 1.0)) {
            self.err("suite.m_factors", "M must exceed 1");
        }
        if suite.lambdas.iter().any(|&l| !(l > 0.0)) {
            self.err("suite.lambdas", "must be positive");
        }

        let oracle = raw.oracle.map(|o| {
            let m = o.m.unwrap_or(0);
            if let Err(e) = registry::window::<f64>(&o.window, m) {
                self.err("oracle.window", e);
            }
            OracleSpec {
                window: o.window,
                m,
                offset: o.offset.unwrap_or(1).max(1),
            }
        });

        let output = match raw.output {
            None => OutputSpec {
                path: None,
                format: Format::Csv,
            },
            Some(o) => {
                let format = match o.format.as_deref() {
                    None => Format::Csv,
                    Some(f) => Format::parse(f).unwrap_or_else(|| {
                        self.err("output.format", format!("unknown format `{f}`"));
                        Format::Csv
                    }),
                };
                OutputSpec {
                    path: o.path.map(|p| base.join(p)),
                    format,
                }
            }
        };

        if let Some(exp) = experiment {
            if exp.is_convergence_run() {
                match &model {
                    None => self.err("model", "required for this experiment"),
                    Some(m) => {
                        if let Some(&last) = plan.checkpoints.last() {
                            if last > m.horizon {
                                self.err("plan.checkpoints", "last checkpoint exceeds model.horizon");
                            }
                        }
                    }
                }
                if plan.checkpoints.is_empty() {
                    self.err("plan.checkpoints", "required for this experiment");
                }
                if band.is_none() && !self.errors.iter().any(|e| e.field.starts_with("bands")) {
                    self.err("bands", "required for this experiment");
                }
            }
            if exp == Experiment::Thm42 && z.is_none() && !self.errors.iter().any(|e| e.field.starts_with('z')) {
                self.err("z", "required for thm42");
            }
            if exp == Experiment::Cor41 {
                if let Some(m) = &model {
                    if m.quasi_f.is_none() {
                        self.err("model.quasi_f", "required for cor41");
                    }
                }
            }
        }

        Some(ExperimentConfig {
            experiment: experiment?,
            seed: raw.seed?,
            model,
            normalizer,
            r,
            z,
            tail,
            plan,
            band,
            suite,
            oracle,
            output,
        })
    }
}
