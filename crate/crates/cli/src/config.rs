//! Run configuration files.
//!
//! Configs are TOML. Keys may be written dotted (`sampler.N = 500`) or as
//! tables (`[sampler]`). Parsing is strict: unknown keys and keys that do not
//! apply to the chosen experiment or mode are errors, and every problem found
//! is reported, not just the first.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use easmh::diagnostics::Bandwidth;
use easmh::samplers::{InactiveProposal, ProposalSpec, PseudoWeighting};
use easmh::subspace::SubspaceMethod;
use easmh::targets::Lorenz96ExperimentConfig;
use easmh::ode::TwoScale;
use toml::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Mixture2d,
    Mixture10d,
    Lorenz96,
    Custom,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mixture2d => "mixture2d",
            Self::Mixture10d => "mixture10d",
            Self::Lorenz96 => "lorenz96",
            Self::Custom => "custom",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "mixture2d" => Self::Mixture2d,
            "mixture10d" => Self::Mixture10d,
            "lorenz96" => Self::Lorenz96,
            "custom" => Self::Custom,
            _ => return None,
        })
    }

    pub fn is_mixture(self) -> bool {
        matches!(self, Self::Mixture2d | Self::Mixture10d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Vanilla,
    AsmhOriginal,
    Easmh,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Vanilla => "vanilla",
            Self::AsmhOriginal => "asmh_original",
            Self::Easmh => "easmh",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "vanilla" => Self::Vanilla,
            "asmh_original" => Self::AsmhOriginal,
            "easmh" => Self::Easmh,
            _ => return None,
        })
    }

    pub fn uses_subspace(self) -> bool {
        self != Self::Vanilla
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceConfig {
    pub method: SubspaceMethod,
    pub construction_points: usize,
    pub active_dim: Option<usize>,
    /// Variance of the isotropic construction sampler; also the prior of `custom`.
    pub prior_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub mode: Mode,
    pub iterations: usize,
    pub nested_samples: usize,
    pub burn_in: usize,
    pub proposal: ProposalSpec,
    pub inactive_proposal: InactiveProposal,
    pub pseudo_weights: PseudoWeighting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub max_lag: usize,
    pub thin: usize,
    pub kde_points: usize,
    pub kde_bandwidth: Bandwidth,
}

/// `N(mean, diag(variances))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomTarget {
    pub mean: Vec<f64>,
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub subspace: SubspaceConfig,
    pub sampler: SamplerConfig,
    pub diagnostics: DiagnosticsConfig,
    pub lorenz96: Lorenz96ExperimentConfig,
    pub custom: Option<CustomTarget>,
}

/// Every problem found in a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.problems.len())?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Str,
    Int,
    Float,
    Bool,
    FloatList,
    FloatOrList,
    FloatOrStr,
}

const KEYS: &[(&str, Kind)] = &[
    ("experiment", Kind::Str),
    ("seed", Kind::Int),
    ("output_dir", Kind::Str),
    ("sampler.mode", Kind::Str),
    ("sampler.N", Kind::Int),
    ("sampler.M", Kind::Int),
    ("sampler.burn_in", Kind::Int),
    ("sampler.proposal_scale", Kind::FloatOrList),
    ("sampler.qz_scale", Kind::Float),
    ("sampler.pseudo_weights", Kind::Str),
    ("subspace.method", Kind::Str),
    ("subspace.N", Kind::Int),
    ("subspace.active_dim", Kind::Int),
    ("subspace.prior_variance", Kind::Float),
    ("diagnostics.max_lag", Kind::Int),
    ("diagnostics.thin", Kind::Int),
    ("diagnostics.kde_points", Kind::Int),
    ("diagnostics.kde_bandwidth", Kind::FloatOrStr),
    ("lorenz96.dim", Kind::Int),
    ("lorenz96.F", Kind::Float),
    ("lorenz96.t0", Kind::Float),
    ("lorenz96.t1", Kind::Float),
    ("lorenz96.step", Kind::Float),
    ("lorenz96.noise_variance", Kind::Float),
    ("lorenz96.prior_variance", Kind::Float),
    ("lorenz96.two_scale", Kind::Bool),
    ("custom.mean", Kind::FloatList),
    ("custom.variances", Kind::FloatList),
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(ca != *cb)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

fn unknown_key_message(key: &str) -> String {
    let section = key.split_once('.').map(|(s, _)| s);
    let mut msg = format!("unknown key `{key}`");
    let closest = KEYS
        .iter()
        .map(|(k, _)| (edit_distance(key, k), *k))
        .min()
        .filter(|(d, _)| *d <= 3);
    if let Some((_, k)) = closest {
        msg.push_str(&format!("; did you mean `{k}`?"));
    }
    let siblings: Vec<&str> = KEYS
        .iter()
        .map(|(k, _)| *k)
        .filter(|k| k.split_once('.').map(|(s, _)| s) == section)
        .collect();
    if !siblings.is_empty() {
        match section {
            Some(s) => msg.push_str(&format!(" known `{s}.*` keys: {}", siblings.join(", "))),
            None => msg.push_str(&format!(" known top-level keys: {}", siblings.join(", "))),
        }
    }
    msg
}

struct Reader {
    values: BTreeMap<String, Value>,
    problems: Vec<String>,
}

impl Reader {
    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn type_error(&mut self, key: &str, want: &str, got: &Value) {
        self.problems.push(format!("`{key}` must be {want}, got `{got}`"));
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.values.get(key).cloned() {
            None => None,
            Some(Value::String(s)) => Some(s),
            Some(v) => {
                self.type_error(key, "a string", &v);
                None
            }
        }
    }

    fn int(&mut self, key: &str) -> Option<i64> {
        match self.values.get(key).cloned() {
            None => None,
            Some(Value::Integer(i)) => Some(i),
            Some(v) => {
                self.type_error(key, "an integer", &v);
                None
            }
        }
    }

    /// Integer that must be at least `min`.
    fn count(&mut self, key: &str, min: i64, default: usize) -> usize {
        match self.int(key) {
            None => default,
            Some(i) if i < min => {
                let name = key.rsplit('.').next().unwrap_or(key);
                self.problems.push(format!("{name} must be ≥ {min} (`{key}` = {i})"));
                default
            }
            Some(i) => i as usize,
        }
    }

    fn float(&mut self, key: &str) -> Option<f64> {
        match self.values.get(key).cloned() {
            None => None,
            Some(Value::Float(f)) => Some(f),
            Some(Value::Integer(i)) => Some(i as f64),
            Some(v) => {
                self.type_error(key, "a number", &v);
                None
            }
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> f64 {
        match self.float(key) {
            None => default,
            Some(f) if !(f > 0.0 && f.is_finite()) => {
                self.problems.push(format!("`{key}` must be positive, got {f}"));
                default
            }
            Some(f) => f,
        }
    }

    fn boolean(&mut self, key: &str) -> Option<bool> {
        match self.values.get(key).cloned() {
            None => None,
            Some(Value::Boolean(b)) => Some(b),
            Some(v) => {
                self.type_error(key, "true or false", &v);
                None
            }
        }
    }

    fn float_list(&mut self, key: &str) -> Option<Vec<f64>> {
        match self.values.get(key).cloned() {
            None => None,
            Some(Value::Array(a)) => {
                let mut out = Vec::with_capacity(a.len());
                for v in &a {
                    match v {
                        Value::Float(f) => out.push(*f),
                        Value::Integer(i) => out.push(*i as f64),
                        other => {
                            self.type_error(key, "a list of numbers", other);
                            return None;
                        }
                    }
                }
                Some(out)
            }
            Some(v) => {
                self.type_error(key, "a list of numbers", &v);
                None
            }
        }
    }
}

fn check_kind(key: &str, kind: Kind, v: &Value) -> bool {
    let number = matches!(v, Value::Float(_) | Value::Integer(_));
    let _ = key;
    match kind {
        Kind::Str => matches!(v, Value::String(_)),
        Kind::Int => matches!(v, Value::Integer(_)),
        Kind::Float => number,
        Kind::Bool => matches!(v, Value::Boolean(_)),
        Kind::FloatList => matches!(v, Value::Array(_)),
        Kind::FloatOrList => number || matches!(v, Value::Array(_)),
        Kind::FloatOrStr => number || matches!(v, Value::String(_)),
    }
}

/// Parses and validates a config, filling experiment defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
        problems: vec![format!("not valid TOML: {}", e.message())],
    })?;
    let mut values = BTreeMap::new();
    flatten("", &table, &mut values);
    let mut problems = Vec::new();
    for (key, value) in &values {
        match KEYS.iter().find(|(k, _)| k == key) {
            None => problems.push(unknown_key_message(key)),
            Some((_, kind)) if !check_kind(key, *kind, value) => {
                problems.push(format!("`{key}` has the wrong type (`{value}`)"))
            }
            Some(_) => {}
        }
    }
    let mut r = Reader { values, problems };

    let experiment = match r.string("experiment") {
        None if !r.has("experiment") => {
            r.problems.push("missing required key `experiment`".into());
            None
        }
        None => None,
        Some(s) => {
            let e = Experiment::parse(&s);
            if e.is_none() {
                r.problems.push(format!(
                    "unknown experiment `{s}` (expected mixture2d, mixture10d, lorenz96 or custom)"
                ));
            }
            e
        }
    };
    let mode = match r.string("sampler.mode") {
        None if !r.has("sampler.mode") => {
            r.problems.push("missing required key `sampler.mode`".into());
            None
        }
        None => None,
        Some(s) => {
            let m = Mode::parse(&s);
            if m.is_none() {
                r.problems.push(format!("unknown sampler mode `{s}` (expected vanilla, asmh_original or easmh)"));
            }
            m
        }
    };
    let (Some(experiment), Some(mode)) = (experiment, mode) else {
        return Err(ConfigError { problems: r.problems });
    };

    for (key, _) in KEYS {
        let block = key.split_once('.').map(|(s, _)| s);
        if !r.has(key) {
            continue;
        }
        if block == Some("lorenz96") && experiment != Experiment::Lorenz96 {
            r.problems.push(format!("`{key}` only applies to experiment lorenz96"));
        }
        if block == Some("custom") && experiment != Experiment::Custom {
            r.problems.push(format!("`{key}` only applies to experiment custom"));
        }
        if mode == Mode::Vanilla && matches!(*key, "sampler.M" | "sampler.qz_scale" | "sampler.pseudo_weights") {
            r.problems.push(format!("`{key}` does not apply to sampler mode vanilla"));
        }
    }
    if experiment == Experiment::Lorenz96 && r.has("subspace.prior_variance") {
        r.problems.push(
            "`subspace.prior_variance` does not apply to lorenz96: the construction sampler is the model prior (set `lorenz96.prior_variance`)"
                .into(),
        );
    }

    let seed = match r.int("seed") {
        Some(s) if s < 0 => {
            r.problems.push(format!("seed must be non-negative, got {s}"));
            0
        }
        Some(s) => s as u64,
        None => 0,
    };

    let mut lorenz = Lorenz96ExperimentConfig::default();
    if experiment == Experiment::Lorenz96 {
        lorenz.state_dim = r.count("lorenz96.dim", 4, lorenz.state_dim);
        lorenz.forcing = r.float("lorenz96.F").unwrap_or(lorenz.forcing);
        lorenz.t0 = r.float("lorenz96.t0").unwrap_or(lorenz.t0);
        lorenz.t1 = r.float("lorenz96.t1").unwrap_or(lorenz.t1);
        lorenz.step = r.positive("lorenz96.step", lorenz.step);
        lorenz.noise_variance = r.positive("lorenz96.noise_variance", lorenz.noise_variance);
        lorenz.prior_variance = r.positive("lorenz96.prior_variance", lorenz.prior_variance);
        if r.boolean("lorenz96.two_scale").unwrap_or(false) {
            lorenz.two_scale = Some(TwoScale::default());
        }
        if !(lorenz.t1 > lorenz.t0) {
            r.problems.push(format!("lorenz96.t1 ({}) must exceed lorenz96.t0 ({})", lorenz.t1, lorenz.t0));
        }
        if !lorenz.forcing.is_finite() {
            r.problems.push("lorenz96.F must be finite".into());
        }
    }

    let custom = if experiment == Experiment::Custom {
        let mean = r.float_list("custom.mean");
        let variances = r.float_list("custom.variances");
        match (mean, variances) {
            (Some(mean), Some(variances)) => {
                if mean.len() != variances.len() {
                    r.problems.push(format!(
                        "custom.mean has {} entries but custom.variances has {}",
                        mean.len(),
                        variances.len()
                    ));
                }
                if mean.len() < 2 {
                    r.problems.push("custom targets need at least 2 dimensions".into());
                }
                if variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    r.problems.push("custom.variances must all be positive".into());
                }
                Some(CustomTarget { mean, variances })
            }
            (m, v) => {
                if m.is_none() && !r.has("custom.mean") {
                    r.problems.push("missing required key `custom.mean` for experiment custom".into());
                }
                if v.is_none() && !r.has("custom.variances") {
                    r.problems.push("missing required key `custom.variances` for experiment custom".into());
                }
                None
            }
        }
    } else {
        None
    };

    let (default_n, default_burn) = match (experiment, mode) {
        (Experiment::Lorenz96, Mode::Vanilla) => (5010, 0),
        (_, Mode::Vanilla) => (5500, 500),
        _ => (500, 0),
    };
    let iterations = r.count("sampler.N", 1, default_n);
    let nested_samples = if mode == Mode::Vanilla { 1 } else { r.count("sampler.M", 1, 10) };
    let burn_in = r.count("sampler.burn_in", 0, default_burn);
    if burn_in >= iterations {
        r.problems.push(format!("sampler.burn_in ({burn_in}) must be smaller than sampler.N ({iterations})"));
    }
    let default_scale = if experiment == Experiment::Lorenz96 { 0.01 } else { 1.0 };
    let proposal = match r.values.get("sampler.proposal_scale").cloned() {
        Some(Value::Array(_)) => {
            let v = r.float_list("sampler.proposal_scale").unwrap_or_default();
            if v.is_empty() || v.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                r.problems.push("sampler.proposal_scale entries must be positive".into());
            }
            ProposalSpec::PerDimension(v)
        }
        _ => ProposalSpec::Isotropic(r.positive("sampler.proposal_scale", default_scale)),
    };

    let construction_variance = match experiment {
        Experiment::Lorenz96 => lorenz.prior_variance,
        _ => r.positive("subspace.prior_variance", 10.0),
    };
    let default_qz = match experiment {
        Experiment::Custom => 1.0,
        _ => construction_variance.sqrt(),
    };
    let qz_scale = if mode == Mode::Vanilla { 1.0 } else { r.positive("sampler.qz_scale", default_qz) };
    let inactive_proposal = if qz_scale == 1.0 {
        InactiveProposal::StandardGaussian
    } else {
        InactiveProposal::ScaledGaussian(qz_scale)
    };
    let pseudo_weights = match r.string("sampler.pseudo_weights").as_deref() {
        None | Some("self_normalized") => PseudoWeighting::SelfNormalized,
        Some("uniform") => PseudoWeighting::Uniform,
        Some(other) => {
            r.problems.push(format!(
                "unknown sampler.pseudo_weights `{other}` (expected self_normalized or uniform)"
            ));
            PseudoWeighting::SelfNormalized
        }
    };

    let default_method = match experiment {
        Experiment::Mixture2d | Experiment::Mixture10d => SubspaceMethod::LinearRegression,
        Experiment::Lorenz96 => SubspaceMethod::PosteriorCovariance,
        Experiment::Custom => SubspaceMethod::Manual,
    };
    let method = match r.string("subspace.method") {
        None => default_method,
        Some(s) => match s.parse::<SubspaceMethod>() {
            Ok(m) => m,
            Err(e) => {
                r.problems.push(e);
                default_method
            }
        },
    };
    let construction_points = r.count("subspace.N", 1, 500);
    let mut active_dim = r.int("subspace.active_dim").and_then(|d| {
        if d < 1 {
            r.problems.push(format!("subspace.active_dim must be ≥ 1, got {d}"));
            None
        } else {
            Some(d as usize)
        }
    });
    if method == SubspaceMethod::LinearRegression && active_dim.is_some_and(|d| d != 1) {
        r.problems.push("subspace.method linear_regression always yields active_dim = 1".into());
    }
    if method == SubspaceMethod::Manual {
        if experiment != Experiment::Custom {
            r.problems.push("subspace.method manual is only available for experiment custom".into());
        }
        active_dim = Some(active_dim.unwrap_or(1));
    }
    if method == SubspaceMethod::PosteriorCovariance && construction_points < 2 {
        r.problems.push("subspace.N must be ≥ 2 for posterior_covariance".into());
    }
    if method == SubspaceMethod::GradientCovariance && experiment != Experiment::Custom {
        r.problems.push(format!(
            "subspace.method gradient_covariance needs a likelihood gradient, which experiment {} does not provide",
            experiment.as_str()
        ));
    }

    let max_lag = r.count("diagnostics.max_lag", 1, 50);
    let thin = r.count("diagnostics.thin", 1, if mode == Mode::Vanilla { 1 } else { nested_samples });
    let kde_points = r.count("diagnostics.kde_points", 2, 101);
    let kde_bandwidth = match r.values.get("diagnostics.kde_bandwidth").cloned() {
        Some(Value::String(s)) if s == "scott" => Bandwidth::Scott,
        Some(Value::String(s)) => {
            r.problems.push(format!("diagnostics.kde_bandwidth must be a positive number or \"scott\", got `{s}`"));
            Bandwidth::Scott
        }
        Some(_) => {
            let h = r.positive("diagnostics.kde_bandwidth", 1.0);
            Bandwidth::PerDimension(vec![h, h])
        }
        None if experiment == Experiment::Mixture2d => Bandwidth::PerDimension(vec![1.0, 1.0]),
        None => Bandwidth::Scott,
    };

    let output_dir = r
        .string("output_dir")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}-{}-{seed}", experiment.as_str(), mode.as_str())));

    if !r.problems.is_empty() {
        return Err(ConfigError { problems: r.problems });
    }
    Ok(RunConfig {
        experiment,
        seed,
        output_dir,
        subspace: SubspaceConfig {
            method,
            construction_points,
            active_dim,
            prior_variance: construction_variance,
        },
        sampler: SamplerConfig {
            mode,
            iterations,
            nested_samples,
            burn_in,
            proposal,
            inactive_proposal,
            pseudo_weights,
        },
        diagnostics: DiagnosticsConfig {
            max_lag,
            thin,
            kde_points,
            kde_bandwidth,
        },
        lorenz96: lorenz,
        custom,
    })
}

impl RunConfig {
    /// Fully resolved config in the input format; parsing it gives back `self`.
    pub fn to_toml(&self) -> String {
        let mut root = toml::Table::new();
        let float = |f: f64| Value::Float(f);
        let list = |v: &[f64]| Value::Array(v.iter().map(|f| Value::Float(*f)).collect());
        root.insert("experiment".into(), Value::String(self.experiment.as_str().into()));
        root.insert("seed".into(), Value::Integer(self.seed as i64));
        root.insert("output_dir".into(), Value::String(self.output_dir.display().to_string()));

        let mut sampler = toml::Table::new();
        let s = &self.sampler;
        sampler.insert("mode".into(), Value::String(s.mode.as_str().into()));
        sampler.insert("N".into(), Value::Integer(s.iterations as i64));
        sampler.insert("burn_in".into(), Value::Integer(s.burn_in as i64));
        sampler.insert(
            "proposal_scale".into(),
            match &s.proposal {
                ProposalSpec::Isotropic(v) => float(*v),
                ProposalSpec::PerDimension(v) => list(v),
            },
        );
        if s.mode != Mode::Vanilla {
            sampler.insert("M".into(), Value::Integer(s.nested_samples as i64));
            sampler.insert("qz_scale".into(), float(s.inactive_proposal.scale()));
            sampler.insert(
                "pseudo_weights".into(),
                Value::String(
                    match s.pseudo_weights {
                        PseudoWeighting::SelfNormalized => "self_normalized",
                        PseudoWeighting::Uniform => "uniform",
                    }
                    .into(),
                ),
            );
        }
        root.insert("sampler".into(), Value::Table(sampler));

        let mut sub = toml::Table::new();
        sub.insert("method".into(), Value::String(self.subspace.method.as_str().into()));
        sub.insert("N".into(), Value::Integer(self.subspace.construction_points as i64));
        if let Some(d) = self.subspace.active_dim {
            sub.insert("active_dim".into(), Value::Integer(d as i64));
        }
        if self.experiment != Experiment::Lorenz96 {
            sub.insert("prior_variance".into(), float(self.subspace.prior_variance));
        }
        root.insert("subspace".into(), Value::Table(sub));

        let mut diag = toml::Table::new();
        diag.insert("max_lag".into(), Value::Integer(self.diagnostics.max_lag as i64));
        diag.insert("thin".into(), Value::Integer(self.diagnostics.thin as i64));
        diag.insert("kde_points".into(), Value::Integer(self.diagnostics.kde_points as i64));
        diag.insert(
            "kde_bandwidth".into(),
            match &self.diagnostics.kde_bandwidth {
                Bandwidth::Scott => Value::String("scott".into()),
                Bandwidth::PerDimension(h) => float(h[0]),
            },
        );
        root.insert("diagnostics".into(), Value::Table(diag));

        if self.experiment == Experiment::Lorenz96 {
            let l = &self.lorenz96;
            let mut t = toml::Table::new();
            t.insert("dim".into(), Value::Integer(l.state_dim as i64));
            t.insert("F".into(), float(l.forcing));
            t.insert("t0".into(), float(l.t0));
            t.insert("t1".into(), float(l.t1));
            t.insert("step".into(), float(l.step));
            t.insert("noise_variance".into(), float(l.noise_variance));
            t.insert("prior_variance".into(), float(l.prior_variance));
            t.insert("two_scale".into(), Value::Boolean(l.two_scale.is_some()));
            root.insert("lorenz96".into(), Value::Table(t));
        }
        if let Some(c) = &self.custom {
            let mut t = toml::Table::new();
            t.insert("mean".into(), list(&c.mean));
            t.insert("variances".into(), list(&c.variances));
            root.insert("custom".into(), Value::Table(t));
        }
        toml::to_string(&root).expect("a TOML table always serializes")
    }
}
