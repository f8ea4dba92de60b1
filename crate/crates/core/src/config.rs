//! Flat `key = value` configuration files.
//!
//! ```text
//! # Frechet limit of model IV
//! [model]
//! model = IV
//! weight = pareto(beta=2, xmin=1)
//!
//! [experiment]
//! kind = max-degree
//! replications = 500
//! seed = 7
//! sweep = 1000, 10000, 100000
//!
//! [assert]
//! ks_max = 0.1
//! ```
//!
//! One entry per line. `#` starts a comment, blank lines are ignored and
//! values are trimmed. Three sections exist: `[model]`, `[experiment]` and
//! `[assert]`. Every key name is unique across sections, so entries before
//! the first header are placed by name; under a header a key must belong to
//! that section. A key may appear once per file. Lists are comma separated;
//! commas inside `(..]` do not split.
//!
//! | section      | key            | value                                              | default        |
//! |--------------|----------------|----------------------------------------------------|----------------|
//! | `model`      | `model`        | `I` .. `V`                                          | required       |
//! |              | `weight`       | `pareto(beta=.., xmin=..)`, `paretolog(beta=.., kappa=..)`, `invuniform(beta=..)` | required |
//! |              | `n`            | window size; `1e5` is accepted                      | last sweep entry, else 1000 |
//! |              | `d`            | dimension of models I-III                           | 1              |
//! |              | `alpha`        | decay exponent of models I and III                  | 2              |
//! |              | `lambda`       | intensity of models I and III                       | 1              |
//! |              | `buffer`       | buffer width, or `default` for `n^(1/d)`            | `default`      |
//! |              | `mode`         | `fast` or `naive`                                   | `fast`         |
//! |              | `max_vertices` | memory guard on simulated vertices                  | 50000000       |
//! | `experiment` | `kind`         | experiment name, e.g. `max-degree`                  | none           |
//! |              | `replications` | `R`                                                 | 100            |
//! |              | `seed`         | master seed                                         | drawn by the caller |
//! |              | `sweep`        | strictly increasing window sizes                    | `n`            |
//! |              | `intervals`    | `(a,b]` list, `inf` allowed                         | `(1,inf], (1,2], (2,inf]` |
//! |              | `theta`        | `k = ceil(n^theta)`                                 | 0.5            |
//! |              | `depth`        | ordering depth                                      | 1              |
//! |              | `thresholds`   | correspondence thresholds `a`                       | 1              |
//! |              | `tail_fraction`| top fraction for the tail slope                     | 0.01           |
//! |              | `k_variant`    | also count `D_{k,n}`: `true` / `false`              | `false`        |
//! |              | `hill_oracle`  | Hill on the iid weights: `true` / `false`           | `true`         |
//! |              | `gate`         | `refuse`, `warn` or `auto`                          | `refuse`       |
//! | `assert`     | any key of `calibration.json` | threshold override                   | calibrated value |
//!
//! Overrides are `key=value` or `section.key=value` and replace file
//! entries; their errors report line 0. Constraint violations that make a
//! model meaningless (bad dimension, model II with `beta >= d` or a
//! non-inverse-uniform weight) are errors. Models I and III outside
//! `d < min(alpha, alpha beta)` are accepted with a warning.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::{calibration, fmt_num, ExperimentConfig, ExperimentKind, GatePolicy, Interval, Thresholds};
use crate::models::{
    scaling_constants, validate, GeneratorMode, ModelConfig, ModelKind, ScalingConstants, ValidationReport,
};
use crate::weights::WeightDistribution;

/// Window size when neither `n` nor `sweep` is given.
pub const DEFAULT_N: u64 = 1_000;
/// Replication count when `replications` is not given.
pub const DEFAULT_REPLICATIONS: usize = 100;

pub const MODEL_KEYS: [&str; 9] = ["model", "weight", "n", "d", "alpha", "lambda", "buffer", "mode", "max_vertices"];
pub const EXPERIMENT_KEYS: [&str; 12] = [
    "kind",
    "replications",
    "seed",
    "sweep",
    "intervals",
    "theta",
    "depth",
    "thresholds",
    "tail_fraction",
    "k_variant",
    "hill_oracle",
    "gate",
];

/// Constraints accepted with a warning rather than rejected.
const SOFT_CONSTRAINTS: [&str; 2] = ["d < alpha", "d < alpha * beta"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Section {
    Model,
    Experiment,
    Assert,
}

impl Section {
    pub fn name(self) -> &'static str {
        match self {
            Self::Model => "model",
            Self::Experiment => "experiment",
            Self::Assert => "assert",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "model" => Some(Self::Model),
            "experiment" => Some(Self::Experiment),
            "assert" => Some(Self::Assert),
            _ => None,
        }
    }

    /// The section that owns `key`.
    pub fn of_key(key: &str) -> Option<Self> {
        if MODEL_KEYS.contains(&key) {
            Some(Self::Model)
        } else if EXPERIMENT_KEYS.contains(&key) {
            Some(Self::Experiment)
        } else if calibration().thresholds.contains_key(key) {
            Some(Self::Assert)
        } else {
            None
        }
    }
}

/// A value with the line it came from; line 0 is an override.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

/// Entries as written, before any typing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

fn config_error(line: usize, key: &str, reason: impl Into<String>) -> Error {
    Error::Config { line, key: key.to_string(), reason: reason.into() }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Self::default();
        let mut section = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| config_error(line_no, line, "unterminated section header"))?
                    .trim();
                section = Some(Section::from_name(name).ok_or_else(|| config_error(line_no, name, "unknown section"))?);
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| config_error(line_no, line, "expected `key = value`"))?;
            let key = key.trim();
            let owner = Section::of_key(key).ok_or_else(|| config_error(line_no, key, "unknown key"))?;
            if let Some(s) = section {
                if s != owner {
                    return Err(config_error(
                        line_no,
                        key,
                        format!("belongs to [{}], not [{}]", owner.name(), s.name()),
                    ));
                }
            }
            if let Some(prev) = raw.entries.get(key) {
                return Err(config_error(line_no, key, format!("already set on line {}", prev.line)));
            }
            raw.entries.insert(key.to_string(), Entry { value: value.trim().to_string(), line: line_no });
        }
        Ok(raw)
    }

    /// Applies `key=value` or `section.key=value`.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) =
            assignment.split_once('=').ok_or_else(|| config_error(0, assignment, "expected `key=value`"))?;
        let key = key.trim();
        let (section, key) = match key.split_once('.') {
            Some((s, k)) => {
                let s = Section::from_name(s.trim()).ok_or_else(|| config_error(0, s, "unknown section"))?;
                (Some(s), k.trim())
            }
            None => (None, key),
        };
        let owner = Section::of_key(key).ok_or_else(|| config_error(0, key, "unknown key"))?;
        if section.is_some_and(|s| s != owner) {
            return Err(config_error(0, key, format!("belongs to [{}]", owner.name())));
        }
        self.entries.insert(key.to_string(), Entry { value: value.trim().to_string(), line: 0 });
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    /// Typed value of `key`, if present.
    fn typed<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|err| config_error(e.line, key, reason_of(err))),
        }
    }

    /// Typed, validated configuration.
    pub fn resolve(&self) -> Result<ParsedConfig> {
        let mut warnings = Vec::new();
        let kind = self.typed("model", ModelKind::from_str)?.ok_or_else(|| config_error(0, "model", "missing"))?;
        let weight =
            self.typed("weight", WeightDistribution::from_str)?.ok_or_else(|| config_error(0, "weight", "missing"))?;
        let n = self.typed("n", parse_count)?;
        let sweep = self.typed("sweep", |s| parse_list(s, parse_count))?;
        let n = match (n, &sweep) {
            (Some(n), Some(sweep)) if sweep.last() != Some(&n) => {
                return Err(config_error(self.line("n"), "n", "must equal the last entry of `sweep`"));
            }
            (Some(n), _) => n,
            (None, Some(sweep)) => sweep.last().copied().unwrap_or(DEFAULT_N),
            (None, None) => DEFAULT_N,
        };
        let mut model = ModelConfig::new(kind, weight, n);
        if let Some(d) = self.typed("d", parse_int::<usize>)? {
            model.dim = d;
        }
        if let Some(alpha) = self.typed("alpha", parse_f64)? {
            model.alpha = alpha;
        }
        if let Some(lambda) = self.typed("lambda", parse_f64)? {
            model.lambda = lambda;
        }
        if let Some(buffer) = self.typed("buffer", parse_buffer)? {
            model.buffer = buffer;
        }
        if let Some(mode) = self.typed("mode", GeneratorMode::from_str)? {
            model.mode = mode;
        }
        if let Some(cap) = self.typed("max_vertices", parse_count)? {
            model.max_vertices = cap;
        }

        let validation = validate(&model);
        for c in validation.violations() {
            let reason = format!("{} violated", c.constraint);
            if SOFT_CONSTRAINTS.contains(&c.constraint.as_str()) {
                warnings.push(format!("model {}: {reason}", model.kind));
            } else {
                let key = constraint_key(&c.constraint);
                return Err(config_error(self.line(key), key, reason));
            }
        }
        if validation.outside_proven_regime() {
            warnings.push(format!("model {} is outside the proven regime", model.kind));
        }
        let scaling = match scaling_constants(&model) {
            Ok(s) => Some(s),
            Err(e) => {
                warnings.push(format!("no scaling constants: {e}"));
                None
            }
        };

        let seed = self.typed("seed", parse_int::<u64>)?;
        let experiment_kind = self.typed("kind", ExperimentKind::from_str)?;
        let mut exp = ExperimentConfig::new(
            experiment_kind.unwrap_or(ExperimentKind::MaxDegree),
            model.clone(),
            DEFAULT_REPLICATIONS,
            seed.unwrap_or(0),
        );
        if let Some(sweep) = sweep {
            exp.sweep = sweep;
        }
        if let Some(r) = self.typed("replications", parse_int::<usize>)? {
            exp.replications = r;
        }
        if let Some(v) = self.typed("intervals", |s| parse_list(s, Interval::from_str))? {
            exp.intervals = v;
        }
        if let Some(v) = self.typed("theta", parse_f64)? {
            exp.theta = v;
        }
        if let Some(v) = self.typed("depth", parse_int::<usize>)? {
            exp.depth = v;
        }
        if let Some(v) = self.typed("thresholds", |s| parse_list(s, parse_f64))? {
            exp.thresholds = v;
        }
        if let Some(v) = self.typed("tail_fraction", parse_f64)? {
            exp.tail_fraction = v;
        }
        if let Some(v) = self.typed("k_variant", parse_bool)? {
            exp.k_variant = v;
        }
        if let Some(v) = self.typed("hill_oracle", parse_bool)? {
            exp.hill_oracle = v;
        }
        if let Some(v) = self.typed("gate", GatePolicy::from_str)? {
            exp.gate = v;
        }
        let mut overrides = BTreeMap::new();
        for key in calibration().thresholds.keys() {
            if let Some(v) = self.typed(key, parse_f64)? {
                overrides.insert(key.clone(), v);
            }
        }
        exp.assert = Thresholds::resolve(&overrides)?.0;
        if experiment_kind.is_some() {
            exp.check().map_err(|e| match e {
                Error::InvalidParameter { name, reason } => config_error(self.line(name), name, reason),
                other => other,
            })?;
        }
        let experiment = experiment_kind.map(|_| exp.clone());
        Ok(ParsedConfig { model, experiment, seed, validation, scaling, warnings, template: exp })
    }
}

fn reason_of(err: Error) -> String {
    match err {
        Error::InvalidParameter { reason, .. } => reason,
        other => other.to_string(),
    }
}

fn constraint_key(constraint: &str) -> &'static str {
    match constraint {
        "n >= 1" => "n",
        "alpha > 0" => "alpha",
        "lambda > 0" => "lambda",
        "buffer >= 0" => "buffer",
        "weight = invuniform" | "beta < d" => "weight",
        _ => "d",
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::param("value", format!("`{s}` is not a number")))
}

fn parse_int<T: FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::param("value", format!("`{s}` is not a nonnegative integer")))
}

/// Integer, also in integral scientific form such as `1e5`.
fn parse_count(s: &str) -> Result<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15 => Ok(x as u64),
        _ => Err(Error::param("value", format!("`{s}` is not a nonnegative integer"))),
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::param("value", format!("expected true or false, got `{other}`"))),
    }
}

fn parse_buffer(s: &str) -> Result<Option<f64>> {
    if s.trim() == "default" {
        Ok(None)
    } else {
        parse_f64(s).map(Some)
    }
}

/// Comma-separated list; commas inside brackets do not split.
fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(item(&s[start..i])?);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() || !out.is_empty() {
        out.push(item(&s[start..])?);
    }
    Ok(out)
}

/// A parsed configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub model: ModelConfig,
    /// Present when `kind` is set.
    pub experiment: Option<ExperimentConfig>,
    pub seed: Option<u64>,
    pub validation: ValidationReport,
    pub scaling: Option<ScalingConstants>,
    pub warnings: Vec<String>,
    /// Experiment settings with every default filled in; the model of
    /// single-run subcommands reads its gate policy and thresholds here.
    pub template: ExperimentConfig,
}

impl ParsedConfig {
    /// Every effective value, in the file format. Parsing the dump yields
    /// the same configuration.
    pub fn dump(&self) -> String {
        let m = &self.model;
        let e = &self.template;
        let mut s = String::from("# effective configuration\n");
        if let Some(sc) = &self.scaling {
            let _ = writeln!(s, "# p = {}, gamma = {}, xi = {}", sc.p, sc.gamma, sc.xi);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "# warning: {w}");
        }
        let _ = writeln!(s, "\n[model]");
        let _ = writeln!(s, "model = {}", m.kind);
        let _ = writeln!(s, "weight = {}", m.weight);
        let _ = writeln!(s, "n = {}", m.n);
        let _ = writeln!(s, "d = {}", m.dim);
        let _ = writeln!(s, "alpha = {}", m.alpha);
        let _ = writeln!(s, "lambda = {}", m.lambda);
        let _ = writeln!(s, "buffer = {}", m.buffer.map_or("default".to_string(), |b| b.to_string()));
        let _ = writeln!(s, "mode = {}", m.mode);
        let _ = writeln!(s, "max_vertices = {}", m.max_vertices);
        let _ = writeln!(s, "\n[experiment]");
        if let Some(x) = &self.experiment {
            let _ = writeln!(s, "kind = {}", x.kind);
        }
        let _ = writeln!(s, "replications = {}", e.replications);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        let join = |v: Vec<String>| v.join(", ");
        let _ = writeln!(s, "sweep = {}", join(e.sweep.iter().map(u64::to_string).collect()));
        let _ = writeln!(s, "intervals = {}", join(e.intervals.iter().map(Interval::to_string).collect()));
        let _ = writeln!(s, "theta = {}", e.theta);
        let _ = writeln!(s, "depth = {}", e.depth);
        let _ = writeln!(s, "thresholds = {}", join(e.thresholds.iter().map(|&a| fmt_num(a)).collect()));
        let _ = writeln!(s, "tail_fraction = {}", e.tail_fraction);
        let _ = writeln!(s, "k_variant = {}", e.k_variant);
        let _ = writeln!(s, "hill_oracle = {}", e.hill_oracle);
        let _ = writeln!(s, "gate = {}", e.gate);
        let _ = writeln!(s, "\n[assert]");
        for (k, v) in &e.assert {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Sets the master seed everywhere it is echoed.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.template.master_seed = seed;
        if let Some(e) = &mut self.experiment {
            e.master_seed = seed;
        }
    }
}

/// Parses `text` and applies `overrides`.
pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<ParsedConfig> {
    let mut raw = RawConfig::parse(text)?;
    for o in overrides {
        raw.set(o)?;
    }
    raw.resolve()
}

/// Reads the file at `path`, or starts empty when `path` is `None`, and
/// applies `overrides`.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<ParsedConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| config_error(0, "config", format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}
