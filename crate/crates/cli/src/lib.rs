//! Command-line frontend: config parsing, seeding, dispatch and output.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 a
//! failed check under `experiment --assert`.
//!
//! Output files land in `--out` and are named after the subcommand, model,
//! window size and seed; none of them depends on the worker count or the
//! wall clock. Timing goes to standard error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;
use serde::Serialize;

use scalefree::config::{parse_config, ParsedConfig};
use scalefree::estimators::{hill_degrees, intermediate_sequence};
use scalefree::experiments::{apply_gate, fmt_num, run_experiment, ExperimentReport, Thresholds};
use scalefree::models::{generate, generate_with_edges, write_edge_list, DegreeSample, ModelConfig, ModelKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_ASSERT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "scalefree", version, about = "Scale-free random graphs and the statistics of their large degrees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one graph and write a summary, optionally with its edges.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Also write the edge list.
        #[arg(long)]
        edges: bool,
    },
    /// Simulate one graph and write the weight and degree of every window vertex.
    Degrees {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate one graph and estimate the tail index of its degrees.
    Hill {
        #[command(flatten)]
        common: Common,
        /// Number of upper order statistics; defaults to ceil(n^theta).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run a Monte Carlo experiment.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Experiment kind; overrides `kind` of the config.
        #[arg(long)]
        kind: Option<String>,
        /// Exit with code 3 when a check fails.
        #[arg(long)]
        assert: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override `key=value` or `section.key=value`; repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Further overrides.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Master seed; drawn from the OS and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of logical CPUs.
    #[arg(short, long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// Output directory.
    #[arg(short, long, default_value = ".")]
    pub out: PathBuf,
    /// Which report files to write.
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }

    fn json(self) -> bool {
        matches!(self, Self::Json | Self::Both)
    }
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_CONFIG, message: e.to_string() }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_RUNTIME, message: e.to_string() }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command) -> Result<i32, Failure> {
    let start = Instant::now();
    let code = match command {
        Command::Generate { common, edges } => single_run(&common, Single::Generate { edges })?,
        Command::Degrees { common } => single_run(&common, Single::Degrees)?,
        Command::Hill { common, k } => single_run(&common, Single::Hill { k })?,
        Command::Experiment { common, kind, assert } => experiment(&common, kind, assert)?,
    };
    eprintln!("wall clock: {:.3} s", start.elapsed().as_secs_f64());
    Ok(code)
}

/// Parses the config with the command-line overrides and fixes the seed.
fn load(common: &Common, extra: &[String]) -> Result<ParsedConfig, Failure> {
    let mut overrides = common.set.clone();
    overrides.extend(common.overrides.iter().cloned());
    overrides.extend(extra.iter().cloned());
    let mut parsed = parse_config(common.config.as_deref(), &overrides).map_err(Failure::config)?;
    let seed = match common.seed.or(parsed.seed) {
        Some(s) => s,
        None => {
            let s = rand::rngs::OsRng.next_u64();
            eprintln!("seed = {s} (drawn from the OS; pass --seed {s} to repeat this run)");
            s
        }
    };
    parsed.set_seed(seed);
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

fn experiment(common: &Common, kind: Option<String>, assert: bool) -> Result<i32, Failure> {
    let extra: Vec<String> = kind.map(|k| format!("kind={k}")).into_iter().collect();
    let parsed = load(common, &extra)?;
    let mut config =
        parsed.experiment.clone().ok_or_else(|| Failure::config("no experiment kind: set `kind` or pass --kind"))?;
    config.workers = common.workers.map_or(0, |w| w as usize);
    let report = run_experiment(&config).map_err(Failure::runtime)?;
    let stem = report.file_stem();
    write_file(&common.out, &format!("{stem}.conf"), &parsed.dump())?;
    if common.format.csv() {
        write_file(&common.out, &format!("{stem}.csv"), &report.to_csv())?;
    }
    if common.format.json() {
        write_file(&common.out, &format!("{stem}.json"), &report.to_json())?;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", check_lines(&report));
    eprintln!("experiment time: {:.3} s", report.wall_clock.as_secs_f64());
    Ok(if assert && !report.passed() { EXIT_ASSERT } else { EXIT_OK })
}

/// One line per check: `PASS` or `FAIL`, name, window size, observed value
/// and bounds.
pub fn check_lines(report: &ExperimentReport) -> String {
    let mut s = String::new();
    let bound = |b: Option<f64>| b.map_or("-".to_string(), fmt_num);
    for c in &report.checks {
        let n = c.n.map_or("all".to_string(), |n| n.to_string());
        let _ = write!(
            s,
            "{} {} n={} observed={} bounds=[{}, {}]",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            n,
            fmt_num(c.observed),
            bound(c.lower),
            bound(c.upper)
        );
        if let Some(note) = &c.note {
            let _ = write!(s, " ({note})");
        }
        s.push('\n');
    }
    s
}

enum Single {
    Generate { edges: bool },
    Degrees,
    Hill { k: Option<usize> },
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    config: &'a ModelConfig,
    seed: u64,
    validation: &'a scalefree::models::ValidationReport,
    scaling: Option<scalefree::ScalingConstants>,
    truncation_bias: Option<f64>,
    window_vertices: usize,
    simulated_vertices: u64,
    max_degree: u64,
    mean_degree: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hill: Option<HillOutput>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct HillOutput {
    k: usize,
    value: f64,
    std_error: f64,
    /// `1/gamma` of the model, when defined.
    target: Option<f64>,
}

fn single_run(common: &Common, what: Single) -> Result<i32, Failure> {
    let parsed = load(common, &[])?;
    let seed = parsed.seed.expect("seed fixed by load");
    let thresholds = Thresholds::resolve(&parsed.template.assert).map_err(Failure::config)?;
    let mut warnings = parsed.warnings.clone();
    let (model, bias) =
        apply_gate(&parsed.model, parsed.template.gate, thresholds.get("truncation_gate"), &mut warnings)
            .map_err(Failure::runtime)?;
    let (name, with_edges) = match what {
        Single::Generate { edges } => ("generate", edges),
        Single::Degrees => ("degrees", false),
        Single::Hill { .. } => ("hill", false),
    };
    let stem = format!("{name}_{}_n{}_s{seed}", model.kind, model.n);
    let (sample, edges) = if with_edges {
        let (s, e) = generate_with_edges(&model, seed).map_err(Failure::runtime)?;
        (s, Some(e))
    } else {
        (generate(&model, seed).map_err(Failure::runtime)?, None)
    };
    for w in &warnings[parsed.warnings.len()..] {
        eprintln!("warning: {w}");
    }
    let hill = match what {
        Single::Hill { k } => {
            let k =
                k.unwrap_or_else(|| intermediate_sequence(sample.window_count().max(2) as u64, parsed.template.theta));
            let h = hill_degrees(&sample.degrees, k).map_err(Failure::runtime)?;
            Some(HillOutput {
                k,
                value: h.value,
                std_error: h.std_error,
                target: sample.scaling.map(|s| 1.0 / s.gamma),
            })
        }
        _ => None,
    };
    let summary =
        summarise(name, &parsed, &sample, bias, edges.as_ref().map(|e| e.total_multiplicity()), hill, warnings);
    write_file(&common.out, &format!("{stem}.conf"), &parsed.dump())?;
    if common.format.json() {
        write_file(&common.out, &format!("{stem}.json"), &to_json(&summary))?;
    }
    if let Some(edges) = &edges {
        let mut buf = Vec::new();
        let header = edge_header(&model, seed);
        write_edge_list(&mut buf, &header, edges, model.kind == ModelKind::NorrosReittu).map_err(Failure::runtime)?;
        write_file(&common.out, &format!("{stem}.edges"), &String::from_utf8(buf).expect("ASCII output"))?;
    }
    if matches!(what, Single::Degrees) && common.format.csv() {
        write_file(&common.out, &format!("{stem}.csv"), &degrees_csv(&sample))?;
    }
    println!(
        "model {} n={} seed={seed}: {} window vertices, max degree {}, mean degree {}",
        model.kind,
        model.n,
        summary.window_vertices,
        summary.max_degree,
        fmt_num(summary.mean_degree)
    );
    if let Some(h) = &summary.hill {
        println!(
            "hill k={} estimate={} std_error={} target={}",
            h.k,
            fmt_num(h.value),
            fmt_num(h.std_error),
            h.target.map_or("-".to_string(), fmt_num)
        );
    }
    Ok(EXIT_OK)
}

fn summarise<'a>(
    command: &'a str,
    parsed: &'a ParsedConfig,
    sample: &'a DegreeSample,
    truncation_bias: Option<f64>,
    edges: Option<u64>,
    hill: Option<HillOutput>,
    warnings: Vec<String>,
) -> Summary<'a> {
    let total: u64 = sample.degrees.iter().sum();
    let count = sample.window_count();
    Summary {
        command,
        config: &sample.config,
        seed: sample.seed,
        validation: &parsed.validation,
        scaling: sample.scaling,
        truncation_bias,
        window_vertices: count,
        simulated_vertices: sample.simulated_vertices,
        max_degree: sample.max_degree(),
        mean_degree: if count == 0 { 0.0 } else { total as f64 / count as f64 },
        edges,
        hill,
        warnings,
    }
}

/// One-line echo of the model and seed for the edge-list header.
fn edge_header(model: &ModelConfig, seed: u64) -> String {
    format!(
        "model={} weight={} n={} d={} alpha={} lambda={} buffer={} mode={} seed={seed}",
        model.kind,
        model.weight,
        model.n,
        model.dim,
        model.alpha,
        model.lambda,
        model.buffer.map_or("default".to_string(), |b| b.to_string()),
        model.mode
    )
}

/// `vertex,x1..xd,weight,degree`; coordinates only for models I-III.
fn degrees_csv(sample: &DegreeSample) -> String {
    let d = if sample.positions.is_empty() { 0 } else { sample.config.effective_dim() };
    let mut s = String::from("vertex");
    for j in 1..=d {
        let _ = write!(s, ",x{j}");
    }
    s.push_str(",weight,degree\n");
    for i in 0..sample.window_count() {
        let _ = write!(s, "{}", i + 1);
        if d > 0 {
            for x in sample.position(i) {
                let _ = write!(s, ",{}", fmt_num(*x));
            }
        }
        let _ = writeln!(s, ",{},{}", fmt_num(sample.weights[i]), sample.degrees[i]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use scalefree::experiments::ExperimentKind;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn experiment_kind_flag_parses() {
        let cli = Cli::try_parse_from(["scalefree", "experiment", "--kind", "max-degree", "--assert", "n=10"]).unwrap();
        match cli.command {
            Command::Experiment { kind, assert, common } => {
                assert_eq!(kind.as_deref(), Some("max-degree"));
                assert!(assert);
                assert_eq!(common.overrides, vec!["n=10".to_string()]);
                assert!(kind.unwrap().parse::<ExperimentKind>().is_ok());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_workers_are_rejected() {
        assert!(Cli::try_parse_from(["scalefree", "degrees", "--workers", "0"]).is_err());
    }
}
