//! Command-line front end: argument parsing, config validation and the
//! `construct` / `verify` / `entropy` / `mobius` / `correlate` pipelines.
//!
//! Exit status: 0 all checks pass (flags allowed), 1 computation or I/O error,
//! 2 invalid configuration, 3 at least one check failed. Invalid
//! configurations are rejected before any computation and write no files.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::check::{Check, CheckReport};
use crate::complexity::{entropy_estimate, verify_complexity_chain};
use crate::construct::{build, schedule, stage_json, verify_stage_properties, ScheduleEntry, ScheduleOverride};
use crate::error::Error;
use crate::metrics::{difference_density, max_gap, returning_times, toeplitz_coverage};
use crate::mobius::{
    check_against_trial_division, check_multiplicativity, correlate, mobius_sieve, Observable, SequenceObservable,
};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::report::{canonical_json, emit_report, Report};
use crate::seq::{parse_source_spec, write_seqw, Alphabet, BiSequence, CylinderSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CHECKS: i32 = 3;

const TRIAL_DIVISION_LIMIT: usize = 10_000;
const MULTIPLICATIVITY_PAIRS: usize = 1000;

#[derive(Parser, Debug)]
#[command(name = "toeplitz", version, about = "Toeplitz approximation of symbolic sequences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Alphabet size; symbols are 1..=k.
    #[arg(long, default_value_t = 2)]
    pub k: u16,
    /// periodic:<s1>,<s2>,... | constant:<s> | bernoulli:seed=<u64> | file:<path>
    #[arg(long)]
    pub source: Option<String>,
    /// Tolerance as a rational `p/q`.
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub stages: usize,
    /// Half-width N of the checked window [-N, N].
    #[arg(long)]
    pub window: Option<i64>,
    /// Fix l_M for a stage, as `M=value`. Repeatable.
    #[arg(long = "override-l", value_name = "M=VALUE")]
    pub override_l: Vec<String>,
    /// Fix eps_M for a stage, as `M=p/q`. Repeatable.
    #[arg(long = "override-eps", value_name = "M=P/Q")]
    pub override_eps: Vec<String>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build b and check the per-stage properties.
    Construct {
        #[command(flatten)]
        common: CommonArgs,
        /// Write the construction trace (JSON).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write b on [-N, N] as a SEQW file.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Build b and run every finitary check: stages, density, complexity chain, coverage.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Window for the complexity chain (default 3 * l_max).
        #[arg(long)]
        chain_window: Option<i64>,
    },
    /// Block-count entropy profile of the source.
    Entropy {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        /// Write the profile as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Mobius sieve, Mertens checkpoints and self-checks.
    Mobius {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "N")]
        n: u64,
        /// Write mu(1..=N), one value per line.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Correlation of mu with a sequence observable (b when --epsilon is given).
    Correlate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "N")]
        n: u64,
        /// Symbol recoding, e.g. `1=1,2=-1`.
        #[arg(long)]
        recode: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Task {
    Construct { trace: Option<PathBuf>, dump: Option<PathBuf> },
    Verify { chain_window: Option<i64> },
    Entropy { n_max: usize, csv: Option<PathBuf> },
    Mobius { n: u64, table: Option<PathBuf> },
    Correlate { n: u64, recode: Option<String> },
}

/// Everything a run depends on; echoed verbatim into the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub k: u16,
    pub source: Option<String>,
    pub epsilon: Option<String>,
    pub stages: usize,
    pub window: Option<i64>,
    pub override_l: Vec<String>,
    pub override_eps: Vec<String>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    #[serde(flatten)]
    pub task: Task,
}

impl ExperimentConfig {
    fn with(common: CommonArgs, task: Task) -> Self {
        ExperimentConfig {
            k: common.k,
            source: common.source,
            epsilon: common.epsilon,
            stages: common.stages,
            window: common.window,
            override_l: common.override_l,
            override_eps: common.override_eps,
            out: common.out,
            seed: common.seed,
            task,
        }
    }

    pub fn from_command(cmd: Command) -> Self {
        match cmd {
            Command::Construct { common, trace, dump } => Self::with(common, Task::Construct { trace, dump }),
            Command::Verify { common, chain_window } => Self::with(common, Task::Verify { chain_window }),
            Command::Entropy { common, n_max, csv } => Self::with(common, Task::Entropy { n_max, csv }),
            Command::Mobius { common, n, table } => Self::with(common, Task::Mobius { n, table }),
            Command::Correlate { common, n, recode } => Self::with(common, Task::Correlate { n, recode }),
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(Error),
    #[error("computation failed: {0}")]
    Compute(Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Compute(_) => EXIT_COMPUTE,
        }
    }
}

/// A finished run: the report plus side files, none of which are written yet.
#[derive(Debug)]
pub struct RunOutput {
    pub report: Report,
    pub report_text: String,
    pub side_files: Vec<(PathBuf, String)>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() {
            EXIT_OK
        } else {
            EXIT_CHECKS
        }
    }
}

/// Validated inputs shared by the sequence-based pipelines.
struct Plan {
    source: Option<BiSequence>,
    epsilon: Option<Rational>,
    overrides: Vec<ScheduleOverride>,
    schedule: Option<Vec<ScheduleEntry>>,
    window: i64,
}

fn parse_overrides(cfg: &ExperimentConfig) -> Result<Vec<ScheduleOverride>, Error> {
    let split = |raw: &str, flag: &str| -> Result<(usize, String), Error> {
        let (m, v) = raw
            .split_once('=')
            .ok_or_else(|| Error::ParameterOutOfRange(format!("--{flag} expects M=value, got `{raw}`")))?;
        let m: usize =
            m.trim().parse().map_err(|_| Error::ParameterOutOfRange(format!("--{flag}: bad stage `{m}`")))?;
        Ok((m, v.trim().to_string()))
    };
    let mut out: std::collections::BTreeMap<usize, ScheduleOverride> = Default::default();
    let blank = |m: usize| ScheduleOverride { stage: m, epsilon: None, l: None };
    for raw in &cfg.override_l {
        let (m, v) = split(raw, "override-l")?;
        let l: i64 = v.parse().map_err(|_| Error::ParameterOutOfRange(format!("--override-l: bad value `{v}`")))?;
        out.entry(m).or_insert_with(|| blank(m)).l = Some(l);
    }
    for raw in &cfg.override_eps {
        let (m, v) = split(raw, "override-eps")?;
        out.entry(m).or_insert_with(|| blank(m)).epsilon = Some(parse_rational(&v)?);
    }
    Ok(out.into_values().collect())
}

fn validate(cfg: &ExperimentConfig) -> Result<Plan, Error> {
    let alphabet = Alphabet::new(cfg.k)?;
    let needs_source = !matches!(cfg.task, Task::Mobius { .. });
    let needs_construction = matches!(cfg.task, Task::Construct { .. } | Task::Verify { .. })
        || (matches!(cfg.task, Task::Correlate { .. }) && cfg.epsilon.is_some());

    let source = match (&cfg.source, needs_source) {
        (Some(s), true) => Some(parse_source_spec(s, alphabet)?),
        (None, true) => return Err(Error::Precondition("--source is required".into())),
        (_, false) => None,
    };
    let overrides = parse_overrides(cfg)?;
    let (epsilon, sched) = if needs_construction {
        let raw = cfg.epsilon.as_deref().ok_or_else(|| Error::Precondition("--epsilon is required".into()))?;
        let eps = parse_rational(raw)?;
        let sched = schedule(&eps, alphabet, cfg.stages, &overrides)?;
        (Some(eps), Some(sched))
    } else {
        (None, None)
    };

    let window = match &cfg.task {
        Task::Construct { .. } | Task::Verify { .. } => {
            let l_max = sched.as_ref().and_then(|s| s.last()).map(|e| e.l).expect("schedule");
            let w = cfg.window.unwrap_or(l_max);
            if w < l_max {
                return Err(Error::Precondition(format!("--window {w} must be >= l_max = {l_max}")));
            }
            if let Task::Verify { chain_window: Some(c) } = &cfg.task {
                if *c < 2 * l_max {
                    return Err(Error::Precondition(format!("--chain-window {c} must be >= 2*l_max = {}", 2 * l_max)));
                }
            }
            w
        }
        Task::Entropy { n_max, .. } => {
            let w = cfg.window.unwrap_or(1000);
            if *n_max < 1 || w < 0 || *n_max as i64 > 2 * w + 1 {
                return Err(Error::Precondition(format!("need 1 <= n_max <= 2N+1 (n_max={n_max}, N={w})")));
            }
            w
        }
        Task::Mobius { n, .. } | Task::Correlate { n, .. } => {
            if *n == 0 {
                return Err(Error::EmptyRange("--N must be >= 1".into()));
            }
            if *n > u32::MAX as u64 {
                return Err(Error::ParameterOutOfRange(format!("--N {n} is too large")));
            }
            0
        }
    };
    if let Task::Correlate { recode: Some(r), .. } = &cfg.task {
        parse_recoding(r, alphabet)?;
    }
    Ok(Plan { source, epsilon, overrides, schedule: sched, window })
}

/// `1=1,2=-1` style symbol recoding; every symbol must be assigned exactly once.
fn parse_recoding(text: &str, alphabet: Alphabet) -> Result<Vec<f64>, Error> {
    let k = usize::from(alphabet.k());
    let mut vals: Vec<Option<f64>> = vec![None; k];
    for item in text.split(',') {
        let (s, v) = item
            .split_once('=')
            .ok_or_else(|| Error::ParameterOutOfRange(format!("recoding item `{item}` is not s=value")))?;
        let s: u16 =
            s.trim().parse().map_err(|_| Error::ParameterOutOfRange(format!("bad symbol `{s}` in recoding")))?;
        alphabet.check(s)?;
        let v: f64 =
            v.trim().parse().map_err(|_| Error::ParameterOutOfRange(format!("bad value `{v}` in recoding")))?;
        let slot = &mut vals[usize::from(s) - 1];
        if slot.is_some() {
            return Err(Error::ParameterOutOfRange(format!("symbol {s} recoded twice")));
        }
        *slot = Some(v);
    }
    vals.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::ParameterOutOfRange(format!("symbol {} not recoded", i + 1))))
        .collect()
}

fn q(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

/// Validates, computes, and renders; writes nothing.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let plan = validate(cfg).map_err(RunError::Config)?;
    let mut report = Report::new(cfg.to_json());
    let mut side_files = Vec::new();
    let compute = |r: Result<(), Error>| r.map_err(RunError::Compute);

    match &cfg.task {
        Task::Construct { trace: trace_out, dump } => compute((|| {
            let a = plan.source.as_ref().expect("validated");
            let eps = plan.epsilon.as_ref().expect("validated");
            let n = plan.window;
            let (b, trace) = construct_common(a, eps, cfg.stages, &plan, &mut report)?;
            report.checks.extend(verify_stage_properties(&trace, &b, n)?);
            density_checks(a, &b, &trace, eps, n, &mut report)?;
            if let Some(path) = trace_out {
                side_files.push((path.clone(), canonical_json(&trace.to_json())));
            }
            if let Some(path) = dump {
                side_files.push((path.clone(), write_seqw(cfg.k, -n, &b.values(-n, n)?)));
            }
            Ok(())
        })())?,
        Task::Verify { chain_window } => compute((|| {
            let a = plan.source.as_ref().expect("validated");
            let eps = plan.epsilon.as_ref().expect("validated");
            let n = plan.window;
            let (b, trace) = construct_common(a, eps, cfg.stages, &plan, &mut report)?;
            report.checks.extend(verify_stage_properties(&trace, &b, n)?);
            density_checks(a, &b, &trace, eps, n, &mut report)?;

            let l_max = trace.l(trace.max_stage());
            let cw = chain_window.unwrap_or(3 * l_max);
            let chain = verify_complexity_chain(a, &b, &trace, cw)?;
            report.checks.extend(chain.checks);
            let sizes: Vec<Value> = chain
                .stages
                .iter()
                .map(|s| {
                    json!({
                        "M": s.stage,
                        "l": s.l,
                        "aligned_counts": s.aligned_counts,
                        "aligned_b": s.aligned_b,
                        "blocks_a": s.blocks_a,
                        "blocks_b": s.blocks_b,
                        "log_ratio_b_over_a": s.log_ratio,
                    })
                })
                .collect();
            report.metrics.insert("complexity_chain".into(), json!({ "window": cw, "stages": sizes }));

            let cov = toeplitz_coverage(&b, &trace, n)?;
            let name = "toeplitz_coverage";
            report.checks.push(if cov.covered == cov.total {
                Check::pass(name)
            } else {
                let first = cov.least_stage.iter().find(|(_, m)| m.is_none()).map(|(i, _)| *i);
                Check::fail(name, json!({ "index": first }))
            });
            let hist: Map<String, Value> =
                cov.histogram().into_iter().map(|(m, c)| (m.to_string(), json!(c))).collect();
            report.metrics.insert(
                "coverage".into(),
                json!({ "fraction": q(&cov.fraction), "radius": cov.radius, "first_stage_histogram": hist }),
            );

            for params in &trace.stages {
                let m = params.stage;
                let rt = returning_times(&b, &CylinderSpec::new(params.varpi.clone()), n)?;
                let (lo, hi) = rt.tested;
                let first = lo.div_euclid(params.l) + i64::from(lo.rem_euclid(params.l) != 0);
                let missing = (first..).map(|r| r * params.l).take_while(|t| *t <= hi).find(|t| !rt.contains(*t));
                let name = format!("returning_times_{m}");
                report.checks.push(match missing {
                    None => Check::pass(name),
                    Some(t) => Check::fail(name, json!({ "index": t })),
                });
                let gap = max_gap(&rt)?;
                let name = format!("max_gap_{m}");
                report.checks.push(if gap <= params.l {
                    Check::pass(name).with_detail(format!("{gap} <= {}", params.l))
                } else {
                    Check::fail(name, json!({ "gap": gap, "l": params.l }))
                });
            }
            Ok(())
        })())?,
        Task::Entropy { n_max, csv } => compute((|| {
            let a = plan.source.as_ref().expect("validated");
            let profile = entropy_estimate(a, *n_max, plan.window)?;
            let points: Vec<Value> = profile
                .points
                .iter()
                .map(|p| json!({ "n": p.n, "count": p.count, "log_count_over_n": p.log_count_over_n }))
                .collect();
            report.metrics.insert("entropy_estimate".into(), json!(profile.estimate()));
            report.metrics.insert("log_base".into(), json!("e"));
            report.metrics.insert("profile".into(), Value::Array(points));
            report.metrics.insert("window".into(), json!(plan.window));
            if let Some(path) = csv {
                side_files.push((path.clone(), profile.to_csv()));
            }
            Ok(())
        })())?,
        Task::Mobius { n, table: table_out } => compute((|| {
            let n = *n as usize;
            let table = mobius_sieve(n)?;
            report.checks.push(if table.mu(1) == 1 {
                Check::pass("mu(1)=1")
            } else {
                Check::fail("mu(1)=1", json!({ "index": 1 }))
            });
            report.checks.push(check_against_trial_division(&table, TRIAL_DIVISION_LIMIT));
            report.checks.push(check_multiplicativity(&table, MULTIPLICATIVITY_PAIRS, cfg.seed));
            let mut mertens = Map::new();
            for cp in crate::checkpoints(n as u64) {
                mertens.insert(cp.to_string(), json!(table.mertens(cp as usize)?));
            }
            let sf = table.squarefree_count(n)?;
            report.metrics.insert("mertens".into(), Value::Object(mertens));
            report.metrics.insert("squarefree_count".into(), json!(sf));
            report.metrics.insert("squarefree_density".into(), json!(sf as f64 / n as f64));
            report.metrics.insert("six_over_pi_squared".into(), json!(6.0 / (std::f64::consts::PI.powi(2))));
            if let Some(path) = table_out {
                side_files.push((path.clone(), table.to_text()));
            }
            Ok(())
        })())?,
        Task::Correlate { n, recode } => compute((|| {
            let a = plan.source.as_ref().expect("validated");
            let seq = match &plan.epsilon {
                Some(eps) => construct_common(a, eps, cfg.stages, &plan, &mut report)?.0,
                None => a.clone(),
            };
            let observable = match recode {
                Some(r) => SequenceObservable::recoded(seq, parse_recoding(r, a.alphabet())?)?,
                None => SequenceObservable::identity(seq),
            };
            let table = mobius_sieve(*n as usize)?;
            let rep = correlate(&table, &observable, *n)?;
            let bound = observable.bound();
            let name = "prefix_sums_bounded";
            report.checks.push(match rep.checkpoints.iter().find(|c| c.1.abs() > bound) {
                None => Check::pass(name),
                Some(c) => Check::fail(name, json!({ "index": c.0, "value": c.1 })),
            });
            let mut cps = Map::new();
            for (cp, s) in &rep.checkpoints {
                cps.insert(cp.to_string(), json!(s));
            }
            report.metrics.insert("observable".into(), json!(rep.observable));
            report.metrics.insert("max_abs_xi".into(), json!(rep.max_abs_xi));
            report.metrics.insert("correlation".into(), Value::Object(cps));
            Ok(())
        })())?,
    }

    let report_text = emit_report(&report);
    Ok(RunOutput { report, report_text, side_files })
}

fn construct_common(
    a: &BiSequence,
    eps: &Rational,
    stages: usize,
    plan: &Plan,
    report: &mut Report,
) -> Result<(BiSequence, crate::construct::ConstructionTrace), Error> {
    debug_assert!(plan.schedule.is_some());
    let (b, mut trace) = build(a, eps, stages, &plan.overrides, None)?;
    let half = trace.l(trace.max_stage() - 1);
    trace.record_provenance(-half, half - 1)?;
    let name = "provenance_replay";
    report.checks.push(match trace.replay_mismatch(&b)? {
        None => Check::pass(name),
        Some(i) => Check::fail(name, json!({ "index": i })),
    });
    report.stages = trace.stages.iter().map(stage_json).collect();
    Ok((b, trace))
}

fn density_checks(
    a: &BiSequence,
    b: &BiSequence,
    trace: &crate::construct::ConstructionTrace,
    eps: &Rational,
    n: i64,
    report: &mut Report,
) -> Result<(), Error> {
    let d = difference_density(a, b, n)?;
    let bound_sum: Rational = trace.stages.iter().map(|p| p.density_bound(a.alphabet())).sum();
    let mut checks = CheckReport::new();
    let detail = format!("{} < {}", format_rational(&d), format_rational(eps));
    checks.push(if &d < eps {
        Check::pass("density<epsilon").with_detail(detail)
    } else {
        Check::fail("density<epsilon", json!({ "density": q(&d) })).with_detail(detail)
    });
    let detail = format!("{} <= {}", format_rational(&d), format_rational(&bound_sum));
    checks.push(if d <= bound_sum {
        Check::pass("density<=stage_bound_sum").with_detail(detail)
    } else {
        Check::fail("density<=stage_bound_sum", json!({ "density": q(&d) })).with_detail(detail)
    });
    report.checks.extend(checks);
    report.metrics.insert("difference_density".into(), q(&d));
    report.metrics.insert("stage_bound_sum".into(), q(&bound_sum));
    report.metrics.insert("window".into(), json!(n));
    Ok(())
}

/// Runs `cfg`, writes the report (to `--out` or stdout) and side files, and
/// returns the exit status.
pub fn execute(cfg: &ExperimentConfig) -> i32 {
    let out = match run(cfg) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    for (path, text) in &out.side_files {
        if let Err(e) = std::fs::write(path, text) {
            eprintln!("error: writing {}: {e}", path.display());
            return EXIT_COMPUTE;
        }
    }
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &out.report_text) {
                eprintln!("error: writing {}: {e}", path.display());
                return EXIT_COMPUTE;
            }
        }
        None => print!("{}", out.report_text),
    }
    for c in out.report.checks.failures() {
        eprintln!("check failed: {}", c.name);
    }
    for c in out.report.checks.flags() {
        eprintln!("check flagged: {}", c.name);
    }
    out.exit_code()
}
