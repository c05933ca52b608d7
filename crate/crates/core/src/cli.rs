//! Command-line configuration and the scenario runner behind the `revlab` binary.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::explorer::{canonicalize, explore_with, Bounds, ExploreOptions};
use crate::goals::{run_goals, GoalError, GoalId, DEFAULT_TRACE_LIMIT};
use crate::protocols::{build_protocol, initial_state, ProtocolName};
use crate::report::{
    compare, exploration_doc, load_reference, verdict_doc, ConfigEcho, ReportDocument, Timing,
    ToolInfo, SCHEMA, SCOPE_NOTE, TOOL_NAME, TOOL_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

pub const WORKERS_ENV: &str = "REVLAB_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceRender {
    #[default]
    None,
    Msc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub protocol: ProtocolName,
    pub goals: Vec<GoalId>,
    pub change_enabled: bool,
    pub reveals_enabled: bool,
    pub n_vehicles: usize,
    pub bounds: Bounds,
    pub output: OutputFormat,
    pub trace_render: TraceRender,
    pub expect: Option<PathBuf>,
    pub deterministic: bool,
    pub trace_limit: u128,
    pub workers: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            protocol: ProtocolName::Plain,
            goals: GoalId::applicable(false),
            change_enabled: false,
            reveals_enabled: false,
            n_vehicles: 1,
            bounds: Bounds::default(),
            output: OutputFormat::Text,
            trace_render: TraceRender::None,
            expect: None,
            deterministic: false,
            trace_limit: DEFAULT_TRACE_LIMIT,
            workers: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum UsageError {
    /// Help or version output; not an error for the caller.
    #[error("{0}")]
    Display(String),
    #[error("{0}")]
    Args(String),
    #[error("cannot read config {path}: {reason}")]
    ConfigFile { path: String, reason: String },
    #[error("invalid {WORKERS_ENV}={0:?}: expected a positive integer")]
    Workers(String),
    #[error("{0}")]
    Invalid(String),
}

impl UsageError {
    pub fn exit_code(&self) -> i32 {
        match self {
            UsageError::Display(_) => EXIT_OK,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "revlab",
    version,
    about = "Bounded symbolic checker for pseudonym-revocation protocols"
)]
struct Args {
    /// JSON scenario file; flags given on the command line take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    protocol: Option<ProtocolName>,
    /// Comma-separated goal ids (g1..g7) or `all`.
    #[arg(long, value_delimiter = ',')]
    goals: Option<Vec<String>>,
    /// Enable the pseudonym-change rule.
    #[arg(long)]
    change: bool,
    /// Enable key-reveal rules for the adversary.
    #[arg(long)]
    reveals: bool,
    #[arg(long, value_name = "N")]
    vehicles: Option<usize>,
    #[arg(long, value_name = "N")]
    max_steps: Option<usize>,
    #[arg(long, value_name = "N")]
    max_changes: Option<u32>,
    #[arg(long, value_name = "N")]
    adversary_fresh: Option<u32>,
    #[arg(long, value_name = "N")]
    synthesis_depth: Option<usize>,
    #[arg(long, value_name = "N")]
    max_sessions: Option<u32>,
    /// Refuse per-trace checking above this many traces.
    #[arg(long, value_name = "N")]
    trace_limit: Option<u128>,
    #[arg(long, value_enum)]
    output: Option<OutputFormat>,
    #[arg(long, value_enum)]
    trace: Option<TraceRender>,
    /// Reference verdict matrix to compare against.
    #[arg(long, value_name = "FILE")]
    expect: Option<PathBuf>,
    /// Zero all timing fields so output is byte-stable.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    protocol: Option<ProtocolName>,
    goals: Option<Vec<String>>,
    change_enabled: Option<bool>,
    reveals_enabled: Option<bool>,
    n_vehicles: Option<usize>,
    bounds: Option<Bounds>,
    output: Option<OutputFormat>,
    trace_render: Option<TraceRender>,
    expect: Option<PathBuf>,
    deterministic: Option<bool>,
    trace_limit: Option<u128>,
}

impl clap::ValueEnum for ProtocolName {
    fn value_variants<'a>() -> &'a [Self] {
        &ProtocolName::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.as_str()))
    }
}

fn parse_goals(items: &[String], change_enabled: bool) -> Result<Vec<GoalId>, UsageError> {
    if items.len() == 1 && items[0].trim().eq_ignore_ascii_case("all") {
        return Ok(GoalId::applicable(change_enabled));
    }
    let mut goals = Vec::new();
    for item in items {
        let g: GoalId = item
            .trim()
            .parse()
            .map_err(|e| UsageError::Invalid(format!("{e}")))?;
        if !goals.contains(&g) {
            goals.push(g);
        }
    }
    if goals.is_empty() {
        return Err(UsageError::Invalid("no goals selected".into()));
    }
    goals.sort();
    Ok(goals)
}

/// Parses `argv` (including the program name) plus the worker-count
/// environment value into a validated scenario.
pub fn parse_config<I, T>(argv: I, workers_env: Option<&str>) -> Result<ScenarioConfig, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                UsageError::Display(e.to_string())
            }
            _ => UsageError::Args(e.to_string()),
        }
    })?;

    let file = match &args.config {
        Some(path) => {
            let shown = path.display().to_string();
            let text = std::fs::read_to_string(path).map_err(|e| UsageError::ConfigFile {
                path: shown.clone(),
                reason: e.to_string(),
            })?;
            serde_json::from_str::<FileConfig>(&text).map_err(|e| UsageError::ConfigFile {
                path: shown,
                reason: e.to_string(),
            })?
        }
        None => FileConfig::default(),
    };

    let mut cfg = ScenarioConfig::default();
    cfg.protocol = args.protocol.or(file.protocol).unwrap_or(cfg.protocol);
    cfg.change_enabled = args.change || file.change_enabled.unwrap_or(false);
    cfg.reveals_enabled = args.reveals || file.reveals_enabled.unwrap_or(false);
    cfg.n_vehicles = args.vehicles.or(file.n_vehicles).unwrap_or(1);
    cfg.bounds = file.bounds.unwrap_or_default();
    if let Some(v) = args.max_steps {
        cfg.bounds.max_steps = v;
    }
    if let Some(v) = args.max_changes {
        cfg.bounds.max_changes = v;
    }
    if let Some(v) = args.adversary_fresh {
        cfg.bounds.adversary_fresh_budget = v;
    }
    if let Some(v) = args.synthesis_depth {
        cfg.bounds.synthesis_depth = v;
    }
    if let Some(v) = args.max_sessions {
        cfg.bounds.max_sessions = v;
    }
    cfg.output = args.output.or(file.output).unwrap_or_default();
    cfg.trace_render = args.trace.or(file.trace_render).unwrap_or_default();
    cfg.expect = args.expect.or(file.expect);
    cfg.deterministic = args.deterministic || file.deterministic.unwrap_or(false);
    cfg.trace_limit = args
        .trace_limit
        .or(file.trace_limit)
        .unwrap_or(DEFAULT_TRACE_LIMIT);
    cfg.goals = match args.goals.or(file.goals) {
        Some(items) => parse_goals(&items, cfg.change_enabled)?,
        None => GoalId::applicable(cfg.change_enabled),
    };

    if cfg.n_vehicles == 0 {
        return Err(UsageError::Invalid("--vehicles must be at least 1".into()));
    }
    if cfg.bounds.synthesis_depth == 0 {
        return Err(UsageError::Invalid(
            "--synthesis-depth must be at least 1".into(),
        ));
    }
    if let Some(g) = cfg
        .goals
        .iter()
        .find(|g| g.requires_change() && !cfg.change_enabled)
    {
        return Err(UsageError::Invalid(format!(
            "goal {g} needs the pseudonym-change rule; pass --change"
        )));
    }
    cfg.workers = match workers_env.map(str::trim).filter(|s| !s.is_empty()) {
        None => 1,
        Some(s) => match s.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return Err(UsageError::Workers(s.to_string())),
        },
    };
    Ok(cfg)
}

/// Result of one scenario run.
#[derive(Debug)]
pub struct RunOutput {
    pub exit_code: i32,
    /// Rendered report on success or mismatch.
    pub stdout: String,
    pub stderr: String,
    pub document: Option<ReportDocument>,
}

impl RunOutput {
    fn fail(exit_code: i32, message: String) -> RunOutput {
        RunOutput {
            exit_code,
            stdout: String::new(),
            stderr: message,
            document: None,
        }
    }
}

fn millis(since: Instant) -> u64 {
    u64::try_from(since.elapsed().as_millis()).unwrap_or(u64::MAX)
}

/// Explores the scenario, checks its goals and renders the report.
pub fn run(cfg: &ScenarioConfig) -> RunOutput {
    let reference = match &cfg.expect {
        Some(path) => match load_reference(&path.display().to_string(), cfg.protocol) {
            Ok(r) => Some(r),
            Err(e) => return RunOutput::fail(EXIT_USAGE, format!("error: {e}\n")),
        },
        None => None,
    };

    let mut spec = build_protocol(cfg.protocol, cfg.change_enabled);
    if cfg.reveals_enabled {
        spec = spec.with_reveals();
    }
    let init = match initial_state(&spec, cfg.n_vehicles) {
        Ok(s) => s,
        Err(e) => return RunOutput::fail(EXIT_USAGE, format!("error: {e}\n")),
    };

    let started = Instant::now();
    let opts = ExploreOptions {
        workers: cfg.workers,
        dedup: true,
    };
    let ts = match explore_with(&spec, &init, &cfg.bounds, &opts) {
        Ok(ts) => ts,
        Err(e) => {
            return RunOutput::fail(EXIT_INTERNAL, format!("error: exploration failed: {e}\n"))
        }
    };
    let explore_ms = millis(started);

    let started = Instant::now();
    let verdicts = match run_goals(&ts, &cfg.goals, cfg.trace_limit) {
        Ok(v) => v,
        Err(e @ GoalError::TooManyTraces { .. }) => {
            return RunOutput::fail(EXIT_USAGE, format!("error: {e}\n"))
        }
        Err(e) => return RunOutput::fail(EXIT_INTERNAL, format!("error: {e}\n")),
    };
    let check_ms = millis(started);

    for v in &verdicts {
        let Some(trace) = &v.evidence else { continue };
        let replayed = match trace.replay(&spec, ts.initial_state()) {
            Ok(s) => s,
            Err(e) => {
                return RunOutput::fail(
                    EXIT_INTERNAL,
                    format!("error: {} evidence does not replay: {e}\n", v.goal),
                )
            }
        };
        if canonicalize(&replayed).digest != canonicalize(&trace.terminal).digest {
            return RunOutput::fail(
                EXIT_INTERNAL,
                format!("error: {} evidence replays to a different state\n", v.goal),
            );
        }
    }

    let mut leaked: Vec<String> = ts
        .secrecy_violations()
        .into_iter()
        .map(|(_, t)| t.to_string())
        .collect();
    leaked.sort();
    leaked.dedup();

    let with_msc = cfg.trace_render == TraceRender::Msc;
    let expect = reference.as_ref().map(|r| {
        let label = cfg
            .expect
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        compare(r, &label, &verdicts)
    });
    let mismatched = expect.as_ref().is_some_and(|x| !x.mismatches.is_empty());

    let doc = ReportDocument {
        schema: SCHEMA,
        tool: ToolInfo {
            name: TOOL_NAME,
            version: TOOL_VERSION,
        },
        config: ConfigEcho {
            protocol: cfg.protocol,
            goals: cfg.goals.clone(),
            change_enabled: cfg.change_enabled,
            reveals_enabled: cfg.reveals_enabled,
            n_vehicles: cfg.n_vehicles,
            bounds: cfg.bounds,
        },
        exploration: exploration_doc(ts.stats(), leaked),
        verdicts: verdicts.iter().map(|v| verdict_doc(v, with_msc)).collect(),
        expect,
        timing: if cfg.deterministic {
            Timing::default()
        } else {
            Timing {
                explore_ms,
                check_ms,
            }
        },
        note: SCOPE_NOTE,
    };
    let stdout = match cfg.output {
        OutputFormat::Json => doc.to_json(),
        OutputFormat::Text => doc.to_text(),
    };
    let stderr = if mismatched {
        "verdicts differ from the reference matrix\n".to_string()
    } else {
        String::new()
    };
    RunOutput {
        exit_code: if mismatched { EXIT_MISMATCH } else { EXIT_OK },
        stdout,
        stderr,
        document: Some(doc),
    }
}

/// Entry point shared by the binary and tests.
pub fn main_with<I, T>(argv: I, workers_env: Option<&str>) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_config(argv, workers_env) {
        Ok(cfg) => run(&cfg),
        Err(UsageError::Display(text)) => RunOutput {
            exit_code: EXIT_OK,
            stdout: text,
            stderr: String::new(),
            document: None,
        },
        Err(e) => RunOutput::fail(e.exit_code(), format!("{e}\n")),
    }
}
