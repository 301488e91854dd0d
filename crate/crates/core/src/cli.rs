//! Command-line front end: `simulate`, `check`, `fit-decay` and `sweep`.
//!
//! Exit codes: 0 everything passed, 1 a probe failed (or a fit had too
//! little data), 2 usage or schema error, 3 numerical blow-up.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::diagnostics::{
    ball_invariance_probe, calibrate_relative_slack, calibrate_slack, check_two_flock_bound, consensus_series,
    default_decay_window, fit_decay_rate, free_will_consensus_probe, lyapunov_probe,
    positivity_of, positivity_preconditions, ConsensusSeries, DecayFit, DecayWindow,
    DiagnosticsError, ProbeReport, ProbeStatus, BOUND_TOLERANCE, DECAY_FLOOR,
};
use crate::integrator::{read_trajectory_csv, simulate, simulate_oracle, IntegrationError, Trajectory};
use crate::model::{ModelError, Scenario};
use crate::scenarios::{
    generate, load_generator_spec, load_scenario, save_run, GeneratorSpec, RunSummary, ScenarioError,
};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "FLOCKDELAY_OUT";

const DEFAULT_OUT: &str = "runs";

/// Fine steps per coarse step of the Euler reference used to size `C·h`.
pub const ORACLE_REFINEMENT: usize = 20;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_PROBE_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "flockdelay", version, about = "Delayed Cucker-Smale flocking under hierarchical leadership")]
pub struct Cli {
    /// Suppress human-readable progress on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one scenario and write its run bundle.
    Simulate(SimulateArgs),
    /// Run probes on scenario files or generated scenarios.
    Check(BatchArgs),
    /// Fit an exponential decay rate to the velocity diameter.
    FitDecay(FitDecayArgs),
    /// Like `check`, in parallel, writing one bundle per run.
    Sweep(BatchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Overrides {
    /// Replace the scenario time step (re-validated).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Replace the final time (re-validated).
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output root; the bundle goes to `<out>/<scenario name>`.
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Scenario file; repeat for several.
    #[arg(long, conflicts_with = "generator")]
    pub scenario: Vec<PathBuf>,
    /// Generator spec (TOML) used instead of scenario files.
    #[arg(long)]
    pub generator: Option<PathBuf>,
    /// Number of generated scenarios, seeds `seed, seed+1, …`.
    #[arg(long, default_value_t = 1, requires = "generator")]
    pub count: usize,
    /// First generator seed; defaults to the one in the spec.
    #[arg(long, requires = "generator")]
    pub seed: Option<u64>,
    /// Comma-separated probe list; all probes when absent.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub probes: Vec<Probe>,
    /// Target velocity diameter for the free-will probe.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Output root for run bundles; `check` writes none without it.
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct FitDecayArgs {
    /// Trajectory CSV as written by `simulate`.
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    pub trajectory: Option<PathBuf>,
    /// Scenario file to simulate and fit instead of a CSV.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Window start; defaults to max(tau, t_end / 2) for scenarios and t_end / 2 for CSVs.
    #[arg(long)]
    pub start: Option<f64>,
    /// Window end; defaults to the last sample.
    #[arg(long)]
    pub end: Option<f64>,
    /// Directory for `decay_fit.csv`.
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    Positivity,
    Ball,
    TwoFlockBound,
    Lyapunov,
    Decay,
    FreeWill,
}

pub const ALL_PROBES: [Probe; 6] = [
    Probe::Positivity,
    Probe::Ball,
    Probe::TwoFlockBound,
    Probe::Lyapunov,
    Probe::Decay,
    Probe::FreeWill,
];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Scenario(ScenarioError),
    Integration(IntegrationError),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Scenario(_) => EXIT_USAGE,
            Self::Integration(IntegrationError::BlowUp { .. }) => EXIT_BLOW_UP,
            Self::Integration(_) => EXIT_USAGE,
            Self::Failed(_) => EXIT_PROBE_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Failed(m) => f.write_str(m),
            Self::Scenario(e) => write!(f, "{e}"),
            Self::Integration(e) => write!(f, "{e}"),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Integration(e) => Self::Integration(e),
            e => Self::Scenario(e),
        }
    }
}

impl From<IntegrationError> for CliError {
    fn from(e: IntegrationError) -> Self {
        Self::Integration(e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::Scenario(ScenarioError::Model(e))
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, stdout, stderr),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            code
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Check(a) => cmd_batch(a, false, cli.quiet, stdout, stderr),
        Command::FitDecay(a) => cmd_fit_decay(a, stdout),
        Command::Sweep(a) => cmd_batch(a, true, cli.quiet, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn load_with_overrides(path: &Path, o: &Overrides) -> Result<Scenario, CliError> {
    let s = load_scenario(path)?;
    Ok(s.with_overrides(o.dt, o.t_end)?)
}

fn out_root(out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn run_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| CliError::Usage(e.to_string()))
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let scenario = load_with_overrides(&args.scenario, &args.overrides)?;
    let traj = simulate(&scenario)?;
    let dir = out_root(&args.out).join(run_name(&args.scenario));
    save_run(&scenario, &traj, &[], &dir)?;
    emit_json(stdout, &RunSummary::of(&traj, &scenario))?;
    Ok(EXIT_PASS)
}

/// Knobs shared by every probe in a run.
#[derive(Clone, Copy, Debug)]
pub struct ProbeOptions {
    pub eps_target: f64,
    pub oracle_refinement: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            eps_target: 1e-3,
            oracle_refinement: ORACLE_REFINEMENT,
        }
    }
}

fn probe_name(p: Probe) -> &'static str {
    match p {
        Probe::Positivity => "positivity",
        Probe::Ball => "ball_invariance",
        Probe::TwoFlockBound => "two_flock_bound",
        Probe::Lyapunov => "lyapunov",
        Probe::Decay => "decay",
        Probe::FreeWill => "free_will",
    }
}

/// Runs `probes` on a computed trajectory. Precondition violations come
/// back as skipped reports; only integration failures are errors.
pub fn run_probes(
    scenario: &Scenario,
    traj: &Trajectory,
    probes: &[Probe],
    opts: ProbeOptions,
) -> Result<Vec<ProbeReport>, IntegrationError> {
    let mut oracle_run: Option<Trajectory> = None;
    let mut reports = Vec::with_capacity(probes.len());
    for &p in probes {
        let r = run_probe(p, scenario, traj, opts, &mut oracle_run);
        reports.push(match r {
            Ok(r) => r,
            Err(DiagnosticsError::Integration(e)) => return Err(e),
            Err(e) => ProbeReport::skipped(probe_name(p), e.to_string()),
        });
    }
    Ok(reports)
}

fn oracle<'a>(
    scenario: &Scenario,
    opts: ProbeOptions,
    cache: &'a mut Option<Trajectory>,
) -> Result<&'a Trajectory, DiagnosticsError> {
    if cache.is_none() {
        *cache = Some(simulate_oracle(scenario, opts.oracle_refinement)?);
    }
    Ok(cache.as_ref().unwrap())
}

fn two_flock_preconditions(scenario: &Scenario) -> Result<(), DiagnosticsError> {
    if scenario.n_agents() != 2 {
        return Err(DiagnosticsError::NotTwoFlock {
            n_agents: scenario.n_agents(),
        });
    }
    if !scenario.forcing.is_zero() {
        return Err(DiagnosticsError::ForcingPresent);
    }
    Ok(())
}

fn run_probe(
    p: Probe,
    scenario: &Scenario,
    traj: &Trajectory,
    opts: ProbeOptions,
    oracle_run: &mut Option<Trajectory>,
) -> Result<ProbeReport, DiagnosticsError> {
    match p {
        Probe::Positivity => {
            positivity_preconditions(scenario)?;
            Ok(positivity_of(traj)?.to_report())
        }
        Probe::Ball => Ok(ball_invariance_probe(traj, scenario)?.to_report()),
        Probe::TwoFlockBound => {
            two_flock_preconditions(scenario)?;
            let s = calibrate_relative_slack(traj, oracle(scenario, opts, oracle_run)?);
            Ok(check_two_flock_bound(traj, scenario, s)?.to_report().metric("slack", s))
        }
        Probe::Lyapunov => {
            two_flock_preconditions(scenario)?;
            let s = calibrate_slack(traj, oracle(scenario, opts, oracle_run)?);
            let tau = scenario.tau();
            let d0 = traj.history_speed_bound();
            let r = lyapunov_probe(
                traj,
                &scenario.dag,
                2,
                scenario.mu0(),
                2.0 * tau * d0,
                &scenario.potential,
                tau,
                BOUND_TOLERANCE + s,
            )?;
            Ok(r.to_report().metric("slack", s))
        }
        Probe::Decay => {
            if !scenario.forcing.is_zero() {
                return Err(DiagnosticsError::ForcingPresent);
            }
            let series = consensus_series(traj);
            let window = default_decay_window(scenario.tau(), scenario.t_end);
            match fit_decay_rate(&series, window) {
                Ok(fit) => Ok(decay_report(&fit)),
                Err(DiagnosticsError::InsufficientDecayData { .. })
                    if series.velocity_diameter.last().is_some_and(|&d| d <= DECAY_FLOOR) =>
                {
                    Ok(ProbeReport::new("decay", true, "velocity diameter reached the rounding floor")
                        .metric("final_velocity_diameter", series.velocity_diameter[series.len() - 1]))
                }
                Err(e) => Err(e),
            }
        }
        Probe::FreeWill => {
            if scenario.forcing.is_zero() {
                return Ok(ProbeReport::skipped("free_will", "no leader forcing"));
            }
            Ok(free_will_consensus_probe(traj, scenario, opts.eps_target, 0.0)?.to_report())
        }
    }
}

fn decay_report(fit: &DecayFit) -> ProbeReport {
    ProbeReport::new(
        "decay",
        fit.rate > 0.0,
        format!(
            "B_hat = {} on [{}, {}], residual rms {}",
            fit.rate, fit.window.start, fit.window.end, fit.residual_rms
        ),
    )
    .metric("rate", fit.rate)
    .metric("residual_rms", fit.residual_rms)
    .metric("samples", fit.samples as f64)
}

enum Job {
    File(PathBuf),
    Generated(GeneratorSpec),
}

impl Job {
    fn label(&self) -> String {
        match self {
            Job::File(p) => run_name(p),
            Job::Generated(g) => format!("seed-{}", g.rng_seed),
        }
    }

    fn scenario(&self, o: &Overrides) -> Result<Scenario, CliError> {
        match self {
            Job::File(p) => load_with_overrides(p, o),
            Job::Generated(g) => Ok(generate(g)?.with_overrides(o.dt, o.t_end)?),
        }
    }
}

#[derive(Debug, Serialize)]
struct RunOutcome {
    label: String,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<RunSummary>,
    probes: Vec<ProbeReport>,
}

#[derive(Debug, Serialize)]
struct BatchReport {
    passed: bool,
    exit_code: i32,
    runs: Vec<RunOutcome>,
}

fn run_job(job: &Job, args: &BatchArgs, probes: &[Probe], write_bundle: bool) -> RunOutcome {
    let label = job.label();
    let opts = ProbeOptions {
        eps_target: args.eps,
        ..ProbeOptions::default()
    };
    let attempt = || -> Result<(RunSummary, Vec<ProbeReport>), CliError> {
        let scenario = job.scenario(&args.overrides)?;
        let traj = simulate(&scenario)?;
        let reports = run_probes(&scenario, &traj, probes, opts)?;
        if write_bundle {
            save_run(&scenario, &traj, &reports, out_root(&args.out).join(&label))?;
        }
        Ok((RunSummary::of(&traj, &scenario), reports))
    };
    match attempt() {
        Ok((summary, probes)) => {
            let failed = probes.iter().any(|r| r.status == ProbeStatus::Fail);
            RunOutcome {
                label,
                exit_code: if failed { EXIT_PROBE_FAILURE } else { EXIT_PASS },
                error: None,
                summary: Some(summary),
                probes,
            }
        }
        Err(e) => RunOutcome {
            label,
            exit_code: e.exit_code(),
            error: Some(e.to_string()),
            summary: None,
            probes: Vec::new(),
        },
    }
}

fn batch_jobs(args: &BatchArgs) -> Result<Vec<Job>, CliError> {
    if let Some(path) = &args.generator {
        let spec = load_generator_spec(path)?;
        let first = args.seed.unwrap_or(spec.rng_seed);
        return Ok((0..args.count as u64)
            .map(|k| Job::Generated(spec.with_seed(first.wrapping_add(k))))
            .collect());
    }
    if args.scenario.is_empty() {
        return Err(CliError::Usage("give --scenario or --generator".into()));
    }
    Ok(args.scenario.iter().cloned().map(Job::File).collect())
}

pub fn cmd_batch(
    args: &BatchArgs,
    always_write: bool,
    quiet: bool,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    if args.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let jobs = batch_jobs(args)?;
    let probes: Vec<Probe> = if args.probes.is_empty() {
        ALL_PROBES.to_vec()
    } else {
        args.probes.clone()
    };
    let write_bundle = always_write || args.out.is_some();

    let slots: Vec<Mutex<Option<RunOutcome>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..args.workers.min(jobs.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(k) else { break };
                let outcome = run_job(job, args, &probes, write_bundle);
                *slots[k].lock().expect("result slot") = Some(outcome);
            });
        }
    });
    let runs: Vec<RunOutcome> = slots
        .into_iter()
        .map(|m| m.into_inner().expect("result slot").expect("every job ran"))
        .collect();

    if !quiet {
        for r in &runs {
            let _ = writeln!(stderr, "== {}", r.label);
            if let Some(e) = &r.error {
                let _ = writeln!(stderr, "error: {e}");
            }
            for p in &r.probes {
                let _ = writeln!(stderr, "{p}");
            }
        }
    }
    let exit_code = runs.iter().map(|r| r.exit_code).max().unwrap_or(EXIT_PASS);
    let report = BatchReport {
        passed: exit_code == EXIT_PASS,
        exit_code,
        runs,
    };
    if write_bundle {
        let root = out_root(&args.out);
        fs::create_dir_all(&root).map_err(|e| CliError::Usage(format!("{}: {e}", root.display())))?;
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Usage(e.to_string()))?;
        fs::write(root.join("batch_report.json"), text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", root.display())))?;
    }
    emit_json(stdout, &report)?;
    Ok(exit_code)
}

fn write_fit_csv(path: &Path, series: &ConsensusSeries, fit: &DecayFit) -> Result<(), CliError> {
    let io_err = |e: &dyn std::fmt::Display| CliError::Usage(format!("{}: {e}", path.display()));
    let f = File::create(path).map_err(|e| io_err(&e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(f));
    w.write_record(["t", "velocity_diameter", "fitted"]).map_err(|e| io_err(&e))?;
    for (&t, &dv) in series.times.iter().zip(&series.velocity_diameter) {
        let fitted = (fit.intercept - fit.rate * t).exp();
        w.write_record([t.to_string(), dv.to_string(), fitted.to_string()])
            .map_err(|e| io_err(&e))?;
    }
    w.flush().map_err(|e| io_err(&e))
}

pub fn cmd_fit_decay(args: &FitDecayArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (traj, tau, name) = match (&args.trajectory, &args.scenario) {
        (Some(csv_path), _) => {
            let f = File::open(csv_path).map_err(|e| CliError::Usage(format!("{}: {e}", csv_path.display())))?;
            (read_trajectory_csv(f)?, 0.0, run_name(csv_path))
        }
        (None, Some(path)) => {
            let s = load_with_overrides(path, &args.overrides)?;
            (simulate(&s)?, s.tau(), run_name(path))
        }
        (None, None) => return Err(CliError::Usage("give --trajectory or --scenario".into())),
    };
    let series = consensus_series(&traj);
    let t_end = series.times.last().copied().unwrap_or(0.0);
    let default = default_decay_window(tau, t_end);
    let window = DecayWindow {
        start: args.start.unwrap_or(default.start),
        end: args.end.unwrap_or(default.end),
    };
    let fit = match fit_decay_rate(&series, window) {
        Ok(fit) => fit,
        Err(e) => return Err(CliError::Failed(e.to_string())),
    };
    if let Some(out) = &args.out {
        let dir = out.join(&name);
        fs::create_dir_all(&dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
        write_fit_csv(&dir.join("decay_fit.csv"), &series, &fit)?;
    }
    emit_json(stdout, &fit)?;
    Ok(EXIT_PASS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_list_parses() {
        let cli = Cli::try_parse_from(["flockdelay", "check", "--scenario", "a.toml", "--probes", "ball,two-flock-bound"])
            .unwrap();
        match cli.command {
            Command::Check(a) => assert_eq!(a.probes, vec![Probe::Ball, Probe::TwoFlockBound]),
            _ => panic!(),
        }
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(main_with_args(["flockdelay", "simulate"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(main_with_args(["flockdelay", "bogus"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(main_with_args(["flockdelay", "--help"], &mut o, &mut e), EXIT_PASS);
    }

    #[test]
    fn blow_up_maps_to_3() {
        assert_eq!(CliError::Integration(IntegrationError::BlowUp { t: 1.0 }).exit_code(), EXIT_BLOW_UP);
        assert_eq!(CliError::Failed(String::new()).exit_code(), EXIT_PROBE_FAILURE);
    }
}
