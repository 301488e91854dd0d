//! TOML scenario files.
//!
//! ```toml
//! dim = 2
//! t_end = 50.0
//! dt = 0.01
//! rng_seed = 7            # optional
//!
//! [hierarchy]
//! n_agents = 2            # optional, checked against `leaders`
//! leaders = [[], [1]]
//!
//! [potential]
//! family = "cucker_smale" # or "table" with `s`, `psi`
//! beta = 0.5
//!
//! [kernel]
//! shape = "uniform"       # "triangular" (peak), "truncated_bump" (height), "table" (s, mu)
//! tau = 0.1
//! height = 10.0
//!
//! [forcing]               # optional; zero when absent
//! family = "power_law"    # "zero", "log_damped" (c), "table" (t, value)
//! c = 0.5
//! p = 3.0
//! direction = [1.0, 0.0]  # optional
//!
//! [[agents]]
//! x = { kind = "constant", value = [0.0, 0.0] }
//! v = { kind = "affine", offset = [1.0, 0.0], slope = [0.0, 0.0] }
//! # kind = "table": times = [...], values = [[...], ...]
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GeneratorSpec, ScenarioError};
use crate::model::{
    AgentHistory, DelayKernel, ForcingFamily, HistoryFn, HistorySpec, KernelShape, LeaderForcing,
    LeadershipDag, ModelError, Potential, Scenario,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    dim: usize,
    t_end: f64,
    dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rng_seed: Option<u64>,
    hierarchy: HierarchyFile,
    potential: PotentialFile,
    kernel: KernelFile,
    #[serde(default)]
    forcing: ForcingFile,
    agents: Vec<AgentFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HierarchyFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_agents: Option<usize>,
    leaders: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum PotentialFile {
    CuckerSmale { beta: f64 },
    Table { s: Vec<f64>, psi: Vec<f64> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
enum KernelFile {
    Uniform { tau: f64, height: f64 },
    Triangular { tau: f64, peak: f64 },
    TruncatedBump { tau: f64, height: f64 },
    Table { tau: f64, s: Vec<f64>, mu: Vec<f64> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum ForcingFile {
    Zero {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
    },
    PowerLaw {
        c: f64,
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
    },
    LogDamped {
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
    },
    Table {
        t: Vec<f64>,
        value: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
    },
}

impl Default for ForcingFile {
    fn default() -> Self {
        Self::Zero { direction: None }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentFile {
    x: HistoryFile,
    v: HistoryFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum HistoryFile {
    Constant { value: Vec<f64> },
    Affine { offset: Vec<f64>, slope: Vec<f64> },
    Table { times: Vec<f64>, values: Vec<Vec<f64>> },
}

impl From<&HistoryFn> for HistoryFile {
    fn from(h: &HistoryFn) -> Self {
        match h.clone() {
            HistoryFn::Constant(value) => Self::Constant { value },
            HistoryFn::Affine { offset, slope } => Self::Affine { offset, slope },
            HistoryFn::Table { times, values } => Self::Table { times, values },
        }
    }
}

impl From<HistoryFile> for HistoryFn {
    fn from(h: HistoryFile) -> Self {
        match h {
            HistoryFile::Constant { value } => Self::Constant(value),
            HistoryFile::Affine { offset, slope } => Self::Affine { offset, slope },
            HistoryFile::Table { times, values } => Self::Table { times, values },
        }
    }
}

fn to_file(s: &Scenario) -> Result<ScenarioFile, ScenarioError> {
    let potential = match &s.potential {
        Potential::CuckerSmale { beta } => PotentialFile::CuckerSmale { beta: *beta },
        Potential::Table { s, psi } => PotentialFile::Table {
            s: s.clone(),
            psi: psi.clone(),
        },
        Potential::Custom { name, .. } => {
            return Err(ScenarioError::Unserializable(format!(
                "custom potential `{name}` has no file representation"
            )))
        }
    };
    let tau = s.kernel.tau();
    let kernel = match s.kernel.shape().clone() {
        KernelShape::Uniform { height } => KernelFile::Uniform { tau, height },
        KernelShape::Triangular { peak } => KernelFile::Triangular { tau, peak },
        KernelShape::TruncatedBump { height } => KernelFile::TruncatedBump { tau, height },
        KernelShape::Table { s, mu } => KernelFile::Table { tau, s, mu },
    };
    let direction = s.forcing.direction().map(<[f64]>::to_vec);
    let forcing = match s.forcing.family().clone() {
        ForcingFamily::Zero => ForcingFile::Zero { direction },
        ForcingFamily::PowerLaw { c, p } => ForcingFile::PowerLaw { c, p, direction },
        ForcingFamily::LogDamped { c } => ForcingFile::LogDamped { c, direction },
        ForcingFamily::Table { t, value } => ForcingFile::Table { t, value, direction },
    };
    Ok(ScenarioFile {
        dim: s.dim,
        t_end: s.t_end,
        dt: s.dt,
        rng_seed: s.rng_seed,
        hierarchy: HierarchyFile {
            n_agents: Some(s.n_agents()),
            leaders: s.dag.to_lists(),
        },
        potential,
        kernel,
        forcing,
        agents: s
            .history
            .agents
            .iter()
            .map(|a| AgentFile {
                x: (&a.position).into(),
                v: (&a.velocity).into(),
            })
            .collect(),
    })
}

fn from_file(f: ScenarioFile) -> Result<Scenario, ModelError> {
    if let Some(n) = f.hierarchy.n_agents {
        if n != f.hierarchy.leaders.len() {
            return Err(ModelError::InvalidScenario {
                field: "hierarchy.n_agents",
                reason: format!("n_agents = {n} but `leaders` lists {} agents", f.hierarchy.leaders.len()),
            });
        }
    }
    let dag = LeadershipDag::new(f.hierarchy.leaders)?;
    let potential = match f.potential {
        PotentialFile::CuckerSmale { beta } => Potential::cucker_smale(beta)?,
        PotentialFile::Table { s, psi } => Potential::table(s, psi)?,
    };
    let kernel = match f.kernel {
        KernelFile::Uniform { tau, height } => DelayKernel::new(tau, KernelShape::Uniform { height }),
        KernelFile::Triangular { tau, peak } => DelayKernel::new(tau, KernelShape::Triangular { peak }),
        KernelFile::TruncatedBump { tau, height } => {
            DelayKernel::new(tau, KernelShape::TruncatedBump { height })
        }
        KernelFile::Table { tau, s, mu } => DelayKernel::new(tau, KernelShape::Table { s, mu }),
    }?;
    let (family, direction) = match f.forcing {
        ForcingFile::Zero { direction } => (ForcingFamily::Zero, direction),
        ForcingFile::PowerLaw { c, p, direction } => (ForcingFamily::PowerLaw { c, p }, direction),
        ForcingFile::LogDamped { c, direction } => (ForcingFamily::LogDamped { c }, direction),
        ForcingFile::Table { t, value, direction } => (ForcingFamily::Table { t, value }, direction),
    };
    let mut forcing = LeaderForcing::new(family)?;
    if let Some(d) = direction {
        forcing = forcing.with_direction(d)?;
    }
    let history = HistorySpec::new(
        f.agents
            .into_iter()
            .map(|a| AgentHistory {
                position: a.x.into(),
                velocity: a.v.into(),
            })
            .collect(),
    );
    let scenario = Scenario {
        dag,
        dim: f.dim,
        potential,
        kernel,
        history,
        forcing,
        t_end: f.t_end,
        dt: f.dt,
        rng_seed: f.rng_seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Serializes a scenario; every number keeps full precision.
pub fn scenario_to_toml(s: &Scenario) -> Result<String, ScenarioError> {
    toml::to_string(&to_file(s)?).map_err(|e| ScenarioError::Unserializable(e.to_string()))
}

pub fn scenario_from_toml(src: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(src).map_err(|e| {
        let field = quoted_field(e.message());
        let mut line = e.span().map(|r| line_of(src, r.start));
        if let (Some(l), Some(f), true) = (line, &field, e.message().starts_with("unknown field")) {
            line = key_line_after(src, l, f).or(line);
        }
        ScenarioError::Schema {
            line,
            field,
            message: e.message().trim().to_string(),
        }
    })?;
    from_file(file).map_err(|e| {
        let field = model_field(&e);
        ScenarioError::Schema {
            line: locate(src, &field),
            field: Some(field),
            message: e.to_string(),
        }
    })
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let src = fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    scenario_from_toml(&src)
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    fs::write(path, scenario_to_toml(s)?).map_err(|e| ScenarioError::io(path, e))
}

/// Reads a [`GeneratorSpec`] from TOML, e.g.
/// `topology = { kind = "random_hl", edge_prob = 0.5 }`, `n_agents`, `dim`,
/// `rng_seed` and optional boxes, `beta`, `tau`, `t_end`.
pub fn load_generator_spec(path: impl AsRef<Path>) -> Result<GeneratorSpec, ScenarioError> {
    let path = path.as_ref();
    let src = fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    toml::from_str(&src).map_err(|e| ScenarioError::Schema {
        line: e.span().map(|r| line_of(&src, r.start)),
        field: quoted_field(e.message()),
        message: e.message().trim().to_string(),
    })
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line of `key = ...` at or after `from`, before the next table header.
fn key_line_after(src: &str, from: usize, key: &str) -> Option<usize> {
    src.lines()
        .enumerate()
        .skip(from - 1)
        .take_while(|(i, l)| *i + 1 == from || !l.trim_start().starts_with('['))
        .find(|(_, l)| {
            l.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|(i, _)| i + 1)
}

/// First backquoted name in a deserializer message, e.g. "missing field `dt`".
fn quoted_field(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

fn model_field(e: &ModelError) -> String {
    match e {
        ModelError::InvalidScenario { field, .. } => field.to_string(),
        ModelError::EmptyFlock
        | ModelError::AgentOutOfRange { .. }
        | ModelError::InvalidHierarchy(_) => "hierarchy.leaders".into(),
        ModelError::InvalidPotential(_) | ModelError::NegativeDistance(_) => "potential".into(),
        ModelError::InvalidKernel(_) => "kernel".into(),
        ModelError::InvalidForcing(_) => "forcing".into(),
        ModelError::InvalidHistory { agent, .. } => format!("agents[{}]", agent - 1),
    }
}

/// Best-effort line of `field` (`key`, `table`, `table.key` or
/// `agents[k]`) in the source.
fn locate(src: &str, field: &str) -> Option<usize> {
    let lines: Vec<&str> = src.lines().map(str::trim).collect();
    let is_key = |l: &str, key: &str| {
        l.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    };
    let header = |name: &str| lines.iter().position(|l| *l == format!("[{name}]"));

    if let Some(idx) = field.strip_prefix("agents[").and_then(|r| r.strip_suffix(']')) {
        let k: usize = idx.parse().ok()?;
        return lines
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == "[[agents]]")
            .nth(k)
            .map(|(i, _)| i + 1);
    }
    match field.split_once('.') {
        Some((table, key)) => {
            let start = header(table)?;
            let found = lines[start + 1..]
                .iter()
                .take_while(|l| !l.starts_with('['))
                .position(|l| is_key(l, key));
            Some(found.map_or(start, |i| start + 1 + i) + 1)
        }
        None => header(field)
            .or_else(|| {
                lines
                    .iter()
                    .take_while(|l| !l.starts_with('['))
                    .position(|l| is_key(l, field))
            })
            .map(|i| i + 1),
    }
}
