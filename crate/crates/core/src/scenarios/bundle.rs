use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{save_scenario, ScenarioError};
use crate::diagnostics::{consensus_series, ProbeReport};
use crate::integrator::{max_speed, write_trajectory_csv, Trajectory};
use crate::model::Scenario;

pub const SCENARIO_FILE: &str = "scenario.toml";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const REPORT_FILE: &str = "report.json";

/// End-of-run numbers written alongside every trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
    pub final_velocity_diameter: f64,
    pub final_position_diameter: f64,
    /// Largest speed over the computed states.
    pub max_speed: f64,
    /// Largest speed over the history window.
    pub d0: f64,
    pub rng_seed: Option<u64>,
}

impl RunSummary {
    pub fn of(traj: &Trajectory, scenario: &Scenario) -> Self {
        let series = consensus_series(traj);
        Self {
            t_end: traj.last().map_or(0.0, |s| s.t),
            dt: traj.h,
            steps: traj.states.len().saturating_sub(1),
            final_velocity_diameter: series.velocity_diameter.last().copied().unwrap_or(0.0),
            final_position_diameter: series.position_diameter.last().copied().unwrap_or(0.0),
            max_speed: max_speed(&traj.states),
            d0: traj.history_speed_bound(),
            rng_seed: scenario.rng_seed,
        }
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    summary: &'a RunSummary,
    probes: &'a [ProbeReport],
}

/// Writes the run bundle `scenario.toml`, `trajectory.csv` and
/// `report.json` into `dir`, creating it if needed.
pub fn save_run(
    scenario: &Scenario,
    traj: &Trajectory,
    reports: &[ProbeReport],
    dir: impl AsRef<Path>,
) -> Result<PathBuf, ScenarioError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
    save_scenario(scenario, dir.join(SCENARIO_FILE))?;

    let csv_path = dir.join(TRAJECTORY_FILE);
    let f = File::create(&csv_path).map_err(|e| ScenarioError::io(&csv_path, e))?;
    write_trajectory_csv(traj, BufWriter::new(f))?;

    let summary = RunSummary::of(traj, scenario);
    let json = serde_json::to_string_pretty(&RunReport {
        summary: &summary,
        probes: reports,
    })
    .map_err(|e| ScenarioError::Unserializable(e.to_string()))?;
    let report_path = dir.join(REPORT_FILE);
    fs::write(&report_path, json).map_err(|e| ScenarioError::io(&report_path, e))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{read_trajectory_csv, simulate};
    use crate::scenarios::{generate, load_scenario, GeneratorSpec, Topology};

    #[test]
    fn bundle_reloads() {
        let s = generate(&GeneratorSpec::new(Topology::Chain, 3, 2, 5)).unwrap();
        let traj = simulate(&s).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let dir = save_run(&s, &traj, &[ProbeReport::skipped("x", "none")], tmp.path().join("run")).unwrap();

        assert_eq!(load_scenario(dir.join(SCENARIO_FILE)).unwrap(), s);
        let back = read_trajectory_csv(File::open(dir.join(TRAJECTORY_FILE)).unwrap()).unwrap();
        assert_eq!(back.states, traj.states);
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join(REPORT_FILE)).unwrap()).unwrap();
        assert_eq!(report["summary"]["rng_seed"], 5);
        assert_eq!(report["probes"][0]["status"], "skipped");
    }
}
