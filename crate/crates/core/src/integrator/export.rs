//! Trajectory CSV: `t, x{i}_{k}…, v{i}_{k}…` with `i = 1..N`, `k = 1..d`,
//! one row per stored step, 17 significant digits.

use std::io::{Read, Write};

use super::{FlockState, IntegrationError, Trajectory};

fn csv_err(e: impl std::fmt::Display) -> IntegrationError {
    IntegrationError::Csv(e.to_string())
}

pub fn trajectory_csv_header(n_agents: usize, dim: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for prefix in ["x", "v"] {
        for i in 1..=n_agents {
            for k in 1..=dim {
                cols.push(format!("{prefix}{i}_{k}"));
            }
        }
    }
    cols
}

/// Full-precision decimal: 17 significant digits round-trip every `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<(), IntegrationError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_csv_header(traj.n_agents(), traj.dim()))
        .map_err(csv_err)?;
    let mut row = Vec::new();
    for st in &traj.states {
        row.clear();
        row.push(fmt_f64(st.t));
        row.extend(st.x.iter().chain(&st.v).map(|&c| fmt_f64(c)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    Ok(())
}

/// Reads a trajectory written by [`write_trajectory_csv`]. The result has
/// no history samples.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Trajectory, IntegrationError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let n_x = header.iter().filter(|c| c.starts_with('x')).count();
    let n_v = header.iter().filter(|c| c.starts_with('v')).count();
    let dim = header
        .iter()
        .filter_map(|c| c.strip_prefix("x1_"))
        .count();
    if header.first().map(String::as_str) != Some("t") || dim == 0 || n_x != n_v || n_x % dim != 0 {
        return Err(csv_err(format!("unrecognized header: {}", header.join(","))));
    }
    let n_agents = n_x / dim;
    if header != trajectory_csv_header(n_agents, dim) {
        return Err(csv_err(format!("unexpected column order: {}", header.join(","))));
    }

    let mut states = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let nums: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| csv_err(format!("row {}: {e}", line + 2)))?;
        if nums.len() != header.len() {
            return Err(csv_err(format!("row {}: expected {} fields", line + 2, header.len())));
        }
        let nd = n_agents * dim;
        states.push(FlockState {
            t: nums[0],
            n_agents,
            dim,
            x: nums[1..1 + nd].to_vec(),
            v: nums[1 + nd..1 + 2 * nd].to_vec(),
        });
    }
    if states.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(csv_err("time stamps must increase strictly"));
    }
    let h = if states.len() >= 2 {
        states[1].t - states[0].t
    } else {
        0.0
    };
    Ok(Trajectory {
        h,
        history: Vec::new(),
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        let mk = |t: f64| FlockState {
            t,
            n_agents: 2,
            dim: 2,
            x: vec![0.1, 1.0 / 3.0, -2.5e-17, t],
            v: vec![1.0, std::f64::consts::PI, -7.0, 1e300],
        };
        Trajectory {
            h: 0.5,
            history: Vec::new(),
            states: vec![mk(0.0), mk(0.5), mk(1.0)],
        }
    }

    #[test]
    fn header_layout() {
        assert_eq!(
            trajectory_csv_header(2, 2).join(","),
            "t,x1_1,x1_2,x2_1,x2_2,v1_1,v1_2,v2_1,v2_2"
        );
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let traj = sample();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back, traj);
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(1.0 / 3.0), "3.3333333333333331e-1");
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_trajectory_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_trajectory_csv("t,x1_1,v1_1\n0,1,oops\n".as_bytes()).is_err());
        assert!(read_trajectory_csv("t,x1_1,v1_1\n1,1,1\n0,1,1\n".as_bytes()).is_err());
    }
}
