//! Persistence: CSV exports, the `KAWA1` binary snapshot, problem files.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::config::ProblemFile;
use crate::error::{KawaError, Result};
use crate::grid::{Domain, SpaceTimeGrid};
use crate::observation::ObservationTrace;
use crate::signal::TimeSignal;
use crate::solver::Trajectory;

/// `t,x,u` rows, row-major in time.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "t,x,u")?;
    let grid = traj.grid;
    for n in 0..=grid.n_time {
        let t = grid.t(n);
        for j in 0..=grid.n_space {
            writeln!(out, "{},{},{}", t, grid.x(j), traj.values[[n, j]])?;
        }
    }
    Ok(())
}

/// `t,f0` rows.
pub fn write_control_csv(path: &Path, f0: &TimeSignal) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "t,f0")?;
    for (n, v) in f0.samples().iter().enumerate() {
        writeln!(out, "{},{}", n as f64 * f0.dt(), v)?;
    }
    Ok(())
}

/// `t,q,qprime_formula,qprime_numeric` rows.
pub fn write_observation_csv(path: &Path, trace: &ObservationTrace) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "t,q,qprime_formula,qprime_numeric")?;
    let dt = trace.q.dt();
    for n in 0..trace.q.len() {
        writeln!(
            out,
            "{},{},{},{}",
            n as f64 * dt,
            trace.q.value(n),
            trace.q_prime_formula.value(n),
            trace.q_prime_numeric.value(n)
        )?;
    }
    Ok(())
}

const SNAPSHOT_MAGIC: &[u8; 5] = b"KAWA1";

/// Binary trajectory snapshot: magic, dimensions, grid metadata, then the
/// values as little-endian doubles (row-major in time). Meant for resuming
/// diagnostics without re-running a solve.
pub fn write_snapshot(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(SNAPSHOT_MAGIC)?;
    let (rows, cols) = traj.values.dim();
    out.write_all(&(rows as u64).to_le_bytes())?;
    out.write_all(&(cols as u64).to_le_bytes())?;
    for v in [traj.grid.h, traj.grid.tau, traj.grid.x_min] {
        out.write_all(&v.to_le_bytes())?;
    }
    for v in traj.values.iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Values and grid recovered from a snapshot.
pub struct Snapshot {
    pub values: Array2<f64>,
    pub h: f64,
    pub tau: f64,
    pub x_min: f64,
}

impl Snapshot {
    /// Reassemble a grid; the horizon follows from the stored dimensions.
    pub fn grid(&self) -> Result<SpaceTimeGrid> {
        let (rows, cols) = self.values.dim();
        let horizon = (rows - 1) as f64 * self.tau;
        let radius = self.x_min + (cols - 1) as f64 * self.h;
        let domain = if self.x_min < 0.0 {
            Domain::real_line(-self.x_min, radius)
        } else {
            Domain::right_half_line(radius)
        };
        SpaceTimeGrid::new(&domain, cols - 1, rows - 1, horizon)
    }
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut file = fs::File::open(path)?;
    let mut magic = [0u8; 5];
    file.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(KawaError::Parse(format!(
            "not a trajectory snapshot: bad magic {magic:?}"
        )));
    }
    let mut u64buf = [0u8; 8];
    file.read_exact(&mut u64buf)?;
    let rows = u64::from_le_bytes(u64buf) as usize;
    file.read_exact(&mut u64buf)?;
    let cols = u64::from_le_bytes(u64buf) as usize;
    let mut meta = [0.0f64; 3];
    for v in meta.iter_mut() {
        file.read_exact(&mut u64buf)?;
        *v = f64::from_le_bytes(u64buf);
    }
    if rows == 0 || cols == 0 || rows.saturating_mul(cols) > (1 << 32) {
        return Err(KawaError::Parse(format!(
            "implausible snapshot dimensions {rows} x {cols}"
        )));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        file.read_exact(&mut u64buf)?;
        values.push(f64::from_le_bytes(u64buf));
    }
    Ok(Snapshot {
        values: Array2::from_shape_vec((rows, cols), values).expect("shape"),
        h: meta[0],
        tau: meta[1],
        x_min: meta[2],
    })
}

/// Parse a problem file from disk.
pub fn load_problem_file(path: &Path) -> Result<ProblemFile> {
    let text = fs::read_to_string(path)?;
    ProblemFile::from_json(&text)
}

/// Write a problem file in the canonical serialization.
pub fn save_problem_file(path: &Path, file: &ProblemFile) -> Result<()> {
    fs::write(path, file.to_json())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::canonical_problem;
    use crate::solver::{random_forcing, random_member, solve_linear};

    #[test]
    fn snapshot_round_trips_bit_exactly() {
        let pb = canonical_problem(150, 40);
        let member = random_member(&pb, 3, 0);
        let f = random_forcing(&pb, 3, 0);
        let traj = solve_linear(&member, &f).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.kawa");
        write_snapshot(&path, &traj).unwrap();
        let snap = read_snapshot(&path).unwrap();
        assert_eq!(snap.values, traj.values);
        assert_eq!(snap.h, traj.grid.h);
        assert_eq!(snap.tau, traj.grid.tau);
        let grid = snap.grid().unwrap();
        assert_eq!(grid.n_space, traj.grid.n_space);
        assert_eq!(grid.n_time, traj.grid.n_time);
    }

    #[test]
    fn snapshot_rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        fs::write(&path, b"PNG\x0d\x0aetc").unwrap();
        assert!(matches!(read_snapshot(&path), Err(KawaError::Parse(_))));
    }

    #[test]
    fn csv_headers_match_the_interfaces() {
        let pb = canonical_problem(150, 40);
        let traj = solve_linear(&pb, &crate::solver::Forcing::zero()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let tpath = dir.path().join("trajectory.csv");
        write_trajectory_csv(&tpath, &traj).unwrap();
        let text = fs::read_to_string(&tpath).unwrap();
        assert!(text.starts_with("t,x,u\n"));
        let first_data_line = text.lines().nth(1).unwrap();
        assert_eq!(first_data_line, "0,0,0");
        let trace = crate::observation::observation_derivative(
            &traj,
            &crate::solver::Forcing::zero(),
            &pb.coefficients,
            &pb.omega,
        )
        .unwrap();
        let opath = dir.path().join("observation.csv");
        write_observation_csv(&opath, &trace).unwrap();
        assert!(fs::read_to_string(&opath)
            .unwrap()
            .starts_with("t,q,qprime_formula,qprime_numeric\n"));
    }
}
