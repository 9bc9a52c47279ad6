//! Plot-ready CSV writers: comma separated, header row, `.` decimals.

use std::io::{self, Write};

use crate::sim::TrajectoryPath;
use crate::stationary::StationaryDistribution;

/// Rows `(t, z)`.
pub fn write_trajectory_csv<W: Write>(mut w: W, rows: &[(f64, f64)]) -> io::Result<()> {
    writeln!(w, "t,z")?;
    for (t, z) in rows {
        writeln!(w, "{t},{z}")?;
    }
    Ok(())
}

/// Rows `(t, sigma2)`.
pub fn write_variance_csv<W: Write>(mut w: W, times: &[f64], variance: &[f64]) -> io::Result<()> {
    writeln!(w, "t,sigma2")?;
    for (t, v) in times.iter().zip(variance) {
        writeln!(w, "{t},{v}")?;
    }
    Ok(())
}

/// Rows `(path_id, t, v)` for sampled Gaussian paths.
pub fn write_fluctuation_paths_csv<W: Write>(
    mut w: W,
    times: &[f64],
    paths: &[Vec<f64>],
) -> io::Result<()> {
    writeln!(w, "path_id,t,v")?;
    for (id, row) in paths.iter().enumerate() {
        for (t, v) in times.iter().zip(row) {
            writeln!(w, "{id},{t},{v}")?;
        }
    }
    Ok(())
}

/// Rows `(path_id, t, k)` for chain states sampled on a grid.
pub fn write_state_paths_csv<W: Write>(
    mut w: W,
    times: &[f64],
    states: &[Vec<u64>],
) -> io::Result<()> {
    writeln!(w, "path_id,t,k")?;
    for (id, row) in states.iter().enumerate() {
        for (t, k) in times.iter().zip(row) {
            writeln!(w, "{id},{t},{k}")?;
        }
    }
    Ok(())
}

/// Rows `(path_id, t, k)` for full event-level paths, starting at `t = 0`.
pub fn write_event_paths_csv<W: Write>(mut w: W, paths: &[TrajectoryPath]) -> io::Result<()> {
    writeln!(w, "path_id,t,k")?;
    for (id, path) in paths.iter().enumerate() {
        writeln!(w, "{id},0,{}", path.initial_state)?;
        for e in &path.events {
            writeln!(w, "{id},{},{}", e.time, e.state)?;
        }
    }
    Ok(())
}

/// Rows `(k, probability)`.
pub fn write_stationary_csv<W: Write>(mut w: W, dist: &StationaryDistribution) -> io::Result<()> {
    writeln!(w, "k,probability")?;
    for (k, p) in dist.probabilities.iter().enumerate() {
        writeln!(w, "{k},{p}")?;
    }
    Ok(())
}
