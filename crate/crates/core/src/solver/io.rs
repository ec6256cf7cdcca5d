//! Trajectory serialization: a binary snapshot container with a JSON manifest, and diagnostics CSV.
//!
//! Container layout (little endian): magic `TFSNAP01`, `u64` header length,
//! UTF-8 JSON header, then per snapshot an `f64` time followed by the eight
//! components `(sigma_e, u_e, sigma_i, u_i)`, each `M` pairs `(re, im)` of `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::LabError;
use crate::grid::Grid;
use crate::model::SpectralState;
use crate::scalar::{lit, to_f64, Scalar};
use crate::solver::{Mode, Snapshot, Trajectory};

const MAGIC: &[u8; 8] = b"TFSNAP01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerHeader {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub mode: Mode,
    pub snapshots: usize,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub header: ContainerHeader,
    pub times: Vec<f64>,
    pub config: serde_json::Value,
    pub versions: serde_json::Value,
}

fn component_names() -> Vec<String> {
    ["sigma_e", "u_e.x", "u_e.y", "u_e.z", "sigma_i", "u_i.x", "u_i.y", "u_i.z"].iter().map(|s| s.to_string()).collect()
}

pub fn header_for<T: Scalar>(traj: &Trajectory<T>) -> ContainerHeader {
    ContainerHeader {
        dim: traj.grid.dim(),
        n: traj.grid.n(),
        length: to_f64(traj.grid.length()),
        mode: traj.mode,
        snapshots: traj.snapshots.len(),
        components: component_names(),
    }
}

/// Writes all stored snapshots to `path`.
pub fn write_snapshots<T: Scalar>(traj: &Trajectory<T>, path: &Path) -> Result<(), LabError> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = serde_json::to_vec(&header_for(traj)).map_err(|e| LabError::Io(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    for snap in &traj.snapshots {
        w.write_all(&to_f64(snap.time).to_le_bytes())?;
        for comp in snap.state.components() {
            for z in comp {
                w.write_all(&to_f64(z.re).to_le_bytes())?;
                w.write_all(&to_f64(z.im).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_f64(r: &mut impl Read) -> Result<f64, LabError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Grid, header and snapshots read from a container.
pub type Container<T> = (Grid<T>, ContainerHeader, Vec<Snapshot<T>>);

/// Reads a container back into snapshots on a freshly built grid.
pub fn read_snapshots<T: Scalar>(path: &Path) -> Result<Container<T>, LabError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(LabError::Io("not a snapshot container".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let mut header = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut header)?;
    let header: ContainerHeader = serde_json::from_slice(&header).map_err(|e| LabError::Io(e.to_string()))?;
    let grid = Grid::new(header.dim, header.n, lit(header.length))?;
    let mut snaps = Vec::with_capacity(header.snapshots);
    for _ in 0..header.snapshots {
        let time = lit(read_f64(&mut r)?);
        let mut state = SpectralState::zeros(grid.len());
        for comp in state.components_mut() {
            for z in comp.iter_mut() {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                *z = Complex::new(lit(re), lit(im));
            }
        }
        snaps.push(Snapshot { time, state });
    }
    Ok((grid, header, snaps))
}

pub fn write_manifest<T: Scalar>(traj: &Trajectory<T>, config: serde_json::Value, path: &Path) -> Result<(), LabError> {
    let manifest = Manifest {
        header: header_for(traj),
        times: traj.diagnostics.iter().map(|d| to_f64(d.time)).collect(),
        config,
        versions: serde_json::json!({ "twofluid": env!("CARGO_PKG_VERSION") }),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| LabError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Diagnostics as long-format CSV with columns `t, quantity, group, value`.
pub fn write_diagnostics_csv<T: Scalar, W: Write>(traj: &Trajectory<T>, out: W) -> Result<(), LabError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| LabError::Io(e.to_string());
    w.write_record(["t", "quantity", "group", "value"]).map_err(io)?;
    for d in &traj.diagnostics {
        let t = format!("{:.6e}", to_f64(d.time));
        let rows = [
            ("mass", "sigma_e", d.mass_e),
            ("mass", "sigma_i", d.mass_i),
            ("l2", "densities", d.norm_densities),
            ("l2", "velocities", d.norm_velocities),
            ("l2", "difference", d.norm_difference),
            ("l2", "field", d.norm_field),
            ("constraint_residual", "field", d.constraint_residual),
            ("curl", "field", d.curl_field),
            ("energy", "all", d.energy),
        ];
        for (q, g, v) in rows {
            w.write_record([t.as_str(), q, g, &format!("{:.12e}", to_f64(v))]).map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{run, InitialData, SolverConfig};

    #[test]
    fn container_round_trip() {
        let g = Grid::<f64>::new(2, 8, 6.0).unwrap();
        let init = InitialData::RandomBand { amplitude: 1e-2, k_lo: 0.5, k_hi: 3.0, seed: 2 };
        let mut cfg = SolverConfig::new(g, Mode::LinearFull, init, 0.01, 0.05);
        cfg.snapshot_every = 2;
        let traj = run(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.bin");
        write_snapshots(&traj, &path).unwrap();
        let (grid, header, snaps) = read_snapshots::<f64>(&path).unwrap();
        assert_eq!(grid.len(), traj.grid.len());
        assert_eq!(header.snapshots, traj.snapshots.len());
        for (a, b) in snaps.iter().zip(&traj.snapshots) {
            assert_eq!(a.time, b.time);
            assert_eq!(a.state, b.state);
        }
        let mut buf = Vec::new();
        write_diagnostics_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,quantity,group,value\n"));
        assert_eq!(text.lines().count(), 1 + 9 * traj.diagnostics.len());
    }
}
