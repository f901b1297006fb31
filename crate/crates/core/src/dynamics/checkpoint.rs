//! Trajectory directories: one little-endian complex binary per checkpoint
//! plus a JSON sidecar describing shapes.

use std::fs;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{Backend, CorrelationKernel, FieldState};
use crate::error::{Error, Result};
use crate::lattice::{Grid, Offset, Representation, SpectralField, MAX_DIM};
use crate::scalar::{lit, to_f64, Real};

pub const SIDECAR: &str = "trajectory.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFiles {
    pub time: f64,
    pub fields: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
}

/// Sidecar contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub precision: String,
    pub dim: usize,
    pub points: usize,
    pub length: f64,
    pub backend: Backend,
    pub orbitals: usize,
    pub occupations: Vec<f64>,
    pub modes: Vec<usize>,
    pub times: Vec<f64>,
    pub separations: Vec<Vec<isize>>,
    pub files: Vec<CheckpointFiles>,
}

/// A trajectory read back from disk.
#[derive(Clone, Debug)]
pub struct StoredTrajectory<T: Real> {
    pub header: TrajectoryHeader,
    pub states: Vec<FieldState<T>>,
    pub kernels: Vec<CorrelationKernel<T>>,
}

fn encode<T: Real>(rows: &[&[Complex<T>]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(rows.iter().map(|r| r.len()).sum::<usize>() * T::COMPLEX_BYTES);
    for row in rows {
        for v in *row {
            v.re.write_le(&mut out);
            v.im.write_le(&mut out);
        }
    }
    out
}

fn decode<T: Real>(bytes: &[u8], rows: usize, len: usize) -> Result<Vec<Vec<Complex<T>>>> {
    let half = T::COMPLEX_BYTES / 2;
    if bytes.len() != rows * len * T::COMPLEX_BYTES {
        return Err(Error::IncompleteInput(format!(
            "binary holds {} bytes, expected {}",
            bytes.len(),
            rows * len * T::COMPLEX_BYTES
        )));
    }
    Ok(bytes
        .chunks_exact(len * T::COMPLEX_BYTES)
        .map(|row| {
            row.chunks_exact(T::COMPLEX_BYTES)
                .map(|c| Complex::new(T::read_le(&c[..half]), T::read_le(&c[half..])))
                .collect()
        })
        .collect())
}

/// Writes checkpoints (and optionally their kernels) under `dir`.
pub fn write_trajectory<T: Real>(
    dir: &Path,
    states: &[FieldState<T>],
    kernels: Option<&[CorrelationKernel<T>]>,
) -> Result<TrajectoryHeader> {
    let first = states
        .first()
        .ok_or_else(|| Error::IncompleteInput("no checkpoints to write".into()))?;
    if let Some(k) = kernels {
        if k.len() != states.len() {
            return Err(Error::IncompleteInput("one kernel per checkpoint is required".into()));
        }
    }
    fs::create_dir_all(dir)?;
    let grid = first.grid();
    let mut files = Vec::new();
    for (i, s) in states.iter().enumerate() {
        let name = format!("fields_{i:05}.bin");
        let rows: Vec<&[Complex<T>]> = s.fields().iter().map(|f| f.data()).collect();
        fs::write(dir.join(&name), encode(&rows))?;
        let kernel = match kernels {
            Some(k) => {
                let kname = format!("kernel_{i:05}.bin");
                let rows: Vec<&[Complex<T>]> = k[i].values().iter().map(|v| v.as_slice()).collect();
                fs::write(dir.join(&kname), encode(&rows))?;
                Some(kname)
            }
            None => None,
        };
        files.push(CheckpointFiles {
            time: to_f64(s.time()),
            fields: name,
            kernel,
        });
    }
    let separations = kernels
        .and_then(|k| k.first())
        .map(|k| k.separations().iter().map(|z| z[..grid.dim()].to_vec()).collect())
        .unwrap_or_default();
    let header = TrajectoryHeader {
        precision: T::COMPLEX_TAG.into(),
        dim: grid.dim(),
        points: grid.points(),
        length: to_f64(grid.length()),
        backend: first.backend(),
        orbitals: first.len(),
        occupations: first.weights().iter().map(|w| to_f64(*w)).collect(),
        modes: first.modes().to_vec(),
        times: states.iter().map(|s| to_f64(s.time())).collect(),
        separations,
        files,
    };
    fs::write(dir.join(SIDECAR), serde_json::to_string_pretty(&header)?)?;
    Ok(header)
}

/// Reads a directory written by [`write_trajectory`].
pub fn read_trajectory<T: Real>(dir: &Path) -> Result<StoredTrajectory<T>> {
    let header: TrajectoryHeader = serde_json::from_str(&fs::read_to_string(dir.join(SIDECAR))?)?;
    if header.precision != T::COMPLEX_TAG {
        return Err(Error::IncompleteInput(format!(
            "trajectory stored as {}, requested {}",
            header.precision,
            T::COMPLEX_TAG
        )));
    }
    let grid = Grid::new(header.dim, header.points, lit::<T>(header.length))?;
    let weights: Vec<T> = header.occupations.iter().map(|w| lit(*w)).collect();
    let separations: Vec<Offset> = header
        .separations
        .iter()
        .map(|z| {
            let mut o = [0isize; MAX_DIM];
            o[..z.len()].copy_from_slice(z);
            o
        })
        .collect();
    let mut states = Vec::new();
    let mut kernels = Vec::new();
    for f in &header.files {
        let rows = decode::<T>(&fs::read(dir.join(&f.fields))?, header.orbitals, grid.sites())?;
        let fields = rows
            .into_iter()
            .map(|d| SpectralField::new(&grid, Representation::Position, d))
            .collect::<Result<Vec<_>>>()?;
        states.push(FieldState::new(
            &grid,
            lit(f.time),
            fields,
            weights.clone(),
            header.modes.clone(),
            header.backend,
        )?);
        if let Some(k) = &f.kernel {
            let rows = decode::<T>(&fs::read(dir.join(k))?, separations.len(), grid.sites())?;
            kernels.push(CorrelationKernel::from_values(
                &grid,
                lit(f.time),
                separations.clone(),
                rows,
            )?);
        }
    }
    Ok(StoredTrajectory {
        header,
        states,
        kernels,
    })
}
