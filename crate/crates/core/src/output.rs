//! CSV and JSON emission. Column layouts are documented in `FORMATS.md`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::ensemble_random::{AveragedProfile, EnsembleReport};
use crate::error::{FrontError, Result};
use crate::front_builder::{ApproximatingRun, FrontEstimate, PeriodicWave};
use crate::interface_track::InterfaceTrace;
use crate::pde_core::Field;
use crate::wave_profile::WaveProfile;

pub const FORMAT_VERSION: u32 = 1;

/// JSON body tagged with the format version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub format_version: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Versioned<T> {
    pub fn new(body: T) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            body,
        }
    }
}

/// JSON writes non-finite floats as `null`; reads them back as NaN.
pub(crate) fn nullable<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Compact JSON, for large artifacts.
pub fn write_json_compact<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(FrontError::MissingArtifact(path.display().to_string()));
    }
    let f = std::io::BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(f)?)
}

pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    let csv_err = |e: csv::Error| FrontError::Io(std::io::Error::other(e));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn names(prefix: &str, values: &[f64]) -> Vec<String> {
    values.iter().map(|v| format!("{prefix}{v}")).collect()
}

pub fn write_profile(path: &Path, phi: &WaveProfile) -> Result<()> {
    let header = ["x", "phi", "dphi"].map(String::from);
    let rows = phi
        .xs()
        .zip(phi.phi.iter().zip(&phi.dphi))
        .map(|(x, (&p, &d))| vec![x, p, d]);
    write_csv(path, &header, rows)
}

pub fn write_trace(path: &Path, trace: &InterfaceTrace) -> Result<()> {
    let mut header: Vec<String> = ["t", "xi_theta"].map(String::from).to_vec();
    header.extend(names("xi_", &trace.levels));
    header.extend(["xi_envelope", "slope_theta", "speed_formula"].map(String::from));
    header.extend(names("steepness_", &trace.radii));
    header.push("edge_value".into());
    let rows = trace.samples.iter().map(|s| {
        let mut r = vec![s.t, s.xi_theta];
        r.extend(&s.xi);
        r.extend([s.xi_envelope, s.slope_theta, s.speed_formula]);
        r.extend(&s.steepness);
        r.push(s.edge_value);
        r
    });
    write_csv(path, &header, rows)
}

/// Long format: one row per node per snapshot.
pub fn write_snapshots(path: &Path, snapshots: &[Field]) -> Result<()> {
    let header = ["t", "x", "u"].map(String::from);
    let rows = snapshots
        .iter()
        .flat_map(|f| f.values.iter().enumerate().map(move |(i, &u)| vec![f.t, f.grid.x(i), u]));
    write_csv(path, &header, rows)
}

/// Columns `offset` and one per time.
pub fn write_profiles(path: &Path, offsets: &[f64], times: &[f64], profiles: &[Vec<f64>]) -> Result<()> {
    let mut header = vec!["offset".to_string()];
    header.extend(names("t_", times));
    let rows = offsets.iter().enumerate().map(|(i, &o)| {
        let mut r = vec![o];
        r.extend(profiles.iter().map(|p| p[i]));
        r
    });
    write_csv(path, &header, rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub s: f64,
    pub x_s: f64,
    pub t_end: f64,
    pub u_origin: f64,
    pub samples: usize,
    pub snapshots: usize,
}

pub fn write_run(dir: &Path, run: &ApproximatingRun) -> Result<()> {
    write_json_compact(&dir.join("run.json"), &Versioned::new(run))?;
    write_json(
        &dir.join("run_summary.json"),
        &Versioned::new(RunSummary {
            s: run.s,
            x_s: run.x_s,
            t_end: run.t_end,
            u_origin: run.u_origin,
            samples: run.trace.samples.len(),
            snapshots: run.snapshots.len(),
        }),
    )?;
    write_trace(&dir.join("trace.csv"), &run.trace)?;
    write_snapshots(&dir.join("snapshots.csv"), &run.snapshots)
}

pub fn read_run(dir: &Path) -> Result<ApproximatingRun> {
    let v: Versioned<ApproximatingRun> = read_json(&dir.join("run.json"))?;
    Ok(v.body)
}

pub fn write_front(dir: &Path, est: &FrontEstimate) -> Result<()> {
    write_json(&dir.join("front.json"), &Versioned::new(est))?;
    let header = ["t", "xi_theta"].map(String::from);
    write_csv(
        &dir.join("front_path.csv"),
        &header,
        est.times.iter().zip(&est.path).map(|(&t, &x)| vec![t, x]),
    )?;
    let header = ["s", "x_s", "gap_to_next"].map(String::from);
    write_csv(
        &dir.join("front_gaps.csv"),
        &header,
        est.s_list
            .iter()
            .zip(&est.x_s)
            .enumerate()
            .map(|(i, (&s, &x))| vec![s, x, est.gaps.get(i).copied().unwrap_or(f64::NAN)]),
    )?;
    write_profiles(&dir.join("front_profiles.csv"), &est.offsets, &est.profile_times, &est.profiles)
}

pub fn write_periodic(dir: &Path, wave: &PeriodicWave) -> Result<()> {
    write_json(&dir.join("periodic.json"), &Versioned::new(wave))?;
    write_profiles(&dir.join("periodic_profiles.csv"), &wave.offsets, &wave.phase_times, &wave.phase_profiles)?;
    let header = ["period_index", "residual", "displacement"].map(String::from);
    write_csv(
        &dir.join("periodic_contraction.csv"),
        &header,
        wave.residuals
            .iter()
            .zip(&wave.displacements)
            .enumerate()
            .map(|(k, (&r, &d))| vec![k as f64, r, d]),
    )
}

pub fn write_ensemble(dir: &Path, report: &EnsembleReport, psi: Option<&AveragedProfile>) -> Result<()> {
    write_json(&dir.join("ensemble_summary.json"), report)?;
    if let Some(p) = psi {
        let header = ["offset", "psi_star"].map(String::from);
        write_csv(
            &dir.join("psi_star.csv"),
            &header,
            p.offsets.iter().zip(&p.values).map(|(&o, &v)| vec![o, v]),
        )?;
    }
    Ok(())
}
