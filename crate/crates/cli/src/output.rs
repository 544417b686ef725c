//! Output directory handling: every file carries the config hash and seed,
//! and a manifest lists each file with its SHA-256.

use std::fs;
use std::path::{Path, PathBuf};

use omav::simulate::SimLog;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::plot::LinePlot;

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    files: &'a [FileEntry],
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    seed: u64,
    #[serde(flatten)]
    body: &'a T,
}

pub struct OutDir {
    root: PathBuf,
    hash: String,
    seed: u64,
    files: Vec<FileEntry>,
}

impl OutDir {
    pub fn create(root: &Path, hash: String, seed: u64) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            hash,
            seed,
            files: Vec::new(),
        })
    }

    pub fn stamp(&self) -> String {
        format!("config_hash={} seed={}", self.hash, self.seed)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileEntry {
            path: name.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// Pretty JSON with `config_hash` and `seed` merged into the top-level
    /// object.
    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<()> {
        let v = Stamped {
            config_hash: &self.hash,
            seed: self.seed,
            body,
        };
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// CSV preceded by `#` comment lines carrying the stamp.
    pub fn csv<I>(&mut self, name: &str, header: &[String], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut buf = format!("# config_hash={}\n# seed={}\n", self.hash, self.seed).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(&r)?;
            }
            w.flush().map_err(|e| CliError::io(self.root.join(name), e))?;
        }
        self.write(name, &buf)
    }

    pub fn svg(&mut self, name: &str, plot: &LinePlot) -> Result<()> {
        let text = plot.to_svg(&self.stamp());
        self.write(name, text.as_bytes())
    }

    /// Write `manifest.json` and return the listed paths.
    pub fn finish(self, command: &str) -> Result<Vec<String>> {
        let m = Manifest {
            command,
            config_hash: &self.hash,
            seed: self.seed,
            files: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        let path = self.root.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(self.files.into_iter().map(|f| f.path).collect())
    }
}

pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::from("NaN")
    } else {
        v.to_string()
    }
}

pub fn log_header() -> Vec<String> {
    [
        "t", "x", "y", "phi", "theta1", "theta2", "xd", "yd", "phid", "theta1d", "theta2d", "z11", "z12", "z13", "z14",
        "u1", "u_lift", "u_moment", "x_ref", "y_ref", "phi_ref", "d", "e_pos", "e_phi",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

pub fn log_rows(log: &SimLog) -> impl Iterator<Item = Vec<String>> + '_ {
    (0..log.len()).map(move |k| {
        std::iter::once(log.times[k])
            .chain(log.states[k].iter().copied())
            .chain(log.inputs[k].iter().copied())
            .chain(log.refs[k])
            .chain([log.disturbance[k], log.e_pos[k], log.e_phi[k]])
            .map(num)
            .collect()
    })
}

/// Pose, velocity, input and error figures for one run.
pub fn log_plots(out: &mut OutDir, prefix: &str, log: &SimLog) -> Result<()> {
    let t = || log.times.clone();
    let col = |i: usize| log.states.iter().map(|s| s[i]).collect::<Vec<_>>();
    let refc = |i: usize| log.refs.iter().map(|r| r[i]).collect::<Vec<_>>();
    use crate::plot::Series;
    let pose = LinePlot::new("Pose", "t (s)", "x, y (m) / φ (rad)")
        .with(Series::new("x", t(), col(0)))
        .with(Series::new("y", t(), col(1)))
        .with(Series::new("φ", t(), col(2)))
        .with(Series::new("x_ref", t(), refc(0)).dashed())
        .with(Series::new("y_ref", t(), refc(1)).dashed())
        .with(Series::new("φ_ref", t(), refc(2)).dashed());
    out.svg(&format!("{prefix}pose.svg"), &pose)?;
    let joints = LinePlot::new("Joint angles", "t (s)", "rad")
        .with(Series::new("θ1", t(), col(3)))
        .with(Series::new("θ2", t(), col(4)));
    out.svg(&format!("{prefix}joints.svg"), &joints)?;
    let vel = LinePlot::new("Velocities", "t (s)", "m/s, rad/s")
        .with(Series::new("ẋ", t(), col(5)))
        .with(Series::new("ẏ", t(), col(6)))
        .with(Series::new("φ̇", t(), col(7)))
        .with(Series::new("θ̇1", t(), col(8)))
        .with(Series::new("θ̇2", t(), col(9)));
    out.svg(&format!("{prefix}velocities.svg"), &vel)?;
    let inp = |i: usize| log.inputs.iter().map(|u| u[i]).collect::<Vec<_>>();
    let inputs = LinePlot::new("Inputs", "t (s)", "N / N·m")
        .with(Series::new("u1", t(), inp(0)))
        .with(Series::new("lift", t(), inp(1)))
        .with(Series::new("moment", t(), inp(2)));
    out.svg(&format!("{prefix}inputs.svg"), &inputs)?;
    let err = LinePlot::new("Tracking error", "t (s)", "error")
        .log_y()
        .with(Series::new("e_pos (m)", t(), log.e_pos.clone()))
        .with(Series::new("e_φ (rad)", t(), log.e_phi.clone()));
    out.svg(&format!("{prefix}errors.svg"), &err)
}
