//! CSV and JSON artifacts plus the manifest that indexes them.
//!
//! Floats are written in shortest round-trip form and every file ends in LF,
//! so identical inputs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use ngrc_core::analysis::BifurcationDiagram;
use ngrc_core::Trajectory;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

/// `t,x0,x1,…` with an optional trailing `theta` column.
pub fn write_trajectory_csv(
    path: &Path,
    traj: &Trajectory<f64>,
    thetas: Option<&[f64]>,
) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..traj.dim()).map(|i| format!("x{i}")));
    if thetas.is_some() {
        header.push("theta".into());
    }
    w.write_record(&header)?;
    for (i, state) in traj.states().enumerate() {
        let mut rec = vec![traj.time(i).to_string()];
        rec.extend(state.iter().map(|v| v.to_string()));
        if let Some(th) = thetas {
            rec.push(th[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trajectory written by [`write_trajectory_csv`]; a `theta` column is
/// ignored. The time column must advance by `dt`.
pub fn read_trajectory_csv(path: &Path, dt: f64) -> Result<Trajectory<f64>, CliError> {
    let name = path.display();
    let mut r = csv::ReaderBuilder::new().from_path(path)?;
    let header = r.headers()?.clone();
    if header.get(0) != Some("t") {
        return Err(CliError::Data(format!("{name}: first column must be `t`")));
    }
    let dim = header.iter().skip(1).take_while(|h| h.starts_with('x')).count();
    if dim == 0 {
        return Err(CliError::Data(format!("{name}: no state columns")));
    }
    let mut states: Vec<Vec<f64>> = Vec::new();
    let mut t0 = 0.0;
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |j: usize| -> Result<f64, CliError> {
            rec.get(j)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| CliError::Data(format!("{name}: row {}: bad value in column {j}", row + 1)))
        };
        let t = parse(0)?;
        if row == 0 {
            t0 = t;
        } else if row == 1 && ((t - t0) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(CliError::Data(format!(
                "{name}: time step {} does not match the configured dt {dt}",
                t - t0
            )));
        }
        states.push((1..=dim).map(parse).collect::<Result<_, _>>()?);
    }
    if states.is_empty() {
        return Err(CliError::Data(format!("{name}: no rows")));
    }
    Ok(Trajectory::from_states(&states, dt, t0))
}

/// Long-format scatter (`theta,value`) and per-row summary CSVs.
pub fn write_diagram(
    scatter_path: &Path,
    summary_path: &Path,
    diagram: &BifurcationDiagram<f64>,
) -> Result<(), CliError> {
    let mut w = csv_writer(scatter_path)?;
    w.write_record(["theta", "value"])?;
    for row in &diagram.rows {
        for v in &row.scatter {
            w.write_record([row.theta.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    let mut w = csv_writer(summary_path)?;
    w.write_record(["theta", "lambda_max", "collapse", "collapse_step", "maxima", "note"])?;
    for row in &diagram.rows {
        w.write_record([
            row.theta.to_string(),
            opt(row.lambda_max),
            row.collapse.map(|c| c.kind.as_str().to_string()).unwrap_or_default(),
            row.collapse.map(|c| c.step.to_string()).unwrap_or_default(),
            row.scatter.len().to_string(),
            row.note.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes rows of optional floats under `header`.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<Option<f64>>]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| opt(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: String,
    pub role: String,
    #[serde(default)]
    pub theta: Option<f64>,
    pub sha256: String,
    /// SHA-256 of the resolved config that produced the file.
    pub settings_hash: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        read_json(&dir.join(MANIFEST))
    }

    pub fn load_or_default(dir: &Path) -> Result<Self, CliError> {
        if dir.join(MANIFEST).exists() {
            Self::load(dir)
        } else {
            Ok(Self::default())
        }
    }

    /// Records a file already written under `dir`, replacing any entry with
    /// the same path.
    pub fn record(
        &mut self,
        dir: &Path,
        rel: &str,
        role: &str,
        theta: Option<f64>,
        settings_hash: &str,
    ) -> Result<(), CliError> {
        let bytes = fs::read(dir.join(rel))?;
        self.artifacts.retain(|a| a.path != rel);
        self.artifacts.push(Artifact {
            path: rel.to_string(),
            role: role.to_string(),
            theta,
            sha256: sha256_hex(&bytes),
            settings_hash: settings_hash.to_string(),
        });
        self.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        write_json(&dir.join(MANIFEST), self)
    }

    pub fn with_role<'a>(&'a self, role: &'a str) -> impl Iterator<Item = &'a Artifact> + 'a {
        self.artifacts.iter().filter(move |a| a.role == role)
    }

    /// Path of `artifact` after checking its hash.
    pub fn verified_path(dir: &Path, artifact: &Artifact) -> Result<PathBuf, CliError> {
        let path = dir.join(&artifact.path);
        let bytes = fs::read(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if sha256_hex(&bytes) != artifact.sha256 {
            return Err(CliError::Data(format!("{}: checksum does not match the manifest", path.display())));
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let traj = Trajectory::from_states(&[[0.1, 1.0 / 3.0], [2e-9, -7.25], [1e300, 0.0]], 0.05, 0.0);
        write_trajectory_csv(&path, &traj, Some(&[1.0, 2.0, 3.0])).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,x0,x1,theta\n"));
        assert!(!text.contains('\r'));
        let back = read_trajectory_csv(&path, 0.05).unwrap();
        assert_eq!(back, traj);
        assert!(matches!(read_trajectory_csv(&path, 0.1), Err(CliError::Data(_))));
    }

    #[test]
    fn manifest_detects_modified_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("f.csv"), "t\n0\n").unwrap();
        let mut m = Manifest::default();
        m.record(dir.path(), "f.csv", "x", None, "h").unwrap();
        m.record(dir.path(), "f.csv", "x", None, "h").unwrap();
        assert_eq!(m.artifacts.len(), 1);
        Manifest::verified_path(dir.path(), &m.artifacts[0]).unwrap();
        fs::write(dir.path().join("f.csv"), "t\n1\n").unwrap();
        assert!(Manifest::verified_path(dir.path(), &m.artifacts[0]).is_err());
    }
}
