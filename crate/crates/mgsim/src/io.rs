//! Waveform CSV serialization and the per-run manifest.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ScenarioConfig;
use crate::waveform::Waveform;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Format { path: PathBuf, line: usize, reason: String },
    #[error("waveform set is not uniformly sampled: {0}")]
    NonUniform(String),
    #[error("manifest serialization failed: {0}")]
    Manifest(#[from] serde_json::Error),
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.to_path_buf(), source }
}

/// Write one waveform set (shared time base) as a single CSV file with
/// header `time,<name1>,<name2>,...`. All values are printed in scientific
/// notation with 9 significant digits.
pub fn write_waveforms(set: &[Waveform], path: &Path) -> Result<(), IoError> {
    if let Some(first) = set.first() {
        for w in &set[1..] {
            if w.period != first.period || w.start != first.start || w.len() != first.len() {
                return Err(IoError::NonUniform(format!(
                    "`{}` does not share the time base of `{}`",
                    w.name, first.name
                )));
            }
        }
    }
    let file = File::create(path).map_err(file_err(path))?;
    let mut out = BufWriter::new(file);
    let mut header = String::from("time");
    for w in set {
        header.push(',');
        header.push_str(&w.name);
    }
    writeln!(out, "{header}").map_err(file_err(path))?;
    if let Some(first) = set.first() {
        for k in 0..first.len() {
            write!(out, "{:.8e}", first.time_of(k)).map_err(file_err(path))?;
            for w in set {
                write!(out, ",{:.8e}", w.samples[k]).map_err(file_err(path))?;
            }
            writeln!(out).map_err(file_err(path))?;
        }
    }
    out.flush().map_err(file_err(path))
}

/// Read back a CSV produced by [`write_waveforms`].
pub fn read_waveforms(path: &Path) -> Result<Vec<Waveform>, IoError> {
    let file = File::open(path).map_err(file_err(path))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| IoError::Format {
            path: path.to_path_buf(),
            line: 1,
            reason: "empty file".into(),
        })?
        .1
        .map_err(file_err(path))
        .map(|h| (0usize, h))?;
    let names: Vec<&str> = header.split(',').collect();
    if names.first() != Some(&"time") {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            line: 1,
            reason: "first column must be `time`".into(),
        });
    }
    let mut times: Vec<f64> = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len() - 1];
    for (idx, line) in lines {
        let line = line.map_err(file_err(path))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(IoError::Format {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: format!("expected {} fields, got {}", names.len(), fields.len()),
            });
        }
        for (ci, field) in fields.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| IoError::Format {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: format!("`{field}` is not a number"),
            })?;
            if ci == 0 {
                times.push(v);
            } else {
                columns[ci - 1].push(v);
            }
        }
    }
    let start = times.first().copied().unwrap_or(0.0);
    let period = if times.len() >= 2 {
        (times[times.len() - 1] - start) / (times.len() - 1) as f64
    } else {
        1.0
    };
    Ok(names[1..]
        .iter()
        .zip(columns)
        .map(|(name, samples)| Waveform { name: name.to_string(), start, period, samples })
        .collect())
}

/// Per-run metadata, written to `manifest.json` before the waveforms.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub dt: f64,
    pub duration: f64,
    pub started_at: String,
    pub version: String,
    pub outputs: Vec<String>,
    pub config: ScenarioConfig,
}

impl RunManifest {
    pub fn new(cfg: &ScenarioConfig, outputs: &[&str]) -> Self {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            scenario: cfg.scenario.to_string(),
            dt: cfg.dt,
            duration: cfg.duration,
            started_at: format!("{now}"),
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            config: cfg.clone(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, IoError> {
        std::fs::create_dir_all(dir).map_err(file_err(dir))?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).map_err(file_err(&path))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ScenarioConfig, ScenarioKind};

    #[test]
    fn empty_set_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_waveforms(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "time\n");
    }

    #[test]
    fn roundtrip_preserves_printed_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let mut a = Waveform::new("v", 0.0, 1e-3);
        let mut b = Waveform::new("i", 0.0, 1e-3);
        for k in 0..3 {
            a.push(1.0 / (k as f64 + 3.0));
            b.push(-(k as f64) * 1.23456789e-4);
        }
        write_waveforms(&[a.clone(), b.clone()], &path).unwrap();
        let back = read_waveforms(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].name, "v");
        assert_eq!(back[1].name, "i");
        for (orig, got) in [(&a, &back[0]), (&b, &back[1])] {
            for (x, y) in orig.samples.iter().zip(&got.samples) {
                let scale = x.abs().max(1e-300);
                assert!((x - y).abs() / scale < 1e-8, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn mismatched_time_base_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let a = Waveform::new("a", 0.0, 1e-3);
        let b = Waveform::new("b", 0.0, 2e-3);
        assert!(matches!(write_waveforms(&[a, b], &path), Err(IoError::NonUniform(_))));
    }

    #[test]
    fn manifest_written_and_parseable() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ScenarioConfig::defaults(ScenarioKind::Emt);
        let path = RunManifest::new(&cfg, &["emt.csv"]).write(dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.scenario, "emt");
        assert_eq!(back.outputs, vec!["emt.csv"]);
    }
}
