//! CSV artifacts and the hashed run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use kaczmarz_pref::simulator::{ExperimentMetrics, NoisePoint};
use kaczmarz_pref::updaters::DecayPoint;

use crate::CliError;

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

fn fixed_or_na(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fixed)
}

/// Renders rows as CSV with LF line endings.
fn render<R, I>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

pub fn metrics_csv(metrics: &[ExperimentMetrics]) -> Vec<u8> {
    render(
        &["method", "like_rate", "align_at_20", "direction_stability", "final_alignment"],
        metrics.iter().map(|m| {
            [
                m.method.kind.name().to_string(),
                fixed_or_na(m.like_rate),
                fixed_or_na(m.align_at_20),
                fixed_or_na(m.direction_stability),
                fixed_or_na(m.final_alignment.map(|f| f.mean)),
            ]
        }),
    )
}

pub fn trace_csv(metrics: &[ExperimentMetrics]) -> Vec<u8> {
    render(
        &["method", "swipe", "mean_alignment", "std_alignment"],
        metrics.iter().flat_map(|m| {
            m.alignment_trace.iter().enumerate().map(move |(i, p)| {
                [
                    m.method.kind.name().to_string(),
                    (i + 1).to_string(),
                    fixed(p.mean),
                    fixed(p.std),
                ]
            })
        }),
    )
}

pub fn noise_csv(points: &[NoisePoint]) -> Vec<u8> {
    render(
        &["method", "p_flip", "mean_final_alignment", "std"],
        points.iter().map(|p| {
            [
                p.method.kind.name().to_string(),
                fixed(p.p_flip),
                fixed_or_na(p.final_alignment.map(|f| f.mean)),
                fixed_or_na(p.final_alignment.map(|f| f.std)),
            ]
        }),
    )
}

/// Weights span many orders of magnitude, so they are written in
/// scientific notation with 6 fractional digits.
pub fn decay_csv(table: &[DecayPoint]) -> Vec<u8> {
    render(
        &["step", "measured_weight", "eta_pow_envelope", "contraction_product_envelope"],
        table.iter().map(|p| {
            [
                p.step.to_string(),
                format!("{:.6e}", p.measured_weight),
                format!("{:.6e}", p.eta_pow_envelope),
                format!("{:.6e}", p.contraction_envelope),
            ]
        }),
    )
}

/// Hex SHA-256 of the git blob object for `content`.
pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Absent for commands that draw no random numbers.
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub artifacts: Vec<Artifact>,
}

/// Collects artifacts for one output directory and writes them together
/// with the manifest.
pub struct ArtifactWriter {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| CliError::io(&path, e))?;
        log::info!("wrote {}", path.display());
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: blob_hash(content),
            bytes: content.len(),
        });
        Ok(())
    }

    pub fn finish(mut self, command: &str, seed: Option<u64>, config: serde_json::Value) -> Result<RunManifest, CliError> {
        self.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            command: command.to_string(),
            seed,
            config,
            artifacts: self.artifacts,
        };
        let mut text = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        text.push(b'\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}
