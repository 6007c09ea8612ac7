use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::SystemConfig;
use super::experiments::{CoherenceDistribution, ExperimentRecord, NmseCell, Table1Row};
use crate::codebook::DesignResult;
use crate::{Error, Result};

/// Header of the coherence-table CSV.
pub const TABLE1_HEADER: [&str; 9] = [
    "m_x",
    "proposed",
    "permutation_mean",
    "permutation_min",
    "permutation_max",
    "permutation_draws",
    "permutation_degenerate",
    "pilot_indices",
    "coherence_pair",
];

/// Header of the coherence-distribution CSV. `kind` is `sample`, `proposed`,
/// `mean`, `min`, `max` or `degenerate`; `index` is the draw number for
/// samples and empty otherwise. The `degenerate` row holds the number of
/// draws with undefined μ, which are left out of the statistics.
pub const COHERENCE_HEADER: [&str; 4] = ["m_x", "kind", "index", "coherence"];

/// Header of the NMSE sweep CSV.
pub const NMSE_HEADER: [&str; 14] = [
    "axis",
    "axis_value",
    "cell",
    "codebook",
    "m_x",
    "n_p",
    "snr_db",
    "m",
    "trials",
    "mean_nmse",
    "mean_nmse_db",
    "std_error",
    "coherence",
    "seed",
];

/// 17 significant digits in scientific notation; round-trips every f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn csv_string<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

pub fn table1_csv(rows: &[Table1Row]) -> String {
    csv_string(
        TABLE1_HEADER,
        rows.iter().map(|r| {
            [
                r.m_x.to_string(),
                format_float(r.proposed),
                format_float(r.permutation_mean),
                format_float(r.permutation_min),
                format_float(r.permutation_max),
                r.permutation_draws.to_string(),
                r.permutation_degenerate.to_string(),
                join(&r.pilot_indices),
                format!("{} {}", r.coherence_pair.0, r.coherence_pair.1),
            ]
        }),
    )
}

pub fn coherence_csv(dists: &[CoherenceDistribution]) -> String {
    let mut rows = Vec::new();
    for d in dists {
        let m = d.m_x.to_string();
        for &(i, s) in &d.samples {
            rows.push([m.clone(), "sample".into(), i.to_string(), format_float(s)]);
        }
        for (kind, v) in [
            ("proposed", d.proposed),
            ("mean", d.mean),
            ("min", d.min),
            ("max", d.max),
        ] {
            rows.push([m.clone(), kind.into(), String::new(), format_float(v)]);
        }
        rows.push([m.clone(), "degenerate".into(), String::new(), d.degenerate.to_string()]);
    }
    csv_string(COHERENCE_HEADER, rows)
}

pub fn nmse_csv(cells: &[NmseCell]) -> String {
    csv_string(
        NMSE_HEADER,
        cells.iter().map(|c| {
            [
                c.axis.as_str().into(),
                format_float(c.axis_value),
                c.cell.to_string(),
                c.codebook.as_str().into(),
                c.m_x.to_string(),
                c.n_p.to_string(),
                format_float(c.snr_db),
                c.m.to_string(),
                c.trials.to_string(),
                format_float(c.mean_nmse),
                format_float(c.mean_nmse_db),
                format_float(c.std_error),
                c.coherence.map(format_float).unwrap_or_default(),
                c.seed.to_string(),
            ]
        }),
    )
}

/// Pretty JSON of the design artifact, newline-terminated.
pub fn design_json(design: &DesignResult) -> String {
    let mut s = serde_json::to_string_pretty(&design.artifact()).expect("artifact serializes");
    s.push('\n');
    s
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// An output file and the SHA-256 of its contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
}

impl ManifestFile {
    pub fn new(path: &str, contents: &str) -> Self {
        Self {
            path: path.into(),
            sha256: sha256_hex(contents.as_bytes()),
        }
    }
}

/// Index of one run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub target: String,
    pub version: String,
    pub config_hash: String,
    pub files: Vec<ManifestFile>,
    pub record: ExperimentRecord,
}

impl Manifest {
    pub fn new(target: &str, cfg: &SystemConfig, files: Vec<ManifestFile>, record: ExperimentRecord) -> Self {
        Self {
            target: target.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
            files,
            record,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
