use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::geometry::{io, ScalarField};
use crate::solvers::TraceRow;

/// Version of the JSON report layout and of the fixed CSV column sets.
pub const SCHEMA_VERSION: u32 = 1;

pub const TRACE_COLUMNS: &str = "time,residual,min_u,max_u,energy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Headline numbers of a run, also used for the sweep table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub satisfied: Option<bool>,
    pub residual: Option<f64>,
    pub min_u: Option<f64>,
    pub max_u: Option<f64>,
    /// Action-specific scalar: λ₁, S_ψ, empirical λ*, pass level.
    pub value: Option<f64>,
    pub error_kind: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub schema: u32,
    pub action: String,
    pub seed: u64,
    /// 0 success, 1 certified infeasible, 2 error.
    pub exit_code: i32,
    pub status: String,
    pub summary: RunSummary,
    pub config: BTreeMap<String, String>,
    pub artifacts: Vec<Artifact>,
    /// Wall clock; the only field that differs between identical runs.
    pub timing: Timing,
}

impl RunManifest {
    /// Re-hashes every listed artifact under `root`.
    pub fn verify(&self, root: &Path) -> Result<bool> {
        for a in &self.artifacts {
            let bytes = fs::read(root.join(&a.path))?;
            if bytes.len() as u64 != a.bytes || sha256_hex(&bytes) != a.sha256 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files under one directory and records their checksums.
pub struct Sink {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Sink {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        fs::write(self.root.join(name), data)?;
        self.record(name.to_string(), data);
        Ok(())
    }

    fn record(&mut self, path: String, data: &[u8]) {
        self.artifacts.retain(|a| a.path != path);
        self.artifacts.push(Artifact {
            path,
            sha256: sha256_hex(data),
            bytes: data.len() as u64,
        });
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut data = serde_json::to_vec_pretty(value)?;
        data.push(b'\n');
        self.bytes(name, &data)
    }

    pub fn trace(&mut self, name: &str, rows: &[TraceRow]) -> Result<()> {
        let mut s = format!("{TRACE_COLUMNS}\n");
        for r in rows {
            let _ = writeln!(s, "{:?},{:?},{:?},{:?},{:?}", r.time, r.residual, r.min_u, r.max_u, r.energy);
        }
        self.bytes(name, s.as_bytes())
    }

    /// `<stem>.f64` plus its `.desc` sidecar.
    pub fn field(&mut self, stem: &str, field: &ScalarField) -> Result<()> {
        self.bytes(&format!("{stem}.f64"), &io::encode_binary(field))?;
        self.bytes(&format!("{stem}.desc"), io::descriptor(field.grid()).as_bytes())
    }

    /// Lists files written by a nested run, prefixed with its subdirectory.
    pub fn adopt(&mut self, prefix: &str, artifacts: &[Artifact]) {
        for a in artifacts {
            self.artifacts.push(Artifact {
                path: format!("{prefix}/{}", a.path),
                ..a.clone()
            });
        }
    }

    pub fn into_artifacts(mut self) -> Vec<Artifact> {
        self.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        self.artifacts
    }
}

/// Formats an optional number for CSV; missing values are empty cells.
pub fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}
