//! On-disk dataset: `epochs.jsonl`, `contexts.json`, `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{validate_readings, Epoch, PatientContext};

pub const EPOCHS_FILE: &str = "epochs.jsonl";
pub const CONTEXTS_FILE: &str = "contexts.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseHash {
    pub case_id: String,
    pub patient_id: u32,
    pub epoch_count: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub cases: usize,
    pub epochs: usize,
    pub mean_epochs_per_case: f64,
    pub case_hashes: Vec<CaseHash>,
}

impl Manifest {
    pub fn patient_for(&self, case_id: &str) -> Option<u32> {
        self.case_hashes.iter().find(|c| c.case_id == case_id).map(|c| c.patient_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub epochs: Vec<Epoch>,
    pub contexts: BTreeMap<u32, PatientContext>,
    pub manifest: Manifest,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("schema: {0}")]
    Schema(String),
}

fn case_digest(epochs: &[Epoch], ctx: &PatientContext) -> String {
    let mut h = Sha256::new();
    for e in epochs {
        h.update(serde_json::to_vec(e).expect("epoch serializes"));
        h.update(b"\n");
    }
    h.update(serde_json::to_vec(ctx).expect("context serializes"));
    hex::encode(h.finalize())
}

impl Dataset {
    pub fn from_cases(seed: u64, cases: Vec<(String, Vec<Epoch>, PatientContext)>) -> Self {
        let mut epochs = Vec::new();
        let mut contexts = BTreeMap::new();
        let mut case_hashes = Vec::new();
        for (case_id, es, ctx) in cases {
            case_hashes.push(CaseHash {
                case_id,
                patient_id: ctx.patient_id,
                epoch_count: es.len(),
                sha256: case_digest(&es, &ctx),
            });
            epochs.extend(es);
            contexts.insert(ctx.patient_id, ctx);
        }
        let n = case_hashes.len();
        let manifest = Manifest {
            seed,
            cases: n,
            epochs: epochs.len(),
            mean_epochs_per_case: if n == 0 { 0.0 } else { epochs.len() as f64 / n as f64 },
            case_hashes,
        };
        Self {
            epochs,
            contexts,
            manifest,
        }
    }

    /// Epochs for one patient, sorted by timestamp.
    pub fn epochs_for(&self, patient_id: u32) -> Vec<Epoch> {
        let mut out: Vec<Epoch> = self.epochs.iter().filter(|e| e.patient_id == patient_id).cloned().collect();
        out.sort_by_key(|e| e.timestamp);
        out
    }

    /// Cases whose content no longer matches the hash in the manifest.
    pub fn tampered_cases(&self) -> Vec<String> {
        self.manifest
            .case_hashes
            .iter()
            .filter(|c| match self.contexts.get(&c.patient_id) {
                Some(ctx) => case_digest(&self.epochs_for(c.patient_id), ctx) != c.sha256,
                None => true,
            })
            .map(|c| c.case_id.clone())
            .collect()
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), DatasetError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| DatasetError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;

        let p = dir.join(EPOCHS_FILE);
        let mut buf = Vec::new();
        for e in &self.epochs {
            serde_json::to_writer(&mut buf, e).expect("epoch serializes");
            buf.push(b'\n');
        }
        fs::write(&p, buf).map_err(io(&p))?;

        let p = dir.join(CONTEXTS_FILE);
        fs::write(&p, pretty(&self.contexts)).map_err(io(&p))?;
        let p = dir.join(MANIFEST_FILE);
        fs::write(&p, pretty(&self.manifest)).map_err(io(&p))?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self, DatasetError> {
        let p = dir.join(EPOCHS_FILE);
        let f = fs::File::open(&p).map_err(|source| DatasetError::Io { path: p.clone(), source })?;
        let mut epochs = Vec::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|source| DatasetError::Io { path: p.clone(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let e: Epoch = serde_json::from_str(&line).map_err(|source| DatasetError::Parse {
                path: p.clone(),
                line: i + 1,
                source,
            })?;
            if let Some(v) = validate_readings(&e).first() {
                return Err(DatasetError::Schema(format!("{}:{}: {v}", p.display(), i + 1)));
            }
            epochs.push(e);
        }
        let contexts: BTreeMap<u32, PatientContext> = read_json(&dir.join(CONTEXTS_FILE))?;
        for (k, ctx) in &contexts {
            if *k != ctx.patient_id {
                return Err(DatasetError::Schema(format!("context keyed {k} has patient_id {}", ctx.patient_id)));
            }
            if let Err(v) = ctx.validate() {
                return Err(DatasetError::Schema(format!("context {k}: {}", v[0])));
            }
        }
        let manifest: Manifest = read_json(&dir.join(MANIFEST_FILE))?;
        Ok(Self {
            epochs,
            contexts,
            manifest,
        })
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(p: &Path) -> Result<T, DatasetError> {
    let text = fs::read_to_string(p).map_err(|source| DatasetError::Io {
        path: p.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| DatasetError::Parse {
        path: p.to_path_buf(),
        line: source.line(),
        source,
    })
}

pub(crate) fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("serializable");
    out.write_all(b"\n").expect("vec write");
    out
}
