//! Configuration, output directories, manifests and the checkpoint codec.

pub mod checkpoint;
pub mod config;
pub mod csv;

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentKind, Outcome};
pub use config::{parse_config, RunConfig};

/// Environment variable naming the output root.
pub const OUT_ENV: &str = "VPFP_OUT";
/// Output root when neither a flag nor the environment names one.
pub const DEFAULT_ROOT: &str = "vpfp-runs";
pub const LOCK_FILE: &str = ".vpfp.lock";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FORMAT: u32 = 1;

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("`{}` has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

/// Exclusive ownership of an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOCK_FILE);
        let mut f = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    Error::Format(format!(
                        "output directory `{}` is in use (remove `{}` if stale)",
                        dir.display(),
                        path.display()
                    ))
                } else {
                    e.into()
                }
            })?;
        writeln!(f, "{}", std::process::id())?;
        Ok(OutputLock { path })
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Output directory: the flag, else `output_dir` from the config (relative
/// to the root), else `<root>/<kind>-<hash prefix>`. The root is `VPFP_OUT`
/// or [`DEFAULT_ROOT`].
pub fn resolve_output_dir(flag: Option<&Path>, cfg: &RunConfig, kind: ExperimentKind) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    let root = std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_ROOT));
    match cfg.output_dir() {
        Some(d) => root.join(d),
        None => root.join(format!("{kind}-{}", &cfg.hash()[..12])),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Run record: config echo, identity hash, code version, resolved spec,
/// output digests and the scan results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub tool: String,
    pub version: String,
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub config: String,
    pub spec: serde_json::Value,
    pub outputs: Vec<OutputFile>,
    pub results: serde_json::Value,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let m: Manifest = serde_json::from_slice(&fs::read(path)?)?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::Format(format!(
                "manifest format {}, expected {MANIFEST_FORMAT}",
                m.format
            )));
        }
        Ok(m)
    }

    /// Config recovered from the echoed canonical text, checked against the
    /// recorded hash.
    pub fn config(&self) -> Result<RunConfig> {
        let cfg = parse_config(&self.config)?;
        if cfg.hash() != self.config_hash {
            return Err(Error::Format(
                "manifest config text does not match its recorded hash".into(),
            ));
        }
        Ok(cfg)
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

/// Files written by one experiment.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

/// Runs `kind` under `cfg` and writes CSVs, `summary.json` and
/// `manifest.json` into `dir`.
pub fn run_to_dir(cfg: &RunConfig, kind: ExperimentKind, dir: &Path) -> Result<RunRecord> {
    let spec = cfg.to_spec(kind)?;
    let _lock = OutputLock::acquire(dir)?;
    let hash = cfg.hash();
    let Outcome { tables, summary } = experiments::run(&spec)?;
    let mut outputs = Vec::new();
    for t in &tables {
        let text = csv::render_csv(t)?;
        let file = format!("{}.csv", t.name);
        atomic_write(&dir.join(&file), text.as_bytes())?;
        outputs.push(OutputFile {
            file,
            bytes: text.len() as u64,
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
        });
    }
    let summary_doc = serde_json::json!({
        "experiment": kind,
        "config_hash": hash,
        "results": summary,
    });
    atomic_write(&dir.join(SUMMARY_FILE), &json_bytes(&summary_doc)?)?;
    let manifest = Manifest {
        format: MANIFEST_FORMAT,
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: kind,
        config_hash: hash,
        config: cfg.canonical(),
        spec: serde_json::to_value(&spec)?,
        outputs,
        results: summary,
    };
    atomic_write(&dir.join(MANIFEST_FILE), &json_bytes(&manifest)?)?;
    Ok(RunRecord {
        dir: dir.to_path_buf(),
        manifest,
    })
}

/// Repeats the run recorded in a manifest into `dir`.
pub fn rerun_manifest(manifest: &Path, dir: &Path) -> Result<RunRecord> {
    let m = Manifest::read(manifest)?;
    if m.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, running {}",
            m.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    run_to_dir(&m.config()?, m.experiment, dir)
}
