//! JSON form of [`ExperimentRecord`].
//!
//! ```json
//! {
//!   "counts": {"0,0": 9120, "0,1": 231, "1,0": 240, "1,1": 7},
//!   "bucket": 402,
//!   "n_cycles": 10,
//!   "mean_photons_per_cycle": 1000.0,
//!   "cutoff": 1,
//!   "path": "independent",
//!   "seed": 42,
//!   "truth": {"separation_d": 0.4, "psf_width_w": 1.0, "diffusion_d": 0.01,
//!             "cycle_time_t": 1.0, "brightness_nu": 0.5, "alignment_time_ta": 0.0}
//! }
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spade_core::monte_carlo::{ExperimentRecord, PathModel};
use spade_core::{ModeIndex, SystemConfig};

#[derive(Debug)]
pub enum RecordError {
    Io(std::io::Error),
    Json(serde_json::Error),
    Invalid(String),
}

impl std::fmt::Display for RecordError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RecordError::Io(e) => write!(f, "{e}"),
            RecordError::Json(e) => write!(f, "malformed record: {e}"),
            RecordError::Invalid(s) => write!(f, "invalid record: {s}"),
        }
    }
}

impl std::error::Error for RecordError {}

impl From<std::io::Error> for RecordError {
    fn from(e: std::io::Error) -> Self {
        RecordError::Io(e)
    }
}

impl From<serde_json::Error> for RecordError {
    fn from(e: serde_json::Error) -> Self {
        RecordError::Json(e)
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq)]
struct Truth {
    separation_d: f64,
    psf_width_w: f64,
    diffusion_d: f64,
    cycle_time_t: f64,
    brightness_nu: f64,
    alignment_time_ta: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum PathJson {
    Independent,
    Correlated,
}

#[derive(Serialize, Deserialize, Debug)]
struct RecordJson {
    counts: BTreeMap<String, u64>,
    bucket: u64,
    n_cycles: u64,
    mean_photons_per_cycle: f64,
    cutoff: u32,
    #[serde(default = "default_path")]
    path: PathJson,
    seed: u64,
    truth: Truth,
}

fn default_path() -> PathJson {
    PathJson::Independent
}

fn mode_key(m: ModeIndex) -> String {
    format!("{},{}", m.n, m.m)
}

fn parse_key(k: &str) -> Result<ModeIndex, RecordError> {
    let bad = || RecordError::Invalid(format!("mode key {k:?} is not \"n,m\""));
    let (n, m) = k.split_once(',').ok_or_else(bad)?;
    let n = n.trim().parse().map_err(|_| bad())?;
    let m = m.trim().parse().map_err(|_| bad())?;
    ModeIndex::checked(n, m).map_err(|e| RecordError::Invalid(e.to_string()))
}

pub fn to_json(rec: &ExperimentRecord) -> String {
    let t = &rec.truth;
    let doc = RecordJson {
        counts: rec.counts.iter().map(|(k, v)| (mode_key(*k), *v)).collect(),
        bucket: rec.bucket_count,
        n_cycles: rec.n_cycles,
        mean_photons_per_cycle: rec.mean_photons_per_cycle,
        cutoff: rec.cutoff,
        path: match rec.path {
            PathModel::Independent => PathJson::Independent,
            PathModel::Correlated => PathJson::Correlated,
        },
        seed: rec.seed,
        truth: Truth {
            separation_d: t.separation_d,
            psf_width_w: t.psf_width_w,
            diffusion_d: t.diffusion_d,
            cycle_time_t: t.cycle_time_t,
            brightness_nu: t.brightness_nu,
            alignment_time_ta: t.alignment_time_ta,
        },
    };
    serde_json::to_string_pretty(&doc).expect("record serialises")
}

pub fn from_json(s: &str) -> Result<ExperimentRecord, RecordError> {
    let doc: RecordJson = serde_json::from_str(s)?;
    let t = doc.truth;
    let truth = SystemConfig::new(
        t.separation_d,
        t.psf_width_w,
        t.diffusion_d,
        t.cycle_time_t,
        t.brightness_nu,
        t.alignment_time_ta,
    )
    .map_err(|e| RecordError::Invalid(e.to_string()))?;
    let mut counts = BTreeMap::new();
    for (k, v) in &doc.counts {
        let m = parse_key(k)?;
        if m.n > doc.cutoff || m.m > doc.cutoff {
            return Err(RecordError::Invalid(format!("mode {k} above cutoff {}", doc.cutoff)));
        }
        counts.insert(m, *v);
    }
    for m in ModeIndex::up_to(doc.cutoff) {
        counts.entry(m).or_insert(0);
    }
    Ok(ExperimentRecord {
        counts,
        bucket_count: doc.bucket,
        n_cycles: doc.n_cycles,
        truth,
        seed: doc.seed,
        mean_photons_per_cycle: doc.mean_photons_per_cycle,
        cutoff: doc.cutoff,
        path: match doc.path {
            PathJson::Independent => PathModel::Independent,
            PathJson::Correlated => PathModel::Correlated,
        },
    })
}

pub fn write(path: &Path, rec: &ExperimentRecord) -> Result<(), RecordError> {
    fs::write(path, to_json(rec) + "\n")?;
    Ok(())
}

pub fn read(path: &Path) -> Result<ExperimentRecord, RecordError> {
    from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_round_trip() {
        assert_eq!(parse_key("1,0").unwrap(), ModeIndex::new(1, 0));
        assert_eq!(mode_key(ModeIndex::new(2, 3)), "2,3");
        assert!(parse_key("10").is_err());
        assert!(parse_key("a,1").is_err());
        assert!(parse_key("11,0").is_err());
    }
}
