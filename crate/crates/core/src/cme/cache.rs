//! Versioned on-disk cache of optimised CME spectral forms.
//!
//! Reals are stored as decimal strings in Rust's shortest round-trip
//! formatting, so a load reproduces the saved bits exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spectral::expand_spectral_form;
use super::{CmeSpectralForm, OptimizeReport};
use crate::error::{NiltError, Result};
use crate::framework::CoefficientSet;
use crate::weights::decompose_weight;

pub const CACHE_FORMAT: &str = "nilt-cme-cache";
pub const CACHE_VERSION: u32 = 1;
pub const DEFAULT_CACHE_FILE: &str = "cme_cache.json";

const BUILTIN: &str = include_str!("../../data/cme_cache.json");

#[derive(Debug, Clone, PartialEq)]
pub struct CmeRecord {
    pub form: CmeSpectralForm,
    pub scv: f64,
    pub generator_version: String,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct RawFile {
    format: String,
    version: u32,
    records: Vec<RawRecord>,
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    n: usize,
    c: String,
    lambda: String,
    omega: String,
    phases: Vec<String>,
    scv: String,
    generator_version: String,
    seed: u64,
}

fn real(s: &str, field: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| NiltError::Cache(format!("field `{field}` is not a real number: {s:?}")))
}

fn text(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CmeCache {
    records: Vec<CmeRecord>,
}

impl CmeCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// The cache shipped with the crate (orders 1, 2, 4, 8, 15, 30 and 60).
    pub fn builtin() -> &'static CmeCache {
        static CACHE: std::sync::OnceLock<CmeCache> = std::sync::OnceLock::new();
        CACHE.get_or_init(|| CmeCache::from_json(BUILTIN).expect("embedded CME cache is valid"))
    }

    pub fn records(&self) -> &[CmeRecord] {
        &self.records
    }

    pub fn orders(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.form.order()).collect()
    }

    pub fn get(&self, n: usize) -> Option<&CmeRecord> {
        self.records.iter().find(|r| r.form.order() == n)
    }

    pub fn coefficients(&self, n: usize) -> Result<CoefficientSet> {
        let rec = self.get(n).ok_or(NiltError::MissingCmeOrder(n))?;
        expand_spectral_form(&rec.form)
    }

    /// Inserts or replaces the record for the report's order.
    pub fn insert_report(&mut self, report: &OptimizeReport, generator_version: &str) {
        self.insert(CmeRecord {
            form: report.form.clone(),
            scv: report.scv,
            generator_version: generator_version.to_string(),
            seed: report.seed,
        });
    }

    pub fn insert(&mut self, record: CmeRecord) {
        let n = record.form.order();
        self.records.retain(|r| r.form.order() != n);
        self.records.push(record);
        self.records.sort_by_key(|r| r.form.order());
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawFile = serde_json::from_str(text).map_err(|e| NiltError::Cache(e.to_string()))?;
        if raw.format != CACHE_FORMAT {
            return Err(NiltError::Cache(format!("unknown format tag {:?}", raw.format)));
        }
        if raw.version != CACHE_VERSION {
            return Err(NiltError::Cache(format!("unsupported version {}", raw.version)));
        }
        let mut cache = CmeCache::new();
        for r in raw.records {
            if r.phases.len() != r.n {
                return Err(NiltError::Cache(format!("order {} lists {} phases", r.n, r.phases.len())));
            }
            let phases = r
                .phases
                .iter()
                .map(|p| real(p, "phases"))
                .collect::<Result<Vec<_>>>()?;
            let form = CmeSpectralForm::new(
                real(&r.c, "c")?,
                real(&r.lambda, "lambda")?,
                real(&r.omega, "omega")?,
                phases,
            )?;
            let record = CmeRecord {
                form,
                scv: real(&r.scv, "scv")?,
                generator_version: r.generator_version,
                seed: r.seed,
            };
            validate_record(&record)?;
            if cache.get(r.n).is_some() {
                return Err(NiltError::Cache(format!("order {} appears twice", r.n)));
            }
            cache.insert(record);
        }
        Ok(cache)
    }

    pub fn to_json(&self) -> String {
        let raw = RawFile {
            format: CACHE_FORMAT.to_string(),
            version: CACHE_VERSION,
            records: self
                .records
                .iter()
                .map(|r| RawRecord {
                    n: r.form.order(),
                    c: text(r.form.c),
                    lambda: text(r.form.lambda),
                    omega: text(r.form.omega),
                    phases: r.form.phases.iter().map(|p| text(*p)).collect(),
                    scv: text(r.scv),
                    generator_version: r.generator_version.clone(),
                    seed: r.seed,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&raw).expect("cache serialises");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())?;
        Self::from_json(&text)
    }

    /// Writes through a temporary file in the same directory and renames it
    /// over the target, so readers never observe a partial file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let name = path
            .file_name()
            .ok_or_else(|| NiltError::Cache(format!("{} is not a file path", path.display())))?;
        let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_json().as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path).inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })?;
        Ok(())
    }
}

/// Re-checks a loaded form: finite SCV and at least 99% of the weight mass in
/// the main interval around t = 1.
fn validate_record(record: &CmeRecord) -> Result<()> {
    if !(record.scv.is_finite() && record.scv > 0.0) {
        return Err(NiltError::Cache(format!("order {}: invalid scv", record.form.order())));
    }
    let coeffs = expand_spectral_form(&record.form)?;
    let parts = decompose_weight(&coeffs, 4.0)?;
    if !(parts.f_main >= 0.99) {
        return Err(NiltError::Cache(format!(
            "order {}: main-interval mass {} below 0.99",
            record.form.order(),
            parts.f_main
        )));
    }
    Ok(())
}
