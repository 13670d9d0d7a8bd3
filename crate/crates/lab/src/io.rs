use std::fs;
use std::path::{Path, PathBuf};

use gamehomog_core::homog::{RateReport, UTable};
use serde::Serialize;

use crate::{LabError, VERSION};

/// Every JSON artifact: what it is, who wrote it, and for which config.
#[derive(Debug, Serialize)]
pub struct Artifact<'a, T: Serialize> {
    pub kind: &'a str,
    pub version: &'a str,
    pub config_hash: &'a str,
    pub data: T,
}

pub struct OutDir {
    pub dir: PathBuf,
    pub hash: String,
}

impl OutDir {
    pub fn create(dir: &Path, hash: String) -> Result<Self, LabError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json<T: Serialize>(&self, name: &str, kind: &str, data: T) -> Result<PathBuf, LabError> {
        let a = Artifact {
            kind,
            version: VERSION,
            config_hash: &self.hash,
            data,
        };
        let mut text = serde_json::to_string_pretty(&a).map_err(|e| LabError::Io(e.to_string()))?;
        text.push('\n');
        let p = self.path(name);
        fs::write(&p, text)?;
        Ok(p)
    }

    /// A CSV file whose first line is a `#`-comment with the config hash.
    pub fn csv(
        &self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<PathBuf, LabError> {
        let p = self.path(name);
        let mut buf = format!("# gamehomog {VERSION} config {}\n", self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(&r)?;
            }
            w.flush()?;
        }
        fs::write(&p, buf)?;
        Ok(p)
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// `theta_index, t, sample, value` rows.
pub fn sample_rows(tables: &[UTable]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (ti, t) in tables.iter().enumerate() {
        for (k, &time) in t.times.iter().enumerate() {
            for (i, &u) in t.samples[k].iter().enumerate() {
                rows.push(vec![ti.to_string(), num(time), i.to_string(), num(u)]);
            }
        }
    }
    rows
}

pub const RATE_HEADER: [&str; 9] = [
    "eps",
    "median",
    "q10",
    "q90",
    "max",
    "median_se",
    "exceed",
    "allowed",
    "ok",
];

pub fn rate_rows(r: &RateReport) -> Vec<Vec<String>> {
    r.points
        .iter()
        .map(|p| {
            vec![
                num(p.eps),
                num(p.median),
                num(p.q10),
                num(p.q90),
                num(p.max),
                num(p.median_se),
                p.exceed.to_string(),
                num(p.allowed),
                p.ok.to_string(),
            ]
        })
        .collect()
}

/// Read `rate.csv` back, skipping the comment line.
pub fn read_rate_csv(path: &Path) -> Result<Vec<Vec<String>>, LabError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        out.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(out)
}
