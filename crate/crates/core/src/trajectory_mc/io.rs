//! CSV and JSON sidecar serialization of [`DensityFactor`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{DensityFactor, OutcomeCounts};

/// Metadata written next to a density-factor CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySidecar {
    pub delta_hz: f64,
    pub power_w: f64,
    pub seed: u64,
    pub n_trajectories: u64,
    pub outcomes: OutcomeCounts,
    pub bin_edges_m: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub version: String,
}

impl DensityFactor {
    pub fn sidecar(&self, config_hash: Option<&str>) -> DensitySidecar {
        DensitySidecar {
            delta_hz: self.delta,
            power_w: self.power,
            seed: self.seed,
            n_trajectories: self.n_trajectories,
            outcomes: self.outcomes,
            bin_edges_m: self.bin_edges.clone(),
            config_hash: config_hash.map(str::to_owned),
            version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }

    /// Writes `r_m, f, f_stderr` rows at bin centers.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["r_m", "f", "f_stderr"])?;
        for ((r, f), e) in self.bin_centers().iter().zip(&self.f_values).zip(&self.statistical_error) {
            w.write_record([r.to_string(), f.to_string(), e.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json`.
    pub fn save(&self, dir: &Path, stem: &str, config_hash: Option<&str>) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?))?;
        let mut json = BufWriter::new(File::create(dir.join(format!("{stem}.json")))?);
        serde_json::to_writer_pretty(&mut json, &self.sidecar(config_hash))?;
        json.write_all(b"\n")?;
        json.flush()?;
        Ok(())
    }

    /// Reads a pair written by [`Self::save`].
    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let side: DensitySidecar =
            serde_json::from_reader(BufReader::new(File::open(dir.join(format!("{stem}.json")))?))?;
        let mut reader = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
        let mut f_values = Vec::new();
        let mut statistical_error = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row?;
            let parse = |j: usize| -> Result<f64> {
                row.get(j)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Parse { line: i + 2, message: format!("column {j} is not a number") })
            };
            f_values.push(parse(1)?);
            statistical_error.push(parse(2)?);
        }
        if side.bin_edges_m.len() != f_values.len() + 1 {
            return Err(Error::Invalid("density CSV rows do not match the sidecar bin edges".into()));
        }
        Ok(Self {
            delta: side.delta_hz,
            power: side.power_w,
            bin_edges: side.bin_edges_m,
            f_values,
            statistical_error,
            seed: side.seed,
            n_trajectories: side.n_trajectories,
            outcomes: side.outcomes,
        })
    }
}
