//! CSV and JSON artifacts.
//!
//! | file | columns |
//! |---|---|
//! | `portrait.csv` | `theta,J,seed_id` |
//! | `occupancy.csv` | `cell_i,cell_j,visited` |
//! | `histograms.csv` | `t,n,prob` |
//! | `survival.csv` | `t,p` |
//! | `rates.csv` | `run_id,k,tau,eta,p_se,A,eps_abs,A_over_hbar,gamma,gamma_err` |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qam_core::analysis::SurvivalSeries;
use qam_core::area::OccupancyGrid;
use qam_core::ensemble::MomentumHistogram;
use qam_core::map::PortraitPoint;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::RunError;

pub type CsvWriter = csv::Writer<BufWriter<File>>;

pub fn create_dir(path: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(path).map_err(|e| RunError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), RunError> {
    let file = File::create(path).map_err(|e| RunError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| RunError::Json {
        path: path.to_owned(),
        source,
    })?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| RunError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| RunError::Json {
        path: path.to_owned(),
        source,
    })
}

/// A CSV file with a fixed header.
pub struct Table {
    path: PathBuf,
    writer: CsvWriter,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, RunError> {
        let file = File::create(path).map_err(|e| RunError::io(path, e))?;
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(BufWriter::new(file));
        writer.write_record(header).map_err(|source| RunError::Csv {
            path: path.to_owned(),
            source,
        })?;
        Ok(Table {
            path: path.to_owned(),
            writer,
        })
    }

    fn csv_error(&self, source: csv::Error) -> RunError {
        RunError::Csv {
            path: self.path.clone(),
            source,
        }
    }

    pub fn row<T: Serialize>(&mut self, record: T) -> Result<(), RunError> {
        self.writer.serialize(record).map_err(|e| self.csv_error(e))
    }

    pub fn finish(mut self) -> Result<(), RunError> {
        self.writer
            .flush()
            .map_err(|e| RunError::io(&self.path, e))
    }
}

pub fn write_portrait(path: &Path, points: &[PortraitPoint]) -> Result<(), RunError> {
    let mut t = Table::create(path, &["theta", "J", "seed_id"])?;
    for p in points {
        t.row((p.theta, p.momentum_j, p.seed_id))?;
    }
    t.finish()
}

pub fn write_occupancy(path: &Path, grid: &OccupancyGrid) -> Result<(), RunError> {
    let mut t = Table::create(path, &["cell_i", "cell_j", "visited"])?;
    for (i, j, v) in grid.cells() {
        t.row((i, j, v as u8))?;
    }
    t.finish()
}

pub fn histogram_table(path: &Path) -> Result<Table, RunError> {
    Table::create(path, &["t", "n", "prob"])
}

pub fn write_histogram(t: &mut Table, h: &MomentumHistogram) -> Result<(), RunError> {
    for (n, p) in h.iter() {
        t.row((h.kick_index, n, p))?;
    }
    Ok(())
}

pub fn write_survival(path: &Path, s: &SurvivalSeries) -> Result<(), RunError> {
    let mut t = Table::create(path, &["t", "p"])?;
    for (k, p) in s.t.iter().zip(&s.p) {
        t.row((k, p))?;
    }
    t.finish()
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, RunError> {
    let err = |source| RunError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(err)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SurvivalRow {
    t: u64,
    p: f64,
}

/// Reads a `t,p` table; `t0` is its first kick.
pub fn read_survival(path: &Path) -> Result<SurvivalSeries, RunError> {
    let rows: Vec<SurvivalRow> = read_rows(path)?;
    Ok(SurvivalSeries {
        t0: rows.first().map_or(0, |r| r.t),
        t: rows.iter().map(|r| r.t).collect(),
        p: rows.iter().map(|r| r.p).collect(),
    })
}

/// One row of the rates table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub run_id: String,
    pub k: f64,
    pub tau: f64,
    pub eta: f64,
    pub p_se: f64,
    #[serde(rename = "A")]
    pub area: f64,
    pub eps_abs: f64,
    #[serde(rename = "A_over_hbar")]
    pub area_over_hbar: f64,
    pub gamma: f64,
    pub gamma_err: f64,
}

pub const RATES_HEADER: [&str; 10] = [
    "run_id",
    "k",
    "tau",
    "eta",
    "p_se",
    "A",
    "eps_abs",
    "A_over_hbar",
    "gamma",
    "gamma_err",
];

pub fn write_rates(path: &Path, rows: &[RateRow]) -> Result<(), RunError> {
    let mut t = Table::create(path, &RATES_HEADER)?;
    for r in rows {
        t.row(r)?;
    }
    t.finish()
}

pub fn read_rates(path: &Path) -> Result<Vec<RateRow>, RunError> {
    read_rows(path)
}
