//! CSV row layouts for tile reports and estimates.

use std::fs::File;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::TileEstimate;
use crate::interval::Interval;
use crate::verifier::TileResult;

/// One row of `tiles.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileRecord {
    pub delta_index: usize,
    pub theta_index: usize,
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub out_delta_lo: f64,
    pub out_delta_hi: f64,
    pub out_theta_lo: f64,
    pub out_theta_hi: f64,
    pub e_delta: f64,
    pub e_theta: f64,
}

impl TileRecord {
    pub const HEADER: [&'static str; 12] = [
        "delta_index",
        "theta_index",
        "delta_lo",
        "delta_hi",
        "theta_lo",
        "theta_hi",
        "out_delta_lo",
        "out_delta_hi",
        "out_theta_lo",
        "out_theta_hi",
        "e_delta",
        "e_theta",
    ];

    pub fn index(&self) -> (usize, usize) {
        (self.delta_index, self.theta_index)
    }

    pub fn errors(&self) -> [f64; 2] {
        [self.e_delta, self.e_theta]
    }

    pub fn area(&self) -> f64 {
        (self.delta_hi - self.delta_lo) * (self.theta_hi - self.theta_lo)
    }

    pub fn to_result(&self) -> TileResult {
        TileResult {
            index: self.index(),
            ground_truth: [
                Interval::new(self.delta_lo, self.delta_hi),
                Interval::new(self.theta_lo, self.theta_hi),
            ],
            outputs: [
                Interval::new(self.out_delta_lo, self.out_delta_hi),
                Interval::new(self.out_theta_lo, self.out_theta_hi),
            ],
            errors: self.errors(),
            solve_time: Default::default(),
        }
    }
}

impl From<&TileResult> for TileRecord {
    fn from(t: &TileResult) -> Self {
        TileRecord {
            delta_index: t.index.0,
            theta_index: t.index.1,
            delta_lo: t.ground_truth[0].lo,
            delta_hi: t.ground_truth[0].hi,
            theta_lo: t.ground_truth[1].lo,
            theta_hi: t.ground_truth[1].hi,
            out_delta_lo: t.outputs[0].lo,
            out_delta_hi: t.outputs[0].hi,
            out_theta_lo: t.outputs[1].lo,
            out_theta_hi: t.outputs[1].hi,
            e_delta: t.errors[0],
            e_theta: t.errors[1],
        }
    }
}

/// One row of `timings.csv`. Kept apart from `tiles.csv` so the report stays
/// byte-identical across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub delta_index: usize,
    pub theta_index: usize,
    pub solve_seconds: f64,
}

impl TimingRecord {
    pub const HEADER: [&'static str; 3] = ["delta_index", "theta_index", "solve_seconds"];
}

/// One row of `estimates.csv`: the tile bound next to its empirical estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub delta_index: usize,
    pub theta_index: usize,
    pub e_delta: f64,
    pub e_theta: f64,
    pub emp_delta: f64,
    pub emp_theta: f64,
    pub gap_delta: f64,
    pub gap_theta: f64,
    pub spacing: f64,
    pub samples: usize,
}

impl EstimateRecord {
    pub const HEADER: [&'static str; 10] = [
        "delta_index",
        "theta_index",
        "e_delta",
        "e_theta",
        "emp_delta",
        "emp_theta",
        "gap_delta",
        "gap_theta",
        "spacing",
        "samples",
    ];

    pub fn new(tile: &TileRecord, est: &TileEstimate) -> Self {
        EstimateRecord {
            delta_index: tile.delta_index,
            theta_index: tile.theta_index,
            e_delta: tile.e_delta,
            e_theta: tile.e_theta,
            emp_delta: est.errors[0],
            emp_theta: est.errors[1],
            gap_delta: crate::estimator::gap(tile.e_delta, est.errors[0]),
            gap_theta: crate::estimator::gap(tile.e_theta, est.errors[1]),
            spacing: est.spacing,
            samples: est.samples,
        }
    }
}

/// CSV writer that always emits the header, even with zero rows.
pub struct CsvSink {
    writer: csv::Writer<File>,
}

impl CsvSink {
    pub fn create(path: impl AsRef<Path>, header: &[&str]) -> Result<Self> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        writer.write_record(header)?;
        Ok(CsvSink { writer })
    }

    /// Opens an existing file for appending rows.
    pub fn append(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(CsvSink {
            writer: csv::WriterBuilder::new().has_headers(false).from_writer(file),
        })
    }

    pub fn write<T: Serialize>(&mut self, row: &T) -> Result<()> {
        self.writer.serialize(row)?;
        Ok(())
    }

    pub fn write_fields<I, F>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = F>,
        F: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

pub fn read_rows<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Like [`read_rows`], but ignores a final line with no terminating newline,
/// which is what an interrupted writer leaves behind.
pub fn read_complete_rows<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let complete = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let mut reader = csv::Reader::from_reader(&text[..complete]);
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_written_without_rows_and_rows_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        CsvSink::create(&path, &TileRecord::HEADER).unwrap().flush().unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            TileRecord::HEADER.join(",") + "\n"
        );
        assert!(read_rows::<TileRecord>(&path).unwrap().is_empty());

        let row = TileRecord {
            delta_index: 3,
            theta_index: 4,
            delta_lo: -9.2,
            delta_hi: -8.8,
            theta_lo: 0.1 + 0.2,
            theta_hi: 1.0 / 3.0,
            out_delta_lo: -1e-7,
            out_delta_hi: 12.5,
            out_theta_lo: -3.0,
            out_theta_hi: 4.0,
            e_delta: 21.3,
            e_theta: 7.0,
        };
        let mut sink = CsvSink::append(&path).unwrap();
        sink.write(&row).unwrap();
        sink.flush().unwrap();
        assert_eq!(read_rows::<TileRecord>(&path).unwrap(), vec![row.clone()]);

        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("3,5,-9.2");
        std::fs::write(&path, text).unwrap();
        assert!(read_rows::<TileRecord>(&path).is_err());
        assert_eq!(read_complete_rows::<TileRecord>(&path).unwrap(), vec![row]);
    }
}
