use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::lattice::Dims;
use crate::stats::Estimate;

/// One result line. Columns that do not apply to an experiment are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment_id: String,
    pub dims_t: u32,
    pub dims_y: Option<u32>,
    pub dims_z: Option<u32>,
    pub p: Option<f64>,
    #[serde(rename = "W")]
    pub window: Option<u32>,
    pub strategy: Option<String>,
    pub trials: Option<u64>,
    pub successes: Option<u64>,
    pub point: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub wall_ms: u64,
}

impl Row {
    pub fn new(experiment_id: impl Into<String>, dims: Dims) -> Self {
        Row {
            experiment_id: experiment_id.into(),
            dims_t: dims.t,
            dims_y: Some(dims.y),
            dims_z: Some(dims.z),
            p: None,
            window: None,
            strategy: None,
            trials: None,
            successes: None,
            point: None,
            ci_low: None,
            ci_high: None,
            wall_ms: 0,
        }
    }

    pub fn p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn window(mut self, w: u32) -> Self {
        self.window = Some(w);
        self
    }

    pub fn strategy(mut self, name: impl Into<String>) -> Self {
        self.strategy = Some(name.into());
        self
    }

    pub fn estimate(mut self, e: &Estimate) -> Self {
        self.trials = Some(e.trials);
        self.successes = Some(e.successes);
        self.point = Some(e.point);
        self.ci_low = Some(e.low);
        self.ci_high = Some(e.high);
        self
    }

    pub fn wall_ms(mut self, ms: u64) -> Self {
        self.wall_ms = ms;
        self
    }
}

pub fn write_csv_to<W: Write>(rows: &[Row], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "experiment_id",
            "dims_t",
            "dims_y",
            "dims_z",
            "p",
            "W",
            "strategy",
            "trials",
            "successes",
            "point",
            "ci_low",
            "ci_high",
            "wall_ms",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}

/// Writes `contents` next to `path` and renames it into place, so readers
/// never see a partial file.
fn write_atomic(path: &Path, contents: impl FnOnce(&mut NamedTempFile) -> io::Result<()>) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    contents(&mut tmp)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_csv(rows: &[Row], path: &Path) -> io::Result<()> {
    write_atomic(path, |f| write_csv_to(rows, f))
}

pub fn write_json(rows: &[Row], path: &Path) -> io::Result<()> {
    write_atomic(path, |f| {
        serde_json::to_writer_pretty(&mut *f, rows)?;
        f.write_all(b"\n")
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<Row>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}
