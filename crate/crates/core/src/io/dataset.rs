use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::collect::{CollectionRun, Provenance};
use crate::error::{Error, Result};
use crate::filter::TrainingSample;

use super::Header;

pub const DATASET_FORMAT: &str = "pardec-dataset";

#[derive(Serialize, Deserialize)]
struct Record {
    conf: Vec<f64>,
    labels: Vec<u8>,
    mask_active: Vec<bool>,
    provenance: Provenance,
}

#[derive(Debug, Clone)]
pub struct DatasetFile {
    pub header: Header,
    pub samples: Vec<TrainingSample>,
    pub provenance: Vec<Provenance>,
}

impl DatasetFile {
    pub fn width(&self) -> Option<usize> {
        self.samples.first().map(TrainingSample::width)
    }
}

pub fn write_dataset(path: &Path, run: &CollectionRun, config: serde_json::Value) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let header = Header::new(DATASET_FORMAT, config);
    writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes")).map_err(io)?;
    for (s, p) in run.samples.iter().zip(&run.provenance) {
        let rec = Record {
            conf: s.conf.clone(),
            labels: s.labels.clone(),
            mask_active: s.mask_active.clone(),
            provenance: *p,
        };
        writeln!(w, "{}", serde_json::to_string(&rec).expect("record serializes")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_dataset(path: &Path) -> Result<DatasetFile> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let header: Header = match lines.next() {
        Some((_, l)) => {
            let l = l.map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&l).map_err(|e| parse_err(1, format!("bad header: {e}")))?
        }
        None => return Err(parse_err(0, "empty dataset file".into())),
    };
    header.check(DATASET_FORMAT)?;
    let mut out = DatasetFile {
        header,
        samples: Vec::new(),
        provenance: Vec::new(),
    };
    for (n, l) in lines {
        let l = l.map_err(|e| Error::io(path, e))?;
        if l.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&l).map_err(|e| parse_err(n + 1, e.to_string()))?;
        let sample = TrainingSample {
            conf: rec.conf,
            labels: rec.labels,
            mask_active: rec.mask_active,
        };
        sample.validate().map_err(|e| parse_err(n + 1, e.to_string()))?;
        if let Some(w) = out.width() {
            if sample.width() != w {
                return Err(parse_err(n + 1, format!("width {} differs from {w}", sample.width())));
            }
        }
        out.samples.push(sample);
        out.provenance.push(rec.provenance);
    }
    Ok(out)
}
