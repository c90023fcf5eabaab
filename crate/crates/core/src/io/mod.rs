//! Persistence: corpus loading and the dataset, trace, weights and report
//! file formats.
//!
//! Every format carries a `major.minor` version. Readers accept any minor
//! of the major they know and reject everything else.

mod corpus;
mod dataset;
mod report;
mod trace_file;
mod weights;

pub use corpus::{load_corpus, parse_corpus, Corpus, CorpusEntry, VocabBuilder, CORPUS_FORMAT, SEPARATOR};
pub use dataset::{read_dataset, write_dataset, DatasetFile, DATASET_FORMAT};
pub use report::{write_csv, write_loss_curve, LOSS_CURVE_FORMAT, REPORT_FORMAT};
pub use trace_file::{read_trace, write_trace, TraceRecord, TRACE_FORMAT};
pub use weights::{load_weights, read_weights, save_weights, write_weights, WeightsFile, WEIGHTS_MAGIC};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Major version written by this build for every format.
pub const FORMAT_MAJOR: u16 = 1;
pub const FORMAT_MINOR: u16 = 0;

/// First line of every line-delimited file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: String,
    /// Effective configuration of the run that wrote the file.
    #[serde(default)]
    pub config: serde_json::Value,
}

impl Header {
    pub fn new(format: &str, config: serde_json::Value) -> Self {
        Self {
            format: format.to_string(),
            version: format!("{FORMAT_MAJOR}.{FORMAT_MINOR}"),
            config,
        }
    }

    pub fn check(&self, format: &str) -> Result<()> {
        if self.format != format {
            return Err(Error::Format(format!(
                "expected a {format} file, found {:?}",
                self.format
            )));
        }
        check_major(&self.version)
    }
}

pub(crate) fn check_major(version: &str) -> Result<()> {
    let major = version
        .split('.')
        .next()
        .and_then(|m| m.parse::<u16>().ok())
        .ok_or_else(|| Error::Format(format!("malformed version {version:?}")))?;
    if major != FORMAT_MAJOR {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_checks() {
        assert!(check_major("1.0").is_ok());
        assert!(check_major("1.7").is_ok());
        assert!(matches!(check_major("2.0"), Err(Error::Format(_))));
        assert!(check_major("x").is_err());
        let h = Header::new("pardec-trace", serde_json::Value::Null);
        assert!(h.check("pardec-trace").is_ok());
        assert!(h.check("pardec-dataset").is_err());
    }
}
