use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::filter::EpochLoss;

use super::Header;

pub const REPORT_FORMAT: &str = "pardec-report";
pub const LOSS_CURVE_FORMAT: &str = "pardec-loss-curve";

/// CSV with the JSON header as a leading `#` comment line.
pub fn write_csv(path: &Path, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut s = String::new();
    writeln!(s, "# {}", serde_json::to_string(header).expect("header serializes")).unwrap();
    writeln!(s, "{}", columns.join(",")).unwrap();
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::Dimension {
                expected: columns.len(),
                got: row.len(),
            });
        }
        writeln!(s, "{}", row.join(",")).unwrap();
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// One `epoch,train,validation` row per epoch; validation is empty when no
/// samples were held out.
pub fn write_loss_curve(path: &Path, history: &[EpochLoss], config: serde_json::Value) -> Result<()> {
    let rows: Vec<Vec<String>> = history
        .iter()
        .map(|e| {
            vec![
                e.epoch.to_string(),
                format!("{:.9}", e.train),
                e.validation.map(|v| format!("{v:.9}")).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        path,
        &Header::new(LOSS_CURVE_FORMAT, config),
        &["epoch", "train", "validation"],
        &rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_curve_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("loss.csv");
        let h = vec![
            EpochLoss {
                epoch: 1,
                train: 0.5,
                validation: Some(0.25),
            },
            EpochLoss {
                epoch: 2,
                train: 0.4,
                validation: None,
            },
        ];
        write_loss_curve(&path, &h, serde_json::Value::Null).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# {\"format\":\"pardec-loss-curve\""));
        assert_eq!(
            &lines[1..],
            ["epoch,train,validation", "1,0.500000000,0.250000000", "2,0.400000000,"]
        );
    }

    #[test]
    fn row_width_checked() {
        let dir = tempfile::tempdir().unwrap();
        let h = Header::new(REPORT_FORMAT, serde_json::Value::Null);
        let r = write_csv(&dir.path().join("x.csv"), &h, &["a", "b"], &[vec!["1".into()]]);
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }
}
