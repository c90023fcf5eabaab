use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::DecodeTrace;
use crate::vocab::TokenId;

use super::Header;

pub const TRACE_FORMAT: &str = "pardec-trace";

/// One line of a trace file after the header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TraceRecord {
    Step {
        prompt: usize,
        step_index: usize,
        block: usize,
        committed: Vec<usize>,
        /// Confidence of each committed position, in `committed` order.
        confidences: Vec<f64>,
        fallback: bool,
    },
    /// Closes the records of one prompt.
    Done {
        prompt: usize,
        forward_calls: usize,
        per_block_steps: Vec<usize>,
        fallback_events: usize,
        output: Vec<TokenId>,
    },
}

fn records(prompt: usize, trace: &DecodeTrace) -> impl Iterator<Item = TraceRecord> + '_ {
    trace
        .steps
        .iter()
        .map(move |s| TraceRecord::Step {
            prompt,
            step_index: s.prediction.step_index,
            block: s.prediction.block_index,
            committed: s.committed.clone(),
            confidences: s.committed_confidences(),
            fallback: s.fallback,
        })
        .chain(std::iter::once(TraceRecord::Done {
            prompt,
            forward_calls: trace.forward_calls,
            per_block_steps: trace.per_block_steps.clone(),
            fallback_events: trace.fallback_events,
            output: trace.final_output.clone(),
        }))
}

/// Writes the traces of several prompts, in the given order.
pub fn write_trace(path: &Path, traces: &[DecodeTrace], config: serde_json::Value) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let header = Header::new(TRACE_FORMAT, config);
    writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes")).map_err(io)?;
    for (i, t) in traces.iter().enumerate() {
        for r in records(i, t) {
            writeln!(w, "{}", serde_json::to_string(&r).expect("record serializes")).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_trace(path: &Path) -> Result<(Header, Vec<TraceRecord>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = None;
    let mut out = Vec::new();
    for (n, l) in BufReader::new(file).lines().enumerate() {
        let l = l.map_err(|e| Error::io(path, e))?;
        let bad = |e: serde_json::Error| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg: e.to_string(),
        };
        if header.is_none() {
            let h: Header = serde_json::from_str(&l).map_err(bad)?;
            h.check(TRACE_FORMAT)?;
            header = Some(h);
        } else if !l.trim().is_empty() {
            out.push(serde_json::from_str(&l).map_err(bad)?);
        }
    }
    let header = header.ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: "empty trace file".into(),
    })?;
    Ok((header, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{Script, ScriptedPredictor};
    use crate::state::{BlockConfig, DecodeState};
    use crate::strategy::{decode, StrategyConfig};
    use crate::vocab::Vocabulary;

    #[test]
    fn writes_one_record_per_step() {
        let vocab = Vocabulary::synthetic(16).unwrap();
        let p = ScriptedPredictor::new(vocab.clone(), Script::all_correct(vec![2, 3, 4, 5]));
        let s = DecodeState::new(&[7], BlockConfig::new(4, 2).unwrap(), &vocab).unwrap();
        let (_, t) = decode(s, &p, &StrategyConfig::vanilla(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        write_trace(&path, std::slice::from_ref(&t), serde_json::Value::Null).unwrap();
        let (h, recs) = read_trace(&path).unwrap();
        assert_eq!(h.format, TRACE_FORMAT);
        assert_eq!(recs.len(), 5);
        assert!(matches!(&recs[0], TraceRecord::Step { committed, confidences, .. }
            if committed == &vec![0] && confidences == &vec![0.9]));
        assert!(matches!(&recs[4], TraceRecord::Done { forward_calls: 4, output, .. } if output == &vec![2, 3, 4, 5]));

        let first = std::fs::read(&path).unwrap();
        write_trace(&path, &[t], serde_json::Value::Null).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
    }
}
