use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pardec::io::{load_weights, read_dataset, read_trace, TraceRecord};

fn pardec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pardec"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = pardec(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn err(dir: &Path, args: &[&str]) -> String {
    let out = pardec(dir, args);
    assert!(!out.status.success(), "{args:?} should fail");
    String::from_utf8(out.stderr).unwrap()
}

fn done_records(path: &Path) -> Vec<(usize, Vec<usize>)> {
    read_trace(path)
        .unwrap()
        .1
        .into_iter()
        .filter_map(|r| match r {
            TraceRecord::Done {
                forward_calls,
                per_block_steps,
                ..
            } => Some((forward_calls, per_block_steps)),
            _ => None,
        })
        .collect()
}

#[test]
fn input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("empty.txt"), "\n# nothing\n").unwrap();
    assert!(err(d, &["collect", "--corpus", "empty.txt", "--out", "x.jsonl"]).contains("empty corpus"));
    assert!(err(d, &["collect", "--corpus", "missing.txt", "--out", "x.jsonl"]).contains("missing.txt"));
    assert!(err(d, &["decode", "--prompt", "spell cat :", "--strategy", "egp"]).contains("--reference"));
    assert!(err(d, &["decode", "--prompt", "spell cat :", "--strategy", "learn2pd"]).contains("--weights"));
    assert!(err(d, &["decode", "--prompt", "spell cat :", "--strategy", "greedy"]).contains("unknown strategy"));
    fs::write(
        d.join("bad.jsonl"),
        "{\"format\":\"pardec-dataset\",\"version\":\"3.0\"}\n",
    )
    .unwrap();
    assert!(err(d, &["train-filter", "--dataset", "bad.jsonl", "--out", "w.bin"]).contains("version"));
    fs::write(d.join("w.bin"), b"PDFW\x02\x00\x00\x00").unwrap();
    let e = err(
        d,
        &[
            "decode",
            "--prompt",
            "a",
            "--strategy",
            "learn2pd",
            "--weights",
            "w.bin",
        ],
    );
    assert!(e.contains("version"), "{e}");
}

#[test]
fn pipeline_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(d, &["collect", "--out", "data.jsonl"]);
    let data = read_dataset(&d.join("data.jsonl")).unwrap();
    // one sample per oracle call
    assert!(out.contains(&format!("collected {} samples", data.samples.len())));
    assert!(out.contains(&format!("({} forward calls)", data.samples.len())));
    assert_eq!(data.width(), Some(32));

    ok(
        d,
        &[
            "train-filter",
            "--dataset",
            "data.jsonl",
            "--out",
            "one.bin",
            "--epochs",
            "1",
        ],
    );
    let curve = fs::read_to_string(d.join("one.bin.loss.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);
    assert_eq!(load_weights(&d.join("one.bin")).unwrap().model.num_params(), 2_112);

    ok(
        d,
        &[
            "train-filter",
            "--dataset",
            "data.jsonl",
            "--out",
            "deep.bin",
            "--epochs",
            "1",
            "--layers",
            "4",
        ],
    );
    assert_eq!(load_weights(&d.join("deep.bin")).unwrap().model.layers().len(), 4);

    ok(
        d,
        &[
            "train-filter",
            "--dataset",
            "data.jsonl",
            "--out",
            "f.bin",
            "--epochs",
            "30",
            "--loss-curve",
            "loss.csv",
        ],
    );
    let losses: Vec<f64> = fs::read_to_string(d.join("loss.csv"))
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(losses.len(), 30);
    assert!(losses[29] < losses[0]);

    let prompt = "what color is sky ?";
    let text = ok(
        d,
        &[
            "decode",
            "--prompt",
            prompt,
            "--strategy",
            "vanilla",
            "--k",
            "1",
            "--trace",
            "v.jsonl",
        ],
    );
    assert!(text.starts_with("sky is blue ."), "{text}");
    let v = done_records(&d.join("v.jsonl"));
    assert_eq!(v[0].1, vec![32; 4]);

    let text = ok(
        d,
        &[
            "decode",
            "--prompt",
            prompt,
            "--strategy",
            "learn2pd",
            "--weights",
            "f.bin",
            "--tau",
            "0.96",
            "--trace",
            "l.jsonl",
        ],
    );
    assert!(text.starts_with("sky is blue ."), "{text}");
    let l = done_records(&d.join("l.jsonl"));
    assert!(l[0].0 < v[0].0);

    let text = ok(
        d,
        &[
            "decode",
            "--prompt",
            prompt,
            "--strategy",
            "egp",
            "--reference",
            "sky is blue .",
            "--eotp",
        ],
    );
    assert!(text.starts_with("sky is blue ."), "{text}");
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("run.toml"),
        "block_size = 16\ngen_length = 32\nstrategy = \"vanilla\"\n",
    )
    .unwrap();
    ok(
        d,
        &[
            "decode",
            "--config",
            "run.toml",
            "--gen-length",
            "48",
            "--prompt",
            "spell dog :",
            "--trace",
            "t.jsonl",
        ],
    );
    let (header, _) = read_trace(&d.join("t.jsonl")).unwrap();
    assert_eq!(header.config["block_size"], 16);
    assert_eq!(header.config["gen_length"], 48);
    assert_eq!(header.config["tau"], 0.96);
    assert_eq!(done_records(&d.join("t.jsonl"))[0].1, vec![16; 3]);

    fs::write(d.join("typo.toml"), "blocksize = 16\n").unwrap();
    err(d, &["decode", "--config", "typo.toml", "--prompt", "spell dog :"]);
}

#[test]
fn scripted_bench_speedup_is_block_size() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "bench",
            "--predictor",
            "scripted",
            "--strategies",
            "vanilla,egp",
            "--gen-length",
            "64",
            "--block-size",
            "16",
            "--out-dir",
            "r",
        ],
    );
    let csv = fs::read_to_string(d.join("r/speedup.csv")).unwrap();
    let egp = csv.lines().find(|l| l.contains(",egp,")).unwrap();
    assert_eq!(egp.split(',').nth(3), Some("16.000000"));
}

#[test]
fn seeds_give_identical_sections_for_deterministic_predictors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["bench", "--seeds", "1,2,3", "--gen-length", "64", "--out-dir", "r"],
    );
    let report = fs::read_to_string(d.join("r/report.txt")).unwrap();
    let sections: Vec<&str> = report
        .split("== seed ")
        .skip(1)
        .map(|s| s[s.find('\n').unwrap()..].trim_end())
        .collect();
    assert_eq!(sections.len(), 3);
    assert!(sections.iter().all(|s| *s == sections[0]));
}
