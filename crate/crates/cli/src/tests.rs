use std::fs;
use std::io::BufReader;
use std::path::Path;

use permqkd::protocol::export::read_transcripts_jsonl;
use serde_json::Value;

use crate::run_cli;

struct Output {
    code: i32,
    stdout: Vec<u8>,
}

fn invoke(args: &[&str], ci: bool) -> Output {
    let argv = std::iter::once("permqkd")
        .chain(args.iter().copied())
        .map(String::from)
        .collect();
    let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
    let code = run_cli(argv, ci, &mut stdout, &mut stderr);
    Output { code, stdout }
}

fn permqkd(args: &[&str]) -> Output {
    invoke(args, false)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn honest_run_example_accepts() {
    let out = permqkd(&[
        "run",
        "--n",
        "10",
        "--m",
        "8",
        "--check-fraction",
        "0.3",
        "--seed",
        "7",
    ]);
    assert!(out.code == 0);
    let v = json(&out);
    assert_eq!(v["result"]["accepted"], true);
    assert_eq!(v["result"]["keys_agree"], true);
    assert_eq!(v["spec"]["seed"], 7);
    assert_eq!(v["command"], "run");
    assert!(v["version"]
        .as_str()
        .unwrap()
        .starts_with(env!("CARGO_PKG_VERSION")));
}

#[test]
fn feasibility_example() {
    let out = permqkd(&["feasibility", "--m-max", "8"]);
    assert!(out.code == 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,permutations,dimension,verdict");
    assert_eq!(lines.len(), 9);
    for (i, line) in lines[1..].iter().enumerate() {
        let expected = if i < 3 { "feasible" } else { "infeasible" };
        assert!(line.ends_with(&format!(",{expected}")), "{line}");
    }
}

#[test]
fn validate_timing_example() {
    let out = permqkd(&["validate-timing", "--tau", "1e-6", "--rate", "1e6"]);
    assert!(out.code == 0);
    assert_eq!(json(&out)["result"]["verdict"], "secure");
    let out = permqkd(&["validate-timing", "--tau", "1e-5", "--rate", "1e6"]);
    assert_eq!(json(&out)["result"]["verdict"], "insecure");
    let out = permqkd(&[
        "validate-timing",
        "--tau",
        "1e-5",
        "--rate",
        "1e6",
        "--m",
        "8",
        "--multiplexed",
    ]);
    assert_eq!(json(&out)["result"]["verdict"], "secure");
}

#[test]
fn exit_codes() {
    assert_eq!(permqkd(&["run", "--bogus"]).code, 2);
    assert_eq!(permqkd(&["run", "--m", "3", "--seed", "1"]).code, 3);
    assert_eq!(
        permqkd(&["run", "--n", "25", "--m", "4", "--seed", "1"]).code,
        3
    );
    assert_eq!(
        permqkd(&["timing-demo", "--m", "4", "--bank-size", "4", "--seed", "1"]).code,
        4
    );
    let file = tempfile::NamedTempFile::new().unwrap();
    let blocked = file.path().join("sub");
    assert_eq!(
        permqkd(&[
            "run",
            "--n",
            "2",
            "--seed",
            "1",
            "--out",
            blocked.to_str().unwrap()
        ])
        .code,
        5
    );
    let cheat = [
        "run",
        "--strategy",
        "flip",
        "--k",
        "40",
        "--check-fraction",
        "0.5",
        "--seed",
        "1",
    ];
    assert_eq!(permqkd(&cheat).code, 0);
    let mut strict = cheat.to_vec();
    strict.push("--expect-accept");
    assert_eq!(permqkd(&strict).code, 6);
}

#[test]
fn seed_is_mandatory_under_ci() {
    assert_eq!(invoke(&["feasibility"], true).code, 2);
    assert_eq!(invoke(&["feasibility", "--seed", "3"], true).code, 0);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    fs::write(
        &cfg,
        "# small run\nn = 5\nm = 4\ncheck-fraction = 0.5\nseed = 9\n",
    )
    .unwrap();
    let out = permqkd(&["run", "--config", cfg.to_str().unwrap(), "--n", "6"]);
    assert!(out.code == 0);
    let v = json(&out);
    assert_eq!(v["spec"]["n"], 6);
    assert_eq!(v["spec"]["m"], 4);
    assert_eq!(v["spec"]["check_fraction"], 0.5);
    assert_eq!(v["spec"]["seed"], 9);
    assert_eq!(
        permqkd(&["run", "--config", "/nonexistent/exp.conf"]).code,
        2
    );
}

fn file(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn run_writes_transcripts_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = permqkd(&[
        "run",
        "--n",
        "12",
        "--m",
        "6",
        "--seed",
        "4",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.code == 0);
    let summary: Value = serde_json::from_str(&file(&out_dir, "summary.json")).unwrap();
    assert_eq!(summary["result"]["config"]["rounds"], 12);
    let f = fs::File::open(out_dir.join("transcripts.jsonl")).unwrap();
    let transcripts = read_transcripts_jsonl(BufReader::new(f)).unwrap();
    assert_eq!(transcripts.len(), 12);
    assert!(transcripts.iter().all(|t| t.prepared.len() == 6));

    let csv_dir = dir.path().join("csv");
    let out = permqkd(&[
        "run",
        "--n",
        "3",
        "--m",
        "4",
        "--seed",
        "4",
        "--format",
        "csv",
        "--out",
        csv_dir.to_str().unwrap(),
    ]);
    assert!(out.code == 0);
    let text = file(&csv_dir, "registers.csv");
    assert_eq!(text.lines().count(), 1 + 12);
    assert!(text.starts_with("round,register,prepared,position,announced,deduced,alice_basis"));
}

#[test]
fn sweep_and_timing_tables() {
    let out = permqkd(&[
        "attack-sweep",
        "--n",
        "10",
        "--k-values",
        "0,4",
        "--trials",
        "100",
        "--seed",
        "2",
        "--format",
        "jsonl",
    ]);
    assert!(out.code == 0);
    let rows: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["strategy"], "flip");
    assert_eq!(rows[0]["empirical"], 1.0);
    assert_eq!(rows[2]["strategy"], "random");

    let out = permqkd(&[
        "timing-demo",
        "--m",
        "4",
        "--trials",
        "200",
        "--gap-ratios",
        "2",
        "--seed",
        "2",
    ]);
    assert!(out.code == 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,bank_size,gap_ratio,trials,success_rate");
    assert_eq!(lines[1], "4,0,0.0,200,1.0");
    assert!(lines[2].starts_with("4,5,2.0,200,"));
}

#[test]
fn gram_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = permqkd(&[
        "feasibility",
        "--m-max",
        "4",
        "--dump-gram",
        "2",
        "--seed",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.code == 0);
    let text = file(dir.path(), "gram_m2.txt");
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.split(' ').count() == 2));
    assert_eq!(permqkd(&["feasibility", "--dump-gram", "5"]).code, 2);
}
