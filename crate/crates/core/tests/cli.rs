use serde_json::Value;
use std::path::Path;
use std::process::Command;

fn f2comb(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_f2comb")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const BASIS3: &str = "3\n100\n010\n001\n";

#[test]
fn energy_of_basis() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "a.txt", BASIS3);
    let (code, stdout, _) = f2comb(&["energy", "--set", &set, "--k", "2"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["result"]["value"], "21");
    assert_eq!(v["config"]["command"], "energy");
    assert!(v["meta"].is_object());
}

#[test]
fn malformed_set_is_a_precondition_failure() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "bad.txt", "3\n100\n01x\n");
    let (code, _, stderr) = f2comb(&["energy", "--set", &set, "--k", "2"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line 3"), "{stderr}");

    let dup = write(dir.path(), "dup.txt", "3\n100\n100\n");
    assert_eq!(f2comb(&["energy", "--set", &dup, "--k", "2"]).0, 2);

    let wide = write(dir.path(), "wide.txt", "3\n1000\n");
    assert_eq!(f2comb(&["spectrum", "--set", &wide]).0, 2);
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(f2comb(&["energy"]).0, 2);
    assert_eq!(f2comb(&["no-such-command"]).0, 2);
}

#[test]
fn dissociate_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let indep = write(dir.path(), "l.txt", BASIS3);
    assert_eq!(f2comb(&["dissociate", "--check", &indep, "--k", "3"]).0, 0);
    let dep = write(dir.path(), "d.txt", "3\n100\n010\n110\n");
    assert_eq!(f2comb(&["dissociate", "--check", &dep, "--k", "3"]).0, 1);
}

#[test]
fn permanent_and_fk_test() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "h.txt", "3 3\n1 1 0\n0 1 1\n1 0 1\n");
    let (code, stdout, _) = f2comb(&["permanent", "--matrix", &m]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["result"]["permanent"], "2");

    let z = write(dir.path(), "z.txt", "2 2\n1 1\n0 0\n");
    let (code, stdout, _) = f2comb(&["fk-test", "--matrix", &z]);
    assert_eq!(code, 0);
    assert!(stdout.contains("zero"), "{stdout}");
}

#[test]
fn majority_bench_holds() {
    let (code, stdout, stderr) = f2comb(&["bench", "--theorem", "majority", "--n", "12", "--delta", "1/32"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("\"holds\": true"));
}

#[test]
fn csv_output_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let (code, _, stderr) = f2comb(&["bench", "--theorem", "diss", "--instances", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("instance,lhs,rhs,holds,slack"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn replay_round_trip_and_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "a.txt", "4\n1100\n0110\n0011\n1111\n1000\n");
    let report = dir.path().join("report.json");
    let r = report.to_str().unwrap();
    let (code, _, _) = f2comb(&["spectrum", "--set", &set, "--alpha", "1/4", "--seed", "9", "--out", r]);
    assert_eq!(code, 0);
    assert_eq!(f2comb(&["replay", "--report", r]).0, 0);

    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    v["result"]["large_spectrum_size"] = Value::from(99);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(f2comb(&["replay", "--report", tampered.to_str().unwrap()]).0, 1);

    v["config"].as_object_mut().unwrap().remove("seed");
    let noseed = dir.path().join("noseed.json");
    std::fs::write(&noseed, serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(f2comb(&["replay", "--report", noseed.to_str().unwrap()]).0, 2);
}

#[test]
fn plant_then_extract() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.txt");
    let l = dir.path().join("l.txt");
    let (code, _, stderr) = f2comb(&[
        "plant", "--h", "2", "--lsize", "3", "--lpsize", "3", "--lambda-size", "16", "--seed", "4",
        "--q-out", q.to_str().unwrap(), "--lambda-out", l.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stderr}");
    let (code, stdout, stderr) = f2comb(&["extract", "--q", q.to_str().unwrap(), "--lambda", l.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(code, 0, "{stderr}");
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert!(!v["result"]["rectangles"].as_array().unwrap().is_empty());
}
