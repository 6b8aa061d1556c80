use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const CATALAN: &str = r#"{"kind": "algebraic", "annihilator": "x*y^2 - y + 1"}"#;
const FIB: &str = r#"{"kind": "linrec", "coeffs": [1, 1], "init": [0, 1]}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_padic-shift"));
    c.env_remove("PADIC_SHIFT_OUT");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn setup() -> TempDir {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("catalan.json"), CATALAN).unwrap();
    fs::write(d.path().join("fib.json"), FIB).unwrap();
    d
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn build_catalan_mod4() {
    let d = setup();
    let o = run(d.path(), &["build", "--spec", "catalan.json", "--p", "2", "--alpha", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(d.path().join("out/automaton.json"));
    assert_eq!(m["outputs"].as_array().unwrap().len(), 6);
    assert_eq!(m["reading"], "msd");
    assert!(d.path().join("out/automaton.dot").exists());
    assert!(d.path().join("out/substitution.json").exists());
}

#[test]
fn tree_sizes_through_level_four() {
    let d = setup();
    let o = run(d.path(), &["tree", "--spec", "catalan.json", "--p", "2", "--depth", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let t = json(d.path().join("out/tree.json"));
    assert_eq!(t["sizes"], serde_json::json!([1, 2, 3, 6, 11]));
    assert!(t["forbidden"]["2"].as_array().unwrap().contains(&3.into()));
    assert!(t["forbidden"]["4"].as_array().unwrap().contains(&9.into()));
}

#[test]
fn verify_accepts_untouched_and_rejects_tampered_towers() {
    let d = setup();
    let o = run(d.path(), &["tower", "--spec", "catalan.json", "--p", "2", "--top", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(d.path(), &["verify", "--tower", "out/tower.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let mut t = json(d.path().join("out/tower.json"));
    // Send every state of level 2 to the start state of level 1.
    let map = t["proj"][1].as_array_mut().unwrap();
    for v in map.iter_mut() {
        *v = 0.into();
    }
    fs::write(d.path().join("bad.json"), t.to_string()).unwrap();
    let o = run(d.path(), &["verify", "--tower", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL level 1"));
}

#[test]
fn tampered_outputs_fail_oracle_check() {
    let d = setup();
    run(d.path(), &["tower", "--spec", "fib.json", "--p", "2", "--top", "3"]);
    let mut t = json(d.path().join("out/tower.json"));
    let outs = t["levels"][3]["machine"]["outputs"].as_array_mut().unwrap();
    let last = outs.len() - 1;
    let v = outs[last]["value"].as_u64().unwrap();
    outs[last]["value"] = ((v + 1) % 8).into();
    fs::write(d.path().join("bad.json"), t.to_string()).unwrap();
    let o = run(d.path(), &["verify", "--tower", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_specs_are_usage_errors() {
    let d = setup();
    fs::write(d.path().join("a.json"), r#"{"kind": "algebraic", "annihilator": "x*y^2 - (y + 1"}"#).unwrap();
    fs::write(d.path().join("b.json"), "{\"kind\": \"algebraic\",\n \"annihilator\" 1}").unwrap();
    for f in ["a.json", "b.json"] {
        let o = run(d.path(), &["build", "--spec", f, "--p", "2", "--alpha", "1"]);
        assert_eq!(o.status.code(), Some(2));
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("line") && err.contains("column"), "{err}");
    }
    let o = run(d.path(), &["build", "--spec", "catalan.json", "--p", "6", "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(d.path(), &["limit", "--k", "1", "--precision", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn artifacts_are_byte_identical() {
    let d = setup();
    let args = ["tower", "--spec", "catalan.json", "--p", "2", "--top", "4"];
    let first = |out: &str| {
        let mut a = vec!["--out", out, "--no-cache"];
        a.extend(args);
        run(d.path(), &a);
        fs::read(d.path().join(out).join("tower.json")).unwrap()
    };
    let a = first("a");
    let b = first("b");
    assert_eq!(a, b);

    let mut cached = vec!["--out", "c"];
    cached.extend(args);
    run(d.path(), &cached);
    run(d.path(), &cached);
    assert_eq!(fs::read(d.path().join("c/tower.json")).unwrap(), a);
    let entries: Vec<_> = fs::read_dir(d.path().join("c/cache")).unwrap().collect();
    assert_eq!(entries.len(), 1, "one cached tower, no stale locks");
}

#[test]
fn output_directory_from_environment() {
    let d = setup();
    let o = bin()
        .current_dir(d.path())
        .env("PADIC_SHIFT_OUT", "elsewhere")
        .args(["oracle", "--spec", "catalan.json", "--p", "2", "--alpha", "2", "--n", "8"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v = json(d.path().join("elsewhere/oracle.json"));
    assert_eq!(v["values"], serde_json::json!([1, 1, 2, 1, 2, 2, 0, 1]));
}

#[test]
fn limits_and_cycles() {
    let d = setup();
    let o = run(d.path(), &["limit", "--spec", "fib.json", "--p", "2", "--k", "1", "--r", "0", "--precision", "6"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(d.path().join("out/limit.json"))["kind"], "cycle");
    let o = run(d.path(), &["limit", "--spec", "catalan.json", "--p", "2", "--k", "1", "--precision", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("limit ...0110_2"), "{}", stdout(&o));
}

#[test]
fn cocycle_command() {
    let d = setup();
    let o = run(d.path(), &["cocycle", "--theta", "01;10", "--p", "2", "--n", "400", "--alpha", "6", "--recurrences"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("s = 0,1,3,2,7,6,4,5,15,14,12,13,8,9,11,10,"));
    let o = run(d.path(), &["cocycle", "--theta", "01;01", "--p", "2", "--n", "64", "--recurrences"]);
    assert_eq!(o.status.code(), Some(1), "recurrences are specific to Thue-Morse");
    let o = run(d.path(), &["cocycle", "--theta", "10;01", "--p", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn render_grids() {
    let d = setup();
    fs::write(d.path().join("o.json"), r#"{"kind": "oracle", "name": "catalan"}"#).unwrap();
    let o = run(
        d.path(),
        &["render", "--spec", "o.json", "--p", "2", "--k", "1", "--rows", "21", "--width", "100", "--oracle"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let pbm = fs::read_to_string(d.path().join("out/grid.pbm")).unwrap();
    assert!(pbm.starts_with("P1\n100 21\n"));
    let text = fs::read_to_string(d.path().join("out/grid.txt")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    // Low digits of a(2^n) settle as n grows.
    assert_eq!(&rows[19][92..], &rows[20][92..]);

    let o = run(d.path(), &["render", "--spec", "catalan.json", "--p", "2", "--k", "1", "--rows", "8", "--width", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(d.path(), &["render", "--spec", "catalan.json", "--p", "2", "--k", "1", "--width", "4", "--oracle"]);
    assert_eq!(o.status.code(), Some(2));
}
