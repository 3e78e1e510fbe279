use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use krylov_toda::io::Table;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_krylov-toda"));
    c.env_remove("KRYLOV_TODA_OUT");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

const MARGINAL: &str = r#"
command = "complexity"
[model]
kind = "algebra"
[model.spec]
family = "sl2r_marginal"
gamma0 = 1.0
h = 1.0
cutoff = 512
[grid]
tau1 = [0.0, 1.0, 3.0]
t = { start = 0.0, stop = 3.0, num = 13 }
"#;

#[test]
fn complexity_matches_closed_form_row_for_row() {
    let tmp = tempfile::tempdir().unwrap();
    let num = write_config(tmp.path(), "num.toml", MARGINAL);
    let ex = write_config(tmp.path(), "ex.toml", &MARGINAL.replace("\"complexity\"", "\"exact\""));
    assert_eq!(code(&run(&num, &tmp.path().join("num"), &[])), 0);
    assert_eq!(code(&run(&ex, &tmp.path().join("ex"), &[])), 0);

    let a = tmp.path().join("num/complexity.csv");
    let b = tmp.path().join("ex/complexity.csv");
    let t = Table::read_csv(&a).unwrap();
    assert_eq!(t.len(), 3 * 13);
    let o = bin().arg("compare").arg(&a).arg(&b).args(["--rtol", "1e-9", "--atol", "1e-12"]).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["rows"], 39);
}

#[test]
fn compare_flags_deviations_and_schema_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_config(tmp.path(), "a.csv", "t,K\n0,1\n1,2\n");
    let b = write_config(tmp.path(), "b.csv", "t,K\n0,1\n1,2.001\n");
    let c = write_config(tmp.path(), "c.csv", "t,S\n0,1\n1,2\n");
    let same = bin().arg("compare").arg(&a).arg(&a).output().unwrap();
    assert_eq!(code(&same), 0);
    let report: Value = serde_json::from_slice(&same.stdout).unwrap();
    assert_eq!(report["columns"][1]["max_abs"], 0.0);

    assert_eq!(code(&bin().arg("compare").arg(&a).arg(&b).output().unwrap()), 1);
    let loose = bin().arg("compare").arg(&a).arg(&b).args(["--atol", "1e-2"]).output().unwrap();
    assert_eq!(code(&loose), 0);
    assert_eq!(code(&bin().arg("compare").arg(&a).arg(&c).output().unwrap()), 2);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "rmt.toml",
        r#"
command = "rmt"
seed = 11
[rmt]
family = "gaussian_dense"
dyson = 2
dim = 24
samples = 9
observable = "complexity"
[grid]
tau1 = [0.0, 2.0]
t = [0.0, 0.5, 1.0, 4.0]
"#,
    );
    let one = tmp.path().join("one");
    let two = tmp.path().join("two");
    assert_eq!(code(&run(&cfg, &one, &["--threads", "1"])), 0);
    assert_eq!(code(&run(&cfg, &two, &["--threads", "3"])), 0);
    for f in ["rmt.csv", "summary.json", "manifest.json"] {
        assert_eq!(fs::read(one.join(f)).unwrap(), fs::read(two.join(f)).unwrap(), "{f}");
    }
    assert_eq!(Table::read_csv(&one.join("rmt.csv")).unwrap().len(), 2 * 4);

    // a different seed changes the numbers and the hash
    let three = tmp.path().join("three");
    assert_eq!(code(&run(&cfg, &three, &["--seed", "12"])), 0);
    assert_ne!(fs::read(one.join("rmt.csv")).unwrap(), fs::read(three.join("rmt.csv")).unwrap());
    assert_ne!(manifest(&one)["config_sha256"], manifest(&three)["config_sha256"]);
    assert_eq!(manifest(&three)["seed"], 12);
}

#[test]
fn manifest_lists_every_file_with_hashes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("flow");
    let o = run(&configs().join("ising_flow.toml"), &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["command"], "toda-flow");
    let files = m["files"].as_array().unwrap();
    let mut names: Vec<&str> = files.iter().map(|f| f["name"].as_str().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["diagnostics.json", "flow.csv", "relanczos.csv", "steps.csv"]);
    for f in files {
        let bytes = fs::read(out.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), krylov_toda_cli::artifacts::sha256_hex(&bytes));
    }
    let on_disk = fs::read_dir(&out).unwrap().count();
    assert_eq!(on_disk, files.len() + 1);

    // flow against re-Lanczos of the deformed measure
    let o = bin()
        .arg("compare")
        .arg(out.join("flow.csv"))
        .arg(out.join("relanczos.csv"))
        .args(["--rtol", "0", "--atol", "1e-6"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let flow = Table::read_csv(&out.join("flow.csv")).unwrap();
    assert_eq!(flow.len(), 21 * 48);
}

#[test]
fn empty_time_grid_fails_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "command = \"complexity\"\n[model]\nkind = \"levels\"\nenergies = [0.0, 1.0]\n[grid]\nt = []\n",
    );
    let out = tmp.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("t grid is empty"));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let tmp = tempfile::tempdir().unwrap();
    let parse = write_config(tmp.path(), "p.toml", "command = \"lanczos\"\n[model\n");
    assert_eq!(code(&run(&parse, &tmp.path().join("p"), &[])), 2);
    let missing = tmp.path().join("nope.toml");
    assert_eq!(code(&run(&missing, &tmp.path().join("m"), &[])), 2);

    // the unstable SL(2,R) coefficients blow up at gamma0 tau1 = atan(sinh theta0) + pi/2
    let pole = write_config(
        tmp.path(),
        "pole.toml",
        r#"
command = "exact"
[model]
kind = "algebra"
[model.spec]
family = "sl2r_unstable"
gamma0 = 1.0
theta0 = 0.5
h = 1.0
[grid]
tau1 = [0.0, 1.0, 2.5]
t = [0.0, 1.0]
"#,
    );
    let out = tmp.path().join("pole");
    let o = run(&pole, &out, &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());

    let big = write_config(
        tmp.path(),
        "big.toml",
        "command = \"lanczos\"\n[model]\nkind = \"oscillator_chain\"\nomega = 1.0\nz = 1.0\ndim = 100\n[limits]\nmax_dim = 50\n",
    );
    assert_eq!(code(&run(&big, &tmp.path().join("b"), &[])), 4);
    // nothing but the configs is left in the scratch directory
    let left: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(left.len(), 3, "{left:?}");
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let from_cfg = tmp.path().join("from_cfg");
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &format!(
            "command = \"lanczos\"\noutput = {:?}\n[model]\nkind = \"levels\"\nenergies = [-1.0, 0.0, 2.0]\n[grid]\ntau1 = [0.0, 1.0]\n",
            from_cfg.display().to_string()
        ),
    );
    assert_eq!(code(&bin().arg("run").arg(&cfg).output().unwrap()), 0);
    let t = Table::read_csv(&from_cfg.join("lanczos.csv")).unwrap();
    assert_eq!(t.columns(), ["tau1", "tau2", "n", "a", "b"]);
    assert_eq!(t.len(), 2 * 3);

    let from_env = tmp.path().join("from_env");
    let o = bin().arg("run").arg(&cfg).env("KRYLOV_TODA_OUT", &from_env).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(from_env.join("manifest.json").exists());

    // reruns replace earlier output; foreign directories are refused
    assert_eq!(code(&run(&cfg, &from_env, &[])), 0);
    let foreign = tmp.path().join("foreign");
    fs::create_dir(&foreign).unwrap();
    fs::write(foreign.join("notes.txt"), "keep").unwrap();
    assert_eq!(code(&run(&cfg, &foreign, &[])), 2);
    assert_eq!(fs::read_to_string(foreign.join("notes.txt")).unwrap(), "keep");
}

#[test]
fn fully_connected_sweep_has_interior_maximum() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fc");
    assert_eq!(code(&run(&configs().join("fully_connected_ising.toml"), &out, &[])), 0);
    let t = Table::read_csv(&out.join("ising.csv")).unwrap();
    assert_eq!(t.len(), 201);
    let beta = t.column("beta").unwrap();
    let b1 = t.column("b1").unwrap();
    let k = (0..b1.len()).max_by(|&i, &j| b1[i].total_cmp(&b1[j])).unwrap();
    // finite-N peak sits just above the mean-field critical point
    assert!(beta[k] > 1.0 && beta[k] < 1.25, "peak at {}", beta[k]);
}

#[test]
fn shipped_configs_run() {
    let tmp = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_owned();
        let o = run(&path, &tmp.path().join(&name), &[]);
        assert_eq!(code(&o), 0, "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
    }
}
