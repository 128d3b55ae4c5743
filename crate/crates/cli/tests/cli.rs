use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use splitvar_cli::RunConfig;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_splitvar"));
    c.env_remove("SPLITVAR_OUT");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn presets() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

const SMALL: [&str; 8] = ["--set", "grid.n=17", "--set", "density=phi_mu", "--set", "mu=1.5", "--set", "seed=3"];

#[test]
fn minimal_config_solves_with_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &["solve", "--set", "density=phi_mu", "--set", "mu=2", "--set", "preset=affine", "--set", "grid.n=9"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = tmp.path().join("solve");
    for f in ["field.csv", "field.svfd", "solve.json", "manifest.json"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let cfg = bin().args(["solve", "--print-config", "--set", "density=phi_mu", "--set", "mu=2"]).output().unwrap();
    let text = String::from_utf8(cfg.stdout).unwrap();
    assert!(text.contains("grid.nx = 65\n") && text.contains("schedule.terminal = 0.0001\n"), "{text}");
}

#[test]
fn out_of_domain_parameter_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["check-density", "--set", "density=phi_mu", "--set", "mu=0.5"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("μ > 1 required"), "{}", stderr(&o));
    assert!(!tmp.path().join("check-density").exists());
}

#[test]
fn unknown_key_names_line_and_suggestion() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("typo.conf");
    fs::write(&conf, "density = phi_mu\nmu = 2\n\nsolver.tolerance = 1e-9\n").unwrap();
    let o = run(&["solve", conf.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 4") && e.contains("did you mean `solver.tol`"), "{e}");
}

#[test]
fn presets_round_trip_through_canonical_form() {
    let files = presets();
    assert_eq!(files.len(), 7);
    for p in files {
        let c = RunConfig::parse(&fs::read_to_string(&p).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(RunConfig::parse(&c.emit()).unwrap(), c, "{}", p.display());
        let printed = bin().args(["full", "--print-config"]).arg(&p).output().unwrap();
        assert_eq!(String::from_utf8(printed.stdout).unwrap(), c.emit());
    }
}

#[test]
fn runs_are_byte_for_byte_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = [&["path", "--run-id", "r"][..], &SMALL].concat();
    for root in [&a, &b] {
        let o = run(&args, root.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["report.csv", "report.json", "field.csv", "field.svfd", "uniqueness.json", "manifest.json"] {
        let x = fs::read(a.path().join("r").join(f)).unwrap();
        let y = fs::read(b.path().join("r").join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn inadmissible_gamma_needs_override() {
    let tmp = tempfile::tempdir().unwrap();
    // bound for μ₁ = 1.5 is 1/3
    let base = [
        "--set",
        "density=phi_mu",
        "--set",
        "mu=1.5",
        "--set",
        "grid.n=17",
        "--set",
        "params.gamma=0.34",
        "--set",
        "params.mu1=1.5",
        "--set",
        "experiments.uniqueness=false",
    ];
    let o = run(&[&["path", "--run-id", "refused"][..], &base].concat(), tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gate.growing_second"), "{}", stderr(&o));
    assert!(!tmp.path().join("refused/report.csv").exists());

    let o = run(&[&["path", "--run-id", "forced", "--override"][..], &base].concat(), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(tmp.path().join("forced/report.csv").is_file());
    let m = fs::read_to_string(tmp.path().join("forced/manifest.json")).unwrap();
    assert!(m.contains("\"overridden\""));

    // admissible γ appends the witness weight α = τ_α - 1/2 to the series
    let mut ok = base.to_vec();
    ok[7] = "params.gamma=0.3";
    let o = run(&[&["path", "--run-id", "witness"][..], &ok].concat(), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("witness/report.json")).unwrap()).unwrap();
    let alphas = r["provenance"]["params"]["alphas"].as_array().unwrap();
    assert_eq!(alphas.len(), 4);
    let a = alphas[3].as_f64().unwrap();
    assert!(a > -0.5 && a < 0.0, "{a}");
}

#[test]
fn failing_check_exits_one_and_keeps_other_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets/lemma1.conf");
    let o = bin()
        .arg("lemma1")
        .arg(&conf)
        .args(["--set", "lemma1.expect=violated"])
        .env("SPLITVAR_OUT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lemma1.verdict"));
    assert!(tmp.path().join("lemma1/lemma1.csv").is_file());

    // superlinear f₂ fails its growth check; f₁'s results are still written
    let o = run(
        &["check-density", "--set", "density.f1=phi_mu", "--set", "density.f1.mu=2", "--set", "density.f2=quadratic"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let d = fs::read_to_string(tmp.path().join("check-density/density.json")).unwrap();
    assert!(d.contains("\"growth\"") && d.contains("not of linear growth"), "{d}");
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("occupied");
    fs::write(&file, "").unwrap();
    let o = run(&["admissible", "--set", "density=phi_mu", "--set", "mu=1.5"], &file);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn admissible_reports_every_decided_statement() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "admissible",
            "--set",
            "density.f1=phi_mu",
            "--set",
            "density.f1.mu=1.5",
            "--set",
            "density.f2=phi_mu",
            "--set",
            "density.f2.mu=1.9",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("PASS       admissible.splitting_regularity"), "{out}");

    let o = run(&["admissible", "--set", "density=phi_mu", "--set", "mu=3"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}
