use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use holomimo_cli::config::{ExperimentConfig, ExperimentKind, GeometrySpec};
use holomimo_cli::{presets, run, CliError};

fn holomimo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holomimo")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn small(kind: ExperimentKind, dir: &Path) -> ExperimentConfig {
    let mut c = presets::preset("fig2").unwrap();
    c.kind = kind;
    c.tx = GeometrySpec::grid(4, 0.3);
    c.out_dir = dir.to_path_buf();
    c.mc = 20;
    c
}

#[test]
fn presets_are_listed_and_printable() {
    let o = holomimo(&["presets"]);
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    for n in presets::NAMES {
        assert!(s.contains(n));
    }
    let o = holomimo(&["presets", "fig5"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(ExperimentConfig::from_str(&text, false).unwrap(), presets::preset("fig5").unwrap());
    assert_eq!(holomimo(&["presets", "fig9"]).status.code(), Some(1));
}

#[test]
fn validate_accepts_toml_and_json() {
    let d = tempfile::tempdir().unwrap();
    let toml = write(
        d.path(),
        "a.toml",
        "kind = \"capacity\"\n[tx]\naperture = 2.0\nspacing = 0.4\nfit = \"ceil\"\n",
    );
    let o = holomimo(&["validate", &toml]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // 2.0 / 0.4 is five intervals exactly, so the fit rule does not apply.
    assert!(String::from_utf8(o.stdout).unwrap().contains("36 transmit"));
    let json = write(
        d.path(),
        "b.json",
        r#"{"kind": "eigenvalues", "tx": {"nx": 3, "ny": 2, "spacing": [0.5, 0.25]}}"#,
    );
    assert!(holomimo(&["validate", &json]).status.success());
    assert!(holomimo(&["validate", "fig6-desk"]).status.success());
}

#[test]
fn unknown_spectrum_is_a_config_error_listing_valid_names() {
    let d = tempfile::tempdir().unwrap();
    let p = write(
        d.path(),
        "c.toml",
        "kind = \"capacity\"\nspectrum = \"laplacian\"\n[tx]\nnx = 4\nspacing = 0.5\n",
    );
    let o = holomimo(&["run", &p]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("laplacian") && err.contains("isotropic") && err.contains("cap("), "{err}");
}

#[test]
fn malformed_configs_exit_one() {
    let d = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("missing_kind.toml", "[tx]\nnx = 4\nspacing = 0.5\n"),
        ("missing_tx.toml", "kind = \"capacity\"\n"),
        ("unknown_field.toml", "kind = \"capacity\"\nsnr = 3\n[tx]\nnx = 4\nspacing = 0.5\n"),
        ("bad_rho.toml", "kind = \"capacity\"\nrho = [-1.0]\n[tx]\nnx = 4\nspacing = 0.5\n"),
        ("bad_pattern.toml", "kind = \"capacity\"\npattern = \"dipole\"\n[tx]\nnx = 4\nspacing = 0.5\n"),
        ("no_pattern.toml", "kind = \"dof-sweep\"\nrho = [0.1]\n[tx]\nnx = 4\nspacing = 0.5\n"),
        ("collocated.toml", "kind = \"capacity\"\n[tx]\npositions = [[0,0,0],[0,0,0]]\n"),
    ] {
        let p = write(d.path(), name, text);
        let o = holomimo(&["validate", &p]);
        assert_eq!(o.status.code(), Some(1), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(holomimo(&["run", "/no/such/config.toml"]).status.code(), Some(1));
}

#[test]
fn singular_coupling_without_loss_exits_two_naming_the_remedy() {
    let d = tempfile::tempdir().unwrap();
    let p = write(
        d.path(),
        "s.toml",
        &format!(
            "kind = \"dof-sweep\"\npattern = \"omni\"\nrho = [0.0]\nout_dir = \"{}\"\n[tx]\nnx = 21\nspacing = 0.25\n",
            d.path().join("out").display()
        ),
    );
    let o = holomimo(&["run", &p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("rho"));
}

#[test]
fn manifest_lists_every_output() {
    let d = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::CouplingMatrix, d.path());
    c.pattern = Some("omni".into());
    c.rho = vec![0.0, 0.1];
    let r = run(&c).unwrap();
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("manifest.json")).unwrap()).unwrap();
    let listed: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    let mut on_disk: Vec<String> = fs::read_dir(d.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let mut l: Vec<String> = listed.iter().map(|s| s.to_string()).collect();
    l.sort();
    assert_eq!(l, on_disk);
    assert_eq!(r.files.len(), 2);
    assert_eq!(m["seed"], 1);
    assert!(m["wall_time_s"].as_f64().is_some());
    assert_eq!(m["config"]["kind"], "coupling-matrix");
    for f in m["files"].as_array().unwrap() {
        let bytes = fs::read(d.path().join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
}

#[test]
fn coupling_matrix_csv_has_header_and_entries() {
    let d = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::CouplingMatrix, d.path());
    c.pattern = Some("omni".into());
    c.rho = vec![0.1];
    run(&c).unwrap();
    let text = fs::read_to_string(d.path().join("coupling_rho1e-1.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# N = 16");
    assert_eq!(lines[1], "# rho = 1e-1");
    assert!(lines[2].starts_with("# geometry = "));
    assert_eq!(lines[3], "row,col,value");
    assert_eq!(lines.len(), 4 + 256);
    assert_eq!(lines[4], "0,0,1.1");
}

#[test]
fn capacity_run_writes_schema_and_respects_overrides() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("o");
    let p = write(
        d.path(),
        "cap.toml",
        "kind = \"capacity\"\nsnr_db = [0.0, 10.0]\npattern = \"omni\"\nrho = [0.1]\n[tx]\nnx = 3\nspacing = 0.3\n",
    );
    let o = holomimo(&["run", &p, "--out-dir", out.to_str().unwrap(), "--mc", "7", "--seed", "5", "--workers", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("capacity_rho1e-1.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "snr_db,capacity_bits,stderr,n_mc");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.0,") && lines[1].ends_with(",7"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 5);
    assert_eq!(m["files"].as_array().unwrap().len(), 3);
}

#[test]
fn fourier_capacity_and_unit_audit_agree() {
    let d = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::Capacity, d.path());
    c.tx = GeometrySpec::grid(5, 0.5);
    c.channel = holomimo_cli::config::ChannelKind::Fourier;
    c.snr_db = holomimo_cli::config::SnrGrid::List(vec![0.0, 20.0]);
    let a = run(&c).unwrap();
    c.unit_audit_wavelength = Some(0.1);
    let b = run(&c).unwrap();
    let (x, y) = (a.curve("fourier").unwrap(), b.curve("fourier").unwrap());
    for (p, q) in x.points.iter().zip(&y.points) {
        assert!((p.capacity_bits - q.capacity_bits).abs() <= 1e-9 * p.capacity_bits.max(1.0));
    }
}

#[test]
fn eigenvalue_csv_polarizes_near_lattice_size() {
    let d = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::Eigenvalues, d.path());
    c.tx = GeometrySpec::square(5.0, 0.5, Default::default());
    let r = run(&c).unwrap();
    let text = fs::read_to_string(d.path().join("eigenvalues_fourier.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<(usize, f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap())
        })
        .collect();
    // Fourier eigenvalues vanish exactly past index/n = 1.
    for &(_, x, db) in &rows {
        if x > 1.0 {
            assert_eq!(db, -300.0);
        } else {
            assert!(db > -300.0);
        }
    }
    let exact = &r.eigen[0];
    let n = rows.iter().filter(|r| r.1 <= 1.0).count();
    assert!(exact.values[..n].iter().sum::<f64>() / exact.trace() > 0.8);
    assert!(fs::read_to_string(d.path().join("variances.csv")).unwrap().starts_with("jx,jy,sigma2\n"));
}

#[test]
fn bound_check_writes_json_record() {
    let d = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::BoundCheck, d.path());
    c.tx = GeometrySpec::grid(4, 0.5);
    c.spectrum = "cap(45deg)".into();
    let r = run(&c).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("bound_check.json")).unwrap()).unwrap();
    assert_eq!(v["low_snr"]["holds"], true);
    assert_eq!(v["low_snr"]["n_mc"], 20);
    assert!(v["high_snr"]["slope"].as_f64().unwrap() > 0.0);
    assert!(r.bound.is_some());
}

#[test]
fn numerical_and_config_errors_map_to_exit_codes() {
    use holomimo_core::Error;
    assert_eq!(CliError::from_core(Error::NearSingular { smallest: 0.0, floor: 1e-12 }).exit_code(), 2);
    assert_eq!(CliError::from_core(Error::Decomposition).exit_code(), 2);
    assert_eq!(CliError::from_core(Error::InvalidGeometry("x".into())).exit_code(), 1);
    assert_eq!(CliError::Io("disk".into()).exit_code(), 1);
}

#[test]
fn undersampled_arrays_are_warned_about() {
    let d = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::Eigenvalues, d.path());
    c.tx = GeometrySpec::grid(4, 1.0);
    let r = run(&c).unwrap();
    assert!(r.warnings.iter().any(|w| w.contains("undersampled")));
}
