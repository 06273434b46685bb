use std::fs;
use std::path::Path;
use std::process::Command;

use cbohf::cli::{execute, header_config, run_scan, Overrides, RunConfig, ScanKind, Table};

fn resolved(text: &str, kind: ScanKind) -> RunConfig {
    RunConfig::parse(text)
        .unwrap()
        .resolve(&Overrides {
            kind: Some(kind),
            ..Overrides::default()
        })
        .unwrap()
}

fn col(t: &Table, name: &str) -> Vec<f64> {
    t.values(name).unwrap_or_else(|| panic!("no column {name}"))
}

fn rows_where(t: &Table, name: &str, value: f64) -> Vec<usize> {
    col(t, name).iter().enumerate().filter(|(_, v)| (**v - value).abs() < 1e-9).map(|(i, _)| i).collect()
}

#[test]
fn qc_scan_shape() {
    let cfg = resolved("[cavity]\nfield_v_per_nm = [2.0]\n[scan]\nstart = -1.0\nstop = 2.0\nstep = 0.1\n", ScanKind::Qc);
    let t = &run_scan(&cfg).unwrap()[0];
    assert_eq!(t.n_flagged(), 0);
    let q = col(t, "q");
    let e = col(t, "e_cbo");
    let lin = col(t, "e_lin");
    let dse = col(t, "e_dse");
    let q_opt = col(t, "q_opt")[0];
    let zero = rows_where(t, "q", 0.0);
    assert_eq!(zero.len(), 1);
    assert_eq!(lin[zero[0]], 0.0);
    let imin = (0..e.len()).min_by(|&a, &b| e[a].total_cmp(&e[b])).unwrap();
    assert!((q[imin] - q_opt).abs() <= 0.1 + 1e-12, "grid minimum {} vs optimum {q_opt}", q[imin]);
    // linear term changes sign at q = 0, DSE nearly flat
    assert!(lin.iter().zip(&q).all(|(l, q)| l * q <= 0.0));
    let (lo, hi) = dse.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    assert!((hi - lo) / hi < 0.02);
    // shifted parabola: second differences constant to a few percent
    let d2: Vec<f64> = e.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    for v in &d2 {
        assert!((v / d2[0] - 1.0).abs() < 0.05);
    }
}

#[test]
fn angle_scan_symmetry() {
    let cfg = resolved("[cavity]\nfield_v_per_nm = [2.0]\n[scan]\nstart = 0.0\nstop = 180.0\nstep = 15.0\n", ScanKind::Angle);
    let t = &run_scan(&cfg).unwrap()[0];
    assert_eq!(t.n_flagged(), 0);
    let de = col(t, "delta_e");
    let lin = col(t, "e_lin");
    let i90 = rows_where(t, "phi_deg", 90.0)[0];
    assert!(lin[i90].abs() < 1e-10 && col(t, "e_dis")[i90] < 1e-10);
    assert!(col(t, "e_dse_2j")[i90].abs() < 1e-10);
    let n = de.len();
    for k in 0..n {
        assert!((de[k] - de[n - 1 - k]).abs() < 1e-9, "asymmetric at row {k}");
    }
    assert!((lin[0] - lin[n - 1]).abs() < 1e-10);
    assert!(lin.iter().all(|l| l.abs() <= lin[0].abs() + 1e-14));
}

#[test]
fn bond_scan_zero_field_is_plain_curve() {
    let cfg = resolved(
        "basis = \"6-31g\"\n[cavity]\nfield_v_per_nm = [0.0, 1.5]\n[scan]\nstart = 1.8\nstop = 2.8\nstep = 0.5\n",
        ScanKind::Bond,
    );
    let tables = run_scan(&cfg).unwrap();
    let ens = &tables[0];
    assert_eq!(ens.n_flagged(), 0);
    let de = col(ens, "delta_e");
    let field = col(ens, "field_v_per_nm");
    let pes = col(ens, "scanned_e_field_free");
    let e = col(ens, "e_cbo");
    for i in 0..de.len() {
        if field[i] == 0.0 {
            assert!(de[i].abs() < 1e-10);
            assert!((e[i] - pes[i]).abs() < 1e-10);
        } else {
            assert!(de[i] > 0.0);
        }
    }
    // field-free curve against the independent RHF reference at r = 1.8
    for i in rows_where(ens, "bond_length", 1.8) {
        assert!((pes[i] + 99.98239535575145).abs() < 1e-6);
    }
    assert_eq!(tables[1].rows.len(), 6);
}

#[test]
fn sweep_first_row_matches_single() {
    let sweep = resolved("[cavity]\nfield_v_per_nm = [1.0]\n[ensemble]\nn_mol = [1, 2, 3]\n", ScanKind::Size);
    let single = resolved("[cavity]\nfield_v_per_nm = [1.0]\n", ScanKind::Single);
    let a = run_scan(&sweep).unwrap();
    let b = run_scan(&single).unwrap();
    assert_eq!(a[0].rows.len(), 3);
    assert_eq!(a[1].rows.len(), 6);
    assert_eq!(a[0].rows[0], b[0].rows[0]);
    // rescaled ensemble energy change stays of the same size
    let de = col(&a[0], "delta_e");
    assert!(de.iter().all(|d| (d / de[0] - 1.0).abs() < 0.2));
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn emission_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[cavity]\nfield_v_per_nm = [1.5]\n[ensemble]\nn_mol = [1, 2]\npattern = \"defective\"\n";
    let run = |sub: &str| {
        let ov = Overrides {
            kind: Some(ScanKind::Size),
            out: Some(dir.path().join(sub)),
            ..Overrides::default()
        };
        execute(RunConfig::parse(text).unwrap(), &ov).unwrap()
    };
    let first = run("a");
    run("b");
    // N = 1 cannot be defective: flagged, not dropped
    assert_eq!(first.tables[0].rows.len(), 2);
    assert_eq!(first.exit_code(), 2);
    let a = read_dir_bytes(&dir.path().join("a"));
    let b = read_dir_bytes(&dir.path().join("b"));
    assert_eq!(a.len(), 4);
    assert_eq!(a.iter().map(|x| &x.0).collect::<Vec<_>>(), b.iter().map(|x| &x.0).collect::<Vec<_>>());
    // identical apart from the output directory recorded in the header
    let strip = |s: &[u8]| String::from_utf8(s.to_vec()).unwrap().replace("/a\"", "/X\"").replace("/b\"", "/X\"");
    for ((_, x), (_, y)) in a.iter().zip(&b) {
        assert_eq!(strip(x), strip(y));
    }

    let csv_text = fs::read_to_string(dir.path().join("a/sweep-size_ensemble.csv")).unwrap();
    let cfg = RunConfig::parse(&header_config(&csv_text)).unwrap();
    let original = RunConfig::parse(text)
        .unwrap()
        .resolve(&Overrides {
            kind: Some(ScanKind::Size),
            out: Some(dir.path().join("a")),
            ..Overrides::default()
        })
        .unwrap();
    assert_eq!(cfg, original);

    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(csv_text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let records: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 2);
    let ie = headers.iter().position(|h| h == "e_cbo").unwrap();
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a/sweep-size_ensemble.json")).unwrap()).unwrap();
    let from_csv: f64 = records[1][ie].parse().unwrap();
    assert_eq!(json["rows"][1][ie].as_f64().unwrap(), from_csv);
    assert!(json["rows"][0][ie].is_null());
}

#[test]
fn binary_exit_codes_and_byte_identical_runs() {
    let exe = env!("CARGO_BIN_EXE_cbohf");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[cavity]\nfield_v_per_nm = [2.0]\n[scan]\nstart = 0.0\nstop = 90.0\nstep = 45.0\n[output]\ndirectory = \"res\"\n").unwrap();
    let run = |cwd: &Path| {
        Command::new(exe)
            .current_dir(cwd)
            .args(["scan-angle", "--config", cfg.to_str().unwrap(), "--threads", "2"])
            .output()
            .unwrap()
            .status
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    assert_eq!(run(&a).code(), Some(0));
    assert_eq!(run(&b).code(), Some(0));
    assert_eq!(read_dir_bytes(&a.join("res")), read_dir_bytes(&b.join("res")));

    let status = Command::new(exe)
        .args(["single", "--basis", "no-such-basis.gbs", "--out", dir.path().join("x").to_str().unwrap()])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(1));

    fs::write(&cfg, "[geometry]\ndipole_axis = [0.0, 0.0, 1.0]\n[scf]\nmax_macro_iterations = 1\ngolden_section_fallback = false\n").unwrap();
    let status = Command::new(exe)
        .args(["single", "--config", cfg.to_str().unwrap(), "--format", "csv", "--out", dir.path().join("y").to_str().unwrap()])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
    assert!(dir.path().join("y/single_ensemble.csv").exists());
    assert!(!dir.path().join("y/single_ensemble.json").exists());
}
