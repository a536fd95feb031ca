use std::fs;
use std::process::{Command, Output};

use risnet_cli::blockfile::parse_block_file;

fn risnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

#[test]
fn table1_rows_and_infinite_rendering() {
    let text = stdout(&risnet(&["table1", "--x", "2,-0.5"]));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[0][0], "-inf");
    assert_eq!(rows[0][2], "0.0000000000000000e0");
    assert_eq!(rows[0][3], "-inf");
    assert_eq!(rows[4][3], "-inf");
    assert!(!rows[4][4].is_empty());
    let mag: f64 = rows[1][2].parse().unwrap();
    assert!((mag - 0.5f64.sqrt()).abs() < 1e-15);
    // Extra x = 2 row: |1/(1 + 2j)| = 1/√5.
    let mag: f64 = rows[5][2].parse().unwrap();
    assert!((mag - 0.2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn sweep_is_byte_reproducible_and_writes_schema() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = [
        "sweep",
        "--spacing-steps",
        "5",
        "--trials",
        "5000",
        "--seed",
        "7",
        "--output",
    ];
    for p in [&a, &b] {
        let mut v = args.to_vec();
        v.push(p.to_str().unwrap());
        stdout(&risnet(&v));
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with(
        "d/λ,gain_physical_opt_db,gain_conventional_opt_db,gain_cross_applied_db,gain_random_physical_db,gain_random_conventional_db\n"
    ));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][3], "-inf");
    let other = stdout(&risnet(&[
        "sweep",
        "--spacing-steps",
        "5",
        "--trials",
        "5000",
        "--seed",
        "8",
    ]));
    assert_ne!(other, text);
}

#[test]
fn sweep_rejects_single_step() {
    let out = risnet(&["sweep", "--spacing-steps", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn convert_roundtrip_and_dependency_report() {
    let dir = tempfile::tempdir().unwrap();
    let z_path = dir.path().join("z.txt");
    // Unilateral Z with a blocked direct link (Z_DS = 0).
    fs::write(
        &z_path,
        "kind = Z\nresistance = 50\nports = 1 2 1\n\
         50,0 0,0 0,0 0,0\n\
         0.3,-0.2 50,0 0,0 0,0\n\
         -0.1,0.25 0,0 50,0 0,0\n\
         0,0 0.02,0.01 -0.015,0.03 50,0\n",
    )
    .unwrap();
    let s_path = dir.path().join("s.txt");
    let back_path = dir.path().join("z2.txt");
    stdout(&risnet(&[
        "convert",
        z_path.to_str().unwrap(),
        "--output",
        s_path.to_str().unwrap(),
    ]));
    let s_text = fs::read_to_string(&s_path).unwrap();
    let report: Vec<&str> = s_text.lines().filter(|l| l.starts_with('#')).collect();
    assert_eq!(report.len(), 2);
    let value: f64 = report[0].rsplit(' ').next().unwrap().parse().unwrap();
    assert!(value <= 1e-12);

    stdout(&risnet(&[
        "convert",
        s_path.to_str().unwrap(),
        "--output",
        back_path.to_str().unwrap(),
    ]));
    let orig = parse_block_file(&fs::read_to_string(&z_path).unwrap()).unwrap();
    let back = parse_block_file(&fs::read_to_string(&back_path).unwrap()).unwrap();
    assert!(back.matrix.relative_deviation(&orig.matrix) <= 1e-12);
}

#[test]
fn convert_parse_error_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.txt");
    fs::write(&p, "kind = Z\nresistance = 50\nports = 1 0 0\n50,zero\n").unwrap();
    let out = risnet(&["convert", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
    let missing = risnet(&["convert", dir.path().join("nope.txt").to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.txt"));
}

#[test]
fn eval_default_link_and_scenario_file() {
    let text = stdout(&risnet(&[
        "eval",
        "--spacing",
        "0.5",
        "--x",
        "1,-1",
        "--model",
        "physical",
    ]));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    let db: f64 = rows[0][7].parse().unwrap();
    assert!(db.abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("link.txt");
    fs::write(
        &p,
        "tx = 2\nris = 2\nrx = 1\n[d_rs]\n40, 40.5\n41, 41.2\n[d_dr]\n60, 60.7\n[d_ds]\n90, 90.3\n",
    )
    .unwrap();
    let text = stdout(&risnet(&[
        "eval",
        "--scenario",
        p.to_str().unwrap(),
        "--phases",
        "0,90",
    ]));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][0], "physical");
    assert_eq!(rows[3][0], "conventional");
}

#[test]
fn eval_requires_terminations() {
    assert_eq!(risnet(&["eval"]).status.code(), Some(1));
    assert_eq!(risnet(&["eval", "--x", "1,2,3"]).status.code(), Some(1));
}

#[test]
fn coarse_oracle_fails_cross_check() {
    let out = risnet(&["table2", "--grid-step", "0.1", "--starts", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cross-check"));
    // The table is still written before the failure is reported.
    assert_eq!(csv_rows(&String::from_utf8(out.stdout).unwrap()).len(), 5);
}

#[test]
fn pretty_format_renders_aligned_table() {
    for args in [
        &["table1", "--format", "pretty"][..],
        &[
            "sweep",
            "--spacing-steps",
            "3",
            "--trials",
            "10",
            "--format",
            "pretty",
        ],
    ] {
        let text = stdout(&risnet(args));
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].chars().all(|c| c == '-'));
        let width = lines[0].chars().count();
        assert!(lines.iter().all(|l| l.chars().count() == width), "{text}");
    }
}
