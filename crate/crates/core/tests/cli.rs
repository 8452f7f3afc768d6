use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use zhawkes::cli::{RunManifest, EVENTS_FILE, MANIFEST_FILE};

const SMALL: &str = "\
baseline = 0.5
hawkes_ratio = 0.2
hawkes_decay = 1
zumbach_ratio = 1.5
zumbach_decay = 0.1
horizon = 3000
seed = 11
sde_dt = 0.05
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zhawkes"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_key_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", &SMALL.replace("baseline = 0.5\n", ""));
    let out = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        text(&out).contains("missing required key `baseline`"),
        "{}",
        text(&out)
    );
}

#[test]
fn violated_dt_bound_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.conf",
        &SMALL.replace("sde_dt = 0.05", "sde_dt = 2"),
    );
    let out = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--mode",
        "sde",
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out).contains("config error"), "{}", text(&out));
}

#[test]
fn manifest_lists_outputs_with_checksums() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", SMALL);
    for mode in ["thinning", "sde"] {
        let out_dir = dir.path().join(mode);
        let out = run(&[
            "simulate",
            "--config",
            s(&cfg),
            "--mode",
            mode,
            "--out",
            s(&out_dir),
        ]);
        assert!(out.status.success(), "{}", text(&out));
        let m = RunManifest::load(out_dir.join(MANIFEST_FILE)).unwrap();
        assert_eq!(m.seed, 11);
        assert!(!m.truncated);
        assert!(m.mismatches(&out_dir).is_empty());
        let expected = if mode == "thinning" { 2 } else { 1 };
        assert_eq!(m.outputs.len(), expected);
        for o in &m.outputs {
            assert_eq!(fs::metadata(out_dir.join(&o.file)).unwrap().len(), o.bytes);
        }
        // Tampering is detected.
        let first = out_dir.join(&m.outputs[0].file);
        let mut body = fs::read(&first).unwrap();
        body.push(b'\n');
        fs::write(&first, body).unwrap();
        assert_eq!(m.mismatches(&out_dir), vec![m.outputs[0].file.clone()]);
    }
}

#[test]
fn sde_path_has_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", SMALL);
    let out_dir = dir.path().join("o");
    assert!(run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--mode",
        "sde",
        "--out",
        s(&out_dir)
    ])
    .status
    .success());
    let body = fs::read_to_string(out_dir.join("path.csv")).unwrap();
    let header = body.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "time,h,z,lambda");
}

#[test]
fn same_seed_gives_identical_files_and_seed_override_changes_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", SMALL);
    let go = |name: &str, seed: Option<&str>| {
        let out_dir = dir.path().join(name);
        let mut args = vec!["simulate", "--config", s(&cfg), "--out", s(&out_dir)];
        if let Some(seed) = seed {
            args.extend(["--seed", seed]);
        }
        let owned: Vec<String> = args.iter().map(|a| a.to_string()).collect();
        assert!(bin().args(&owned).status().unwrap().success());
        (
            fs::read(out_dir.join(EVENTS_FILE)).unwrap(),
            fs::read(out_dir.join("series.csv")).unwrap(),
        )
    };
    let a = go("a", None);
    let b = go("b", None);
    let c = go("c", Some("12"));
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn verify_fresh_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", SMALL);
    let out_dir = dir.path().join("o");
    assert!(
        run(&["simulate", "--config", s(&cfg), "--out", s(&out_dir)])
            .status
            .success()
    );
    let out = run(&[
        "verify",
        s(&out_dir.join(EVENTS_FILE)),
        "--config",
        s(&cfg),
        "--tol",
        "1e-9",
    ]);
    assert!(out.status.success(), "{}", text(&out));
    assert!(text(&out).contains("result: pass"));
}

#[test]
fn verify_locates_a_corrupted_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", SMALL);
    let out_dir = dir.path().join("o");
    assert!(
        run(&["simulate", "--config", s(&cfg), "--out", s(&out_dir)])
            .status
            .success()
    );
    let path = out_dir.join(EVENTS_FILE);
    let body = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = body.lines().map(String::from).collect();
    let data: Vec<usize> = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.starts_with("time"))
        .map(|(i, _)| i)
        .collect();
    let victim = data[data.len() / 2];
    let later = data[data.len() / 2 + 40];
    let later_time: f64 = lines[later].split(',').next().unwrap().parse().unwrap();
    let fields: Vec<String> = lines[victim].split(',').map(String::from).collect();
    let original: f64 = fields[0].parse().unwrap();
    lines[victim] = format!("{:.16e},{},{}", later_time + 1.0, fields[1], fields[2]);
    fs::write(&path, lines.join("\n") + "\n").unwrap();

    let out = run(&["verify", s(&path), "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out));
    let report = text(&out);
    assert!(report.contains("result: FAIL"));
    let worst: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("worst_time: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(
        worst > original,
        "worst {worst} before corrupted event {original}"
    );
}

#[test]
fn verify_rejects_mismatched_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", SMALL);
    let other = write(
        dir.path(),
        "d.conf",
        &SMALL.replace("zumbach_ratio = 1.5", "zumbach_ratio = 1.4"),
    );
    let out_dir = dir.path().join("o");
    assert!(
        run(&["simulate", "--config", s(&cfg), "--out", s(&out_dir)])
            .status
            .success()
    );
    let out = run(&[
        "verify",
        s(&out_dir.join(EVENTS_FILE)),
        "--config",
        s(&other),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out).contains("mismatch"), "{}", text(&out));
}

#[test]
fn verify_empty_events_file_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.conf",
        "baseline = 0.5\nhawkes_ratio = 0\nhawkes_decay = 1\nzumbach_ratio = 0\nzumbach_decay = 1\nhorizon = 100\nseed = 1\n",
    );
    let events = write(dir.path(), "e.csv", "time,sign,cumulative_price\n");
    let out = run(&["verify", s(&events), "--config", s(&cfg)]);
    assert!(out.status.success(), "{}", text(&out));
}

#[test]
fn analyze_constant_series() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("time,lambda\n");
    for i in 0..2000 {
        body.push_str(&format!("{i},0.5\n"));
    }
    let series = write(dir.path(), "flat.csv", &body);
    let out_dir = dir.path().join("a");
    let out = run(&["analyze", s(&series), "--out", s(&out_dir)]);
    let report = text(&out);
    assert!(out.status.success(), "{report}");
    assert!(report.contains("insufficient points"), "{report}");
    assert!(report.contains("verdict stationarity: pass"), "{report}");
    for f in ["curve.csv", "running_mean.csv", "summary.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    // Requesting a slope verdict turns the missing tail into a failure.
    let out = run(&["analyze", s(&series), "--slope-range=-0.85,-0.65"]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out));
}

#[test]
fn analyze_reports_parse_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let series = write(
        dir.path(),
        "bad.csv",
        "# note\ntime,lambda\n0,1\n1,1\n2,oops\n3,1\n",
    );
    let out = run(&["analyze", s(&series)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out).contains("line 5"), "{}", text(&out));

    let truncated = write(dir.path(), "cut.csv", "time,lambda\n0,1\n1,1\n2,1\n3");
    let out = run(&["analyze", s(&truncated)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out).contains("line 5"), "{}", text(&out));
}

#[test]
fn analyze_uses_embedded_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.conf",
        &SMALL.replace("horizon = 3000", "horizon = 20000"),
    );
    let out_dir = dir.path().join("o");
    assert!(run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&out_dir),
        "--no-events"
    ])
    .status
    .success());
    assert!(!out_dir.join(EVENTS_FILE).exists());
    let out = run(&[
        "analyze",
        s(&out_dir.join("series.csv")),
        "--windows",
        "0",
        "--regime",
        "chi_small",
    ]);
    let report = text(&out);
    assert!(out.status.success(), "{report}");
    assert!(
        report.contains("theory slope: -0.7555 (chi_small)"),
        "{report}"
    );
    assert!(report.contains("burn-in 2000"), "{report}");
}

#[test]
fn predict_examples() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("0", "2", "stationary-infinite-mean", "-0.750000"),
        (
            "0.5",
            "0.3",
            "stationary-finite-mean",
            "mean intensity: 2.5",
        ),
        ("1.2", "0", "explosive", "explosive"),
    ];
    for (n_h, n_z, class, needle) in cases {
        let body = SMALL
            .replace("hawkes_ratio = 0.2", &format!("hawkes_ratio = {n_h}"))
            .replace("zumbach_ratio = 1.5", &format!("zumbach_ratio = {n_z}"));
        let cfg = write(dir.path(), "c.conf", &body);
        let out = run(&["predict", "--config", s(&cfg)]);
        let report = text(&out);
        assert!(out.status.success(), "{report}");
        assert!(report.contains(&format!("class: {class}")), "{report}");
        assert!(report.contains(needle), "{report}");
    }
}

#[test]
fn explosive_run_reports_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL
        .replace("hawkes_ratio = 0.2", "hawkes_ratio = 1.2")
        .replace("zumbach_ratio = 1.5", "zumbach_ratio = 0")
        + "event_cap = 20000\n";
    let cfg = write(dir.path(), "c.conf", &body);
    let out_dir = dir.path().join("o");
    let out = run(&["simulate", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out));
    let m = RunManifest::load(out_dir.join(MANIFEST_FILE)).unwrap();
    assert!(m.truncated);
    assert_eq!(m.n_events, Some(20_000));
    let events = fs::read_to_string(out_dir.join(EVENTS_FILE)).unwrap();
    assert!(events.trim_end().ends_with("# truncated = true"));
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", SMALL);
    let out_dir = dir.path().join("sw");
    let out = run(&[
        "sweep",
        "--config",
        s(&cfg),
        "--out",
        s(&out_dir),
        "--seeds",
        "1..3",
        "--windows",
        "0",
        "--fit-min",
        "5",
        "--fit-max",
        "100",
    ]);
    assert!(out.status.success(), "{}", text(&out));
    let table = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    for seed in 1..=3 {
        assert!(out_dir
            .join(format!("seed-{seed}"))
            .join(MANIFEST_FILE)
            .exists());
    }
}
