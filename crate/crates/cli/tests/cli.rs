use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SPEC: &str = "\
name=easy
frames=30
width=160
height=120
target_size=24
texture_seed=3
waypoint=0,40,60
waypoint=29,98,60
";

const CONFIG: &str = "\
# light raster so the test stays quick
features.layers=grayscale:1:0.5,gradient:2:9:1
features.rows=32
features.cols=32
pf.num_particles=50
";

fn corrpf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrpf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_inputs(dir: &Path) -> (String, String) {
    let spec = dir.join("easy.spec");
    let config = dir.join("run.cfg");
    fs::write(&spec, SPEC).unwrap();
    fs::write(&config, CONFIG).unwrap();
    (spec.display().to_string(), config.display().to_string())
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn synth_track_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let (spec, config) = write_inputs(tmp.path());
    let seq = tmp.path().join("seq");
    let seq_s = seq.display().to_string();

    let o = corrpf(&["synth", &spec, "--out", &seq_s]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(seq.join("img/0001.ppm").is_file() || seq.join("img/0001.pgm").is_file());
    assert!(seq.join("groundtruth_rect.txt").is_file());

    let out = tmp.path().join("run");
    let out_s = out.display().to_string();
    let o = corrpf(&[
        "track",
        &seq_s,
        "--config",
        &config,
        "--out",
        &out_s,
        "--overlays",
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 31);
    assert!(out.join("weights.csv").is_file());
    assert!(out.join("overlays").is_dir());

    let curves = tmp.path().join("curves");
    let o = corrpf(&[
        "eval",
        &seq_s,
        "--config",
        &config,
        "--results",
        &out.join("results.csv").display().to_string(),
        "--out",
        &curves.display().to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(stdout(&o).contains("precision@20 1.0000"), "{}", stdout(&o));
    assert!(curves.join("curves.csv").is_file());

    // tracking inside eval gives the same answer
    let o = corrpf(&["eval", &seq_s, "--config", &config]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(stdout(&o).contains("precision@20 1.0000"), "{}", stdout(&o));
}

#[test]
fn track_accepts_spec_file_directly() {
    let tmp = tempfile::tempdir().unwrap();
    let (spec, config) = write_inputs(tmp.path());
    let out = tmp.path().join("run");
    let o = corrpf(&[
        "track",
        &spec,
        "--config",
        &config,
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(out.join("results.csv").is_file());
}

#[test]
fn same_seed_gives_identical_results() {
    let tmp = tempfile::tempdir().unwrap();
    let (spec, config) = write_inputs(tmp.path());
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let o = corrpf(&[
            "track",
            &spec,
            "--config",
            &config,
            "--out",
            &out.display().to_string(),
            "--seed",
            "7",
        ]);
        assert_eq!(o.status.code(), Some(0), "{o:?}");
        csvs.push(fs::read(out.join("results.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn missing_config_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (spec, _) = write_inputs(tmp.path());
    let missing = tmp.path().join("nope.cfg");
    let o = corrpf(&[
        "track",
        &spec,
        "--config",
        &missing.display().to_string(),
        "--out",
        &tmp.path().join("run").display().to_string(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&missing.display().to_string()), "{err}");
}

#[test]
fn bad_config_value_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (spec, config) = write_inputs(tmp.path());
    fs::write(&config, "pf.num_particles=lots\n").unwrap();
    let o = corrpf(&[
        "synth",
        &spec,
        "--out",
        &tmp.path().join("s").display().to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = corrpf(&[
        "eval",
        &tmp.path().join("s").display().to_string(),
        "--config",
        &config,
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pf.num_particles"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["track"][..],
        &["frobnicate"][..],
        &["synth", "x.spec", "--out", "d", "--bogus"][..],
    ] {
        let o = corrpf(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(
            String::from_utf8_lossy(&o.stderr)
                .to_lowercase()
                .contains("usage"),
            "{args:?}"
        );
    }
    let o = corrpf(&["compare", "dir", "--config", "c", "--seeds", "1,x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seeds"));
}

#[test]
fn compare_prints_table_and_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let (spec, config) = write_inputs(tmp.path());
    fs::write(
        &spec,
        SPEC.replace("frames=30", "frames=12")
            .replace("29,98", "11,62"),
    )
    .unwrap();
    let suite = tmp.path().join("suite");
    for name in ["s1", "s2"] {
        let o = corrpf(&[
            "synth",
            &spec,
            "--out",
            &suite.join(name).display().to_string(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let out = tmp.path().join("cmp");
    let o = corrpf(&[
        "compare",
        &suite.display().to_string(),
        "--config",
        &config,
        "--seeds",
        "1,2",
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(stdout(&o).contains("likelihood"));
    let csv = fs::read_to_string(out.join("compare.csv")).unwrap();
    // header plus two trackers per sequence
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    assert!(out.join("diffs.csv").is_file());
}
