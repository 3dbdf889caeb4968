use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_evonav"));
    cmd.args(args).env_remove("EVONAV_SEED");
    if let Some(seed) = seed_env {
        cmd.env("EVONAV_SEED", seed);
    }
    cmd.output().expect("spawn evonav")
}

fn ok(args: &[&str]) -> String {
    let out = run(args, None);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails_with(args: &[&str], code: i32) -> String {
    let out = run(args, None);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stderr).unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn evolve_single_generation() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("a");
    ok(&["evolve", "--fov", "45", "--generations", "1", "--population", "16", "--seed", "7", "--out", p(&out)]);
    let history = read(out.join("history.csv"));
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines[0], "fov_deg,replicate,generation,best_fitness,mean_fitness");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("45,0,0,"));
    assert!(read(out.join("best_genome.json")).contains("\"weights\""));
    assert!(read(out.join("manifest.json")).contains("\"base_seed\": 7"));
}

#[test]
fn evolve_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, jobs) in [(&a, "1"), (&b, "3")] {
        ok(&["evolve", "--generations", "3", "--population", "16", "--seed", "7", "--jobs", jobs, "--out", p(dir)]);
    }
    for file in ["history.csv", "best_genome.json"] {
        assert_eq!(read(a.join(file)), read(b.join(file)), "{file}");
    }
}

#[test]
fn seed_from_environment_and_precedence() {
    let tmp = TempDir::new().unwrap();
    let dirs: Vec<_> = ["flag", "env", "both"].iter().map(|d| tmp.path().join(d)).collect();
    let base = ["evolve", "--generations", "2", "--population", "16", "--out"];
    ok(&[&base[..], &[p(&dirs[0]), "--seed", "7"]].concat());
    assert!(run(&[&base[..], &[p(&dirs[1])]].concat(), Some("7")).status.success());
    assert!(run(&[&base[..], &[p(&dirs[2]), "--seed", "8"]].concat(), Some("7")).status.success());
    let history = |i: usize| read(dirs[i].join("history.csv"));
    assert_eq!(history(0), history(1));
    assert_ne!(history(0), history(2));

    let out = run(&[&base[..], &[p(&dirs[1])]].concat(), Some("seven"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_failures_exit_2() {
    let tmp = TempDir::new().unwrap();
    fails_with(&["evolve", "--fov", "181", "--out", p(tmp.path())], 2);
    fails_with(&["sweep", "--fovs", "90,45", "--dry-run"], 2);

    let write = |name: &str, body: &str| {
        let path = tmp.path().join(name);
        fs::write(&path, body).unwrap();
        path
    };
    let unknown = write("unknown.json", r#"{"evolutoin": {}}"#);
    assert!(fails_with(&["evolve", "--config", p(&unknown)], 2).contains("unknown field"));
    let range = write("range.json", r#"{"camera": {"fov_deg": 200}}"#);
    assert!(fails_with(&["evolve", "--config", p(&range)], 2).contains("camera.fov_deg"));
    let syntax = write("syntax.json", "{\n  \"camera\": {\"fov_deg\": 45,}\n}");
    assert!(fails_with(&["evolve", "--config", p(&syntax)], 2).contains("line 2"));
}

#[test]
fn io_failures_exit_3() {
    let tmp = TempDir::new().unwrap();
    fails_with(&["report", p(&tmp.path().join("missing.csv"))], 3);
    fails_with(&["evolve", "--config", p(&tmp.path().join("missing.json"))], 3);
    let file = tmp.path().join("occupied");
    fs::write(&file, "").unwrap();
    fails_with(&["evolve", "--generations", "1", "--population", "16", "--out", p(&file.join("sub"))], 3);
}

#[test]
fn config_file_feeds_defaults_and_flags_override() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("c.json");
    fs::write(&config, r#"{"evolution": {"population_size": 6, "parent_count": 3, "generations": 2}, "sweep": {"base_seed": 5}}"#).unwrap();
    let out = ok(&["sweep", "--config", p(&config), "--fovs", "10,20", "--replicates", "2", "--dry-run"]);
    assert!(out.contains("evaluations: 48"), "{out}");
    let out = ok(&["sweep", "--config", p(&config), "--fovs", "10", "--replicates", "1", "--generations", "3", "--dry-run"]);
    assert!(out.contains("evaluations: 18"), "{out}");

    let dir = tmp.path().join("run");
    ok(&["evolve", "--config", p(&config), "--out", p(&dir)]);
    assert!(read(dir.join("manifest.json")).contains("\"base_seed\": 5"));
}

#[test]
fn sweep_shapes_and_summary_recomputation() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s");
    let stdout = ok(&[
        "sweep", "--fovs", "5,45,90", "--replicates", "2", "--generations", "2", "--population", "16", "--seed", "3",
        "--out", p(&out),
    ]);
    assert!(stdout.contains("best fov (best individual): "));

    let summary = read(out.join("summary.csv"));
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows[0], "fov_deg,final_best_mean,final_avg_mean,stabilization_gen_best,stabilization_gen_avg");
    assert_eq!(rows.len(), 4);
    for name in ["heatmap_best.csv", "heatmap_avg.csv"] {
        let heat = read(out.join(name));
        let lines: Vec<&str> = heat.lines().collect();
        assert_eq!(lines[0], "fov_deg,0,1");
        assert_eq!(lines.len(), 4);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 3));
    }

    let history = read(out.join("history.csv"));
    for (row, fov) in rows[1..].iter().zip(["5", "45", "90"]) {
        let finals: Vec<f64> = history
            .lines()
            .skip(1)
            .map(|l| l.split(',').collect::<Vec<_>>())
            .filter(|c| c[0] == fov && c[2] == "1")
            .map(|c| c[3].parse().unwrap())
            .collect();
        assert_eq!(finals.len(), 2);
        let expected = finals.iter().sum::<f64>() / 2.0;
        let reported: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((reported - expected).abs() <= 1e-8 * expected.max(1e-9), "{row}: {expected}");
    }
}

#[test]
fn desk_preset_dry_run() {
    let out = ok(&["sweep", "--preset", "desk", "--dry-run"]);
    for line in ["fov_values: 6", "replicates: 3", "generations: 30", "population: 30", "evaluations: 16200"] {
        assert!(out.contains(line), "{out}");
    }
}

fn zero_genome(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("zero.json");
    let weights = vec!["0"; 218].join(",");
    fs::write(
        &path,
        format!(r#"{{"spec": {{"n_inputs": 16, "n_hidden": 8, "n_outputs": 2}}, "weights": [{weights}], "fitness": null, "fov_deg": 45}}"#),
    )
    .unwrap();
    path
}

#[test]
fn replay_zero_genome_stays_put() {
    let tmp = TempDir::new().unwrap();
    let genome = zero_genome(tmp.path());
    let stdout = ok(&["replay", p(&genome), "--start", "0.5,0.5,0", "--out", p(tmp.path())]);
    assert!(stdout.contains("fitness 0.0"), "{stdout}");
    let trajectory = read(tmp.path().join("trajectory.csv"));
    let rows: Vec<Vec<&str>> = trajectory.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 400);
    assert!(rows.iter().all(|r| r[1..4] == rows[0][1..4] && r[6] == "0" && r[7] == "0"));
}

#[test]
fn replay_step_count_and_malformed_genome() {
    let tmp = TempDir::new().unwrap();
    let genome = zero_genome(tmp.path());
    ok(&["replay", p(&genome), "--steps", "10", "--seed", "2", "--out", p(tmp.path())]);
    assert_eq!(read(tmp.path().join("trajectory.csv")).lines().count(), 11);

    let short = tmp.path().join("short.json");
    fs::write(&short, read(&genome).replace("[0,", "[")).unwrap();
    fails_with(&["replay", p(&short)], 2);
    fails_with(&["replay", p(&genome), "--start", "0.5,0.5"], 2);
    fails_with(&["replay", p(&genome), "--start", "0.01,0.5,0", "--out", p(tmp.path())], 2);
}

#[test]
fn report_matches_sweep_and_rejects_bad_history() {
    let tmp = TempDir::new().unwrap();
    let sweep = tmp.path().join("sweep");
    ok(&[
        "sweep", "--fovs", "0,30", "--replicates", "2", "--generations", "3", "--population", "16", "--seed", "4",
        "--out", p(&sweep),
    ]);
    let report = tmp.path().join("report");
    ok(&["report", p(&sweep.join("history.csv")), "--out", p(&report)]);
    for file in ["summary.csv", "heatmap_best.csv", "heatmap_avg.csv"] {
        assert_eq!(read(sweep.join(file)), read(report.join(file)), "{file}");
    }

    let history = read(sweep.join("history.csv"));
    let mut lines: Vec<&str> = history.lines().collect();
    lines.remove(4);
    let missing = tmp.path().join("missing.csv");
    fs::write(&missing, lines.join("\n")).unwrap();
    fails_with(&["report", p(&missing), "--out", p(tmp.path())], 2);

    let header_only = tmp.path().join("header.csv");
    fs::write(&header_only, "fov_deg,replicate,generation,best_fitness,mean_fitness\n").unwrap();
    assert!(fails_with(&["report", p(&header_only), "--out", p(tmp.path())], 2).contains("row"));

    let garbled = tmp.path().join("garbled.csv");
    fs::write(&garbled, history.replacen(",0,0,", ",0,0,x", 1)).unwrap();
    assert!(fails_with(&["report", p(&garbled), "--out", p(tmp.path())], 2).contains("row 2"));
}
