use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn rltrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rltrack")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = rltrack(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = rltrack(args);
    assert!(!out.status.success(), "{args:?} should fail");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: "), "unstructured error: {err}");
    err
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn desk_phantom(tmp: &TempDir) -> PathBuf {
    let dir = tmp.path().join("phantom");
    ok(&["phantom", "--out", s(&dir)]);
    dir
}

const SMALL_RUN: &str = r#"
algorithm = "sac_auto"

[hyperparams]
hidden = [64, 64]
batch_size = 64
learning_starts = 256
update_every = 2

[train]
episodes = 10
n_seeds = 64
checkpoint_every = 5
"#;

fn write_config(tmp: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = tmp.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn scores(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("scores.json")).unwrap()).unwrap()
}

#[test]
fn phantom_train_track_score_end_to_end() {
    let tmp = TempDir::new().unwrap();
    let ph = desk_phantom(&tmp);
    let cfg = write_config(&tmp, "run.toml", SMALL_RUN);
    let run = tmp.path().join("run");
    ok(&["train", "--config", s(&cfg), "--seed", "3", "--out", s(&run)]);
    for f in ["config.toml", "progress.csv", "agent.ckpt", "checkpoints/episode_000005.ckpt", "checkpoints/episode_000010.ckpt"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let progress = fs::read_to_string(run.join("progress.csv")).unwrap();
    let lines: Vec<&str> = progress.lines().collect();
    assert_eq!(lines[0], "# seed=3 algorithm=sac_auto");
    assert_eq!(lines[1], "episode,asr,actor_loss,critic_loss,transitions,wall_time");
    let episodes: Vec<usize> = lines[2..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(episodes, (1..=10).collect::<Vec<_>>());
    let resolved = fs::read_to_string(run.join("config.toml")).unwrap();
    assert!(resolved.contains("seed = 3"));

    let tracked = tmp.path().join("tracked");
    let ck = run.join("agent.ckpt");
    ok(&["track", "--checkpoint", s(&ck), "--phantom", s(&ph), "--npv", "2", "--out", s(&tracked)]);
    assert!(tracked.join("tractogram.s1").is_file());
    let term = fs::read_to_string(tracked.join("termination.csv")).unwrap();
    assert!(term.starts_with("reason,count\n"));

    let scored = tmp.path().join("scored");
    let t = tracked.join("tractogram.s1");
    let out = rltrack(&["score", "--tractogram", s(&t), "--phantom", s(&ph), "--out", s(&scored)]);
    // A ten-episode agent may not produce a streamline long enough to keep.
    if out.status.success() {
        let r = scores(&scored);
        let vc = r["vc_rate"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&vc));
        assert!(scored.join("scores.csv").is_file());
    } else {
        assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
    }
}

#[test]
fn centerlines_score_perfectly() {
    let tmp = TempDir::new().unwrap();
    let ph = desk_phantom(&tmp);
    let out = tmp.path().join("scores");
    let c = ph.join("centerlines.s1");
    ok(&["score", "--tractogram", s(&c), "--phantom", s(&ph), "--out", s(&out)]);
    let r = scores(&out);
    assert_eq!(r["vc_rate"].as_f64(), Some(1.0));
    assert_eq!(r["vb"].as_u64(), Some(3));
    let csv = fs::read_to_string(out.join("scores.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn baseline_tracks_the_desk_phantom() {
    let tmp = TempDir::new().unwrap();
    let ph = desk_phantom(&tmp);
    let out = tmp.path().join("baseline");
    ok(&["baseline", "--phantom", s(&ph), "--npv", "2", "--out", s(&out)]);
    let r = scores(&out);
    assert!(r["vc_rate"].as_f64().unwrap() >= 0.9);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("baseline.json")).unwrap()).unwrap();
    assert!(summary["asr"].as_f64().unwrap() > 10.0);
}

#[test]
fn invalid_inputs_fail_with_messages() {
    let tmp = TempDir::new().unwrap();
    let ph = desk_phantom(&tmp);
    let cfg = write_config(&tmp, "run.toml", SMALL_RUN);
    let run = tmp.path().join("run");
    ok(&["train", "--config", s(&cfg), "--out", s(&run)]);
    let ck = run.join("agent.ckpt");
    let out = tmp.path().join("x");

    let err = fails(&["track", "--checkpoint", s(&ck), "--phantom", s(&ph), "--npv", "0", "--out", s(&out)]);
    assert!(err.contains("npv"));
    let missing = tmp.path().join("nope");
    let err = fails(&["track", "--checkpoint", s(&ck), "--phantom", s(&missing), "--out", s(&out)]);
    assert!(err.contains("does not exist"));
    fails(&["track", "--checkpoint", s(&missing), "--phantom", s(&ph), "--out", s(&out)]);

    let bad = write_config(&tmp, "bad.toml", "[tracking]\nstep = 0.5\n");
    let err = fails(&["train", "--config", s(&bad), "--out", s(&out)]);
    assert!(err.contains("invalid config"));
    let bad = write_config(&tmp, "bad_hp.toml", "[hyperparams]\nlearning_rate = 0.1\n");
    fails(&["train", "--config", s(&bad), "--out", s(&out)]);
    let bad = write_config(&tmp, "bad_npd.toml", "[tracking]\nn_prev_dirs = 3\n");
    fails(&["train", "--config", s(&bad), "--out", s(&out)]);
    fails(&["train", "--config", s(&cfg)]);

    let mut bytes = fs::read(&ck).unwrap();
    bytes.truncate(bytes.len() / 2);
    let broken = tmp.path().join("broken.ckpt");
    fs::write(&broken, bytes).unwrap();
    fails(&["track", "--checkpoint", s(&broken), "--phantom", s(&ph), "--out", s(&out)]);
}

#[test]
fn track_rescales_the_step_by_voxel_size() {
    let tmp = TempDir::new().unwrap();
    let desk = desk_phantom(&tmp);
    let spec = fs::read_to_string(desk.join("phantom.toml")).unwrap();
    let fine = spec.replace("dims = [24, 24, 3]", "dims = [48, 48, 5]").replace("voxel_size = 3.0", "voxel_size = 1.5");
    assert_ne!(fine, spec);
    let spec_path = write_config(&tmp, "fine.toml", &fine);
    let fine_dir = tmp.path().join("fine");
    ok(&["phantom", "--config", s(&spec_path), "--out", s(&fine_dir)]);

    let cfg = write_config(&tmp, "run.toml", SMALL_RUN);
    let run = tmp.path().join("run");
    ok(&["train", "--config", s(&cfg), "--out", s(&run)]);
    let ck = run.join("agent.ckpt");
    let out = tmp.path().join("tracked");
    ok(&["track", "--checkpoint", s(&ck), "--phantom", s(&fine_dir), "--npv", "1", "--out", s(&out)]);
    let record: toml::Table = toml::from_str(&fs::read_to_string(out.join("config.toml")).unwrap()).unwrap();
    assert_eq!(record["tracking"]["step_size"].as_float(), Some(0.375));
    assert_eq!(record["training_voxel_size"].as_float(), Some(3.0));

    let out2 = tmp.path().join("tracked2");
    ok(&["track", "--checkpoint", s(&ck), "--phantom", s(&fine_dir), "--npv", "1", "--step", "0.5", "--out", s(&out2)]);
    let record: toml::Table = toml::from_str(&fs::read_to_string(out2.join("config.toml")).unwrap()).unwrap();
    assert_eq!(record["tracking"]["step_size"].as_float(), Some(0.5));
}

#[test]
fn sweep_ranks_every_cell() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "run.toml",
        &format!("{}\n[evaluation]\nseeds_per_voxel = 1\n", SMALL_RUN.replace("episodes = 10", "episodes = 3")),
    );
    let grid = write_config(&tmp, "grid.toml", "[[axes]]\nname = \"gamma\"\nvalues = [0.5, 0.9]\n");
    let out = tmp.path().join("sweep");
    ok(&["sweep", "--config", s(&cfg), "--grid", s(&grid), "--out", s(&out)]);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[1], "cell,gamma,vc_rate,ol");
    assert_eq!(lines.len(), 4);
    assert!(out.join("best.toml").is_file());
    assert!(out.join("cell_000/agent.ckpt").is_file() && out.join("cell_001/agent.ckpt").is_file());
    let bad = write_config(&tmp, "bad_grid.toml", "[[axes]]\nname = \"nope\"\nvalues = [1.0]\n");
    fails(&["sweep", "--config", s(&cfg), "--grid", s(&bad), "--out", s(&out)]);
}

fn without_wall_time(progress: &str) -> String {
    progress.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head)).collect::<Vec<_>>().join("\n")
}

#[test]
fn artifacts_are_identical_across_worker_counts() {
    let tmp = TempDir::new().unwrap();
    let ph = desk_phantom(&tmp);
    let cfg = write_config(&tmp, "run.toml", SMALL_RUN);
    let mut dirs = Vec::new();
    for workers in ["1", "3"] {
        let run = tmp.path().join(format!("run{workers}"));
        let tracked = tmp.path().join(format!("tracked{workers}"));
        ok(&["--workers", workers, "train", "--config", s(&cfg), "--seed", "11", "--out", s(&run)]);
        let ck = run.join("agent.ckpt");
        ok(&["--workers", workers, "track", "--checkpoint", s(&ck), "--phantom", s(&ph), "--npv", "3", "--seed", "5", "--out", s(&tracked)]);
        let base = tmp.path().join(format!("baseline{workers}"));
        ok(&["--workers", workers, "baseline", "--phantom", s(&ph), "--npv", "2", "--out", s(&base)]);
        dirs.push((run, tracked, base));
    }
    let read = |p: PathBuf| fs::read(p).unwrap();
    let (a, b) = (&dirs[0], &dirs[1]);
    for f in ["agent.ckpt", "checkpoints/episode_000005.ckpt"] {
        assert_eq!(read(a.0.join(f)), read(b.0.join(f)), "{f}");
    }
    let progress = |d: &PathBuf| without_wall_time(&fs::read_to_string(d.join("progress.csv")).unwrap());
    assert_eq!(progress(&a.0), progress(&b.0));
    for f in ["tractogram.s1", "termination.csv"] {
        assert_eq!(read(a.1.join(f)), read(b.1.join(f)), "{f}");
        assert_eq!(read(a.2.join(f)), read(b.2.join(f)), "{f}");
    }
    for f in ["scores.json", "scores.csv", "baseline.json"] {
        assert_eq!(read(a.2.join(f)), read(b.2.join(f)), "{f}");
    }
}
