use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn barn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_barn")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn generate(out: &Path, seed: &str, fill: &str) -> Output {
    barn(&["generate", "--seed", seed, "--fill", fill, "--iters", "3", "--out", out.to_str().unwrap()])
}

/// First seed whose world is accepted; the JSON path of its environment file.
fn accepted_env(out: &Path) -> std::path::PathBuf {
    for seed in 0..50 {
        let o = generate(out, &seed.to_string(), "0.2");
        if code(&o) == 0 {
            let files: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
            return out.join(files["env_json"].as_str().unwrap());
        }
        assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    }
    panic!("no accepted world in 50 seeds");
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(code(&barn(&[])), 1);
    assert_eq!(code(&barn(&["generate", "--seed", "x"])), 1);
    assert_eq!(code(&barn(&["frobnicate"])), 1);
    assert_eq!(code(&barn(&["--help"])), 0);
}

#[test]
fn generate_writes_requested_formats() {
    let dir = tempfile::tempdir().unwrap();
    let env = accepted_env(dir.path());
    assert!(env.exists());
    let id_dir = env.parent().unwrap();
    let names: Vec<String> = fs::read_dir(id_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().any(|n| n.ends_with(".pgm")), "{names:?}");
    assert!(names.iter().any(|n| n.ends_with(".txt")), "{names:?}");

    let only_json = tempfile::tempdir().unwrap();
    let seed = env.file_stem().unwrap().to_str().unwrap().trim_start_matches("env_s").to_string();
    let o = barn(&["generate", "--seed", &seed, "--fill", "0.2", "--iters", "3", "--formats", "json", "--out", only_json.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let files: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(files.as_object().unwrap().keys().collect::<Vec<_>>(), ["env_json"]);
    assert_eq!(fs::read(only_json.path().join(files["env_json"].as_str().unwrap())).unwrap(), fs::read(&env).unwrap());
}

#[test]
fn rejected_worlds_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = generate(dir.path(), "4", "0.0");
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no obstacle"));
}

#[test]
fn bad_format_and_missing_file_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = barn(&["generate", "--seed", "1", "--fill", "0.2", "--iters", "3", "--formats", "png", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&barn(&["metrics", "--env", dir.path().join("nope.json").to_str().unwrap()])), 1);
}

#[test]
fn metrics_and_simulate_on_a_generated_world() {
    let dir = tempfile::tempdir().unwrap();
    let env = accepted_env(dir.path());
    let env = env.to_str().unwrap();
    // A single generated world carries reference statistics, not dataset ones.
    assert_eq!(code(&barn(&["metrics", "--env", env])), 1);
    let o = barn(&["metrics", "--env", env, "--stats", "table2"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let file: serde_json::Value = serde_json::from_str(&fs::read_to_string(env).unwrap()).unwrap();
    assert_eq!(report["raw"], file["metrics"]["raw"]);

    let o = barn(&["simulate", "--env", env, "--trials", "2", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "env_id,trial,seed,success,time_s,path_m,norm_s_per_m");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains(",7,") && lines[2].contains(",8,"));
    assert_eq!(stdout(&barn(&["simulate", "--env", env, "--trials", "2", "--seed", "7"])), csv);
}

#[test]
fn dataset_train_predict_rank_flow() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    let o = barn(&["dataset", "--seed", "3", "--no-benchmark", "--formats", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = out.join("manifest.json");
    assert_eq!(stdout(&o).trim(), manifest.to_str().unwrap());
    assert!(!out.join("trials.csv").exists());
    let m = manifest.to_str().unwrap();
    let model = dir.path().join("model.txt");
    let model_s = model.to_str().unwrap();

    // Unlabeled manifests can be neither trained on nor ranked by label.
    assert_eq!(code(&barn(&["train", "--manifest", m, "--out", model_s, "--epochs", "5"])), 1);
    assert_eq!(code(&barn(&["rank", "--manifest", m, "--key", "benchmarked"])), 1);

    // Label every row with a synthetic difficulty rising with its first feature.
    let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    for row in value["rows"].as_array_mut().unwrap() {
        let f0 = row["normalized"][0].as_f64().unwrap();
        row["benchmark"] = serde_json::json!({ "mean": 4.0 + f0, "variance": 0.0 });
    }
    fs::write(&manifest, serde_json::to_string_pretty(&value).unwrap()).unwrap();

    let o = barn(&["train", "--manifest", m, "--out", model_s, "--epochs", "300", "--lr", "0.01", "--batch-size", "32"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["train_examples"], 240);
    assert_eq!(report["test_examples"], 60);
    assert!(report["test_spearman"].as_f64().unwrap() > 0.9, "{report}");
    assert!(model.exists() && dir.path().join("model.txt.json").exists());

    let ranked = stdout(&barn(&["rank", "--manifest", m, "--key", "predicted"]));
    assert_eq!(ranked.lines().count(), 300);
    assert_eq!(code(&barn(&["rank", "--manifest", m, "--key", "vibes"])), 1);

    let env = out.join("envs/env_000/env_000.json");
    let o = barn(&["predict", "--model", model_s, "--env", env.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let predicted: f64 = stdout(&o).trim().parse().unwrap();
    let updated: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    let stored = updated["rows"][0]["predicted"].as_f64().unwrap();
    assert!((predicted - stored).abs() < 1e-9, "{predicted} vs {stored}");
}

#[test]
fn divergent_training_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    assert_eq!(code(&barn(&["dataset", "--seed", "5", "--no-benchmark", "--formats", "json", "--out", out.to_str().unwrap()])), 0);
    let manifest = out.join("manifest.json");
    let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    for row in value["rows"].as_array_mut().unwrap() {
        row["benchmark"] = serde_json::json!({ "mean": 1e6, "variance": 0.0 });
    }
    fs::write(&manifest, value.to_string()).unwrap();
    let o = barn(&[
        "train", "--manifest", manifest.to_str().unwrap(), "--out", dir.path().join("m.txt").to_str().unwrap(), "--lr", "10", "--epochs", "200",
    ]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}
