use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use embound::dataset::{dataset_header, read_dataset, write_dataset};
use embound::forward::ForwardParams;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_embound")).current_dir(dir).env_remove("EMBOUND_SEED").args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().unwrap()
}

fn csv_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

/// Small labelled dataset plus a 3-epoch model in `dir`.
fn small_model(dir: &Path) {
    ok(dir, &["--seed", "1", "generate", "--out", "train.jsonl", "--n-poses", "30"]);
    ok(dir, &["--seed", "2", "generate", "--out", "test.jsonl", "--n-poses", "4"]);
    ok(dir, &["--seed", "1", "train", "--dataset", "train.jsonl", "--out-dir", "m", "--epochs", "3"]);
}

#[test]
fn generate_counts_and_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["--seed", "4", "generate", "--out", "a.jsonl", "--n-poses", "10"]);
    ok(d, &["--seed", "4", "generate", "--out", "b.jsonl", "--n-poses", "10"]);
    let (ha, ma) = read_dataset(&d.join("a.jsonl")).unwrap();
    assert_eq!(ma.len(), 10);
    assert_eq!(ha.seed, 4);
    assert_eq!(ha.params_hash, ForwardParams::phantom().hash());
    assert_eq!(fs::read(d.join("a.jsonl")).unwrap(), fs::read(d.join("b.jsonl")).unwrap());
    ok(d, &["--seed", "5", "generate", "--out", "c.jsonl", "--n-poses", "10"]);
    assert_ne!(fs::read(d.join("a.jsonl")).unwrap(), fs::read(d.join("c.jsonl")).unwrap());
}

#[test]
fn seed_precedence_flag_file_env() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("cfg.toml"), "seed = 21\n[generate]\nn_poses = 3\n").unwrap();
    let with_env = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_embound"))
            .current_dir(d)
            .env("EMBOUND_SEED", "33")
            .args(args)
            .output()
            .unwrap();
        assert!(out.status.success());
    };
    with_env(&["generate", "--out", "env.jsonl", "--n-poses", "2"]);
    with_env(&["--config", "cfg.toml", "generate", "--out", "file.jsonl"]);
    with_env(&["--config", "cfg.toml", "--seed", "7", "generate", "--out", "flag.jsonl"]);
    let seed = |f: &str| read_dataset(&d.join(f)).unwrap().0.seed;
    assert_eq!((seed("env.jsonl"), seed("file.jsonl"), seed("flag.jsonl")), (33, 21, 7));
    assert_eq!(read_dataset(&d.join("file.jsonl")).unwrap().1.len(), 3);
}

#[test]
fn train_outputs_modes_and_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["--seed", "1", "generate", "--out", "train.jsonl", "--n-poses", "30"]);
    let out = ok(
        d,
        &[
            "train",
            "--dataset",
            "train.jsonl",
            "--out-dir",
            "m",
            "--epochs",
            "2",
            "--mode",
            "complex",
            "--compare-dtype",
            "--grid",
            "widths=5,10,20 depths=2,4",
        ],
    );
    assert!(out.contains("complex: final train mse"), "{out}");
    assert!(out.contains("magnitude: final train mse"), "{out}");
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("m/model.json")).unwrap()).unwrap();
    assert_eq!(model["features"]["mode"], "complex");
    assert!(model["features"]["real"].is_object() && model["features"]["imag"].is_object());
    assert_eq!(model["mlp"]["layers"][0]["bias"].as_array().unwrap().len(), 20);
    assert!(d.join("m/model-magnitude.json").exists());
    assert_eq!(csv_rows(&d.join("m/loss.csv")).len(), 3);
    let svg = fs::read_to_string(d.join("m/loss.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
    let grid = csv_rows(&d.join("m/grid.csv"));
    assert_eq!(grid.len(), 7);
    assert_eq!(grid[0], "width,depth,params,train_mse,test_mse");
}

#[test]
fn grid_command() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["--seed", "1", "generate", "--out", "train.jsonl", "--n-poses", "20"]);
    ok(d, &["grid", "--dataset", "train.jsonl", "--out", "g.csv", "--widths", "4,8", "--depths", "2", "--epochs", "2"]);
    assert_eq!(csv_rows(&d.join("g.csv")).len(), 3);
}

#[test]
fn infer_labelled_and_unlabelled() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_model(d);
    ok(d, &["infer", "--checkpoint", "m/model.json", "--dataset", "test.jsonl", "--out-dir", "inf"]);
    let rows = csv_rows(&d.join("inf/predictions.csv"));
    assert_eq!(rows[0], "measurement,antenna,predicted_mm,label_mm,error_mm");
    assert_eq!(rows.len(), 1 + 4 * 16);
    let svg = fs::read_to_string(d.join("inf/overlay-0.svg")).unwrap();
    assert!(svg.contains(r#"<g id="truth">"#) && svg.contains(r#"<g id="antennas">"#));
    assert_eq!(csv_rows(&d.join("inf/boundary-3.csv"))[0], "x_mm,y_mm,source");

    let (_, mut data) = read_dataset(&d.join("test.jsonl")).unwrap();
    for m in &mut data {
        m.labels = None;
    }
    write_dataset(&d.join("unlabelled.jsonl"), &data, dataset_header(&ForwardParams::phantom(), "x", 0, 0)).unwrap();
    ok(d, &["infer", "--checkpoint", "m/model.json", "--dataset", "unlabelled.jsonl", "--out-dir", "inf2"]);
    let rows = csv_rows(&d.join("inf2/predictions.csv"));
    assert_eq!(rows[0], "measurement,antenna,predicted_mm");
    assert_eq!(rows.len(), 1 + 4 * 16);
    assert!(!fs::read_to_string(d.join("inf2/overlay-0.svg")).unwrap().contains(r#"id="truth""#));
    // Evaluation needs labels.
    assert_eq!(
        code(d, &["evaluate", "--checkpoint", "m/model.json", "--dataset", "unlabelled.jsonl", "--out", "r.csv"]),
        2
    );
}

#[test]
fn evaluate_report_and_robustness() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_model(d);
    let out = ok(
        d,
        &["evaluate", "--checkpoint", "m/model.json", "--dataset", "test.jsonl", "--out", "report.csv", "--no-matched"],
    );
    assert!(out.contains("4 cases"));
    let rows = csv_rows(&d.join("report.csv"));
    assert!(rows[0].contains("hu_nn") && rows[0].contains("hu_resh") && !rows[0].contains("_mf"));
    assert_eq!(rows.len(), 1 + 4 + 3);
    let footer: Vec<&str> = rows[5..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(footer, ["min", "max", "mean"]);
    assert!(fs::read_to_string(d.join("report.csv")).unwrap().starts_with("# embound "));

    ok(
        d,
        &["robustness", "--checkpoint", "m/model.json", "--dataset", "test.jsonl", "--out", "r1.csv", "--factor", "1"],
    );
    let rows = csv_rows(&d.join("r1.csv"));
    for r in &rows[1..] {
        assert_eq!(r.split(',').nth(4).unwrap().parse::<f64>().unwrap(), 0.0, "{r}");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(code(d, &["--help"]), 0);
    assert_eq!(code(d, &["generate"]), 1);
    assert_eq!(code(d, &["generate", "--out", "x.jsonl", "--bogus"]), 1);
    fs::write(d.join("bad.toml"), "[train]\nepoch = 3\n").unwrap();
    assert_eq!(code(d, &["--config", "bad.toml", "generate", "--out", "x.jsonl"]), 1);
    assert_eq!(code(d, &["generate", "--out", "x.jsonl", "--phantom", "teapot"]), 1);
    assert_eq!(code(d, &["train", "--dataset", "missing.jsonl", "--out-dir", "m"]), 2);

    ok(d, &["--seed", "1", "generate", "--out", "t.jsonl", "--n-poses", "20"]);
    let (h, data) = read_dataset(&d.join("t.jsonl")).unwrap();
    write_dataset(&d.join("empty.jsonl"), &data[..0], h).unwrap();
    ok(d, &["train", "--dataset", "t.jsonl", "--out-dir", "m", "--epochs", "1"]);
    assert_eq!(code(d, &["evaluate", "--checkpoint", "m/model.json", "--dataset", "empty.jsonl", "--out", "r.csv"]), 2);
    // A step size this large overflows the weights within the first epoch.
    assert_eq!(
        code(d, &["train", "--dataset", "t.jsonl", "--out-dir", "m2", "--epochs", "3", "--learning-rate", "1e300"]),
        3
    );
}
