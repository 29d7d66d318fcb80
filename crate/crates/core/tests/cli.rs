use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use forestcast::panel::{load_panel_path, write_panel_csv, Schema};
use forestcast::synthetic::SyntheticPanel;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_forestcast"));
    c.env_remove("FORESTCAST_OUT_DIR");
    c
}

fn write_panel(dir: &Path) -> String {
    let path = dir.join("panel.csv");
    let panel = SyntheticPanel::default().generate().unwrap();
    write_panel_csv(&panel, fs::File::create(&path).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn run(args: &[&str], out: &Path) -> i32 {
    let status = bin().args(args).arg("--out").arg(out).status().unwrap();
    status.code().unwrap()
}

#[test]
fn panel_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_panel(dir.path());
    let panel = load_panel_path(&path, &Schema::default()).unwrap();
    assert_eq!(panel, SyntheticPanel::default().generate().unwrap());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_panel(dir.path());
    let cases: [&[&str]; 6] = [
        &["stats", "--data", &data],
        &[
            "grid",
            "--data",
            &data,
            "--mode",
            "holdout",
            "--leaf-caps",
            "5,10",
            "--tree-counts",
            "20",
            "--mse-curve",
        ],
        &[
            "explain",
            "--data",
            &data,
            "--trees",
            "10",
            "--background",
            "80",
            "--rows",
        ],
        &["effects", "--data", &data, "--trees", "10", "--points", "12"],
        &["scatter", "--data", &data, "--trees", "20"],
        &[
            "tree-dump",
            "--data",
            &data,
            "--trees",
            "3",
            "--tree",
            "2",
            "--save-model",
        ],
    ];
    for args in cases {
        let a = dir.path().join(format!("{}_a", args[0]));
        let b = dir.path().join(format!("{}_b", args[0]));
        assert_eq!(run(args, &a), 0, "{args:?}");
        assert_eq!(run(args, &b), 0, "{args:?}");
        let (sa, sb) = (snapshot(&a), snapshot(&b));
        assert!(sa.contains_key("resolved_config.toml"), "{args:?}");
        assert!(sa.len() > 1);
        for (name, bytes) in &sa {
            if name == "resolved_config.toml" {
                continue; // records its own output dir
            }
            assert_eq!(Some(bytes), sb.get(name), "{name} differs for {args:?}");
        }
    }
}

#[test]
fn default_grid_has_24_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_panel(dir.path());
    let out = dir.path().join("g");
    // Small forests keep this quick; only the row structure is checked.
    let conf = dir.path().join("run.toml");
    fs::write(&conf, "tree_counts = [1, 2, 3, 4]\n").unwrap();
    let code = bin()
        .args(["--config", conf.to_str().unwrap(), "grid", "--data", &data])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .code();
    assert_eq!(code, Some(0));
    let text = fs::read_to_string(out.join("grid_insample.csv")).unwrap();
    assert_eq!(text.lines().count(), 25);
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_panel(dir.path());
    let conf = dir.path().join("run.toml");
    fs::write(
        &conf,
        format!("data = {data:?}\nseed = 5\nn_trees = 4\nleaf_cap = 30\n"),
    )
    .unwrap();
    let out = dir.path().join("o");
    let code = bin()
        .args(["tree-dump", "--config", conf.to_str().unwrap(), "--seed", "6"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .code();
    assert_eq!(code, Some(0));
    let resolved = fs::read_to_string(out.join("resolved_config.toml")).unwrap();
    assert!(resolved.contains("seed = 6"));
    assert!(resolved.contains("n_trees = 4"));
    assert!(resolved.contains("leaf_cap = 30"));
    assert!(resolved.contains("command = \"tree-dump\""));
}

#[test]
fn env_var_sets_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_panel(dir.path());
    let out = dir.path().join("from_env");
    let status = bin()
        .env("FORESTCAST_OUT_DIR", &out)
        .args(["stats", "--data", &data])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("stats.csv").is_file());
    assert!(out.join("resolved_config.toml").is_file());
}

#[test]
fn json_format() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_panel(dir.path());
    let out = dir.path().join("j");
    let code = run(
        &[
            "grid",
            "--data",
            &data,
            "--leaf-caps",
            "10",
            "--tree-counts",
            "5",
            "--format",
            "json",
        ],
        &out,
    );
    assert_eq!(code, 0);
    let text = fs::read_to_string(out.join("grid_insample.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_panel(dir.path());
    let out = dir.path().join("x");
    // configuration errors
    assert_eq!(run(&["stats", "--data", "/definitely/missing.csv"], &out), 2);
    assert_eq!(run(&["grid", "--data", &data, "--mode", "sideways"], &out), 2);
    assert_eq!(run(&["explain", "--data", &data, "--periods", "2019-1988"], &out), 2);
    assert_eq!(
        run(&["effects", "--data", &data, "--curve", "no_such_feature"], &out),
        2
    );
    assert_eq!(
        run(&["tree-dump", "--data", &data, "--trees", "2", "--tree", "5"], &out),
        2
    );
    let bad_conf = dir.path().join("bad.toml");
    fs::write(&bad_conf, "leaf_cap = \"ten\"\n").unwrap();
    assert_eq!(
        run(
            &["stats", "--config", bad_conf.to_str().unwrap(), "--data", &data],
            &out
        ),
        2
    );
    assert_eq!(bin().arg("frobnicate").status().unwrap().code(), Some(2));

    // data errors
    let dup = dir.path().join("dup.csv");
    let mut text = fs::read_to_string(&data).unwrap();
    let second = text.lines().nth(1).unwrap().to_string();
    text.push_str(&second);
    text.push('\n');
    fs::write(&dup, text).unwrap();
    assert_eq!(run(&["stats", "--data", dup.to_str().unwrap()], &out), 3);
    let cell = dir.path().join("cell.csv");
    let text = fs::read_to_string(&data)
        .unwrap()
        .replacen("\n", "\nUSA,1900,abc,1,1,1,1,1,1,1,1,1\n", 1);
    fs::write(&cell, text).unwrap();
    assert_eq!(run(&["stats", "--data", cell.to_str().unwrap()], &out), 3);
    assert_eq!(
        run(
            &[
                "scatter",
                "--data",
                &data,
                "--trees",
                "5",
                "--train-end",
                "1950",
                "--target-year",
                "1951"
            ],
            &out
        ),
        3
    );
}
