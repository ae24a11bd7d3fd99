//! End-to-end tests of the `manex` binary: the synth -> validate ->
//! extract -> analyze -> evaluate round trip, output formats and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn manex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn synth_batch(dir: &Path, count: usize, extra: &[&str]) {
    let out_dir = dir.to_str().unwrap();
    let count_s = count.to_string();
    let mut args = vec!["synth", "--recipe", "mixed", "--count", &count_s, "--out-dir", out_dir];
    args.extend_from_slice(extra);
    let output = manex(&args);
    assert!(output.status.success(), "{output:?}");
}

#[test]
fn synth_validate_extract_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    synth_batch(&scenes, 7, &[]);

    let scene_files: Vec<_> = fs::read_dir(&scenes)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".json"))
        .collect();
    assert_eq!(scene_files.len(), 7);
    let manifest = fs::read_to_string(scenes.join("labels.csv")).unwrap();
    assert!(manifest.starts_with("scene_id,agent_id,recipe,turn,lane_change\n"));
    assert_eq!(manifest.lines().count(), 8);

    let validate = manex(&["validate", scenes.to_str().unwrap()]);
    assert_eq!(validate.status.code(), Some(0), "{validate:?}");
    assert!(stdout(&validate).contains("7 of 7 scene files valid"));

    let extract = manex(&["extract", scenes.to_str().unwrap()]);
    assert_eq!(extract.status.code(), Some(0));
    let table = stdout(&extract);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "scene_id,agent_id,status,turn,lane_change,confidence,lane_sequence"
    );
    assert_eq!(lines.len(), 8);
    assert!(lines[1..].iter().all(|l| l.contains(",ok,")));

    // The manifest labels and the extracted labels agree.
    for manifest_line in manifest.lines().skip(1) {
        let fields: Vec<&str> = manifest_line.split(',').collect();
        let (scene_id, turn, lane_change) = (fields[0], fields[3], fields[4]);
        let row = lines[1..]
            .iter()
            .find(|l| l.starts_with(scene_id))
            .unwrap_or_else(|| panic!("no extract row for {scene_id}"));
        assert!(row.contains(turn), "{row} vs {turn}");
        assert!(row.contains(lane_change), "{row} vs {lane_change}");
    }
}

#[test]
fn extract_output_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    synth_batch(&scenes, 20, &["--noise", "0.1", "--seed", "5"]);

    let out1 = dir.path().join("w1.csv");
    let out2 = dir.path().join("w8.csv");
    for (workers, out) in [("1", &out1), ("8", &out2)] {
        let output = manex(&[
            "extract",
            scenes.to_str().unwrap(),
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn extract_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    synth_batch(&scenes, 2, &[]);
    let output = manex(&["extract", scenes.to_str().unwrap(), "--format", "json"]);
    assert!(output.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert_eq!(rows[0]["status"], "extracted");
}

#[test]
fn analyze_reports_and_svg_charts() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    synth_batch(&scenes, 14, &[]);

    let svg_dir = dir.path().join("charts");
    let output = manex(&[
        "analyze",
        scenes.to_str().unwrap(),
        "--svg",
        svg_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let csv = stdout(&output);
    assert!(csv.starts_with("section,group,count,share\n"));
    assert!(csv.contains("velocity,\"[8, 12)\""));
    assert!(csv.contains("turn,Going straight,"));
    assert!(csv.contains("outcome,ok,14,1.000000"));
    for chart in ["velocity", "acceleration", "curvature", "turn", "lane_change"] {
        let path = svg_dir.join(format!("{chart}.svg"));
        let content = fs::read_to_string(&path).unwrap();
        assert!(content.starts_with("<svg"), "{}", path.display());
    }

    let json_out = manex(&[
        "analyze",
        scenes.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let analysis: serde_json::Value = serde_json::from_str(&stdout(&json_out)).unwrap();
    assert_eq!(analysis["agents"], 14);
    assert_eq!(analysis["scenes"], 14);
    assert_eq!(analysis["velocity"]["edges"][1], 4.0);
}

#[test]
fn analyze_respects_custom_bins() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    synth_batch(&scenes, 3, &[]);
    let output = manex(&[
        "analyze",
        scenes.to_str().unwrap(),
        "--bins-velocity",
        "0,50",
    ]);
    assert!(output.status.success());
    let csv = stdout(&output);
    assert!(csv.contains("velocity,\"[0, 50]\",3,1.000000"), "{csv}");
}

#[test]
fn evaluate_writes_one_table_per_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    synth_batch(&scenes, 7, &["--with-predictions"]);

    let tables = dir.path().join("tables");
    let predictions = scenes.join("predictions.json");
    let output = manex(&[
        "evaluate",
        scenes.to_str().unwrap(),
        "--predictions",
        predictions.to_str().unwrap(),
        "--out",
        tables.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    for dimension in ["velocity", "acceleration", "curvature", "turn", "lane_change"] {
        let path = tables.join(format!("evaluate_{dimension}.csv"));
        let content = fs::read_to_string(&path).unwrap();
        assert!(content.starts_with("group,n,min_ade_mean,min_ade_std,min_fde_mean,min_fde_std\n"));
    }

    // Stdout mode prints one titled section per dimension.
    let output = manex(&[
        "evaluate",
        scenes.to_str().unwrap(),
        "--predictions",
        predictions.to_str().unwrap(),
    ]);
    let text = stdout(&output);
    assert!(text.contains("# Average velocity (m/s)"));
    assert!(text.contains("# Lane change maneuver"));
}

#[test]
fn usage_and_config_errors_exit_1() {
    let unknown_flag = manex(&["extract", "--definitely-not-a-flag"]);
    assert_eq!(unknown_flag.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    synth_batch(&scenes, 1, &[]);
    let bad_threshold = manex(&["extract", scenes.to_str().unwrap(), "--p-th", "1.5"]);
    assert_eq!(bad_threshold.status.code(), Some(1));

    let bad_bins = manex(&["analyze", scenes.to_str().unwrap(), "--bins-velocity", "5,4"]);
    assert_eq!(bad_bins.status.code(), Some(1));

    let bad_recipe = manex(&[
        "synth",
        "--recipe",
        "wheelie",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(bad_recipe.status.code(), Some(1));
}

#[test]
fn input_validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    synth_batch(&scenes, 2, &[]);
    fs::write(scenes.join("broken.json"), "{ not json").unwrap();

    let validate = manex(&["validate", scenes.to_str().unwrap()]);
    assert_eq!(validate.status.code(), Some(2));
    assert!(stdout(&validate).contains("2 of 3 scene files valid"));

    let extract = manex(&["extract", scenes.to_str().unwrap()]);
    assert_eq!(extract.status.code(), Some(2));

    let missing = manex(&["extract", "/no/such/dir"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn evaluate_unresolved_prediction_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    synth_batch(&scenes, 1, &["--with-predictions"]);

    let predictions = scenes.join("predictions.json");
    let mut file: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&predictions).unwrap()).unwrap();
    file["predictions"][0]["scene_id"] = "phantom".into();
    fs::write(&predictions, serde_json::to_string(&file).unwrap()).unwrap();

    let output = manex(&[
        "evaluate",
        scenes.to_str().unwrap(),
        "--predictions",
        predictions.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr.clone()).unwrap();
    assert!(stderr.contains("phantom"), "{stderr}");
}

#[test]
fn off_map_agents_produce_diagnostic_rows_not_failures() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    synth_batch(&scenes, 1, &[]);

    // Push the agent far off the map.
    let path = fs::read_dir(&scenes)
        .unwrap()
        .filter_map(|e| e.ok())
        .find(|e| e.file_name().to_string_lossy().starts_with("straight"))
        .unwrap()
        .path();
    let mut scene: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    for p in scene["agents"][0]["positions"].as_array_mut().unwrap() {
        p[1] = serde_json::json!(p[1].as_f64().unwrap() + 500.0);
    }
    fs::write(&path, serde_json::to_string(&scene).unwrap()).unwrap();

    let extract = manex(&["extract", scenes.to_str().unwrap()]);
    assert_eq!(extract.status.code(), Some(0));
    let table = stdout(&extract);
    assert!(table.contains(",no_root_assignment,"), "{table}");
}
