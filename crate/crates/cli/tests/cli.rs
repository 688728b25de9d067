use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn svp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svp")).args(args).output().expect("svp runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_manifest(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    let text = format!("csv = \"profile.csv\"\ntruth = \"truth.jsonl\"\ndump = \"memory.bin\"\n{body}");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn rows(csv_text: &str) -> Vec<Vec<String>> {
    csv_text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn truths(dir: &Path) -> Vec<Value> {
    std::fs::read_to_string(dir.join("truth.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn simulate_speed_sweep_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        "[sweep]\nsound_speeds = [1425.0, 1500.0, 1575.0]\nattenuations = [1.0]\n",
    );
    let o = svp(&["simulate", &m]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(csv.starts_with(
        "seq,time_s,sound_speed_m_s,attenuation_np_m,u_near_mv,u_far_mv,temperature_c,pressure_kpa,flags,\
         sound_speed_range,temperature_range,pressure_range,invalid,threshold_adapted\n"
    ));
    let rows = rows(&csv);
    let truth = truths(dir.path());
    assert_eq!(rows.len(), 3);
    assert_eq!(truth.len(), 3);
    for (row, t) in rows.iter().zip(&truth) {
        assert_eq!(row[0], t["seq"].to_string());
        let c: f64 = row[2].parse().unwrap();
        let alpha: f64 = row[3].parse().unwrap();
        assert!((c - t["sound_speed"].as_f64().unwrap()).abs() <= 0.02, "{row:?}");
        assert!((alpha - 1.0).abs() <= 0.02, "{row:?}");
    }
}

#[test]
fn zero_attenuation_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        "records_per_point = 2\n[sweep]\ntemperatures = [2.0, 15.0, 30.0]\nattenuations = [0.0]\n",
    );
    assert_eq!(code(&svp(&["simulate", &m])), 0);
    let rows = rows(&std::fs::read_to_string(dir.path().join("profile.csv")).unwrap());
    assert_eq!(rows.len(), 6);
    for row in &rows {
        let alpha: f64 = row[3].parse().unwrap();
        assert!(alpha.abs() <= 0.02, "{row:?}");
    }
    assert_eq!(rows[5][6], "30");
}

#[test]
fn bad_manifests_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), "records_per_point = 0\n");
    let o = svp(&["simulate", &m]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("records_per_point"));
    let m = write_manifest(dir.path(), "[sweep]\nsound_speeds = [1500.0]\ncolour = 3\n");
    assert_eq!(code(&svp(&["simulate", &m])), 1);
    assert_eq!(code(&svp(&["simulate", "/nonexistent/run.toml"])), 1);
    assert_eq!(code(&svp(&["frobnicate"])), 1);
    assert_eq!(code(&svp(&[])), 1);
    assert_eq!(code(&svp(&["--help"])), 0);
}

#[test]
fn simulate_is_deterministic() {
    let body = "records_per_point = 3\n[scenario]\nnoise_rms = 0.8\nseed = 11\n[sweep]\nsound_speeds = [1450.0, 1550.0]\nattenuations = [0.5, 2.0]\n";
    let outputs: Vec<Vec<Vec<u8>>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let m = write_manifest(dir.path(), body);
            assert_eq!(code(&svp(&["simulate", &m])), 0);
            ["profile.csv", "truth.jsonl", "memory.bin"]
                .iter()
                .map(|f| std::fs::read(dir.path().join(f)).unwrap())
                .collect()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn decode_of_dump_reproduces_simulate_csv() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        "records_per_point = 4\n[scenario]\nnoise_rms = 0.5\n[sweep]\nsound_speeds = [1480.0, 1520.0]\nattenuations = [0.0, 3.0]\n",
    );
    assert_eq!(code(&svp(&["simulate", &m])), 0);
    let dump = dir.path().join("memory.bin");
    let decoded = dir.path().join("decoded.csv");
    let o = svp(&["decode", dump.to_str().unwrap(), "-o", decoded.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        std::fs::read(dir.path().join("profile.csv")).unwrap(),
        std::fs::read(&decoded).unwrap()
    );
    // stdout variant
    let o = svp(&["decode", dump.to_str().unwrap()]);
    assert_eq!(o.stdout, std::fs::read(&decoded).unwrap());
}

#[test]
fn truncated_dump_gives_partial_table_and_warning() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), "records_per_point = 5\n");
    assert_eq!(code(&svp(&["simulate", &m])), 0);
    let mut dump = std::fs::read(dir.path().join("memory.bin")).unwrap();
    dump.truncate(dump.len() - 30);
    let cut = dir.path().join("cut.bin");
    std::fs::write(&cut, &dump).unwrap();
    let o = svp(&["decode", cut.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert_eq!(rows(&String::from_utf8(o.stdout).unwrap()).len(), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn formatted_memory_dump_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.bin");
    std::fs::write(&empty, b"").unwrap();
    let o = svp(&["decode", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1);
    assert_eq!(code(&svp(&["decode", "/nonexistent.bin"])), 2);
}

#[test]
fn calibrate_report() {
    let o = svp(&["calibrate", "-t", "0,10,20,30"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows = rows(&text);
    assert_eq!(rows.len(), 4);
    let expected = [1402.388, 1447.27031464, 1482.34330848, 1509.12729752];
    for (row, reference) in rows.iter().zip(expected) {
        let r: f64 = row[1].parse().unwrap();
        assert!((r - reference).abs() < 1e-5, "{row:?}");
        let residual: f64 = row[3].parse().unwrap();
        assert!(residual.abs() <= 0.02);
        assert_eq!(row[4], "1");
    }
}

#[test]
fn calibrate_errors() {
    assert_eq!(code(&svp(&["calibrate", "-t", "-10"])), 1);
    assert_eq!(code(&svp(&["calibrate", "-t", "warm"])), 1);
    // heavy noise pushes the residual past the budget
    let o = svp(&["calibrate", "-t", "20", "--noise-rms", "8", "--seed", "3"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn protocol_send_exchange() {
    let o = svp(&["protocol-send", "set-mode=memory", "status", "raw=A5 07 00 00 0C 48"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("> A5 01 01 00 02 06 E5\n< A5 80 01 00 01 E9 7E\n"), "{text}");
    assert!(text.contains("no reply"), "{text}");
    assert_eq!(code(&svp(&["protocol-send", "launch"])), 1);
    assert_eq!(code(&svp(&["protocol-send", "raw=A5G"])), 2);
}
