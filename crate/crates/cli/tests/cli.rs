use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use herbar_core::imaging::{occlude, to_grayscale, ColorImage, Image, Side};
use serde_json::Value;

fn herbar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_herbar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = herbar(args);
    assert!(
        out.status.success(),
        "herbar {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Renders `count` fixtures and builds their database.
fn setup(count: usize, low_texture: bool) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let count = count.to_string();
    let mut args = vec!["fixtures", s(&root), "--count", &count];
    if low_texture {
        args.push("--low-texture");
    }
    ok(&args);
    let db = root.join("db.hrb");
    ok(&["build-db", s(&root.join("manifest.json")), "--out", s(&db), "--min-keypoints", "1"]);
    (dir, root)
}

#[test]
fn build_db_lists_targets_with_stars() {
    let (_dir, root) = setup(3, false);
    let out = ok(&["build-db", s(&root.join("manifest.json")), "--out", s(&root.join("again.hrb"))]);
    let table = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].contains("Lingzhi") && rows[0].contains('*'));
    assert_eq!(fs::read(root.join("again.hrb")).unwrap(), fs::read(root.join("db.hrb")).unwrap());
}

#[test]
fn build_db_failure_leaves_no_file() {
    let (_dir, root) = setup(2, false);
    let manifest = root.join("bad.json");
    fs::write(
        &manifest,
        r#"[{"name":"Lingzhi","image_path":"images/lingzhi.png","content_id":"lingzhi"},
            {"name":"Ghost","image_path":"images/missing.png","content_id":"ghost"}]"#,
    )
    .unwrap();
    let out_path = root.join("bad.hrb");
    let out = herbar(&["build-db", s(&manifest), "--out", s(&out_path)]);
    assert!(!out.status.success());
    assert!(!out_path.exists());
    assert!(fs::read_dir(&root).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().contains("tmp")));

    Image::filled(200, 200, 128).save_png(root.join("blank.png")).unwrap();
    fs::write(&manifest, r#"[{"name":"Blank sheet","image_path":"blank.png","content_id":"x"}]"#).unwrap();
    let out = herbar(&["build-db", s(&manifest), "--out", s(&out_path)]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("Blank sheet") && err.contains("only 0 keypoints"), "{err}");
    assert!(!out_path.exists());
}

#[test]
fn recognize_json_reports_target_and_entry() {
    let (_dir, root) = setup(3, false);
    let (frame, db, catalog) = (root.join("images/baijitian.png"), root.join("db.hrb"), root.join("catalog.json"));
    let args = ["recognize", s(&frame), "--db", s(&db), "--catalog", s(&catalog), "--json"];
    let first = ok(&args).stdout;
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["detection"]["target_id"], 3);
    assert!(v["detection"]["confidence"].as_f64().unwrap() >= 0.9);
    assert_eq!(v["entry"]["content_id"], "baijitian");
    assert_eq!(ok(&args).stdout, first);

    Image::filled(320, 320, 250).save_png(root.join("plain.png")).unwrap();
    let out = ok(&["recognize", s(&root.join("plain.png")), "--db", s(&root.join("db.hrb")), "--json"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v, serde_json::json!({"detection": null}));
}

#[test]
fn overlay_changes_only_line_pixels() {
    let (_dir, root) = setup(2, false);
    let frame = root.join("images/lingzhi.png");
    let out_png = root.join("overlay.png");
    let (db, model) = (root.join("db.hrb"), root.join("models/lingzhi.json"));
    let args = ["overlay", s(&frame), "--db", s(&db), "--model", s(&model), "--out", s(&out_png), "--color", "00ff00"];
    ok(&args);
    let before = ColorImage::load_png(&frame).unwrap();
    let after = ColorImage::load_png(&out_png).unwrap();
    let mut changed = 0;
    for y in 0..before.height() {
        for x in 0..before.width() {
            if before.get(x, y) != after.get(x, y) {
                changed += 1;
                assert_eq!(after.get(x, y), [0, 255, 0, 255]);
            }
        }
    }
    assert!(changed > 100, "only {changed} pixels drawn");
    let bytes = fs::read(&out_png).unwrap();
    ok(&args);
    assert_eq!(fs::read(&out_png).unwrap(), bytes);

    let blank = root.join("blank.png");
    ColorImage::filled(320, 320, [240, 240, 240, 255]).save_png(&blank).unwrap();
    let args = ["overlay", s(&blank), "--db", s(&db), "--model", s(&model), "--out", s(&out_png)];
    ok(&args);
    assert_eq!(ColorImage::load_png(&out_png).unwrap(), ColorImage::load_png(&blank).unwrap());
}

#[test]
fn bench_cases_replay_through_recognize() {
    let (_dir, root) = setup(3, true);
    let report = root.join("report.json");
    let cases = root.join("cases");
    let out = herbar(&[
        "bench",
        "--db",
        s(&root.join("db.hrb")),
        "--targets-dir",
        s(&root.join("images")),
        "--report",
        s(&report),
        "--dump-cases",
        s(&cases),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    let case_list = v["cases"].as_array().unwrap();
    assert_eq!(case_list.len(), 3 * 9);

    let mut files: Vec<PathBuf> = fs::read_dir(&cases).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    for (i, case) in case_list.iter().enumerate() {
        let prefix = format!("{i:04}_");
        let file = files
            .iter()
            .find(|f| f.file_name().unwrap().to_string_lossy().starts_with(&prefix))
            .expect("dumped frame");
        let out = ok(&["recognize", s(file), "--db", s(&root.join("db.hrb")), "--json"]);
        let r: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(r["detection"]["target_id"], case["got_id"], "case {i} from {}", file.display());
    }
}

#[test]
fn bench_exits_nonzero_on_failure_and_skips_missing_sources() {
    let (_dir, root) = setup(2, false);
    fs::remove_file(root.join("images/aiye.png")).unwrap();
    let out = herbar(&[
        "bench",
        "--db",
        s(&root.join("db.hrb")),
        "--targets-dir",
        s(&root.join("images")),
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let skipped = v["cases"].as_array().unwrap().iter().filter(|c| c["skipped"] == true).count();
    // Target 2 loses all its cases; target 1 loses its interference case.
    assert_eq!(skipped, 9 + 1);

    let gray = to_grayscale(&ColorImage::load_png(root.join("images/lingzhi.png")).unwrap());
    occlude(&gray, 0.9, Side::Left, 255)
        .to_rgba()
        .save_png(root.join("images/lingzhi.png"))
        .unwrap();
    let out = herbar(&[
        "bench",
        "--db",
        s(&root.join("db.hrb")),
        "--targets-dir",
        s(&root.join("images")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_reports_referential_integrity() {
    let (_dir, root) = setup(2, false);
    let out = ok(&["validate", "--db", s(&root.join("db.hrb")), "--catalog", s(&root.join("catalog.json"))]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["missing_entries"], serde_json::json!([]));
    assert_eq!(v["orphan_entries"].as_array().unwrap().len(), 86);

    fs::write(root.join("small.json"), "[]").unwrap();
    let out = herbar(&["validate", "--db", s(&root.join("db.hrb")), "--catalog", s(&root.join("small.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["missing_entries"].as_array().unwrap().len(), 2);
}

#[test]
fn shipped_catalog_matches_fixture_generator() {
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/catalog.json");
    let text = fs::read_to_string(shipped).unwrap();
    let catalog = herbar_core::content::load_catalog(&text).unwrap();
    assert_eq!(catalog.len(), 88);
    assert_eq!(catalog, herbar_core::fixtures::synthetic_catalog());
}

#[test]
fn corrupt_database_is_rejected() {
    let (_dir, root) = setup(1, false);
    let db = root.join("db.hrb");
    let mut bytes = fs::read(&db).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    fs::write(&db, bytes).unwrap();
    let out = herbar(&["validate", "--db", s(&db), "--catalog", s(&root.join("catalog.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
}
