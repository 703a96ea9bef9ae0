use imagecl::corpus;
use imagecl::execsim::io::{read_image, write_image};
use imagecl::execsim::Buffer;
use imagecl::frontend::ast::ScalarType;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn imagecl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imagecl")).args(args).output().expect("binary runs")
}

fn kernel_file(dir: &Path, name: &str) -> PathBuf {
    let p = dir.join(format!("{name}.imcl"));
    std::fs::write(&p, corpus::source(name).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn analyze_lists_blur_parameters() {
    let d = tempfile::tempdir().unwrap();
    let src = kernel_file(d.path(), "blur");
    let v = stdout_json(&imagecl(&["analyze", s(&src)]));
    let ids: Vec<&str> = v["space"]["params"].as_array().unwrap().iter().map(|p| p["id"].as_str().unwrap()).collect();
    assert_eq!(ids.len(), 10, "{ids:?}");
    for id in ["wgX", "wgY", "cX", "cY", "interleaved", "localMem.in", "unroll.L1", "unroll.L2"] {
        assert!(ids.contains(&id), "{id} missing from {ids:?}");
    }
    assert_eq!(v["analysis"]["accessClasses"]["in"]["class"], "read-only");
}

#[test]
fn syntax_error_exits_one_with_position() {
    let d = tempfile::tempdir().unwrap();
    let src = d.path().join("bad.imcl");
    std::fs::write(&src, "#pragma imcl grid(in)\nvoid k(Image<float> in) {\n  in[idx][idy] = ;\n}\n").unwrap();
    let o = imagecl(&["analyze", s(&src)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(":3:"), "{err}");
}

#[test]
fn missing_source_exits_two() {
    assert_eq!(imagecl(&["analyze", "/nonexistent/k.imcl"]).status.code(), Some(2));
    assert_eq!(imagecl(&["analyze"]).status.code(), Some(2));
}

#[test]
fn generate_writes_three_files() {
    let d = tempfile::tempdir().unwrap();
    let src = kernel_file(d.path(), "blur");
    let out = d.path().join("out");
    let o = imagecl(&["generate", s(&src), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let id = String::from_utf8(o.stdout).unwrap().trim().to_string();
    assert_eq!(id.len(), 16);
    for ext in ["cl", "host.c", "manifest.json"] {
        assert!(out.join(format!("blur.{id}.{ext}")).is_file(), "{ext}");
    }
    let again = imagecl(&["generate", s(&src), "--out", s(&out)]);
    assert_eq!(String::from_utf8(again.stdout).unwrap().trim(), id);
}

#[test]
fn generate_rejects_exclusive_memory_flags() {
    let d = tempfile::tempdir().unwrap();
    let src = kernel_file(d.path(), "blur");
    let cfg = d.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"localMem.in":1,"imageMem.in":1}"#).unwrap();
    let o = imagecl(&["generate", s(&src), "--config", s(&cfg), "--out", s(&d.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!d.path().join("o").exists());
}

#[test]
fn generate_k40_convolution_manifest() {
    let d = tempfile::tempdir().unwrap();
    let src = kernel_file(d.path(), "conv5x5");
    let cfg = d.path().join("k40.json");
    std::fs::write(
        &cfg,
        r#"{"wgX":32,"wgY":4,"cX":4,"cY":8,"interleaved":0,"imageMem.in":1,"imageMem.out":1,
            "constantMem.filter":1,"localMem.in":0,"unroll.L1":5,"unroll.L2":5}"#,
    )
    .unwrap();
    let out = d.path().join("out");
    let o = imagecl(&["generate", s(&src), "--config", s(&cfg), "--out", s(&out), "--width", "2048", "--height", "2048"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let id = String::from_utf8(o.stdout).unwrap().trim().to_string();
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join(format!("conv5x5.{id}.manifest.json"))).unwrap()).unwrap();
    assert_eq!(m["localSize"], serde_json::json!([32, 4]));
    assert_eq!(m["pixelsPerThread"], serde_json::json!([4, 8]));
    let cl = std::fs::read_to_string(out.join(format!("conv5x5.{id}.cl"))).unwrap();
    assert!(cl.contains("read_imagef") || cl.contains("read_imageui"));
    assert!(cl.contains("__constant float * filter"));
}

fn run_blur(dir: &Path, src: &Path, cfg: Option<&str>, tag: &str) -> Buffer {
    let out = dir.join(tag);
    let mut args = vec!["run".to_string(), s(src).into(), "--input".into(), format!("in={}", dir.join("in.imcl").display())];
    if let Some(c) = cfg {
        let p = dir.join(format!("{tag}.json"));
        std::fs::write(&p, c).unwrap();
        args.extend(["--config".into(), p.display().to_string()]);
    }
    args.extend(["--out".into(), out.display().to_string()]);
    let o = Command::new(env!("CARGO_BIN_EXE_imagecl")).args(&args).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    read_image(&out.join("out.imcl")).unwrap()
}

#[test]
fn run_blur_on_constant_image() {
    let d = tempfile::tempdir().unwrap();
    let src = kernel_file(d.path(), "blur");
    write_image(&d.path().join("in.imcl"), &Buffer::filled(ScalarType::Float, 8, 8, 1.0)).unwrap();
    let out = run_blur(d.path(), &src, None, "naive");
    // Out-of-range reads see 0, so a corner averages 4 ones and an edge 6.
    let expect = |x: usize, y: usize| {
        let span = |c: usize| if c == 0 || c == 7 { 2.0f32 } else { 3.0 };
        span(x) * span(y) / 9.0
    };
    for y in 0..8 {
        for x in 0..8 {
            let got = out.get(x, y).as_f32();
            assert!((got - expect(x, y)).abs() < 1e-6, "({x},{y}) = {got}");
        }
    }
    let tiled = run_blur(
        d.path(),
        &src,
        Some(r#"{"wgX":4,"wgY":2,"cX":2,"cY":2,"interleaved":1,"localMem.in":1,"imageMem.in":0,"imageMem.out":0,"unroll.L1":3,"unroll.L2":3}"#),
        "tiled",
    );
    assert!(tiled.bit_identical(&out));
}

#[test]
fn run_rejects_malformed_input() {
    let d = tempfile::tempdir().unwrap();
    let src = kernel_file(d.path(), "blur");
    let bad = d.path().join("bad.imcl");
    std::fs::write(&bad, b"not an image").unwrap();
    let o = imagecl(&["run", s(&src), "--input", &format!("in={}", bad.display()), "--out", s(&d.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tune_is_deterministic_and_resumable() {
    let d = tempfile::tempdir().unwrap();
    let src = kernel_file(d.path(), "blur");
    let tune = |out: &Path, extra: &[&str]| {
        let mut args = vec!["tune", s(&src), "--out", s(out), "--n1", "20", "--top-k", "5", "--width", "16", "--height", "16"];
        args.extend_from_slice(extra);
        let o = imagecl(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read_to_string(out.join("best.json")).unwrap(), std::fs::read_to_string(out.join("history.jsonl")).unwrap())
    };
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    let first = tune(&a, &[]);
    assert_eq!(tune(&b, &[]), first);
    assert_eq!(first.1.lines().count(), 25);
    let report = std::fs::read_to_string(a.join("report.txt")).unwrap();
    assert!(report.contains("best configuration:"));

    let resumed = tune(&a, &["--resume"]);
    assert_eq!(resumed.0, first.0);
    let report = std::fs::read_to_string(a.join("report.txt")).unwrap();
    assert!(report.contains("new evaluations: 0"), "{report}");
}

#[test]
fn tune_with_external_command() {
    let d = tempfile::tempdir().unwrap();
    let src = kernel_file(d.path(), "blur");
    let out = d.path().join("ext");
    let o = imagecl(&[
        "tune", s(&src), "--out", s(&out), "--n1", "12", "--top-k", "3", "--external-cmd",
        "test -s {cl} && test -s {manifest} && echo 1.5ms",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let failing = imagecl(&["tune", s(&src), "--out", s(&d.path().join("f")), "--n1", "12", "--top-k", "3", "--external-cmd", "exit 3"]);
    assert_eq!(failing.status.code(), Some(1));
    assert_eq!(std::fs::read_to_string(d.path().join("f/history.jsonl")).unwrap().lines().count(), 12);
}

#[test]
fn enumerate_reports_count() {
    let d = tempfile::tempdir().unwrap();
    let src = kernel_file(d.path(), "blur");
    let v = stdout_json(&imagecl(&["enumerate", s(&src), "--limit", "5"]));
    assert_eq!(v["configurations"].as_array().unwrap().len(), 5);
    assert!(v["count"]["value"].as_u64().unwrap() > 5);
}
