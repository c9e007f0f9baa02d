use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dgm"))
}

fn tmp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("dgm-cli-{}-{}", std::process::id(), name))
}

#[test]
fn synth_denoise_metrics_pipeline() {
    let clean = tmp("clean.tvf");
    let noisy = tmp("noisy.tvf");
    let out = tmp("denoised.tvf");
    let status = bin()
        .args(["synth", "--generator", "lemniscate", "--n", "128"])
        .arg("--out")
        .arg(&clean)
        .status()
        .unwrap();
    assert!(status.success());
    let status = bin()
        .args([
            "synth",
            "--generator",
            "lemniscate",
            "--n",
            "128",
            "--noise-model",
            "tangent",
            "--sigma",
            "0.10471975511965977",
            "--seed",
            "42",
        ])
        .arg("--out")
        .arg(&noisy)
        .status()
        .unwrap();
    assert!(status.success());
    let status = bin()
        .args([
            "denoise",
            "--target",
            "sphere",
            "--tau",
            "1e-3",
            "--lambda",
            "0.1",
        ])
        .arg("--input")
        .arg(&noisy)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let err = |path: &PathBuf| -> f64 {
        let output = bin()
            .args(["metrics", "--metric", "geodesic"])
            .arg("--input")
            .arg(path)
            .arg("--reference")
            .arg(&clean)
            .output()
            .unwrap();
        assert!(output.status.success());
        let text = String::from_utf8(output.stdout).unwrap();
        text.trim().split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!(err(&out) < err(&noisy));
    for p in [clean, noisy, out] {
        fs::remove_file(p).ok();
    }
}

#[test]
fn run_echoes_config_and_reports_index() {
    let config = tmp("rp1.cfg");
    fs::write(
        &config,
        "\
source.kind = synth
source.generator = rp1-field
noise.model = coordinate
noise.sigma = 0.3
noise.seed = 3
target = rp1
solver.tau = 1e-2
solver.lambda = 0.1
",
    )
    .unwrap();
    let output = bin().arg("run").arg(&config).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("noise.seed = 3"));
    assert!(text.contains("solver.tau = 0.01"));
    assert!(text.contains("index,0.5"));
    fs::remove_file(config).ok();
}

#[test]
fn missing_input_exits_one() {
    let output = bin()
        .args([
            "denoise",
            "--input",
            "/nonexistent/input.tvf",
            "--target",
            "sphere",
            "--tau",
            "1e-3",
            "--lambda",
            "0.1",
            "--out",
            "/tmp/never.tvf",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(err.contains("input.tvf"));
}

#[test]
fn bad_flags_exit_one_and_help_exits_zero() {
    let output = bin().args(["denoise", "--no-such-flag"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let output = bin().arg("--help").output().unwrap();
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn under_resolved_index_exits_two() {
    // alternating orthogonal directions make every loop increment >= pi/2
    let field = tmp("alternating.tvf");
    let header = b"TVF1 2 2 4 4 1.0 1.0 FREE\n";
    let mut bytes = header.to_vec();
    for i in 0..16usize {
        let v: [f64; 2] = if i % 2 == 0 { [1.0, 0.0] } else { [-1.0, 0.0] };
        for c in v {
            bytes.extend_from_slice(&c.to_le_bytes());
        }
    }
    fs::write(&field, bytes).unwrap();
    let output = bin()
        .args(["metrics", "--metric", "index"])
        .arg("--input")
        .arg(&field)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    fs::remove_file(field).ok();
}

#[test]
fn extract_orientation_runs_on_stripes() {
    let img = tmp("stripes.pgm");
    let out = tmp("stripes.tvf");
    let n = 32usize;
    let mut bytes = format!("P5\n{} {}\n255\n", n, n).into_bytes();
    for i in 0..n {
        for j in 0..n {
            let _ = i;
            let phase = 2.0 * std::f64::consts::PI * (j as f64) / 8.0;
            bytes.push((127.5 + 127.0 * phase.sin()).round() as u8);
        }
    }
    fs::write(&img, bytes).unwrap();
    let output = bin()
        .args(["extract-orientation", "--block", "8"])
        .arg("--input")
        .arg(&img)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("4x4 blocks"));
    for p in [img, out] {
        fs::remove_file(p).ok();
    }
}
