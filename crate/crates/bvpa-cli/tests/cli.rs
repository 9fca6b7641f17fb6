//! End-to-end tests of the command-line binary: exit codes, file
//! contents, seed resolution, and the wiring between subcommands.

use std::path::Path;
use std::process::{Command, Output};

use bvpa::fit::FitRecord;

const REFERENCE: &str = "0,0,1,0.5,1,0.3,1.4";

fn bvpa_cmd() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bvpa"));
    // Tests control seeding explicitly; make sure an ambient variable
    // cannot leak in.
    cmd.env_remove("BVPA_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bvpa_cmd().args(args).output().expect("binary runs")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).expect("output file exists")
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["sample", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_problems_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();
    // Unknown subcommand and unknown flag are caught by the parser.
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["sample", "--bogus"]).status.code(), Some(1));
    // Wrong arity and malformed numbers in --params.
    assert_eq!(
        run(&["sample", "--params", "0,0,1", "--n", "5", "--out", out]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["sample", "--params", "0,0,1,0.5,one,0.3,1.4", "--n", "5", "--out", out])
            .status
            .code(),
        Some(1)
    );
    // Invalid parameter values pass parsing but fail validation.
    assert_eq!(
        run(&["sample", "--params", "0,0,-1,0.5,1,0.3,1.4", "--n", "5", "--out", out])
            .status
            .code(),
        Some(1)
    );
    // Unknown variant name.
    let sample = dir.path().join("s.csv");
    let sample_path = sample.to_str().unwrap();
    let ok = run(&["sample", "--params", REFERENCE, "--n", "30", "--out", sample_path]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(
        run(&["fit", "--input", sample_path, "--variant", "mod9", "--out", out])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn sampling_is_seed_deterministic_and_reports_ties() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    let args = |path: &Path, seed: &str| {
        vec![
            "sample".to_string(),
            "--params".to_string(),
            REFERENCE.to_string(),
            "--n".to_string(),
            "400".to_string(),
            "--seed".to_string(),
            seed.to_string(),
            "--out".to_string(),
            path.to_str().unwrap().to_string(),
        ]
    };
    let first = bvpa_cmd().args(args(&a, "9")).output().unwrap();
    assert_eq!(first.status.code(), Some(0));
    let second = bvpa_cmd().args(args(&b, "9")).output().unwrap();
    assert_eq!(second.status.code(), Some(0));
    let third = bvpa_cmd().args(args(&c, "10")).output().unwrap();
    assert_eq!(third.status.code(), Some(0));

    assert_eq!(read(&a), read(&b), "same seed, same bytes");
    assert_ne!(read(&a), read(&c), "different seed, different sample");

    // About a 1/2.7 share of exact ties at the reference parameters.
    let note = stderr_of(&first);
    assert!(note.contains("exact ties"), "stderr: {note}");

    // The file round-trips: header plus 400 data rows of finite pairs.
    let body = read(&a);
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("x1,x2"));
    assert_eq!(lines.clone().count(), 400);
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 2);
        for field in fields {
            let value: f64 = field.parse().expect("numeric field");
            assert!(value.is_finite());
        }
    }
}

#[test]
fn environment_seed_matches_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let via_flag = dir.path().join("flag.csv");
    let via_env = dir.path().join("env.csv");
    let status = bvpa_cmd()
        .args([
            "sample", "--params", REFERENCE, "--n", "50", "--seed", "123", "--out",
            via_flag.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = bvpa_cmd()
        .env("BVPA_SEED", "123")
        .args([
            "sample", "--params", REFERENCE, "--n", "50", "--out",
            via_env.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(read(&via_flag), read(&via_env));

    // A malformed environment seed is a usage error.
    let bad = bvpa_cmd()
        .env("BVPA_SEED", "not-a-seed")
        .args([
            "sample", "--params", REFERENCE, "--n", "5", "--out",
            dir.path().join("bad.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn empty_sample_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty.csv");
    let status = run(&[
        "sample", "--params", REFERENCE, "--n", "0", "--out",
        out.to_str().unwrap(),
    ])
    .status;
    assert_eq!(status.code(), Some(0));
    assert_eq!(read(&out), "x1,x2\n");
}

#[test]
fn fit_writes_a_record_the_bootstrap_can_read() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("sample.csv");
    let fit_json = dir.path().join("fit.json");
    let ci = dir.path().join("ci.csv");
    assert_eq!(
        run(&[
            "sample", "--params", REFERENCE, "--n", "250", "--seed", "21", "--out",
            sample.to_str().unwrap(),
        ])
        .status
        .code(),
        Some(0)
    );
    let fit_out = run(&[
        "fit", "--input", sample.to_str().unwrap(), "--variant", "mod1",
        "--emit-q-trace", "--out", fit_json.to_str().unwrap(),
    ]);
    assert_eq!(fit_out.status.code(), Some(0));
    let record: FitRecord = serde_json::from_str(&read(&fit_json)).unwrap();
    assert_eq!(record.variant, bvpa::Variant::Mod1);
    assert!(record.converged);
    let trace = record.q_trace.as_ref().expect("trace was requested");
    assert_eq!(trace.len(), record.iterations + 1);
    assert!(record.params.sigma1 > 0.0 && record.params.alpha0 > 0.0);

    let boot = run(&[
        "bootstrap", "--fit-json", fit_json.to_str().unwrap(), "--n", "250",
        "--resamples", "8", "--seed", "2", "--parallelism", "2", "--out",
        ci.to_str().unwrap(),
    ]);
    assert_eq!(boot.status.code(), Some(0), "stderr: {}", stderr_of(&boot));
    let body = read(&ci);
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("parameter,lower,upper"));
    assert_eq!(lines.count(), 7);
}

#[test]
fn fit_without_trace_omits_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("sample.csv");
    let fit_json = dir.path().join("fit.json");
    run(&[
        "sample", "--params", REFERENCE, "--n", "120", "--seed", "3", "--out",
        sample.to_str().unwrap(),
    ]);
    let status = run(&[
        "fit", "--input", sample.to_str().unwrap(), "--variant", "base", "--out",
        fit_json.to_str().unwrap(),
    ])
    .status;
    assert_eq!(status.code(), Some(0));
    assert!(!read(&fit_json).contains("q_trace"));
}

#[test]
fn data_problems_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let out = out.to_str().unwrap();
    // Missing input file.
    assert_eq!(
        run(&["fit", "--input", "no-such-file.csv", "--variant", "mod1", "--out", out])
            .status
            .code(),
        Some(2)
    );
    // Headerless (numeric first row) input.
    let headerless = dir.path().join("headerless.csv");
    std::fs::write(&headerless, "1.0,2.0\n3.0,4.0\n").unwrap();
    let output = run(&[
        "fit", "--input", headerless.to_str().unwrap(), "--variant", "mod1", "--out", out,
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("line 1"), "stderr: {}", stderr_of(&output));
    // Malformed value with its line number.
    let garbled = dir.path().join("garbled.csv");
    std::fs::write(&garbled, "x1,x2\n1.0,2.0\n1.0,oops\n").unwrap();
    let output = run(&[
        "fit", "--input", garbled.to_str().unwrap(), "--variant", "mod1", "--out", out,
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("line 3"), "stderr: {}", stderr_of(&output));
    // Header only.
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "x1,x2\n").unwrap();
    assert_eq!(
        run(&["fit", "--input", empty.to_str().unwrap(), "--variant", "mod1", "--out", out])
            .status
            .code(),
        Some(2)
    );
    // Bootstrap on malformed JSON.
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ not json").unwrap();
    assert_eq!(
        run(&[
            "bootstrap", "--fit-json", broken.to_str().unwrap(), "--n", "50", "--out",
            dir.path().join("ci.csv").to_str().unwrap(),
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn simulate_layout_and_parallelism_independence() {
    let dir = tempfile::tempdir().unwrap();
    let serial = dir.path().join("serial.csv");
    let threaded = dir.path().join("threaded.csv");
    let common = [
        "simulate", "--params", REFERENCE, "--sizes", "40,60", "--reps", "3",
        "--variants", "mod1,mod4", "--seed", "11",
    ];
    let status = bvpa_cmd()
        .args(common)
        .args(["--parallelism", "1", "--out", serial.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = bvpa_cmd()
        .args(common)
        .args(["--parallelism", "4", "--out", threaded.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(read(&serial), read(&threaded), "thread count changed the numbers");

    let body = read(&serial);
    let mut lines = body.lines();
    assert_eq!(
        lines.next(),
        Some("variant,n,parameter,average_estimate,mse,avg_iterations,failures")
    );
    // Two variants times two sizes: four cells of seven parameter rows,
    // then one iteration-summary row per cell.
    assert_eq!(lines.count(), 4 * 7 + 4);
}

#[test]
fn simulate_with_every_replication_failing_exits_three() {
    // Nearly all mass on the shared shock with equal frames: samples are
    // pure diagonal ties, the observed split has empty wedges, and the
    // observed-count update is degenerate in every replication.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.csv");
    let output = run(&[
        "simulate", "--params", "0,0,1,1,20,1e-9,1e-9", "--sizes", "10", "--reps", "2",
        "--variants", "base", "--seed", "5", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3), "stderr: {}", stderr_of(&output));
    assert!(!out.exists(), "no report should be written when a cell never succeeds");
}

#[test]
fn analyze_scan_tabulates_retention() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("raw.csv");
    let out_dir = dir.path().join("scan");
    // Positive raw data: shift the reference sample into data-like units.
    run(&[
        "sample", "--params", "1,1,1,0.5,1,0.3,1.4", "--n", "300", "--seed", "8", "--out",
        sample.to_str().unwrap(),
    ]);
    let output = run(&[
        "analyze", "--input", sample.to_str().unwrap(), "--out-dir",
        out_dir.to_str().unwrap(), "--scan", "--scan-quantiles", "0.5,0.7,0.9",
    ]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));
    let body = read(&out_dir.join("threshold_scan.csv"));
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("q1,q2,threshold1,threshold2,retained"));
    assert_eq!(lines.clone().count(), 9, "three levels per coordinate");
    // Retention counts never increase as either threshold rises.
    let retained: Vec<usize> = lines
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(retained[0] >= *retained.last().unwrap());
}

#[test]
fn analyze_fits_and_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("raw.csv");
    let out_dir = dir.path().join("analysis");
    run(&[
        "sample", "--params", "1,1,1,0.5,1,0.3,1.4", "--n", "1200", "--seed", "14", "--out",
        sample.to_str().unwrap(),
    ]);
    let output = run(&[
        "analyze", "--input", sample.to_str().unwrap(), "--out-dir",
        out_dir.to_str().unwrap(), "--thresholds", "1.2,1.1", "--variant", "mod1",
        "--bins", "6",
    ]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));
    let note = stderr_of(&output);
    assert!(note.contains("retained"), "stderr: {note}");
    assert!(note.contains("Kolmogorov"), "stderr: {note}");

    let record: FitRecord =
        serde_json::from_str(&read(&out_dir.join("fit_mod1.json"))).unwrap();
    assert_eq!(record.variant, bvpa::Variant::Mod1);

    let estimates = read(&out_dir.join("estimates.csv"));
    assert!(estimates.starts_with("variant,parameter,estimate\n"));
    assert_eq!(estimates.lines().count(), 1 + 7);

    for file in ["survival_x1.csv", "survival_x2.csv"] {
        let body = read(&out_dir.join(file));
        let mut lines = body.lines();
        assert_eq!(lines.next(), Some("x,empirical,fitted"));
        let first = lines.next().expect("at least one level");
        let fields: Vec<f64> = first.split(',').map(|f| f.parse().unwrap()).collect();
        // At the smallest observation the empirical survival is one and
        // the fitted curve starts at or below one.
        assert_eq!(fields[1], 1.0);
        assert!(fields[2] <= 1.0 + 1e-12);
    }

    let grid = read(&out_dir.join("density_grid.csv"));
    assert!(grid.starts_with("x1_lo,x1_hi,x2_lo,x2_hi,density\n"));
    assert_eq!(grid.lines().count(), 1 + 36);
    let total: f64 = grid
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9, "histogram mass {total}");
}

#[test]
fn analyze_requires_thresholds_without_scan() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("raw.csv");
    run(&[
        "sample", "--params", "1,1,1,0.5,1,0.3,1.4", "--n", "50", "--seed", "1", "--out",
        sample.to_str().unwrap(),
    ]);
    let output = run(&[
        "analyze", "--input", sample.to_str().unwrap(), "--out-dir",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("--thresholds"));
}

#[test]
fn density_grid_tabulates_the_classified_density() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let output = run(&[
        "density-grid", "--params", REFERENCE, "--x1", "0,2,3", "--x2", "0,2,3",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let body = read(&out);
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("x1,x2,branch,density"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    // x2 = 0.5 * x1 normalizes to the diagonal at the reference scales.
    assert!(rows[0].contains(",f0,"), "origin row: {}", rows[0]);
    for row in &rows {
        let branch = row.split(',').nth(2).unwrap();
        assert!(["f0", "f1", "f2"].contains(&branch), "row: {row}");
    }

    // Degenerate grids are usage errors.
    assert_eq!(
        run(&[
            "density-grid", "--params", REFERENCE, "--x1", "0,2,1", "--x2", "0,2,3",
            "--out", out.to_str().unwrap(),
        ])
        .status
        .code(),
        Some(1)
    );
}
