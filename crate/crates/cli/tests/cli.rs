//! End-to-end checks of the four verbs through the actual binary:
//! exit codes, trace formatting, witness files, ingestion round trips,
//! report validation and seeded reproducibility.

use patchadv_core::format::{load_network, parse_vector};
use patchadv_core::metrics::{pixels_modified, Report};
use patchadv_core::{Network, Rational, Scalar};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_patchadv"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    cmd.output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn tiny4() -> String {
    fixture("tiny4.net").display().to_string()
}

fn tiny3() -> String {
    fixture("tiny3.net").display().to_string()
}

fn r(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

#[test]
fn missing_network_exits_2_and_names_the_path() {
    let out = run(&["simulate", "--net", "fixtures/nope.net", "--input", "1, 2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("nope.net"), "stderr: {}", stderr_of(&out));
}

#[test]
fn simulate_prints_exact_rational_trace() {
    let out = run(&["simulate", "--net", &tiny4(), "--input", "1/2, 1/2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout_of(&out),
        "net tiny4\n\
         layer 1 values <1/2, 1/2>\n\
         layer 2 pre <1, 1/2> values <1, 1/2>\n\
         layer 3 pre <7/2, 3/2> values <7/2, 3/2>\n\
         layer 4 pre <-5, -13/2> values <-5, -13/2>\n\
         argmax 1 class 0\n"
    );
}

#[test]
fn simulate_reads_the_input_from_a_file() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("x.txt");
    std::fs::write(&input, "3, 4\n").unwrap();
    let out = run(&[
        "simulate",
        "--net",
        &tiny3(),
        "--input-file",
        input.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("layer 2 pre <-5, 2> values <0, 2>"), "trace: {text}");
    assert!(text.ends_with("argmax 2 class 1\n"), "trace: {text}");
}

fn report_at(dir: &Path) -> Report {
    let text = std::fs::read_to_string(dir.join("report.txt")).expect("report exists");
    Report::parse(&text).expect("report parses")
}

#[test]
fn attack_success_writes_witness_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "attack",
        "--net",
        &tiny4(),
        "--input",
        "1/2, 1/2",
        "--property",
        "o[2] > o[1]",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let report = report_at(tmp.path());
    assert_eq!(report.records.len(), 1);
    assert_eq!(report.successes, 1);
    let record = &report.records[0];
    assert!(record.is_success());
    assert_eq!(record.adv_label, Some(1));

    // The stored witness must satisfy the property with the default margin
    // under exact arithmetic, within the default shift budget.
    let adv_text = std::fs::read_to_string(tmp.path().join("adv_0.vec")).unwrap();
    let adv: Vec<Rational> = parse_vector(&adv_text).unwrap();
    let net: Network<Rational> = load_network(fixture("tiny4.net")).unwrap();
    let output = net.forward(&adv).unwrap().output().to_vec();
    assert!(output[1].clone() - output[0].clone() >= r(1, 10000));
    let input = [r(1, 2), r(1, 2)];
    let deltas: Vec<Rational> =
        adv.iter().zip(&input).map(|(a, x)| a.clone() - x.clone()).collect();
    assert!(patchadv_core::metrics::linf(&deltas) <= r(1, 2));
    assert_eq!(record.pixels, pixels_modified(&deltas));
}

#[test]
fn satisfied_property_short_circuits_with_zero_deltas() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "attack",
        "--net",
        &tiny4(),
        "--input",
        "1/2, 1/2",
        "--property",
        "o[1] > o[2]",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("deltas <0, 0>"), "stdout: {text}");
    assert!(text.contains("output <-5, -13/2>"), "stdout: {text}");
    assert_eq!(report_at(tmp.path()).successes, 1);
}

#[test]
fn hopeless_instance_exits_1_with_an_honest_report() {
    let tmp = tempfile::tempdir().unwrap();
    // Both hidden neurons are inactive on this input, so no first-layer
    // weight change can reach the output at all.
    let out = run(&[
        "attack",
        "--net",
        &tiny3(),
        "--input",
        "2, 4",
        "--property",
        "o[1] > o[2]",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = report_at(tmp.path());
    assert_eq!(report.successes, 0);
    assert_eq!(report.records[0].status, "patch_infeasible");
    assert!(!tmp.path().join("adv_0.vec").exists());
}

#[test]
fn pinned_hidden_target_reproduces_the_known_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "attack",
        "--net",
        &tiny4(),
        "--input",
        "1/2, 1/2",
        "--property",
        "o[2] > o[1]",
        "--pin-hidden",
        "1/8, 0",
        "--translation",
        "equality",
        "--sparsity",
        "dense",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("deltas <-5/12, -11/24>"), "stdout: {text}");
    assert!(text.contains("output <-1/2, -3/8>"), "stdout: {text}");
}

#[test]
fn csv_ingestion_preserves_tokens_and_validates_range() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data.csv");
    std::fs::write(&data, "# header comment\n0.5, 0.25\n0,1\n").unwrap();
    let labels = tmp.path().join("labels.txt");
    std::fs::write(&labels, "1\n0\n").unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "ingest",
        "--format",
        "csv",
        "--data",
        data.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert_eq!(std::fs::read_to_string(out_dir.join("vectors.txt")).unwrap(), "0.5,0.25\n0,1\n");
    assert_eq!(std::fs::read_to_string(out_dir.join("labels.txt")).unwrap(), "1\n0\n");

    std::fs::write(&data, "0.5, 1.5\n").unwrap();
    let bad = run(&[
        "ingest",
        "--format",
        "csv",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr_of(&bad).contains("outside [0, 1]"));
}

#[test]
fn idx_ingestion_writes_exact_fractions() {
    let tmp = tempfile::tempdir().unwrap();
    let images = tmp.path().join("images.idx");
    let labels = tmp.path().join("labels.idx");
    // One 1x3 image with pixels 0, 128, 255.
    let mut image_bytes = Vec::new();
    for word in [2051u32, 1, 1, 3] {
        image_bytes.extend_from_slice(&word.to_be_bytes());
    }
    image_bytes.extend_from_slice(&[0, 128, 255]);
    std::fs::write(&images, &image_bytes).unwrap();
    let mut label_bytes = Vec::new();
    for word in [2049u32, 1] {
        label_bytes.extend_from_slice(&word.to_be_bytes());
    }
    label_bytes.push(7);
    std::fs::write(&labels, &label_bytes).unwrap();

    let out_dir = tmp.path().join("out");
    let out = run(&[
        "ingest",
        "--format",
        "idx",
        "--images",
        images.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert_eq!(
        std::fs::read_to_string(out_dir.join("vectors.txt")).unwrap(),
        "0,128/255,255/255\n"
    );
    assert_eq!(std::fs::read_to_string(out_dir.join("labels.txt")).unwrap(), "7\n");
}

#[test]
fn report_verb_accepts_real_reports_and_rejects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "attack",
        "--net",
        &tiny4(),
        "--input",
        "1/2, 1/2",
        "--property",
        "o[2] > o[1]",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let report_path = tmp.path().join("report.txt");
    let ok = run(&["report", "--report", report_path.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "stderr: {}", stderr_of(&ok));
    assert!(stdout_of(&ok).contains("report ok"));

    let tampered = std::fs::read_to_string(&report_path)
        .unwrap()
        .replace("successes=1", "successes=0");
    std::fs::write(&report_path, tampered).unwrap();
    let bad = run(&["report", "--report", report_path.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr_of(&bad).contains("do not match"), "stderr: {}", stderr_of(&bad));
}

#[test]
fn report_verb_emits_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    run(&[
        "attack",
        "--net",
        &tiny4(),
        "--input",
        "1/2, 1/2",
        "--property",
        "o[2] > o[1]",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    let plot = tmp.path().join("plot.tsv");
    let out = run(&[
        "report",
        "--report",
        tmp.path().join("report.txt").to_str().unwrap(),
        "--plot-data",
        plot.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let tsv = std::fs::read_to_string(&plot).unwrap();
    let mut lines = tsv.lines();
    assert_eq!(
        lines.next(),
        Some("index\torig_label\tstatus\tadv_label\tl2\tlinf\tpixels\ttime_ms")
    );
    assert_eq!(lines.clone().count(), 1);
    assert!(lines.next().unwrap().starts_with("0\t0\tsuccess\t1\t"));
}

#[test]
fn seeded_parallel_runs_reproduce_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = tmp.path().join("inputs.txt");
    std::fs::write(&inputs, "1/2, 1/2\n1/4, 3/4\n").unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for dir in &dirs {
        let out = run(&[
            "attack",
            "--net",
            &tiny4(),
            "--inputs",
            inputs.to_str().unwrap(),
            "--property",
            "o[2] > o[1]",
            "--jobs",
            "2",
            "--seed",
            "9",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(matches!(out.status.code(), Some(0) | Some(1)));
    }
    let a = report_at(&dirs[0]);
    let b = report_at(&dirs[1]);
    assert!(a.matches_ignoring_time(&b), "reports diverged:\n{}\n{}", a.render(), b.render());
    for record in a.records.iter().filter(|r| r.is_success()) {
        let name = format!("adv_{}.vec", record.index);
        let wa = std::fs::read(dirs[0].join(&name)).unwrap();
        let wb = std::fs::read(dirs[1].join(&name)).unwrap();
        assert_eq!(wa, wb, "witness {name} diverged");
    }
}

#[test]
fn label_goal_without_labels_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "attack",
        "--net",
        &tiny4(),
        "--input",
        "1/2, 1/2",
        "--property",
        "argmax != label",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("labels"), "stderr: {}", stderr_of(&out));
}

#[test]
fn float_mode_flips_the_predicted_class() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "attack",
        "--net",
        &tiny4(),
        "--input",
        "0.5, 0.5",
        "--property",
        "argmax != pred",
        "--arithmetic",
        "float",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let report = report_at(tmp.path());
    assert_eq!(report.records[0].orig_label, 0);
    assert_eq!(report.records[0].adv_label, Some(1));
}

#[test]
fn sampling_limits_the_attacked_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = tmp.path().join("inputs.txt");
    std::fs::write(&inputs, "1/2, 1/2\n1/4, 3/4\n3/4, 1/4\n").unwrap();
    let out = run(&[
        "attack",
        "--net",
        &tiny4(),
        "--inputs",
        inputs.to_str().unwrap(),
        "--property",
        "o[2] > o[1]",
        "--samples",
        "2",
        "--seed",
        "3",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    let report = report_at(tmp.path());
    assert_eq!(report.records.len(), 2);
    // Record indices refer to the original row numbers.
    assert!(report.records.iter().all(|r| r.index < 3));
}
