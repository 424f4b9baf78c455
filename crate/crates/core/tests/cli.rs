use std::path::Path;
use std::process::{Command, Output};

// q = 11, p = 23, written in the hex text form
const P23: &str = "q=b p=17 h=5 g1=2 g2=5 M=16\n";

fn aggsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aggsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("AGGSIM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p23.txt"), P23).unwrap();
    dir
}

#[test]
fn sum_of_three_inputs_over_p23() {
    let dir = workdir();
    let out = aggsim(
        dir.path(),
        &["run", "--protocol", "sum", "--n", "3", "--seed", "7", "--inputs", "3,5,7", "--params", "p23.txt"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "15\n");
    let transcript = std::fs::read_to_string(dir.path().join("transcript.txt")).unwrap();
    // three Setup sessions' worth of Y values plus three ciphertexts, all to the aggregator
    assert_eq!(transcript.lines().count(), 3 * 3 + 2);
    assert!(transcript.lines().all(|l| l.starts_with("ts=")));
}

#[test]
fn product_in_peers_mode_announces_the_result() {
    let dir = workdir();
    let out = aggsim(
        dir.path(),
        &["run", "--protocol", "product", "--model", "peers", "--inputs", "2,3,4", "--params", "p23.txt", "--report"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("1"));
    let transcript = std::fs::read_to_string(dir.path().join("transcript.txt")).unwrap();
    assert!(transcript.lines().any(|l| l.contains("type=04")));
}

#[test]
fn inputs_file_and_custom_transcript_path() {
    let dir = workdir();
    std::fs::write(dir.path().join("x.txt"), "3\n5\n7\n").unwrap();
    let out = aggsim(
        dir.path(),
        &["run", "--protocol", "sum", "--inputs", "x.txt", "--params", "p23.txt", "--transcript", "sum.log"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "15\n");
    assert!(dir.path().join("sum.log").exists());
}

#[test]
fn basic_scheme_names_the_single_contributor_term() {
    let dir = workdir();
    std::fs::write(dir.path().join("f.txt"), "3 2\n3 2\n1 0\n1 0\n0 2\n").unwrap();
    std::fs::write(dir.path().join("x.txt"), "2,3,4").unwrap();
    let out = aggsim(
        dir.path(),
        &["eval", "--spec", "f.txt", "--inputs", "x.txt", "--scheme", "basic", "--params", "p23.txt"],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("term 2"), "{err}");
    assert!(!dir.path().join("transcript.txt").exists());
}

#[test]
fn advanced_scheme_evaluates_the_same_spec() {
    let dir = workdir();
    std::fs::write(dir.path().join("f.txt"), "3 3\n3 2 1\n1 0 0\n1 0 1\n0 2 0\n").unwrap();
    for model in ["aggregator", "peers"] {
        let out = aggsim(
            dir.path(),
            &["eval", "--spec", "f.txt", "--inputs", "2,3,4", "--model", model, "--params", "p23.txt"],
        );
        assert!(out.status.success(), "{}", stderr(&out));
        // 3*6 + 2*16 + 3 = 53
        assert_eq!(stdout(&out), "7\n");
    }
}

#[test]
fn bench_rows_follow_the_range() {
    let dir = workdir();
    let out = aggsim(
        dir.path(),
        &["bench", "--protocol", "product", "--n-range", "100:1000:100", "--qbits", "32", "--reps", "1"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,mean_ns,stddev_ns,msgs,bytes"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10);
    for (row, n) in rows.iter().zip((100..=1000).step_by(100)) {
        assert_eq!(row[0], n.to_string());
        assert_eq!(row[3], n.to_string());
    }
}

#[test]
fn baseline_csv() {
    let dir = workdir();
    let out = aggsim(dir.path(), &["baseline", "--n", "10,20", "--epsilon", "0.5", "--trials", "200"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("n,epsilon,k,trials,coverage_estimate,bound"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn params_to_file_round_trip() {
    let dir = workdir();
    let out = aggsim(dir.path(), &["params", "--qbits", "48", "--seed", "3", "--out", "g.txt"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("g.txt")).unwrap();
    let gp: aggsim::GroupParams = text.trim().parse().unwrap();
    assert!(gp.validate());
    assert_eq!(gp.q().bits(), 48);
}

#[test]
fn usage_errors_exit_2() {
    let dir = workdir();
    for args in [
        &["run", "--protocol", "division", "--n", "3"][..],
        &["run", "--protocol", "sum"],
        &["run", "--protocol", "sum", "--n", "4", "--inputs", "1,2,3", "--params", "p23.txt"],
        &["bench", "--protocol", "sum", "--n-range", "10:5:1"],
        &["frobnicate"],
    ] {
        let out = aggsim(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn protocol_errors_exit_1() {
    let dir = workdir();
    for args in [
        &["run", "--protocol", "product", "--inputs", "2,0,4", "--params", "p23.txt"][..],
        &["run", "--protocol", "sum", "--model", "peers", "--inputs", "1,2", "--params", "p23.txt"],
        &["run", "--protocol", "sum", "--inputs", "1,2,30", "--params", "p23.txt"],
    ] {
        let out = aggsim(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).starts_with("aggsim: "));
    }
}

#[test]
fn invalid_params_file_is_rejected() {
    let dir = workdir();
    std::fs::write(dir.path().join("bad.txt"), "q=b p=17 h=5 g1=1 g2=5 M=16\n").unwrap();
    let out = aggsim(dir.path(), &["run", "--protocol", "sum", "--inputs", "1,2,3", "--params", "bad.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("g1"), "{}", stderr(&out));
}
