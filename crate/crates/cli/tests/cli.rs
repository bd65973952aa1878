use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn priodpa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_priodpa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::write(&path, contents).unwrap();
    path
}

/// Ratio column of the single data row.
fn ratio(out: &Output) -> String {
    let text = stdout(out);
    let row = text.lines().nth(1).expect("one data row");
    row.split(',').nth(5).unwrap().to_string()
}

#[test]
fn greedy_path_is_optimal_on_intervals() {
    let file = scratch(
        "intervals.json",
        r#"{"graph":{"kind":"path","length":10},"requests":[[0,4],[1,3],[2,6],[3,5],[5,9],[6,10],[8,10]]}"#,
    );
    let out = priodpa(&[
        "run",
        "--alg",
        "greedy-path",
        "--instance",
        file.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(ratio(&out), "1.000000");
    assert!(stdout(&out)
        .starts_with("graph,algorithm,instance_hash,gain_alg,gain_opt,ratio,advice_bits,ms\n"));
}

#[test]
fn longest_first_on_the_staircase_shape() {
    let file = scratch(
        "staircase.json",
        r#"{"graph":{"kind":"path","length":15},"requests":[[6,11],[3,7],[7,10],[10,15]]}"#,
    );
    let out = priodpa(&[
        "run",
        "--alg",
        "greedy-lwdpa",
        "--instance",
        file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(ratio(&out), "2.400000");
    let row = stdout(&out);
    assert!(row.contains(",5,12,"));
}

#[test]
fn usage_errors_exit_with_two() {
    let out = priodpa(&[
        "run",
        "--alg",
        "greedy-path",
        "--instance",
        "/definitely/not/here.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let bad = scratch("bad.json", "{ not json");
    let out = priodpa(&[
        "run",
        "--alg",
        "greedy-path",
        "--instance",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let ok = scratch(
        "ok.json",
        r#"{"graph":{"kind":"path","length":3},"requests":[[0,3]]}"#,
    );
    let out = priodpa(&[
        "run",
        "--alg",
        "no-such-alg",
        "--instance",
        ok.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(priodpa(&["run"]).status.code(), Some(2));
}

#[test]
fn seeded_batches_are_byte_identical() {
    for experiment in ["path-greedy", "lwdpa-advice", "cat-greedy"] {
        let args = [
            "run",
            "--experiment",
            experiment,
            "--count",
            "25",
            "--seed",
            "99",
        ];
        let a = priodpa(&args);
        let b = priodpa(&args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
        assert_eq!(stdout(&a).lines().count(), 26);
    }
}

#[test]
fn json_rows_and_out_file() {
    let target = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("rows.jsonl");
    let out = priodpa(&[
        "run",
        "--experiment",
        "cat-advice",
        "--count",
        "5",
        "--format",
        "json",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(target).unwrap();
    for line in text.lines() {
        let row: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(row["algorithm"], "advice-cat");
        assert_eq!(row["gain_alg"], row["gain_opt"]);
    }
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn adversaries_hold_their_bounds() {
    let out = priodpa(&[
        "adversary",
        "--family",
        "pab",
        "--a",
        "3",
        "--b",
        "8",
        "--alg",
        "greedy-lwdpa",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: f64 = ratio(&out).parse().unwrap();
    assert!(r >= 8.0 / 3.0 - 1e-6);

    let out = priodpa(&["adversary", "--problem", "cat", "--alg", "greedy-lex"]);
    assert!(out.status.success());
    assert_eq!(ratio(&out), "2.000000");

    let out = priodpa(&[
        "adversary",
        "--problem",
        "grid",
        "--alg",
        "grid-avoid-center",
    ]);
    assert!(out.status.success());
    let r: f64 = ratio(&out).parse().unwrap();
    assert!(r >= 1.5);
}

#[test]
fn advice_round_trip_through_a_tape_file() {
    let inst = scratch(
        "star.json",
        r#"{"graph":{"kind":"tree","edges":[[0,1],[0,2],[0,3],[0,4],[4,5]]},"requests":[[1,2],[3,4],[1,5],[2,3]]}"#,
    );
    let tape = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("star.tape.json");
    let out = priodpa(&[
        "advice",
        "--problem",
        "cat",
        "--encode",
        "--instance",
        inst.to_str().unwrap(),
        "--tape-out",
        tape.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(ratio(&out), "1.000000");
    let out = priodpa(&[
        "advice",
        "--problem",
        "cat",
        "--decode",
        "--tape",
        tape.to_str().unwrap(),
        "--instance",
        inst.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(ratio(&out), "1.000000");
}

#[test]
fn reduction_table_accounts_for_every_gadget() {
    let out = priodpa(&[
        "reduce",
        "--problem",
        "lwdpa",
        "--n",
        "5",
        "--bits",
        "01101",
        "--alg",
        "greedy-lwdpa",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "step,gadget,top_x,top_y,guess,truth,alg_gain,opt_gain"
    );
    // Five gadgets, a total row and the ratio comment.
    assert_eq!(lines.len(), 8);
    let (mut alg, mut opt) = (0u64, 0u64);
    for row in &lines[1..6] {
        let f: Vec<&str> = row.split(',').collect();
        alg += f[6].parse::<u64>().unwrap();
        opt += f[7].parse::<u64>().unwrap();
    }
    let total: Vec<&str> = lines[6].split(',').collect();
    assert_eq!(total[6].parse::<u64>().unwrap(), alg);
    assert_eq!(total[7].parse::<u64>().unwrap(), opt);
    assert_eq!(opt, 15);

    let out = priodpa(&[
        "reduce",
        "--problem",
        "cat",
        "--n",
        "4",
        "--alg",
        "greedy-cat",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    // Mismatched bit count is a usage error.
    let out = priodpa(&[
        "reduce",
        "--problem",
        "lwdpa",
        "--n",
        "3",
        "--bits",
        "01",
        "--alg",
        "greedy-lwdpa",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn grid_case_table() {
    let out = priodpa(&["verify", "--grid-3x3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("# pairs 8 orbits 1 cases 80 corner 16 center 64 failed 0"));
    assert!(!text.contains(",fail\n"));
}

#[test]
fn star_packing_meets_the_bound() {
    let out = priodpa(&["pack-s4", "--ladder", "4"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("# copies 4 sigma 4"));
    let tree = scratch(
        "two_stars.json",
        r#"{"graph":{"kind":"tree","edges":[[0,1],[0,2],[0,3],[0,4],[4,5],[5,6],[5,7],[5,8]]},"requests":[]}"#,
    );
    let out = priodpa(&[
        "pack-s4",
        "--tree",
        tree.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["copies"].as_array().unwrap().len(), 2);
}
