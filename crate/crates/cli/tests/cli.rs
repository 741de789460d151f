use std::process::{Command, Output};

fn parley(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parley"))
        .args(args)
        .env_remove("RUST_BACKTRACE")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = parley(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn solve_trade_two_rounds() {
    let csv = ok(&["solve", "--game", "trade_two_costs", "--rounds", "2", "--format", "csv"]);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows[0].starts_with("0,-,13/6,1/2,"));
    assert!(rows[1].starts_with("1,B,13/6,3/4,"));
    assert!(rows[2].starts_with("2,S,9/4,3/4,3,"));
}

#[test]
fn solve_zero_rounds_is_base_row() {
    let csv = ok(&["solve", "--game", "spy", "--rounds", "0", "--format", "csv"]);
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn spy_table_text_and_json_agree() {
    let json = ok(&["solve", "--game", "spy", "--rounds", "6", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v[6]["s"], "110363/137673");
    assert_eq!(v[6]["s_decimal"], "0.802");
    // Byte-stable across runs.
    assert_eq!(json, ok(&["solve", "--game", "spy", "--rounds", "6", "--format", "json"]));
}

#[test]
fn trace_tree_probabilities() {
    let json = ok(&["trace", "--game", "trade_two_costs", "--rounds", "2"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let probs = |n: &serde_json::Value| {
        n["children"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["prob"].as_str().unwrap().to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(probs(&v), vec!["1/4", "3/4"]);
    assert_eq!(probs(&v["children"][1]["node"]), vec!["8/9", "1/9"]);

    let one = ok(&["trace", "--game", "trade_two_costs", "--rounds", "1"]);
    let v: serde_json::Value = serde_json::from_str(&one).unwrap();
    assert_eq!(probs(&v), vec!["2/3", "1/3"]);

    let leaf = ok(&["trace", "--game", "spy", "--rounds", "0"]);
    let v: serde_json::Value = serde_json::from_str(&leaf).unwrap();
    assert!(v["children"].as_array().unwrap().is_empty());

    let dot = ok(&["trace", "--game", "trade_two_costs", "--rounds", "2", "--format", "dot"]);
    assert!(dot.contains("label=\"8/9\""));
}

#[test]
fn partition_diagrams() {
    let svg = ok(&["partition", "--game", "spy", "--rounds", "1", "--format", "svg"]);
    assert!(svg.starts_with("<svg") && svg.contains(">4/9<") && svg.contains(">5/9<"));
    let regions = ok(&["partition", "--game", "spy", "--rounds", "1", "--round", "0", "--format", "svg"]);
    for l in ["C/E", "E/E", "E/C"] {
        assert!(regions.contains(l));
    }
    let dot = ok(&["partition", "--game", "trade_two_costs", "--rounds", "1", "--format", "dot"]);
    assert!(dot.contains("p [1/4, 1/2]") && dot.contains("color=blue"));
    let two = ok(&["partition", "--game", "spy", "--rounds", "2", "--format", "dot"]);
    assert!(two.contains("color=red"));
}

#[test]
fn trade_subcommands() {
    let lp3 = ok(&["trade", "lp3", "--game", "trade_three_values"]);
    for s in [
        "(58/15, 8/5)",
        "(58/15, 12/5)",
        "(62/15, 12/5)",
        "W* = 33/5",
        "C >= 3",
        "(2/5, 0), (3/5, 1/3)",
    ] {
        assert!(lp3.contains(s), "missing {s} in\n{lp3}");
    }
    let two = ok(&["trade", "two-round", "--game", "trade_two_costs"]);
    assert!(two.contains("pi2 (S, B) = (9/4, 3/4)") && two.contains("verdict: efficient"));
    let bbm = ok(&["trade", "bbm", "--game", "trade_single_cost"]);
    assert!(bbm.contains("(8/9, p=1/4)") && bbm.contains("(1/9, p=1)"));
    let cx = ok(&["trade", "complexity", "--game", "trade_single_cost", "--rounds", "2"]);
    assert!(cx.contains("C = 1 (exact"));
}

#[test]
fn out_file_is_written() {
    let dir = std::env::temp_dir().join(format!("parley-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("plan.json");
    ok(&[
        "partition",
        "--game",
        "spy",
        "--rounds",
        "1",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("4/9"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn errors_exit_nonzero() {
    for args in [
        vec!["solve", "--game", "no_such_game", "--rounds", "1"],
        vec!["solve", "--game", "spy", "--rounds", "1", "--start", "0.5,1/2"],
        vec!["solve", "--game", "spy", "--rounds", "1", "--start", "3/2,1/2"],
        vec!["solve", "--game", "spy"],
        vec!["solve", "--game", "trade_three_values", "--rounds", "1"],
        vec!["partition", "--game", "spy", "--rounds", "1", "--round", "2"],
        vec!["trade", "lp3", "--game", "spy"],
        vec!["trade", "lp3", "--game", "trade_three_values", "--qgrid", "0,2"],
        vec!["solve", "--game", "spy", "--rounds", "1", "--format", "svg"],
    ] {
        let out = parley(&args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
}
