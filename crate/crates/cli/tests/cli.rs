//! End-to-end runs of the `nmg-solve` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use nmg::game_model::policy::uniform_profile;
use nmg::game_model::MarkovPolicy;
use nmg::generate::vi_experiment;
use nmg::io::policy_to_json;
use nmg::markov::markov_ne_gap;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> PathBuf {
    root().join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmg-solve"))
        .args(args)
        .env_remove("NMG_SOLVE_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display())))
        .unwrap()
}

/// Validates `instance` against `schemas/<name>`, listing every error on failure.
fn check_schema(name: &str, instance: &Value) {
    let schema = read_json(&root().join("schemas").join(name));
    let validator = jsonschema::validator_for(&schema).unwrap_or_else(|e| panic!("{name}: {e}"));
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

fn assert_ok(out: &Output) {
    assert_eq!(code(out), 0, "stderr: {}", stderr(out));
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();

    let ok = run(&[
        "validate",
        s(&fixture("fp_experiment.json")),
        "--out",
        s(out),
    ]);
    assert_ok(&ok);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["valid"], true);
    check_schema("report.schema.json", &report);
    check_schema("timing.schema.json", &read_json(&out.join("timing.json")));

    let broken = run(&[
        "validate",
        s(&fixture("broken_row_sum.json")),
        "--out",
        s(out),
    ]);
    assert_eq!(code(&broken), 1);
    assert!(
        stderr(&broken).contains("row (s=1, a=0)"),
        "{}",
        stderr(&broken)
    );
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["valid"], false);
    assert_eq!(
        report["report"]["violations"][0]["invariant"],
        "kernel_row_sum"
    );
    check_schema("report.schema.json", &report);

    let dense = run(&[
        "validate",
        s(&fixture("counterexample.json")),
        "--out",
        s(out),
    ]);
    assert_eq!(code(&dense), 1);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["kind"], "dense");
    assert_eq!(
        report["report"]["transitions"]["failure"]["witness"]["kind"],
        "mixed_difference"
    );
    check_schema("report.schema.json", &report);

    let malformed = out.join("bad.json");
    fs::write(&malformed, "{\"players\": 2, \"actions\": [2, 2],").unwrap();
    let bad = run(&["validate", s(&malformed), "--out", s(out)]);
    assert_eq!(code(&bad), 2);
    assert!(
        stderr(&bad).contains("line"),
        "parse errors carry a location: {}",
        stderr(&bad)
    );

    assert_eq!(code(&run(&["validate", s(&out.join("missing.json"))])), 2);
}

#[test]
fn fixtures_match_game_schema() {
    for name in [
        "fp_experiment.json",
        "vi_experiment.json",
        "counterexample.json",
        "matching_pennies.json",
    ] {
        check_schema("game.schema.json", &read_json(&fixture(name)));
    }
}

#[test]
fn matching_pennies_solves_to_uniform() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    assert_ok(&run(&[
        "solve",
        s(&fixture("matching_pennies.json")),
        "--oracle",
        "lp",
        "--out",
        s(out),
    ]));
    let policy = read_json(&out.join("policy.json"));
    check_schema("policy.schema.json", &policy);
    for i in ["0", "1"] {
        for p in policy["0"]["0"][i].as_array().unwrap() {
            assert!((p.as_f64().unwrap() - 0.5).abs() <= 1e-9);
        }
    }
    let summary = read_json(&out.join("summary.json"));
    check_schema("solve_summary.schema.json", &summary);
    assert!(summary["final_gap"].as_f64().unwrap() <= 1e-6);

    let gap_dir = out.join("gap");
    assert_ok(&run(&[
        "gap",
        s(&fixture("matching_pennies.json")),
        s(&out.join("policy.json")),
        "--out",
        s(&gap_dir),
    ]));
    let gap = read_json(&gap_dir.join("gap.json"));
    check_schema("gap.schema.json", &gap);
    assert!(gap["ne_gap"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn unknown_oracle_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "solve",
        s(&fixture("matching_pennies.json")),
        "--oracle",
        "simulated-annealing",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn solve_is_reproducible_and_replayable() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let game = fixture("vi_experiment.json");
    for o in [&a, &b] {
        assert_ok(&run(&[
            "solve",
            s(&game),
            "--oracle",
            "omwu",
            "--iters",
            "300",
            "--seed",
            "7",
            "--out",
            s(o),
        ]));
    }
    for f in ["policy.json", "gap.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs between runs"
        );
    }

    // replaying the persisted config into the same directory reproduces every output byte for byte
    let saved: Vec<Vec<u8>> = ["policy.json", "gap.csv", "summary.json"]
        .iter()
        .map(|f| fs::read(a.join(f)).unwrap())
        .collect();
    assert_ok(&run(&["replay", s(&a.join("summary.json"))]));
    for (f, before) in ["policy.json", "gap.csv", "summary.json"]
        .iter()
        .zip(&saved)
    {
        assert_eq!(
            &fs::read(a.join(f)).unwrap(),
            before,
            "{f} changed on replay"
        );
    }

    let summary = read_json(&a.join("summary.json"));
    check_schema("solve_summary.schema.json", &summary);
    check_schema("policy.schema.json", &read_json(&a.join("policy.json")));
    let csv = fs::read_to_string(a.join("gap.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iters,ne_gap,stage_bound"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    // budgets increase and each gap respects the summed stage bound
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0]);
    }
    for r in &rows {
        assert!(
            r[1] <= r[2] + 1e-9,
            "gap {} above aggregate bound {}",
            r[1],
            r[2]
        );
    }
}

#[test]
fn threads_do_not_change_outputs() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let game = fixture("vi_experiment.json");
    assert_ok(&run(&[
        "--threads",
        "1",
        "solve",
        s(&game),
        "--oracle",
        "mwu-fixed",
        "--iters",
        "200",
        "--out",
        s(&a),
    ]));
    assert_ok(&run(&[
        "--threads",
        "4",
        "solve",
        s(&game),
        "--oracle",
        "mwu-fixed",
        "--iters",
        "200",
        "--out",
        s(&b),
    ]));
    for f in ["policy.json", "gap.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} depends on thread count"
        );
    }
    assert_eq!(read_json(&b.join("timing.json"))["threads"], 4);
    assert_eq!(code(&run(&["--threads", "0", "validate", s(&game)])), 2);
    let via_env = Command::new(env!("CARGO_BIN_EXE_nmg-solve"))
        .args(["validate", s(&game), "--out", s(dir.path())])
        .env("NMG_SOLVE_THREADS", "3")
        .output()
        .unwrap();
    assert_ok(&via_env);
    assert_eq!(read_json(&dir.path().join("timing.json"))["threads"], 3);
}

#[test]
fn value_iteration_gap_respects_aggregate_bound() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    let game = fixture("vi_experiment.json");
    assert_ok(&run(&[
        "solve",
        s(&game),
        "--oracle",
        "omwu",
        "--iters",
        "500",
        "--checkpoints",
        "1",
        "--out",
        s(out),
    ]));
    let summary = read_json(&out.join("summary.json"));
    assert_ok(&run(&[
        "gap",
        s(&game),
        s(&out.join("policy.json")),
        "--out",
        s(out),
    ]));
    let gap = read_json(&out.join("gap.json"));
    check_schema("gap.schema.json", &gap);
    let g = gap["ne_gap"].as_f64().unwrap();
    assert_eq!(g, summary["final_gap"].as_f64().unwrap());
    assert!(g <= summary["aggregate_bound"].as_f64().unwrap() + 1e-9);
}

#[test]
fn uniform_policy_gap_matches_library() {
    let dir = TempDir::new().unwrap();
    let g = vi_experiment(0, 5).unwrap();
    let policy = MarkovPolicy {
        stages: vec![vec![uniform_profile(g.action_counts()); g.num_states()]; 5],
    };
    let path = dir.path().join("uniform.json");
    fs::write(&path, policy_to_json(&policy)).unwrap();
    assert_ok(&run(&[
        "gap",
        s(&fixture("vi_experiment.json")),
        s(&path),
        "--out",
        s(dir.path()),
    ]));
    let cli = read_json(&dir.path().join("gap.json"))["ne_gap"]
        .as_f64()
        .unwrap();
    assert!((cli - markov_ne_gap(&g, &policy, 0).unwrap().ne_gap).abs() <= 1e-12);
}

#[test]
fn gap_shape_mismatch_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    assert_ok(&run(&[
        "solve",
        s(&fixture("matching_pennies.json")),
        "--out",
        s(out),
    ]));
    let mismatch = run(&[
        "gap",
        s(&fixture("vi_experiment.json")),
        s(&out.join("policy.json")),
        "--out",
        s(out),
    ]);
    assert_eq!(code(&mismatch), 2, "{}", stderr(&mismatch));
}

#[test]
fn fp_runs_and_rejects_non_star_games() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    assert_ok(&run(&[
        "fp",
        s(&fixture("fp_experiment.json")),
        "--iters",
        "0",
        "--out",
        s(out),
    ]));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iter,s,player,Vhat,sumVhat"));
    let rows: Vec<&str> = lines.collect();
    // initial beliefs only: 2 states × 3 players, all at iteration 0
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.starts_with("0,")));
    let summary = read_json(&out.join("summary.json"));
    check_schema("fp_summary.schema.json", &summary);
    assert_eq!(summary["iterations"], 0);

    assert_ok(&run(&[
        "fp",
        s(&fixture("fp_experiment.json")),
        "--iters",
        "5000",
        "--stride",
        "1000",
        "--out",
        s(out),
    ]));
    let summary = read_json(&out.join("summary.json"));
    check_schema("fp_summary.schema.json", &summary);
    assert_eq!(summary["final_abs_value_sum"].as_array().unwrap().len(), 2);
    assert_eq!(summary["config"]["alpha_pow"], 0.55);
    assert_eq!(summary["config"]["beta_pow"], 0.75);

    let triangle = run(&["fp", s(&fixture("vi_experiment.json")), "--out", s(out)]);
    assert_eq!(code(&triangle), 1);
    assert!(stderr(&triangle).contains("star"), "{}", stderr(&triangle));
}

#[test]
fn generate_kinds_validate() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cases: &[(&str, &[&str])] = &[
        (
            "random-zs-nmg",
            &["--topology", "triangle", "--players", "3"],
        ),
        (
            "random-zs-nmg",
            &[
                "--topology",
                "complete",
                "--players",
                "4",
                "--gamma",
                "0.9",
                "--controllers",
                "0,2",
            ],
        ),
        (
            "random-zs-nmg",
            &["--topology", "ring", "--players", "5", "--controllers", ""],
        ),
        (
            "fashion",
            &[
                "--conformists",
                "2",
                "--rebels",
                "2",
                "--s-max",
                "2",
                "--zero-sum",
            ],
        ),
        (
            "fashion",
            &[
                "--conformists",
                "2",
                "--rebels",
                "1",
                "--edges",
                "0-1,0-2,1-2",
            ],
        ),
        ("star-random", &["--players", "4", "--gamma", "0.9"]),
    ];
    for (k, (kind, extra)) in cases.iter().enumerate() {
        let path = d.join(format!("g{k}.json"));
        let mut args = vec!["generate", kind, "--seed", "11", "--out", s(&path)];
        args.extend_from_slice(extra);
        assert_ok(&run(&args));
        check_schema("game.schema.json", &read_json(&path));
        let v = run(&["validate", s(&path), "--out", s(d)]);
        assert_ok(&v);
        assert_eq!(read_json(&d.join("report.json"))["valid"], true);

        // same seed, same bytes
        let again = d.join(format!("g{k}b.json"));
        args[5] = s(&again);
        assert_ok(&run(&args));
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
    }

    let star = d.join("g5.json");
    assert_ok(&run(&["solve", s(&star), "--out", s(&d.join("star"))]));
    let summary = read_json(&d.join("star/summary.json"));
    check_schema("solve_summary.schema.json", &summary);
    assert!(
        summary["final_gap"].as_f64().unwrap()
            <= summary["gap_error_bound"].as_f64().unwrap() + 1e-6
    );
    let sweeps = fs::read_to_string(d.join("star/sweeps.csv")).unwrap();
    assert!(sweeps.starts_with("sweep,distance\n"));
}

#[test]
fn generate_errors() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("g.json");
    // conformists 0 and 1 linked: not bipartite between types
    let same_type = run(&[
        "generate",
        "fashion",
        "--edges",
        "0-1,0-2",
        "--zero-sum",
        "--out",
        s(&path),
    ]);
    assert_eq!(code(&same_type), 1, "{}", stderr(&same_type));
    let topology = run(&[
        "generate",
        "random-zs-nmg",
        "--topology",
        "torus",
        "--out",
        s(&path),
    ]);
    assert_eq!(code(&topology), 2);
    let controller = run(&[
        "generate",
        "random-zs-nmg",
        "--topology",
        "star",
        "--players",
        "4",
        "--controllers",
        "1",
        "--out",
        s(&path),
    ]);
    assert_eq!(code(&controller), 1, "{}", stderr(&controller));
}

#[test]
fn dense_games_are_not_solved() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "solve",
        s(&fixture("counterexample.json")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn schemas_reject_malformed_outputs() {
    let schema = read_json(&root().join("schemas/game.schema.json"));
    let validator = jsonschema::validator_for(&schema).unwrap();
    let mut game = read_json(&fixture("fp_experiment.json"));
    assert!(validator.is_valid(&game));
    game["horizon"] = serde_json::json!({"discounted": 1.5});
    assert!(!validator.is_valid(&game));
    let policy =
        jsonschema::validator_for(&read_json(&root().join("schemas/policy.schema.json"))).unwrap();
    assert!(!policy.is_valid(&serde_json::json!({"0": {"0": {"0": [1.5]}}})));
}
