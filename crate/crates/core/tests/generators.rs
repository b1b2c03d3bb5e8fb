//! Generator and fixture checks.

mod common;

use std::path::PathBuf;

use nmg::decomposition::validate_dense;
use nmg::game_model::joint::for_each_joint;
use nmg::game_model::{validate_nmg, Horizon, Invariant, ValidationOptions};
use nmg::generate::{counterexample, fashion, fp_experiment, vi_experiment, FashionParams};
use nmg::io::{load_game, GameFile, LoadedGame};
use nmg::polymatrix::{matrix_ne_gap, ne_lp};

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn fixtures_match_generators() {
    assert_eq!(
        fixture("fp_experiment.json"),
        GameFile::from_markov(&fp_experiment()).to_json()
    );
    assert_eq!(
        fixture("vi_experiment.json"),
        GameFile::from_markov(&vi_experiment(0, 5).unwrap()).to_json()
    );
    let (cx, graph) = counterexample();
    assert_eq!(
        fixture("counterexample.json"),
        GameFile::from_dense(&cx, &graph).to_json()
    );
}

#[test]
fn matching_pennies_fixture_solves_to_uniform() {
    let LoadedGame::Matrix(g) = load_game(&fixture("matching_pennies.json")).unwrap() else {
        panic!("expected a matrix game")
    };
    let sol = ne_lp(&g, 1e-9).unwrap();
    for p in &sol.profile {
        assert!(p.iter().all(|x| (x - 0.5).abs() <= 1e-9), "{p:?}");
    }
    assert!(matrix_ne_gap(&g, &sol.profile).ne_gap <= 1e-9);
}

#[test]
fn broken_fixture_is_rejected() {
    let LoadedGame::Markov(g) = load_game(&fixture("broken_row_sum.json")).unwrap() else {
        panic!("expected a Markov game")
    };
    let report = validate_nmg(&g, &ValidationOptions::default());
    assert!(!report.valid);
    assert!(report.has(Invariant::KernelRowSum), "{report:?}");
}

#[test]
fn counterexample_fails_validation() {
    let (cx, graph) = counterexample();
    let v = validate_dense(&cx, &graph, 1e-9).unwrap();
    assert!(!v.is_networked());
}

#[test]
fn fashion_game_kernel_moves_level_by_one() {
    let g = fashion(&FashionParams::new(2, 2, 2, Horizon::Finite(3))).unwrap();
    assert_eq!(g.num_states(), 5);
    let dynamics = &g.stage(0).dynamics;
    for s in 0..g.num_states() {
        for_each_joint(g.action_counts(), |a| {
            let row = dynamics.joint_row(s, a);
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for (t, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    assert!(s.abs_diff(t) <= 1, "jump {s} -> {t}");
                }
            }
        });
    }
    // every stage game of the zero-sum version sums to zero
    for h in 0..3 {
        for s in 0..g.num_states() {
            let sg = g.stage_game(h, s);
            for_each_joint(sg.action_counts(), |a| {
                assert!(sg.payoff_sum(a).abs() <= 1e-12)
            });
        }
    }
}

#[test]
fn vi_experiment_is_reproducible_and_seed_dependent() {
    let a = vi_experiment(3, 5).unwrap();
    assert_eq!(a, vi_experiment(3, 5).unwrap());
    assert_ne!(a, vi_experiment(4, 5).unwrap());
}
