use std::path::{Path, PathBuf};

use vanish_core::game::random_instance;
use vanish_core::harness::{self, ExperimentConfig, Problem, Solver};
use vanish_core::par::Execution;
use vanish_core::specfile;

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn sample_problems_load() {
    let g = specfile::load_game(&sample("two_state.toml")).unwrap();
    assert_eq!(g.num_states(), 2);
    assert_eq!(g.action1_names()[1], "push");
    let d = specfile::load_diffgame(&sample("drift.toml")).unwrap();
    assert_eq!(d.family(), "separable-control");
    let l = specfile::load_diffgame(&sample("linear_tent.toml")).unwrap();
    assert_eq!(l.family(), "linear");
    let m = specfile::load_matrix(&sample("matrix.toml")).unwrap();
    assert_eq!((m.rows(), m.cols()), (3, 3));
}

#[test]
fn sample_configs_parse() {
    for solver in Solver::ALL {
        let path = sample(&format!("{}.toml", solver.name()));
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.solver, Some(solver), "{}", path.display());
    }
}

#[test]
fn game_files_round_trip() {
    for seed in 0..10 {
        let spec = random_instance(seed, 1 + seed as usize % 4, 2, 3, 1.0);
        let text = specfile::game_to_toml(&spec);
        let back = specfile::parse_game(&text, "x").unwrap();
        assert_eq!(back.to_parts(), spec.to_parts());
    }
}

fn config(
    solver: Solver,
    deltas: &[f64],
    resolutions: &[usize],
    execution: Execution,
) -> ExperimentConfig {
    ExperimentConfig {
        solver: Some(solver),
        deltas: deltas.to_vec(),
        resolutions: resolutions.to_vec(),
        execution,
        horizon: Some(1.0),
        ..ExperimentConfig::default()
    }
}

#[test]
fn execution_paths_agree() {
    let game = Problem::Game(specfile::load_game(&sample("two_state.toml")).unwrap());
    let diff = Problem::DiffGame(specfile::load_diffgame(&sample("linear_tent.toml")).unwrap());
    let cases: [(Solver, &Problem, &[f64], &[usize]); 8] = [
        (Solver::SolveObserved, &game, &[0.2, 0.1], &[]),
        (Solver::SolveStationary, &game, &[0.2, 0.1], &[]),
        (Solver::Guarantee, &game, &[0.2, 0.1], &[]),
        (Solver::SolveBelief, &game, &[0.2], &[8]),
        (Solver::BeliefSweep, &game, &[0.2, 0.1], &[8, 16]),
        (Solver::DiffgamePure, &diff, &[0.2], &[21]),
        (Solver::DiffgameRandom, &diff, &[0.2, 0.1], &[21, 41]),
        (Solver::DiffgameRelaxed, &diff, &[0.5], &[9]),
    ];
    for (solver, problem, deltas, res) in cases {
        let a = harness::execute(
            &config(solver, deltas, res, Execution::Sequential),
            solver,
            problem,
        )
        .unwrap();
        let b = harness::execute(
            &config(solver, deltas, res, Execution::Parallel),
            solver,
            problem,
        )
        .unwrap();
        let cmp = harness::compare(&a.report, &b.report).unwrap();
        assert_eq!(cmp.max_value_diff(), 0.0, "{solver}");
        assert_eq!(a.details, b.details, "{solver}");
    }
}

#[test]
fn run_writes_reproducible_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let mut cfg = ExperimentConfig::load(&sample("solve-stationary.toml")).unwrap();
        cfg.spec = Some(sample("two_state.toml"));
        cfg.out = Some(dir.path().to_path_buf());
        cfg.gnuplot = true;
        let out = harness::run(&cfg, None).unwrap();
        assert_eq!(out.files.len(), 5);
        let slope = out.report().slope.unwrap();
        assert!((0.8..1.2).contains(&slope), "slope {slope}");
    }
    for f in [
        "solve-stationary.csv",
        "solve-stationary_values.csv",
        "manifest.toml",
        "solve-stationary.gp",
    ] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let mut rdr = csv::Reader::from_path(a.path().join("solve-stationary.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[3], "error_vs_limit");
    assert_eq!(rdr.records().count(), 5);
}

#[test]
fn ladder_length_mismatch_is_rejected() {
    let diff = Problem::DiffGame(specfile::load_diffgame(&sample("drift.toml")).unwrap());
    let cfg = config(
        Solver::DiffgameRandom,
        &[0.2, 0.1],
        &[21],
        Execution::Sequential,
    );
    assert!(harness::execute(&cfg, Solver::DiffgameRandom, &diff).is_err());
}

#[test]
fn random_instance_file_solves() {
    let dir = tempfile::tempdir().unwrap();
    let inst = harness::InstanceConfig {
        states: 3,
        actions1: 2,
        actions2: 3,
        rate_scale: 1.0,
        rho: 1.0,
    };
    let path = harness::write_random_instance(&inst, 5, dir.path()).unwrap();
    let spec = specfile::load_game(&path).unwrap();
    assert_eq!(spec.num_actions2(), 3);
    let exp = harness::execute(
        &config(Solver::LimitEq, &[], &[], Execution::Parallel),
        Solver::LimitEq,
        &Problem::Game(spec),
    )
    .unwrap();
    assert!(exp.report.rows[0].metric < 1e-8);
}
