use revdiff_core::bounds::BoundKind;
use revdiff_core::experiments::config::{GridConfig, ScoreConfig};
use revdiff_core::experiments::emit::{read_grouped, read_xy};
use revdiff_core::experiments::run::{self, BOUNDS_FILE, ENTROPY_FWD_FILE};
use revdiff_core::experiments::{
    grid_search_interval, simulate, sweep_gamma_steps, sweep_initial_time, ExperimentConfig, Manifest,
};
use revdiff_core::GammaSchedule;

fn small() -> ExperimentConfig {
    ExperimentConfig {
        samples: 10_000,
        reference_samples: 10_000,
        grid: GridConfig {
            n_steps: 30,
            ..GridConfig::default()
        },
        seed: 42,
        ..ExperimentConfig::default()
    }
}

#[test]
fn sweeps_and_runs_agree_cell_for_cell() {
    let mut cfg = small();
    cfg.interval.gamma = 2.0;
    let t = cfg.grid.t_end;
    let grid = grid_search_interval(&cfg, &[0.0, 0.5 * t, t]).unwrap();
    for i in 0..3 {
        assert_eq!(grid.cell(i, i).unwrap().final_kl, grid.ode_kl());
    }
    assert_eq!(grid.cell(0, 2).unwrap().final_kl, grid.sde_kl());

    let table = sweep_gamma_steps(&cfg, &[0.0, 2.0], &[30]).unwrap();
    let by_gamma = |g: f64| table.cells.iter().find(|c| c.gamma == g).unwrap().final_kl;
    assert_eq!(by_gamma(0.0), grid.ode_kl());
    assert_eq!(by_gamma(2.0), grid.sde_kl());

    cfg.schedule = GammaSchedule::ode();
    assert_eq!(simulate(&cfg).unwrap().final_kl(), grid.ode_kl());

    cfg.schedule = GammaSchedule::constant(cfg.time_sweep.gamma).unwrap();
    let run = simulate(&cfg).unwrap();
    let ts = sweep_initial_time(&cfg, &[t, 0.2]).unwrap();
    assert_eq!(ts.rows[0].t_start, t);
    assert_eq!(ts.rows[0].final_kl_sde, run.final_kl());
    assert_eq!(ts.rows[0].initial_kl, run.initial_kl());
    assert!(ts.rows[1].t_start < t);
}

#[test]
fn manifest_reproduces_artifacts_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.out_dir = dir.path().join("a");
    let first = run::run_sampling(&cfg).unwrap();
    let manifest = Manifest::read(&cfg.out_dir).unwrap();
    assert_eq!(manifest.seed, 42);
    assert_eq!(manifest.command, "sample");

    let mut again = manifest.config.clone();
    again.out_dir = dir.path().join("b");
    run::run_sampling(&again).unwrap();
    for f in &manifest.artifacts {
        let a = std::fs::read(cfg.out_dir.join(f)).unwrap();
        let b = std::fs::read(again.out_dir.join(f)).unwrap();
        assert_eq!(a, b, "{}", f.display());
    }
    assert!(first.artifacts.iter().any(|p| p.ends_with("entropy.svg")));

    // plotted data read back from the CSVs equals the computed values
    let curve = read_xy(&cfg.out_dir.join(ENTROPY_FWD_FILE), "forward_time", "estimate").unwrap();
    let want: Vec<(f64, f64)> = first
        .run
        .sampler_vs_true
        .iter()
        .map(|p| (p.forward_time, p.estimate.value))
        .collect();
    assert_eq!(curve, want);
    let traces = read_grouped(&cfg.out_dir.join(BOUNDS_FILE), "kind", "forward_time", "bound_value").unwrap();
    let thm2 = &traces["thm2"];
    assert_eq!(thm2.iter().map(|p| p.1).collect::<Vec<_>>(), first.run.traces[0].values);
}

#[test]
fn learned_score_run_has_perturbed_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.out_dir = dir.path().to_path_buf();
    cfg.train.hidden = vec![8, 8];
    cfg.train.dataset_size = 2_000;
    cfg.train.profile_samples = 500;
    cfg.train.optim.steps = 50;
    cfg.train.optim.batch_size = 32;
    let (_, files) = run::run_train_score(&cfg).unwrap();
    assert!(files.iter().any(|p| p.ends_with("score_error.svg")));

    cfg.score = ScoreConfig::Learned {
        checkpoint: dir.path().join(run::CHECKPOINT_FILE),
    };
    cfg.bounds.eps_samples = 500;
    let r = simulate(&cfg).unwrap();
    let kinds: Vec<BoundKind> = r.traces.iter().map(|t| t.kind).collect();
    assert_eq!(kinds, vec![BoundKind::Thm4Eq2, BoundKind::Cor2]);
    assert!(r.skipped.is_empty());

    // an interval schedule has γ = 0 inside the window, so cor2 is skipped
    cfg.schedule = GammaSchedule::interval(1.0, 0.1, 0.3).unwrap();
    let r = simulate(&cfg).unwrap();
    assert!(r.skipped.iter().any(|s| s.starts_with("cor2")));
}
