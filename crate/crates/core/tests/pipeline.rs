use dtcast::experiment::{cdf_csv, intervals_csv, prepare_encoder, run_experiment, train_ddqn, INTERVALS_HEADER};
use dtcast::grouping::DdqnAgent;
use dtcast::sim::Mode;
use dtcast::{Execution, ScenarioConfig, UdtStore, World};

fn small() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.n_users = 8;
    cfg.n_intervals = 4;
    cfg.encoder.epochs = 5;
    cfg
}

#[test]
fn no_users_yields_empty_reports() {
    let mut cfg = small();
    cfg.n_users = 0;
    let out = run_experiment(&cfg, Execution::default()).unwrap();
    assert_eq!(out.reports.len(), cfg.n_intervals);
    assert!(out.reports.iter().all(|r| r.rows.is_empty() && r.k == 0));
    assert_eq!(intervals_csv(&out.reports), format!("{INTERVALS_HEADER}\n"));
}

#[test]
fn single_user_is_its_own_group() {
    let mut cfg = small();
    cfg.n_users = 1;
    let out = run_experiment(&cfg, Execution::default()).unwrap();
    assert!(out.reports.iter().all(|r| r.rows.len() == 1 && r.rows[0].n_members == 1));
}

#[test]
fn groups_partition_the_users() {
    let out = run_experiment(&small(), Execution::default()).unwrap();
    for r in &out.reports {
        assert_eq!(r.rows.iter().map(|g| g.n_members).sum::<usize>(), 8);
        assert_eq!(r.rows.len(), r.k);
        assert!(r.rows.iter().all(|g| g.accuracy_radio >= 0.0 && g.accuracy_radio <= 1.0));
        assert!(r.rows.iter().all(|g| g.predicted_radio_hz >= 0.0 && g.actual_compute_cps >= 0.0));
    }
}

#[test]
fn same_seed_same_bytes_different_seed_differs() {
    let cfg = small();
    let a = run_experiment(&cfg, Execution::Parallel).unwrap();
    let b = run_experiment(&cfg, Execution::Sequential).unwrap();
    assert_eq!(intervals_csv(&a.reports), intervals_csv(&b.reports));
    assert_eq!(cdf_csv(&a.reports, 4), cdf_csv(&b.reports, 4));
    let mut other = cfg.clone();
    other.seed += 1;
    let c = run_experiment(&other, Execution::Parallel).unwrap();
    assert_ne!(intervals_csv(&a.reports), intervals_csv(&c.reports));
}

#[test]
fn twins_survive_a_snapshot_after_a_run() {
    let cfg = small();
    let mut world = World::new(cfg.clone(), Execution::default()).unwrap();
    world.set_encoder(prepare_encoder(&world).unwrap().encoder);
    world.set_agent(DdqnAgent::new(cfg.ddqn_config(), 4, 1).unwrap(), Mode::Evaluation);
    for i in 0..cfg.n_intervals {
        world.run_interval(i).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("twins.txt");
    world.store().snapshot(&path).unwrap();
    assert_eq!(&UdtStore::restore(&path).unwrap(), world.store());
    assert_eq!(world.clock(), cfg.interval_s * (cfg.n_intervals + cfg.sim.warmup_intervals) as f64);
}

#[test]
fn missing_agent_is_reported() {
    let cfg = small();
    let mut world = World::new(cfg, Execution::default()).unwrap();
    world.set_encoder(prepare_encoder(&world).unwrap().encoder);
    assert!(world.run_interval(0).is_err());
}

#[test]
fn ddqn_training_runs_every_episode() {
    let mut cfg = small();
    cfg.ddqn.episodes = 2;
    let t = train_ddqn(&cfg, Execution::default()).unwrap();
    assert_eq!(t.episode_rewards.len(), 2);
    assert!(t.episode_rewards.iter().all(|r| r.is_finite() && *r <= 0.0));
    assert_eq!((t.network.k_min, t.network.k_max), (1, 8));
}

#[test]
fn trace_driven_behavior_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let mut text = String::from("user_id,video_id,category,duration_s,watched_s\n");
    for i in 0..40 {
        text.push_str(&format!("{},{},{},30.0,{}\n", i % 5, i, i % 4, (i % 7) as f64 * 5.0));
    }
    std::fs::write(&path, text).unwrap();
    let mut cfg = small();
    cfg.trace_path = Some(path);
    let out = run_experiment(&cfg, Execution::default()).unwrap();
    assert_eq!(out.reports.len(), cfg.n_intervals);
}
