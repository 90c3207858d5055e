use ccal_core::montecarlo::{generate_dataset, replicate_rng, run_scenario, ScenarioConfig};

#[test]
fn preparation_errors_have_the_configured_moments() {
    let mut cfg = ScenarioConfig::standard(5, 2, 0.8, 1, 21);
    cfg.sigma_eps2_true = 0.0;
    cfg.alpha_true = 0.0;
    cfg.beta_true = 1.0;
    let reps = 100_000;
    let mut sum = [0.0f64; 5];
    let mut sq = [0.0f64; 5];
    for r in 0..reps {
        let (first, _) = generate_dataset(&cfg, &mut replicate_rng(21, r)).unwrap();
        // with beta = 1 and no response noise, Y_i is the latent x_i
        for i in 0..5 {
            let delta = first.x_fixed()[i] - first.y()[i];
            sum[i] += delta;
            sq[i] += delta * delta;
        }
    }
    for i in 0..5 {
        let var = cfg.delta_var_rule[i];
        let m = sum[i] / reps as f64;
        let v = sq[i] / reps as f64 - m * m;
        assert!(m.abs() < 3.0 * (var / reps as f64).sqrt(), "mean {m}");
        // var of a sample variance is about 2 var^2 / reps
        assert!(
            (v - var).abs() < 3.0 * (2.0 * var * var / reps as f64).sqrt(),
            "var {v} vs {var}"
        );
    }
}

#[test]
fn summaries_do_not_depend_on_thread_count() {
    let cfg = ScenarioConfig::standard(20, 5, 1.9, 300, 2024);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_scenario(&cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn error_shrinks_along_the_sample_size_ladder() {
    let mut last = f64::INFINITY;
    for (n, k) in [(5, 2), (20, 20), (100, 100)] {
        let s = run_scenario(&ScenarioConfig::standard(n, k, 0.8, 400, 77)).unwrap();
        assert!(s.proposed.mse < last);
        last = s.proposed.mse;
    }
    let s = run_scenario(&ScenarioConfig::standard(100, 100, 0.8, 400, 77)).unwrap();
    let diff = (s.proposed.mean_est_var - s.theoretical_var_proposed).abs();
    assert!(diff < 3.0 * s.proposed.mean_est_var_se + 0.1 * s.theoretical_var_proposed);
}
