use seroprev::simulation::{run_scenario, ScenarioSpec};
use seroprev::{Alpha, Prevalence, TestAccuracy};

fn spec(theta: f64, acc: TestAccuracy, n: u64, reps: u64, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        true_theta: Prevalence::new(theta).unwrap(),
        acc,
        n_samples: n,
        alpha: Alpha::default(),
        n_replications: reps,
        seed,
    }
}

#[test]
fn wilson_coverage_at_one_half() {
    let r = run_scenario(&spec(0.5, TestAccuracy::perfect(), 1000, 100_000, 5)).unwrap();
    assert_eq!(r.nonempty_count, 100_000);
    let coverage = r.rao_coverage_given_nonempty.unwrap();
    assert!((0.94..=0.96).contains(&coverage), "coverage {coverage}");
    assert!((0.94..=1.0).contains(&r.cp_coverage));
}

#[test]
fn frequencies_are_probabilities() {
    let acc = TestAccuracy::new(0.85, 0.9).unwrap();
    let r = run_scenario(&spec(0.05, acc, 300, 5000, 1)).unwrap();
    for f in
        [r.empty_ci_frequency, r.mle_zero_frequency.unwrap(), r.cp_coverage, r.rao_coverage_given_nonempty.unwrap()]
    {
        assert!((0.0..=1.0).contains(&f));
    }
    assert!(r.mle_mean.unwrap() >= 0.0);
}

#[test]
fn result_does_not_depend_on_thread_count() {
    let acc = TestAccuracy::new(42.0 / 45.0, 34.0 / 35.0).unwrap();
    let s = spec(0.002, acc, 1500, 20_000, 77);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_scenario(&s).unwrap())
    };
    assert_eq!(run(1), run(4));
}
