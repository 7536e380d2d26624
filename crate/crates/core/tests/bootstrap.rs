use htmest::bootstrap::{
    bootstrap_region, mean_bootstrap_ci_mn, mest_bootstrap_ci, percentile, residual_bootstrap, Centering, ResampleRule,
};
use htmest::inference::region_contains;
use htmest::rng::stream_rng;
use htmest::stable::{sample_model, StableSpec};
use htmest::{LossDescriptor, LossSpec, Sample};
use rand::Rng;

fn heavy_sample(seed: u64, n: usize) -> Sample<f64> {
    let spec = StableSpec::new(vec![1.5, 1.8], vec![1.0, 14.0]).unwrap().with_series_terms(500).unwrap();
    sample_model(&spec, n, &mut stream_rng(seed, "bootstrap-tests", 0)).unwrap()
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn same_seed_same_bits_any_thread_count() {
    let s = heavy_sample(1, 120);
    let loss = LossSpec::huber(&[1.25, 2.0]).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            let mut rng = stream_rng(11, "boot", 0);
            residual_bootstrap(&s, &loss, 300, &[0.9, 0.95, 0.99], &mut rng, Centering::Raw).unwrap()
        })
    };
    let a = run(1);
    let b = run(3);
    let c = run(3);
    assert_eq!(bits(&a.c_star), bits(&b.c_star));
    assert_eq!(bits(&b.c_star), bits(&c.c_star));
    assert_eq!(bits(a.mu_star.as_slice()), bits(b.mu_star.as_slice()));
    assert_eq!(a, b);
}

#[test]
fn different_seeds_differ() {
    let s = heavy_sample(2, 80);
    let loss = LossSpec::huber(&[1.25, 2.0]).unwrap();
    let a = residual_bootstrap(&s, &loss, 50, &[0.9], &mut stream_rng(1, "b", 0), Centering::Raw).unwrap();
    let b = residual_bootstrap(&s, &loss, 50, &[0.9], &mut stream_rng(2, "b", 0), Centering::Raw).unwrap();
    assert_ne!(a.c_star, b.c_star);
}

#[test]
fn translation_carries_through_the_bootstrap() {
    let s = heavy_sample(3, 100);
    let t = [3.25, -40.0];
    let rows: Vec<Vec<f64>> = (0..s.n()).map(|i| vec![s.row(i)[0] + t[0], s.row(i)[1] + t[1]]).collect();
    let moved = Sample::from_rows(&rows).unwrap();
    let loss = LossSpec::huber(&[1.25, 2.0]).unwrap();
    for centering in [Centering::Raw, Centering::Mean] {
        let a = residual_bootstrap(&s, &loss, 200, &[0.95], &mut stream_rng(4, "t", 0), centering).unwrap();
        let b = residual_bootstrap(&moved, &loss, 200, &[0.95], &mut stream_rng(4, "t", 0), centering).unwrap();
        for r in 0..200 {
            for j in 0..2 {
                assert!((b.mu_star[(r, j)] - a.mu_star[(r, j)] - t[j]).abs() < 1e-9);
            }
            assert!((a.c_star[r] - b.c_star[r]).abs() <= 1e-6 * (1.0 + a.c_star[r]), "replicate {r}");
        }
    }
}

#[test]
fn quadratic_statistic_matches_studentised_mean() {
    for seed in 0..10u64 {
        let mut rng = stream_rng(seed, "quad-data", 0);
        let n = rng.random_range(8..30);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..5.0)).collect();
        let s = Sample::univariate(xs.clone()).unwrap();
        let xbar = xs.iter().sum::<f64>() / n as f64;
        let b = 40;
        let mut caller = stream_rng(seed, "quad-boot", 0);
        let mut probe = caller.clone();
        let run = residual_bootstrap(&s, &LossSpec::quadratic(1).unwrap(), b, &[0.5], &mut caller, Centering::Raw).unwrap();
        assert_eq!(run.discarded, 0);

        // Rebuild each resample from the replicate streams.
        let master: u64 = probe.random();
        for r in 0..b {
            let mut g = stream_rng(master, "residual-bootstrap", r as u64);
            let star: Vec<f64> = (0..n).map(|_| xbar + (xs[g.random_range(0..n)] - xbar)).collect();
            let m = star.iter().sum::<f64>() / n as f64;
            let s2 = star.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
            let expected = n as f64 * (m - xbar).powi(2) / s2;
            assert!((run.c_star[r] - expected).abs() <= 1e-8 * (1.0 + expected), "seed {seed}, replicate {r}");
        }
    }
}

#[test]
fn thresholds_grow_with_level() {
    for seed in 0..5u64 {
        let s = heavy_sample(10 + seed, 100);
        let loss = LossSpec::huber_for_alphas(&[1.5, 1.8]).unwrap();
        let run = residual_bootstrap(&s, &loss, 400, &[0.9, 0.95, 0.99], &mut stream_rng(seed, "lv", 0), Centering::Raw).unwrap();
        assert!(run.c_star.iter().all(|&c| c >= 0.0));
        let t: Vec<f64> = run.tau_hat.iter().map(|t| t.tau).collect();
        assert!(t[0] <= t[1] && t[1] <= t[2], "{t:?}");
        assert_eq!(run.tau(0.95), Some(t[1]));
        assert_eq!(run.discarded, 0);
        assert!(run.pool_mean_score.iter().all(|m| m.abs() < 1e-10));
    }
}

#[test]
fn region_contains_its_center() {
    let s = heavy_sample(20, 100);
    let loss = LossSpec::huber_for_alphas(&[1.5, 1.8]).unwrap();
    let region = bootstrap_region(&s, &loss, 200, 0.95, &mut stream_rng(1, "r", 0)).unwrap();
    assert!(region_contains(&region, &region.center).unwrap());
    assert!(region.tau > 0.0);
}

#[test]
fn mean_centering_leaves_pool_score_off_zero() {
    let s = heavy_sample(21, 100);
    let loss = LossSpec::huber_for_alphas(&[1.5, 1.8]).unwrap();
    let run = residual_bootstrap(&s, &loss, 20, &[0.9], &mut stream_rng(1, "m", 0), Centering::Mean).unwrap();
    assert!(run.pool_mean_score.iter().any(|m| m.abs() > 1e-6));
    assert_eq!(run.centering, Centering::Mean);
}

#[test]
fn constant_samples_give_degenerate_intervals() {
    let xs = vec![2.5; 30];
    let (lo, hi) = mean_bootstrap_ci_mn(&xs, 10, 100, 0.9, &mut stream_rng(1, "c", 0)).unwrap();
    assert_eq!((lo, hi), (2.5, 2.5));
    let (lo, hi) = mest_bootstrap_ci(&xs, &LossDescriptor::huber(1.0), 100, 0.9, &mut stream_rng(1, "c", 0)).unwrap();
    assert_eq!((lo, hi), (2.5, 2.5));
}

#[test]
fn intervals_are_ordered_and_widen() {
    let mut rng = stream_rng(5, "iv", 0);
    let xs = htmest::stable::sample_univariate_stable(1.5f64, 100, &mut rng).unwrap();
    let m = ResampleRule::LogLog.size(100);
    let narrow = mean_bootstrap_ci_mn(&xs, m, 500, 0.9, &mut stream_rng(1, "iv", 0)).unwrap();
    let wide = mean_bootstrap_ci_mn(&xs, m, 500, 0.99, &mut stream_rng(1, "iv", 0)).unwrap();
    assert!(narrow.0 <= narrow.1);
    assert!(wide.0 <= narrow.0 && narrow.1 <= wide.1);
    assert!(mean_bootstrap_ci_mn(&xs, 0, 500, 0.9, &mut rng).is_err());
    assert!(mean_bootstrap_ci_mn(&xs, 101, 500, 0.9, &mut rng).is_err());
}

#[test]
fn percentile_is_an_order_statistic() {
    let v: Vec<f64> = (0..1000).map(|k| ((k * 7919) % 1000) as f64).collect();
    assert_eq!(percentile(&v, 0.95).unwrap(), 949.0);
    assert_eq!(percentile(&v, 0.9).unwrap(), 899.0);
}
