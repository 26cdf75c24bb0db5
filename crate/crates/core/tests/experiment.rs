use catlink::experiment::{max_range, monte_carlo_run, DetectorSpec, RunResult, RunSpec};
use catlink::{Channel, Params, Protocol};
use proptest::prelude::*;
use std::f64::consts::PI;

fn paper_params() -> Params {
    Params::new(100.0, 0.0028, PI, 0.0).unwrap()
}

fn run(duration: f64, seed: u64) -> RunResult {
    monte_carlo_run(
        &paper_params(),
        &Channel::new(0.15, 200.0).unwrap(),
        &DetectorSpec::default(),
        &RunSpec {
            bin_s: duration / 10.0,
            ..RunSpec::new(duration, seed)
        },
        Protocol::Usd2,
    )
    .unwrap()
}

#[test]
fn repeated_runs_share_the_poisson_mean() {
    let runs: Vec<RunResult> = (0..30).map(|s| run(100.0, 1000 + s)).collect();
    let mean = runs[0].mean_counts_max;
    let avg = runs.iter().map(|r| r.counts_max as f64).sum::<f64>() / 30.0;
    // standard error of a 30-run average of Poisson(mean) counts
    let se = (mean / 30.0).sqrt();
    assert!((avg - mean).abs() < 5.0 * se, "avg {avg} mean {mean}");
    let distinct: std::collections::HashSet<u64> = runs.iter().map(|r| r.counts_max).collect();
    assert!(distinct.len() > 1);
}

#[test]
fn visibility_error_shrinks_as_inverse_root_duration() {
    let durations = [1e2f64, 1e3, 1e4];
    let pts: Vec<(f64, f64)> = durations
        .iter()
        .map(|&d| (d.ln(), run(d, 77).stderr_visibility.unwrap().ln()))
        .collect();
    let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
    assert!((slope + 0.5).abs() <= 0.05, "slope {slope}");
}

#[test]
fn mean_count_at_paper_parameters() {
    let r = run(1e4, 1);
    assert!((r.mean_counts_max / 53_000.0 - 1.0).abs() < 0.02);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn range_shrinks_as_floor_rises(f1 in 0.01..50.0f64, f2 in 0.01..50.0f64) {
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        for which in [Protocol::Usd2, Protocol::Usd4] {
            let a = max_range(&paper_params(), 0.15, lo, 1e9, which).unwrap().total_distance_km;
            let b = max_range(&paper_params(), 0.15, hi, 1e9, which).unwrap().total_distance_km;
            prop_assert!(b <= a);
        }
    }
}
