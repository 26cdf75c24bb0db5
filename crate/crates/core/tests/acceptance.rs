//! One test per acceptance criterion. Each prints a single verdict line
//! (visible with `--nocapture`) before asserting.

use catlink::experiment::{
    accidental_rate, asymptotic_visibility, max_range, monte_carlo_run, DetectorSpec, RunSpec,
};
use catlink::fock::{oracle_protocol_prob, oracle_protocol_prob_with, OracleOptions};
use catlink::protocols::{
    closed_form_probability, evaluate_with, pipeline_probability, protocol_usd2, protocol_usd4,
    DisplacementConvention, PipelineOptions, VisibilityForm, CHSH_VISIBILITY_THRESHOLD,
};
use catlink::{attenuate, Channel, Params, Protocol};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

fn verdict(n: u32, name: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("criterion {n:>2} [{tag}] {name}: {detail}");
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn point(ap: f64, n_lost: f64, phi: f64, s1: f64, s2: f64) -> (Params, Channel) {
    let alpha = (ap * ap + n_lost).sqrt();
    let ch = Channel::from_transmittance(ap * ap / (alpha * alpha)).unwrap();
    (Params::new(alpha, phi, s1, s2).unwrap(), ch)
}

#[test]
fn criterion_01_link_budget() {
    let a70 = attenuate(100.0, &Channel::new(0.15, 70.0).unwrap());
    let a200 = attenuate(100.0, &Channel::new(0.15, 200.0).unwrap());
    let six_sig = |x: f64, want: f64| rel(x, want) < 5e-7;
    let ok = six_sig(a70.alpha_prime_sq(), 891.251)
        && six_sig(a70.n_lost, 9108.75)
        && six_sig(a200.alpha_prime_sq(), 10.0)
        && six_sig(a200.n_lost, 9990.0);
    verdict(
        1,
        "link budget",
        ok,
        format!(
            "70 km: |a'|^2={:.6} N_L={:.6}; 200 km: |a'|^2={:.6} N_L={:.6}",
            a70.alpha_prime_sq(),
            a70.n_lost,
            a200.alpha_prime_sq(),
            a200.n_lost
        ),
    );
}

#[test]
fn criterion_02_four_fold_rates() {
    let p = Params::new(100.0, 0.0028, PI, 0.0).unwrap();
    let r = protocol_usd4(&p, &Channel::new(0.15, 70.0).unwrap());
    let ok = rel(r.p_max, 1.97e-9) <= 0.02
        && rel(r.p_min, 0.28e-9) <= 0.02
        && (r.visibility - 0.7515).abs() <= 0.005;
    verdict(
        2,
        "four-fold protocol at 140 km total",
        ok,
        format!("p_max={:.4e} p_min={:.4e} v={:.4}", r.p_max, r.p_min, r.visibility),
    );
}

#[test]
fn criterion_03_two_fold_rates_and_bell_violation() {
    let p = Params::new(100.0, 0.0028, PI, 0.0).unwrap();
    let r = protocol_usd2(&p, &Channel::new(0.15, 200.0).unwrap());
    let ok = rel(r.p_max, 5.3e-9) <= 0.02
        && rel(r.p_min, 0.83e-9) <= 0.02
        && (r.visibility - 0.7308).abs() <= 0.005
        && (r.chsh_s - 2.067).abs() <= 0.005
        && r.chsh_s > 2.0;
    verdict(
        3,
        "two-fold protocol at 400 km total",
        ok,
        format!(
            "p_max={:.4e} p_min={:.4e} v={:.4} S={:.4}",
            r.p_max, r.p_min, r.visibility, r.chsh_s
        ),
    );
}

#[test]
fn criterion_04_pipeline_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut worst = 0.0f64;
    let mut drawn = 0;
    while drawn < 100 {
        let ap: f64 = rng.random_range(0.5..40.0);
        let phi: f64 = rng.random_range(1e-3..0.3);
        // e^{−8x} underflows f64 past 8x ≈ 700
        if 8.0 * ap * ap * phi.sin().powi(2) > 650.0 {
            continue;
        }
        drawn += 1;
        let (p, ch) = point(
            ap,
            rng.random_range(0.0..1e4),
            phi,
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..2.0 * PI),
        );
        for which in [Protocol::Usd4, Protocol::Usd2] {
            let pipe = pipeline_probability(which, &p, &ch, &PipelineOptions::default());
            let closed = closed_form_probability(which, &p, &ch, VisibilityForm::Exact);
            let scale = closed_form_probability(which, &p.with_delta_sigma(PI), &ch, VisibilityForm::Exact);
            if scale > 0.0 {
                worst = worst.max((pipe - closed).abs() / scale);
            }
        }
    }
    verdict(
        4,
        "pipeline vs closed form, 100 points",
        worst <= 1e-10,
        format!("worst relative deviation {worst:.3e}"),
    );
}

#[test]
fn criterion_05_fock_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points: Vec<(Params, Channel)> = (0..20)
        .map(|_| {
            point(
                rng.random_range(0.5..3.0),
                rng.random_range(0.0..3.0),
                rng.random_range(0.05..0.6),
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
            )
        })
        .collect();
    let doubled = OracleOptions {
        dim_multiplier: 2.0,
        ..Default::default()
    };
    let (worst_err, worst_shift) = [Protocol::Usd2, Protocol::Usd4]
        .iter()
        .flat_map(|&w| points.iter().map(move |pt| (w, pt)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(which, (p, ch))| {
            let o = oracle_protocol_prob(p, ch, which).expect("within oracle budget");
            let o2 = oracle_protocol_prob_with(p, ch, which, &doubled).expect("within oracle budget");
            let analytic = closed_form_probability(which, p, ch, VisibilityForm::Exact);
            ((o - analytic).abs(), (o - o2).abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    verdict(
        5,
        "Fock oracle, 20 points per protocol",
        worst_err < 1e-8 && worst_shift < 1e-9,
        format!("max |oracle-analytic|={worst_err:.3e}, max doubling shift={worst_shift:.3e}"),
    );
}

fn fitted_slope(which: Protocol) -> f64 {
    // |α′|² = 10, N_L = 9990
    let ch = Channel::new(0.15, 200.0).unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..21)
        .map(|i| {
            let phi = 10f64.powf(-4.0 + f64::from(i) / 20.0);
            let p = Params::new(100.0, phi, PI, 0.0).unwrap();
            let r = evaluate_with(which, &p, &ch, &PipelineOptions::default());
            (phi.ln(), r.p_max.ln())
        })
        .unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn criterion_06_scaling_laws() {
    let (s4, s2) = (fitted_slope(Protocol::Usd4), fitted_slope(Protocol::Usd2));
    verdict(
        6,
        "log-log slope of p_max in phi",
        (s4 - 8.0).abs() <= 0.01 && (s2 - 4.0).abs() <= 0.01,
        format!("four-fold {s4:.4}, two-fold {s2:.4}"),
    );
}

#[test]
fn criterion_07_range_ratio() {
    let p = Params::new(100.0, 0.0028, PI, 0.0).unwrap();
    let floors = [0.1, 0.3, 1.0, 3.0, 10.0];
    let ratios: Vec<(f64, f64, f64, f64)> = floors
        .iter()
        .map(|&f| {
            let d2 = max_range(&p, 0.15, f, 1e9, Protocol::Usd2).unwrap().total_distance_km;
            let d4 = max_range(&p, 0.15, f, 1e9, Protocol::Usd4).unwrap().total_distance_km;
            (f, d2, d4, d2 / d4)
        })
        .collect();
    let ok = ratios.iter().all(|r| (1.8..=2.2).contains(&r.3));
    let detail = ratios
        .iter()
        .map(|(f, d2, d4, r)| format!("floor {f}: {d2:.1}/{d4:.1} km = {r:.3}"))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(7, "two-fold/four-fold range ratio in [1.8, 2.2]", ok, detail);
}

#[test]
fn criterion_08_rate_limited_regime() {
    let v_inf = asymptotic_visibility(100.0, 0.0028).unwrap();
    let p = Params::new(100.0, 0.0028, PI, 0.0).unwrap();
    let det = DetectorSpec::new(8e-4, 1e-9).unwrap();
    let mut margins = Vec::new();
    for (which, km) in [(Protocol::Usd2, 200.0), (Protocol::Usd4, 70.0)] {
        let p_min = closed_form_probability(which, &p.with_delta_sigma(0.0), &Channel::new(0.15, km).unwrap(), VisibilityForm::SmallAngle);
        let acc = accidental_rate(&det, which.fold(), 1e9).unwrap();
        margins.push((p_min * 1e9 / acc).log10());
    }
    let ok = (v_inf - 0.7308).abs() < 5e-5
        && v_inf > CHSH_VISIBILITY_THRESHOLD
        && margins.iter().all(|&m| m >= 10.0);
    verdict(
        8,
        "visibility never limits; accidentals negligible",
        ok,
        format!(
            "v_inf={v_inf:.5}; signal/accidental orders of magnitude: two-fold {:.1}, four-fold {:.1}",
            margins[0], margins[1]
        ),
    );
}

#[test]
fn criterion_09_monte_carlo() {
    let p = Params::new(100.0, 0.0028, PI, 0.0).unwrap();
    let ch = Channel::new(0.15, 200.0).unwrap();
    let det = DetectorSpec::default();
    let spec = RunSpec::new(1e4, 20_251_018);
    let run_with_threads = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| monte_carlo_run(&p, &ch, &det, &spec, Protocol::Usd2).unwrap())
    };
    let r = run_with_threads(4);
    let v = r.estimated_visibility.unwrap();
    let se = r.stderr_visibility.unwrap();
    let reference = format!("{r:?}");
    let identical = [1, 2, 7].iter().all(|&t| format!("{:?}", run_with_threads(t)) == reference);
    verdict(
        9,
        "Monte Carlo visibility and reproducibility",
        (v - 0.7308).abs() <= 3.0 * se && identical,
        format!(
            "counts {}/{}, v={v:.4}±{se:.4}, identical across 1/2/4/7 threads: {identical}",
            r.counts_max, r.counts_min
        ),
    );
}

#[test]
fn criterion_10_displacement_convention() {
    let free = PipelineOptions {
        displacement: DisplacementConvention::PhaseFree,
        ..Default::default()
    };
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut cases = vec![(Params::new(100.0, 0.0028, PI, 0.0).unwrap(), Channel::new(0.15, 200.0).unwrap())];
    for _ in 0..20 {
        cases.push(point(
            rng.random_range(0.5..10.0),
            rng.random_range(0.0..100.0),
            rng.random_range(1e-3..0.3),
            rng.random_range(-PI..PI),
            rng.random_range(-PI..PI),
        ));
    }
    for (p, ch) in &cases {
        let full = pipeline_probability(Protocol::Usd2, p, ch, &PipelineOptions::default());
        let bare = pipeline_probability(Protocol::Usd2, p, ch, &free);
        let scale = pipeline_probability(Protocol::Usd2, &p.with_delta_sigma(PI), ch, &PipelineOptions::default());
        if scale > 0.0 {
            worst = worst.max((full - bare).abs() / scale);
        }
    }
    verdict(
        10,
        "two-fold protocol insensitive to displacement phase",
        worst <= 1e-12,
        format!("worst relative difference {worst:.3e} over {} points", cases.len()),
    );
}
