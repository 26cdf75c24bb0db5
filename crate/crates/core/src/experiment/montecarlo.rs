use super::rates::{accidental_rate, DetectorSpec};
use super::{check_source_rate, ExperimentError};
use crate::link::ChannelParams;
use crate::protocols::{closed_form_report, Protocol, ProtocolParams, VisibilityForm};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub duration_s: f64,
    pub source_rate_hz: f64,
    pub seed: u64,
    /// Width of the reported count bins; the last bin may be shorter.
    pub bin_s: f64,
}

impl RunSpec {
    /// 1 GHz source, 1 s bins.
    pub fn new(duration_s: f64, seed: u64) -> Self {
        Self {
            duration_s,
            source_rate_hz: 1e9,
            seed,
            bin_s: 1.0,
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return Err(ExperimentError::Duration(self.duration_s));
        }
        if !(self.bin_s.is_finite() && self.bin_s > 0.0) {
            return Err(ExperimentError::Bin(self.bin_s));
        }
        check_source_rate(self.source_rate_hz)
    }

    fn bin_count(&self) -> u64 {
        (self.duration_s / self.bin_s).ceil() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountBin {
    pub index: u64,
    pub counts_max: u64,
    pub counts_min: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Coincidences at `σ₁ − σ₂ = π`, signal plus accidentals.
    pub counts_max: u64,
    /// Coincidences at `σ₁ − σ₂ = 0`.
    pub counts_min: u64,
    /// `(c_max − c_min)/(c_max + c_min)`; `None` with no counts at all.
    pub estimated_visibility: Option<f64>,
    /// Poisson error propagation `2√(ab/(a+b)³)`.
    pub stderr_visibility: Option<f64>,
    pub expected_visibility: f64,
    pub mean_counts_max: f64,
    pub mean_counts_min: f64,
    pub seed: u64,
    pub bin_s: f64,
    pub bins: Vec<CountBin>,
}

impl RunResult {
    /// CHSH estimate `2√2·v` with its standard error.
    pub fn chsh_estimate(&self) -> Option<(f64, f64)> {
        let k = 2.0 * std::f64::consts::SQRT_2;
        Some((k * self.estimated_visibility?, k * self.stderr_visibility?))
    }

    /// Whether the CHSH estimate exceeds 2 by more than `sigmas` standard errors.
    pub fn violates_chsh_at(&self, sigmas: f64) -> bool {
        self.chsh_estimate()
            .is_some_and(|(s, err)| s - sigmas * err > 2.0)
    }
}

fn poisson(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Poisson coincidence counts at both fringe extremes, binned in time.
///
/// Each (bin, setting) pair draws from its own ChaCha stream derived from the
/// seed, so the result does not depend on how bins are spread over threads.
pub fn monte_carlo_run(
    params: &ProtocolParams<f64>,
    channel: &ChannelParams<f64>,
    det: &DetectorSpec,
    run: &RunSpec,
    which: Protocol,
) -> Result<RunResult, ExperimentError> {
    run.validate()?;
    let report = closed_form_report(which, params, channel, VisibilityForm::Exact);
    let acc = accidental_rate(det, which.fold(), run.source_rate_hz)?;
    let rate_max = report.p_max * run.source_rate_hz;
    let rate_min = report.p_min * run.source_rate_hz;

    let bins: Vec<CountBin> = (0..run.bin_count())
        .into_par_iter()
        .map(|index| {
            let start = index as f64 * run.bin_s;
            let width = (run.duration_s - start).min(run.bin_s);
            let draw = |setting: u64, rate: f64| {
                let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
                rng.set_stream(2 * index + setting);
                poisson(rate * width, &mut rng) + poisson(acc * width, &mut rng)
            };
            CountBin {
                index,
                counts_max: draw(0, rate_max),
                counts_min: draw(1, rate_min),
            }
        })
        .collect();

    let counts_max: u64 = bins.iter().map(|b| b.counts_max).sum();
    let counts_min: u64 = bins.iter().map(|b| b.counts_min).sum();
    let (a, b) = (counts_max as f64, counts_min as f64);
    let total = a + b;
    let (estimated_visibility, stderr_visibility) = if total > 0.0 {
        (
            Some((a - b) / total),
            Some(2.0 * (a * b / total.powi(3)).sqrt()),
        )
    } else {
        (None, None)
    };
    let mean_max = (rate_max + acc) * run.duration_s;
    let mean_min = (rate_min + acc) * run.duration_s;
    Ok(RunResult {
        counts_max,
        counts_min,
        estimated_visibility,
        stderr_visibility,
        expected_visibility: if rate_max + rate_min > 0.0 {
            (rate_max - rate_min) / (rate_max + rate_min + 2.0 * acc)
        } else {
            0.0
        },
        mean_counts_max: mean_max,
        mean_counts_min: mean_min,
        seed: run.seed,
        bin_s: run.bin_s,
        bins,
    })
}
