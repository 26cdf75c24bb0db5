use super::{check_source_rate, ExperimentError};
use serde::{Deserialize, Serialize};

/// Dark-count rate and coincidence window shared by all detectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub dark_rate_hz: f64,
    pub coincidence_window_s: f64,
}

impl DetectorSpec {
    pub fn new(dark_rate_hz: f64, coincidence_window_s: f64) -> Result<Self, ExperimentError> {
        if !(dark_rate_hz.is_finite() && dark_rate_hz >= 0.0) {
            return Err(ExperimentError::DarkRate(dark_rate_hz));
        }
        if !(coincidence_window_s.is_finite() && coincidence_window_s > 0.0) {
            return Err(ExperimentError::Window(coincidence_window_s));
        }
        Ok(Self {
            dark_rate_hz,
            coincidence_window_s,
        })
    }
}

impl Default for DetectorSpec {
    /// 0.0008 counts/s dark rate, 1 ns window.
    fn default() -> Self {
        Self {
            dark_rate_hz: 8e-4,
            coincidence_window_s: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingRates {
    pub r_max: f64,
    pub r_min: f64,
}

/// Coincidence rates in counts/s at the fringe extremes.
pub fn counting_rates(
    p_max: f64,
    p_min: f64,
    source_rate_hz: f64,
) -> Result<CountingRates, ExperimentError> {
    for p in [p_max, p_min] {
        if !(0.0..=1.0).contains(&p) {
            return Err(ExperimentError::Probability(p));
        }
    }
    check_source_rate(source_rate_hz)?;
    Ok(CountingRates {
        r_max: p_max * source_rate_hz,
        r_min: p_min * source_rate_hz,
    })
}

/// Accidental n-fold coincidences from dark counts alone:
/// `n · d · (d·w)^{n−1}`. The window is capped at the pulse period, since a
/// coincidence cannot span two pulses.
pub fn accidental_rate(
    det: &DetectorSpec,
    n_fold: u32,
    source_rate_hz: f64,
) -> Result<f64, ExperimentError> {
    check_source_rate(source_rate_hz)?;
    let window = det.coincidence_window_s.min(1.0 / source_rate_hz);
    let d = det.dark_rate_hz;
    Ok(f64::from(n_fold) * d * (d * window).powi(n_fold as i32 - 1))
}
