//! What an experiment sees: counting rates, accidentals, Monte Carlo
//! coincidence runs and range/phase planning.
//!
//! User-facing distances are total separations between the two analysis
//! stations; [`ChannelParams`](crate::link::ChannelParams) stores per-arm
//! lengths, half of that.

mod montecarlo;
mod planner;
mod rates;

pub use montecarlo::{monte_carlo_run, CountBin, RunResult, RunSpec};
pub use planner::{
    asymptotic_visibility, max_range, optimize_phi, LimitingFactor, PhiOptimum, RangePlan,
    RANGE_RESOLUTION_KM,
};
pub use rates::{accidental_rate, counting_rates, CountingRates, DetectorSpec};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("probability must be in [0, 1], got {0}")]
    Probability(f64),
    #[error("source_rate_hz must be finite and > 0, got {0}")]
    SourceRate(f64),
    #[error("dark_rate_hz must be finite and >= 0, got {0}")]
    DarkRate(f64),
    #[error("coincidence_window_s must be finite and > 0, got {0}")]
    Window(f64),
    #[error("duration_s must be finite and >= 0, got {0}")]
    Duration(f64),
    #[error("bin_s must be finite and > 0, got {0}")]
    Bin(f64),
    #[error("rate floor must be > 0, got {0}")]
    Floor(f64),
    #[error("loss_db_per_km must be finite and > 0 for range planning, got {0}")]
    Loss(f64),
    #[error("alpha must be finite and > 0, got {0}")]
    Alpha(f64),
    #[error("no distance reaches {floor} counts/s (best {best_rate:.4e} counts/s)")]
    Infeasible { floor: f64, best_rate: f64 },
    #[error("objective is flat zero over the allowed phases (|alpha'|^2 = {alpha_prime_sq:e})")]
    DegenerateObjective { alpha_prime_sq: f64 },
}

fn check_source_rate(r: f64) -> Result<(), ExperimentError> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(ExperimentError::SourceRate(r))
    }
}
