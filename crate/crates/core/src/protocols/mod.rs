//! Source and pre-measurement states, the two state-discrimination
//! protocols, visibility and the CHSH statistic.
//!
//! Every probability here is available by two independent routes: the
//! operator pipeline ([`protocol_usd4`], [`protocol_usd2`]) which pushes the
//! eight-branch state through beam splitters, displacements and detector
//! projections, and the closed forms in [`closed`]. Tests hold the two
//! routes to each other.

mod chsh;
pub mod closed;
mod states;
mod usd;

pub use chsh::{chsh_s, chsh_s_max, correlation, ChshAngles, CHSH_VISIBILITY_THRESHOLD};
pub use closed::{
    closed_form_probability, closed_form_report, usd2_closed_form, usd2_single_photon_prob,
    usd4_closed_form, usd4_displacements, visibility, visibility_exact, VisibilityForm,
};
pub use states::{
    build_analysis_state, build_analysis_state_compositional, build_source_state, modes,
};
pub use usd::{
    evaluate, evaluate_with, pipeline_probability, protocol_usd2, protocol_usd2_with,
    protocol_usd4, protocol_usd4_with, DisplacementConvention, PipelineOptions,
};

use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("alpha must be finite and > 0, got {0}")]
    Alpha(f64),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("n_lost must be >= 0, got {0}")]
    NegativeLoss(f64),
    #[error("visibility must be in [0, 1], got {0}")]
    Visibility(f64),
    #[error("unknown protocol `{0}` (expected usd2 or usd4)")]
    UnknownProtocol(String),
}

/// Source amplitude, conditional Kerr phase and the two analysis phases.
/// Both beams share the amplitude `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams<T = f64> {
    pub alpha: T,
    pub phi: T,
    pub sigma1: T,
    pub sigma2: T,
}

impl<T: Real> ProtocolParams<T> {
    pub fn new(alpha: T, phi: T, sigma1: T, sigma2: T) -> Result<Self, ParamError> {
        if !(alpha.is_finite() && alpha > T::zero()) {
            return Err(ParamError::Alpha(alpha.as_f64()));
        }
        for (v, name) in [(phi, "phi"), (sigma1, "sigma1"), (sigma2, "sigma2")] {
            if !v.is_finite() {
                return Err(ParamError::NonFinite(name));
            }
        }
        Ok(Self {
            alpha,
            phi,
            sigma1,
            sigma2,
        })
    }

    /// `|ϕ| < π/4`; outside it the ±2ϕ side states wrap toward each other.
    pub fn in_protocol_regime(&self) -> bool {
        self.phi.abs() < T::FRAC_PI_4()
    }

    pub fn delta_sigma(&self) -> T {
        self.sigma1 - self.sigma2
    }

    /// Same point with `σ₁ = σ₂ + delta`.
    pub fn with_delta_sigma(mut self, delta: T) -> Self {
        self.sigma1 = self.sigma2 + delta;
        self
    }
}

/// Which state-discrimination measurement is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// 50/50 split plus two displacements per beam; four-fold coincidence.
    Usd4,
    /// One displacement per beam; two-fold coincidence.
    Usd2,
}

impl Protocol {
    pub fn fold(self) -> u32 {
        match self {
            Protocol::Usd4 => 4,
            Protocol::Usd2 => 2,
        }
    }

    /// Power `k` of `x = |α′|² sin²ϕ` in the success probability.
    pub fn prefactor_power(self) -> i32 {
        self.fold() as i32
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Usd4 => "usd4",
            Protocol::Usd2 => "usd2",
        })
    }
}

impl FromStr for Protocol {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "usd4" => Ok(Protocol::Usd4),
            "usd2" => Ok(Protocol::Usd2),
            other => Err(ParamError::UnknownProtocol(other.to_owned())),
        }
    }
}

/// Success probabilities per pulse and the derived fringe figures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport<T = f64> {
    /// At the requested `σ₁, σ₂`.
    pub p_success: T,
    /// At `σ₁ − σ₂ = π`.
    pub p_max: T,
    /// At `σ₁ − σ₂ = 0`.
    pub p_min: T,
    pub visibility: T,
    pub chsh_s: T,
}

impl<T: Real> RateReport<T> {
    /// Visibility is `(p_max − p_min)/(p_max + p_min)`, or 0 when both vanish.
    pub fn from_fringe(p_success: T, p_max: T, p_min: T) -> Self {
        let sum = p_max + p_min;
        let visibility = if sum > T::zero() {
            (p_max - p_min) / sum
        } else {
            T::zero()
        };
        Self {
            p_success,
            p_max,
            p_min,
            visibility,
            chsh_s: chsh_s_max(visibility),
        }
    }

    pub fn violates_chsh(&self) -> bool {
        self.chsh_s > T::lit(2.0)
    }
}
