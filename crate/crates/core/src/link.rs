//! Fiber link budget: per-arm attenuation and the mean photon number lost
//! to the environment.

use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("loss_db_per_km must be finite and >= 0, got {0}")]
    Loss(f64),
    #[error("distance must be finite and >= 0, got {0}")]
    Distance(f64),
    #[error("transmittance must be in (0, 1], got {0}")]
    Transmittance(f64),
}

/// Symmetric two-arm fiber link. Distances are stored per arm; the total
/// source-free separation between the two analysis stations is twice that.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<T = f64> {
    pub loss_db_per_km: T,
    pub distance_km_per_arm: T,
}

impl<T: Real> ChannelParams<T> {
    pub fn new(loss_db_per_km: T, distance_km_per_arm: T) -> Result<Self, LinkError> {
        if !(loss_db_per_km.is_finite() && loss_db_per_km >= T::zero()) {
            return Err(LinkError::Loss(loss_db_per_km.as_f64()));
        }
        if !(distance_km_per_arm.is_finite() && distance_km_per_arm >= T::zero()) {
            return Err(LinkError::Distance(distance_km_per_arm.as_f64()));
        }
        Ok(Self {
            loss_db_per_km,
            distance_km_per_arm,
        })
    }

    pub fn from_total_distance(loss_db_per_km: T, total_km: T) -> Result<Self, LinkError> {
        Self::new(loss_db_per_km, total_km * T::lit(0.5))
    }

    /// Lossless link.
    pub fn lossless() -> Self {
        Self {
            loss_db_per_km: T::zero(),
            distance_km_per_arm: T::zero(),
        }
    }

    /// A 1 dB/km link whose length realizes the requested per-arm transmittance.
    pub fn from_transmittance(eta: T) -> Result<Self, LinkError> {
        if !(eta > T::zero() && eta <= T::one()) {
            return Err(LinkError::Transmittance(eta.as_f64()));
        }
        Self::new(T::one(), -T::lit(10.0) * eta.log10())
    }

    pub fn total_distance_km(&self) -> T {
        self.distance_km_per_arm * T::lit(2.0)
    }

    /// Per-arm amplitude-squared transmittance `η = 10^{−loss·d/10}`.
    pub fn transmittance(&self) -> T {
        T::lit(10.0).powf(-self.loss_db_per_km * self.distance_km_per_arm / T::lit(10.0))
    }
}

/// Surviving amplitude and lost photon number for one arm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attenuation<T = f64> {
    /// `|α′| = √η·α`
    pub alpha_prime: T,
    /// `N_L = |α|² − |α′|²`
    pub n_lost: T,
}

impl<T: Real> Attenuation<T> {
    pub fn alpha_prime_sq(&self) -> T {
        self.alpha_prime * self.alpha_prime
    }
}

pub fn attenuate<T: Real>(alpha: T, channel: &ChannelParams<T>) -> Attenuation<T> {
    let eta = channel.transmittance();
    let total = alpha * alpha;
    let kept = total * eta;
    Attenuation {
        alpha_prime: kept.sqrt(),
        n_lost: total - kept,
    }
}
