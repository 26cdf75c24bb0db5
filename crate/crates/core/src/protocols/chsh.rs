//! CHSH statistic over the post-selected coincidence fringe, whose
//! correlation function is `E(a, b) = ν cos(a − b)`.

use super::ParamError;
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Visibility above which the fringe violates `S ≤ 2`: `1/√2`.
pub const CHSH_VISIBILITY_THRESHOLD: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Analyzer phases `a, a′` on one side and `b, b′` on the other.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles<T = f64> {
    pub a: T,
    pub a_prime: T,
    pub b: T,
    pub b_prime: T,
}

impl<T: Real> ChshAngles<T> {
    pub fn new(a: T, a_prime: T, b: T, b_prime: T) -> Self {
        Self {
            a,
            a_prime,
            b,
            b_prime,
        }
    }

    /// `(0, π/2, π/4, 3π/4)`
    pub fn optimal() -> Self {
        Self::new(
            T::zero(),
            T::FRAC_PI_2(),
            T::FRAC_PI_4(),
            T::lit(3.0) * T::FRAC_PI_4(),
        )
    }
}

impl<T: Real> Default for ChshAngles<T> {
    fn default() -> Self {
        Self::optimal()
    }
}

pub fn correlation<T: Real>(visibility: T, a: T, b: T) -> T {
    visibility * (a - b).cos()
}

/// `S = |E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)|`
pub fn chsh_s<T: Real>(visibility: T, angles: &ChshAngles<T>) -> Result<T, ParamError> {
    if !(visibility >= T::zero() && visibility <= T::one()) {
        return Err(ParamError::Visibility(visibility.as_f64()));
    }
    let e = |x, y| correlation(visibility, x, y);
    let ChshAngles {
        a,
        a_prime,
        b,
        b_prime,
    } = *angles;
    Ok((e(a, b) - e(a, b_prime) + e(a_prime, b) + e(a_prime, b_prime)).abs())
}

/// Maximum over all settings, `2√2·ν`.
pub fn chsh_s_max<T: Real>(visibility: T) -> T {
    T::lit(2.0) * T::SQRT_2() * visibility
}
