//! Closed-form success probabilities and visibilities.
//!
//! With `x = |α′|² sin²ϕ` the four-fold protocol succeeds with probability
//! `x⁴ e^{−8x}/2 · (1 − ν cos Δσ)` and the two-fold one with
//! `x² e^{−8x}/2 · (1 − ν cos Δσ)`, where `ν` is the environment overlap.

use super::{ParamError, Protocol, ProtocolParams, RateReport};
use crate::link::{attenuate, ChannelParams};
use crate::scalar::{ComplexAmp, Real};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// How the environment-overlap visibility is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisibilityForm {
    /// `exp(−4 N_L sin²ϕ)`, what the branch algebra produces.
    #[default]
    Exact,
    /// `exp(−4 N_L ϕ²)`, the small-angle expansion used for quoted figures.
    SmallAngle,
}

impl VisibilityForm {
    pub fn eval<T: Real>(self, n_lost: T, phi: T) -> T {
        match self {
            VisibilityForm::Exact => visibility_exact(n_lost, phi),
            VisibilityForm::SmallAngle => (-T::lit(4.0) * n_lost * phi * phi).exp(),
        }
    }
}

/// Small-angle visibility `exp(−4 N_L ϕ²)`.
pub fn visibility<T: Real>(n_lost: T, phi: T) -> Result<T, ParamError> {
    if n_lost.is_nan() || n_lost < T::zero() {
        return Err(ParamError::NegativeLoss(n_lost.as_f64()));
    }
    Ok(VisibilityForm::SmallAngle.eval(n_lost, phi))
}

/// `|⟨γ₊|γ₋⟩|² = exp(−4 N_L sin²ϕ)`.
pub fn visibility_exact<T: Real>(n_lost: T, phi: T) -> T {
    let s = phi.sin();
    (-T::lit(4.0) * n_lost * s * s).exp()
}

/// `x^k e^{−8x} / 2`, evaluated in log space so it degrades to 0 rather
/// than through subnormals.
fn prefactor<T: Real>(x: T, k: i32) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    (T::lit(f64::from(k)) * x.ln() - T::lit(8.0) * x - T::LN_2()).exp()
}

fn fringe<T: Real>(v: T, delta_sigma: T) -> T {
    T::one() - v * delta_sigma.cos()
}

/// Four-fold success probability.
pub fn usd4_closed_form<T: Real>(
    alpha_prime_sq: T,
    n_lost: T,
    phi: T,
    delta_sigma: T,
    form: VisibilityForm,
) -> T {
    let s = phi.sin();
    prefactor(alpha_prime_sq * s * s, 4) * fringe(form.eval(n_lost, phi), delta_sigma)
}

/// Two-fold success probability.
pub fn usd2_closed_form<T: Real>(
    alpha_prime_sq: T,
    n_lost: T,
    phi: T,
    delta_sigma: T,
    form: VisibilityForm,
) -> T {
    let s = phi.sin();
    prefactor(alpha_prime_sq * s * s, 2) * fringe(form.eval(n_lost, phi), delta_sigma)
}

/// `|⟨1|α′_{D±}⟩|² = 4|α′|² sin²ϕ · e^{−4|α′|² sin²ϕ}`
pub fn usd2_single_photon_prob<T: Real>(alpha_prime: T, phi: T) -> T {
    let y = T::lit(4.0) * alpha_prime * alpha_prime * phi.sin().powi(2);
    y * (-y).exp()
}

/// Displacements `(L, R)` that send the `−2ϕ` and `+2ϕ` half-beams to vacuum
/// after the 50/50 split.
pub fn usd4_displacements<T: Real>(alpha_prime: T, phi: T) -> (ComplexAmp<T>, ComplexAmp<T>) {
    let a = alpha_prime * T::FRAC_1_SQRT_2();
    let (s2, c2) = (T::lit(2.0) * phi).sin_cos();
    (
        Complex::new(-a * s2, -a * c2),
        Complex::new(a * s2, -a * c2),
    )
}

pub fn closed_form_probability<T: Real>(
    protocol: Protocol,
    params: &ProtocolParams<T>,
    channel: &ChannelParams<T>,
    form: VisibilityForm,
) -> T {
    let att = attenuate(params.alpha, channel);
    let f = match protocol {
        Protocol::Usd4 => usd4_closed_form,
        Protocol::Usd2 => usd2_closed_form,
    };
    f(att.alpha_prime_sq(), att.n_lost, params.phi, params.delta_sigma(), form)
}

pub fn closed_form_report<T: Real>(
    protocol: Protocol,
    params: &ProtocolParams<T>,
    channel: &ChannelParams<T>,
    form: VisibilityForm,
) -> RateReport<T> {
    let at = |p: &ProtocolParams<T>| closed_form_probability(protocol, p, channel, form);
    RateReport::from_fringe(
        at(params),
        at(&params.with_delta_sigma(T::PI())),
        at(&params.with_delta_sigma(T::zero())),
    )
}
