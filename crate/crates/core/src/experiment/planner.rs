use super::{check_source_rate, ExperimentError};
use crate::link::ChannelParams;
use crate::protocols::{
    closed_form_report, visibility, visibility_exact, Protocol, ProtocolParams,
    VisibilityForm, CHSH_VISIBILITY_THRESHOLD,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, LN_2};

/// Resolution of [`max_range`] on the total separation.
pub const RANGE_RESOLUTION_KM: f64 = 0.1;

const GRID_POINTS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitingFactor {
    /// The fringe-maximum coincidence rate falls below the floor.
    Rate,
    /// The visibility drops to `1/√2`.
    Visibility,
}

impl std::fmt::Display for LimitingFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LimitingFactor::Rate => "rate",
            LimitingFactor::Visibility => "visibility",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangePlan {
    pub total_distance_km: f64,
    pub limiting_factor: LimitingFactor,
    /// Coincidence rate at `σ₁ − σ₂ = π` at the reported distance.
    pub rate_max_hz: f64,
    pub visibility: f64,
    pub chsh_s: f64,
}

/// `exp(−4α²ϕ²)`: the visibility once the whole beam is lost.
pub fn asymptotic_visibility(alpha: f64, phi: f64) -> Result<f64, ExperimentError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(ExperimentError::Alpha(alpha));
    }
    visibility(alpha * alpha, phi).map_err(|_| ExperimentError::Alpha(alpha))
}

struct Link<'a> {
    params: &'a ProtocolParams<f64>,
    loss: f64,
    source_rate: f64,
    which: Protocol,
}

impl Link<'_> {
    fn channel(&self, per_arm_km: f64) -> ChannelParams<f64> {
        ChannelParams::new(self.loss, per_arm_km).expect("validated link")
    }

    fn rate(&self, per_arm_km: f64) -> f64 {
        let ch = self.channel(per_arm_km);
        closed_form_report(self.which, self.params, &ch, VisibilityForm::Exact).p_max * self.source_rate
    }

    fn per_arm_for_transmittance(&self, eta: f64) -> f64 {
        -10.0 * eta.log10() / self.loss
    }

    fn plan(&self, per_arm_km: f64, limiting_factor: LimitingFactor) -> RangePlan {
        let ch = self.channel(per_arm_km);
        let r = closed_form_report(self.which, self.params, &ch, VisibilityForm::Exact);
        RangePlan {
            total_distance_km: ch.total_distance_km(),
            limiting_factor,
            rate_max_hz: r.p_max * self.source_rate,
            visibility: r.visibility,
            chsh_s: r.chsh_s,
        }
    }
}

/// Largest total separation with fringe-maximum rate at least `rate_floor`
/// and visibility above `1/√2`.
///
/// Beyond the distance where `x = |α′|² sin²ϕ` falls to `k/8` the rate only
/// decreases, so the crossing there is found by bisection; closer in, the
/// rate can rise with distance and a grid scan finds the last feasible point
/// before refining it.
pub fn max_range(
    params: &ProtocolParams<f64>,
    loss_db_per_km: f64,
    rate_floor: f64,
    source_rate_hz: f64,
    which: Protocol,
) -> Result<RangePlan, ExperimentError> {
    if rate_floor.is_nan() || rate_floor <= 0.0 {
        return Err(ExperimentError::Floor(rate_floor));
    }
    if !(loss_db_per_km.is_finite() && loss_db_per_km > 0.0) {
        return Err(ExperimentError::Loss(loss_db_per_km));
    }
    check_source_rate(source_rate_hz)?;
    let link = Link {
        params,
        loss: loss_db_per_km,
        source_rate: source_rate_hz,
        which,
    };
    let a2 = params.alpha * params.alpha;
    let sin2 = params.phi.sin().powi(2);
    let infeasible = |best_rate: f64| ExperimentError::Infeasible {
        floor: rate_floor,
        best_rate,
    };
    if sin2 == 0.0 {
        return Err(infeasible(0.0));
    }

    // visibility exp(−4 N_L sin²ϕ) > 1/√2  ⇔  N_L < ln2 / (8 sin²ϕ)
    let n_star = LN_2 / (8.0 * sin2);
    let d_vis = if n_star >= a2 {
        f64::INFINITY
    } else {
        link.per_arm_for_transmittance(1.0 - n_star / a2)
    };
    let eta_mono = f64::from(which.prefactor_power()) / (8.0 * a2 * sin2);
    let d_mono = if eta_mono >= 1.0 {
        0.0
    } else {
        link.per_arm_for_transmittance(eta_mono)
    };
    let tol = RANGE_RESOLUTION_KM / 4.0;
    let bisect = |mut lo: f64, mut hi: f64| {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if link.rate(mid) >= rate_floor {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    if d_mono < d_vis && link.rate(d_mono) >= rate_floor {
        if d_vis.is_finite() && link.rate(d_vis) >= rate_floor {
            return Ok(link.plan(d_vis, LimitingFactor::Visibility));
        }
        let hi = if d_vis.is_finite() {
            d_vis
        } else {
            let mut hi = d_mono.max(1.0);
            while link.rate(hi) >= rate_floor {
                hi *= 2.0;
            }
            hi
        };
        return Ok(link.plan(bisect(d_mono, hi), LimitingFactor::Rate));
    }

    let upper = d_mono.min(d_vis);
    let step = upper / GRID_POINTS as f64;
    let rates: Vec<f64> = (0..=GRID_POINTS).map(|i| link.rate(i as f64 * step)).collect();
    let Some(last) = rates.iter().rposition(|&r| r >= rate_floor) else {
        let best = rates.iter().copied().fold(0.0, f64::max);
        return Err(infeasible(best));
    };
    if last == GRID_POINTS {
        let factor = if upper == d_vis {
            LimitingFactor::Visibility
        } else {
            LimitingFactor::Rate
        };
        return Ok(link.plan(upper, factor));
    }
    let lo = last as f64 * step;
    Ok(link.plan(bisect(lo, lo + step), LimitingFactor::Rate))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiOptimum {
    pub phi: f64,
    /// Fringe-maximum success probability at `phi`.
    pub p_max: f64,
    pub visibility: f64,
    /// True when the optimum sits on the visibility (or `π/4`) boundary.
    pub constrained: bool,
}

/// Phase maximizing `x^k e^{−8x}` (`x = |α′|² sin²ϕ`, `k` = 2 or 4) subject to
/// visibility above `1/√2`, by golden-section search.
pub fn optimize_phi(
    alpha: f64,
    channel: &ChannelParams<f64>,
    which: Protocol,
) -> Result<PhiOptimum, ExperimentError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(ExperimentError::Alpha(alpha));
    }
    let att = crate::link::attenuate(alpha, channel);
    let ap2 = att.alpha_prime_sq();
    let k = f64::from(which.prefactor_power());

    let sin2_vis = if att.n_lost > 0.0 {
        LN_2 / (8.0 * att.n_lost)
    } else {
        f64::INFINITY
    };
    let hi = if sin2_vis >= 0.5 {
        FRAC_PI_4
    } else {
        sin2_vis.sqrt().asin() * (1.0 - 1e-9)
    };
    let objective = |phi: f64| {
        let x = ap2 * phi.sin().powi(2);
        k * x.ln() - 8.0 * x
    };
    let phi = golden_section_max(objective, 0.0, hi, 1e-14);

    let params = ProtocolParams::new(alpha, phi, std::f64::consts::PI, 0.0)
        .map_err(|_| ExperimentError::Alpha(alpha))?;
    let report = closed_form_report(which, &params, channel, VisibilityForm::Exact);
    if !(report.p_max > 0.0) {
        return Err(ExperimentError::DegenerateObjective {
            alpha_prime_sq: ap2,
        });
    }
    debug_assert!(visibility_exact(att.n_lost, phi) > CHSH_VISIBILITY_THRESHOLD || att.n_lost == 0.0);
    Ok(PhiOptimum {
        phi,
        p_max: report.p_max,
        visibility: report.visibility,
        constrained: k / (8.0 * ap2) >= hi.sin().powi(2),
    })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol * b.abs().max(1e-300) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
