use super::ProtocolParams;
use crate::coherent::{Branch, ModeLabel, SuperposedState};
use crate::link::{attenuate, ChannelParams};
use crate::optics::{apply_loss, apply_phase, LossSpec};
use crate::scalar::{cis, Real};
use num_complex::Complex;

/// Mode names used by the protocol pipelines.
pub mod modes {
    pub const BEAM1: &str = "beam1";
    pub const BEAM2: &str = "beam2";
    pub const ENV_A: &str = "env_a";
    pub const ENV_B: &str = "env_b";
    pub const VAC_A: &str = "vac_a";
    pub const VAC_B: &str = "vac_b";
    pub const OUT_A3: &str = "out_a3";
    pub const OUT_A4: &str = "out_a4";
    pub const OUT_B3: &str = "out_b3";
    pub const OUT_B4: &str = "out_b4";
}

use modes::*;

/// `(|α₊⟩|β₋⟩ + |α₋⟩|β₊⟩)/√2` with `α± = α e^{±iϕ}` and `β = α`.
///
/// The `1/√2` is kept as written; the squared norm is `1 + |⟨α₊|α₋⟩|²`,
/// which approaches 1 only once the two phase-shifted states are
/// well separated.
pub fn build_source_state<T: Real>(params: &ProtocolParams<T>) -> SuperposedState<T> {
    let a = params.alpha;
    let plus = Complex::from_polar(a, params.phi);
    let minus = Complex::from_polar(a, -params.phi);
    let c = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    SuperposedState::new(
        vec![BEAM1.into(), BEAM2.into()],
        vec![Branch::new(c, vec![plus, minus]), Branch::new(c, vec![minus, plus])],
    )
    .expect("fixed two-mode layout")
}

/// The eight terms of the pre-measurement state, transcribed term by term.
/// `(sign, σ₁ power, σ₂ power, source sign s, path t₁, path t₂)`
const TERMS: [(i8, u8, u8, i8, i8, i8); 8] = [
    (1, 0, 1, 1, 1, -1),
    (-1, 0, 0, 1, 1, 1),
    (-1, 1, 1, 1, -1, -1),
    (1, 1, 0, 1, -1, 1),
    (-1, 0, 1, -1, 1, -1),
    (1, 0, 0, -1, 1, 1),
    (1, 1, 1, -1, -1, -1),
    (-1, 1, 0, -1, -1, 1),
];

/// Eight-branch state over `(beam1, beam2, env_a, env_b)` just before the
/// discrimination optics, with loss terms included.
///
/// Beam amplitudes are `i|α′| e^{i(s+t)ϕ}` where `s` is the source sign and
/// `t` the analysis-interferometer path, so the zero-net-phase state is
/// `i|α′|`. Environment amplitudes are `√(1−η) α e^{isϕ}`. Beam 2 carries the
/// opposite source sign.
pub fn build_analysis_state<T: Real>(
    params: &ProtocolParams<T>,
    channel: &ChannelParams<T>,
) -> SuperposedState<T> {
    let att = attenuate(params.alpha, channel);
    let leak = att.n_lost.sqrt();
    let i_ap = Complex::new(T::zero(), att.alpha_prime);
    let eighth = T::lit(0.125);
    let phase = |net: i8| {
        if net == 0 {
            Complex::new(T::one(), T::zero())
        } else {
            cis(T::lit(f64::from(net)) * params.phi)
        }
    };
    let branches = TERMS
        .iter()
        .map(|&(sign, p1, p2, s, t1, t2)| {
            let sigma = T::lit(f64::from(p1)) * params.sigma1 + T::lit(f64::from(p2)) * params.sigma2;
            let coeff = cis(sigma) * (T::lit(f64::from(sign)) * eighth);
            let amps = vec![
                i_ap * phase(s + t1),
                i_ap * phase(-s + t2),
                phase(s) * leak,
                phase(-s) * leak,
            ];
            Branch::new(coeff, amps)
        })
        .collect();
    SuperposedState::new(
        vec![BEAM1.into(), BEAM2.into(), ENV_A.into(), ENV_B.into()],
        branches,
    )
    .expect("fixed four-mode layout")
}

/// Same state assembled from physical steps: source superposition built by
/// conditional phase shifts, heralding of the source photon, one loss beam
/// splitter per beam, then an analysis interferometer on each beam.
pub fn build_analysis_state_compositional<T: Real>(
    params: &ProtocolParams<T>,
    channel: &ChannelParams<T>,
) -> SuperposedState<T> {
    let (b1, b2): (ModeLabel, ModeLabel) = (BEAM1.into(), BEAM2.into());
    let a = Complex::new(params.alpha, T::zero());
    let base = SuperposedState::product([(BEAM1, a), (BEAM2, a)]).expect("two modes");
    let shifted = |s: T| {
        let st = apply_phase(&base, &b1, s * params.phi).expect("beam1");
        apply_phase(&st, &b2, -s * params.phi).expect("beam2")
    };
    // source photon detected at the heralding port: its two paths arrive
    // with opposite sign
    let half_sqrt = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    let herald = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    let source = shifted(T::one())
        .scaled(half_sqrt * -herald)
        .superpose(shifted(-T::one()).scaled(half_sqrt * herald))
        .expect("same registry");

    let eta = channel.transmittance();
    let lossy = apply_loss(&source, &LossSpec::new(eta, BEAM1, ENV_A)).expect("fresh env_a");
    let lossy = apply_loss(&lossy, &LossSpec::new(eta, BEAM2, ENV_B)).expect("fresh env_b");

    let st = analysis_interferometer(&lossy, &b1, params.phi, params.sigma1);
    analysis_interferometer(&st, &b2, params.phi, params.sigma2)
}

/// Single photon through a Kerr interferometer: path `+` shifts the beam by
/// `+ϕ`, path `−` by `−ϕ` and picks up `−e^{iσ}`; both share a `π/2` offset.
fn analysis_interferometer<T: Real>(
    state: &SuperposedState<T>,
    beam: &ModeLabel,
    phi: T,
    sigma: T,
) -> SuperposedState<T> {
    let half = T::lit(0.5);
    let plus = apply_phase(state, beam, T::FRAC_PI_2() + phi)
        .expect("beam present")
        .scaled(Complex::new(half, T::zero()));
    let minus = apply_phase(state, beam, T::FRAC_PI_2() - phi)
        .expect("beam present")
        .scaled(-cis(sigma) * half);
    plus.superpose(minus).expect("same registry")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{inner_product, overlap};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn params(alpha: f64, phi: f64, s1: f64, s2: f64) -> ProtocolParams<f64> {
        ProtocolParams::new(alpha, phi, s1, s2).unwrap()
    }

    /// Pairs every branch of `a` with the closest branch of `b` (amplitudes
    /// and coefficient) and returns the worst relative mismatch.
    fn branchwise_mismatch(a: &SuperposedState<f64>, b: &SuperposedState<f64>) -> f64 {
        assert_eq!(a.registry(), b.registry());
        assert_eq!(a.len(), b.len());
        let scale = a.branches().iter().flat_map(|x| &x.amps).map(|z| z.norm()).fold(1.0, f64::max);
        let dist = |x: &Branch<f64>, y: &Branch<f64>| {
            let da = x.amps.iter().zip(&y.amps).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            (da / scale).max((x.coeff - y.coeff).norm() / x.coeff.norm())
        };
        let mut used = vec![false; b.len()];
        let mut worst = 0.0f64;
        for ba in a.branches() {
            let (k, d) = b
                .branches()
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, bb)| (k, dist(ba, bb)))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            used[k] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn source_branch_amplitudes() {
        let st = build_source_state(&params(100.0, 0.0028, 0.0, 0.0));
        let b = &st.branches()[0];
        assert_relative_eq!((b.amps[0] - C::from_polar(100.0, 0.0028)).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((b.amps[1] - C::from_polar(100.0, -0.0028)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn source_collapses_at_zero_phi() {
        let st = build_source_state(&params(1.7, 0.0, 0.0, 0.0));
        assert_eq!(st.branches()[0].amps, st.branches()[1].amps);
        // two identical halves of amplitude 1/√2 add to √2 × a product state
        assert_relative_eq!(st.norm_sqr(), 2.0, max_relative = 1e-14);
        let unit = st.clone().scaled(C::new(1.0 / st.norm_sqr().sqrt(), 0.0));
        let product = SuperposedState::product([(BEAM1, C::new(1.7, 0.0)), (BEAM2, C::new(1.7, 0.0))]).unwrap();
        assert_relative_eq!(inner_product(&unit, &product).unwrap().norm(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn source_norm_closed_form() {
        let p = params(2.0, 0.3, 0.0, 0.0);
        let st = build_source_state(&p);
        let ov = overlap(C::from_polar(2.0, 0.3), C::from_polar(2.0, -0.3));
        assert_relative_eq!(st.norm_sqr(), 1.0 + ov.norm_sqr(), max_relative = 1e-14);
    }

    #[test]
    fn conditional_phases_build_source() {
        let p = params(3.0, 0.21, 0.0, 0.0);
        let base = SuperposedState::product([(BEAM1, C::new(3.0, 0.0)), (BEAM2, C::new(3.0, 0.0))]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mk = |sgn: f64| {
            let st = apply_phase(&base, &BEAM1.into(), sgn * 0.21).unwrap();
            apply_phase(&st, &BEAM2.into(), -sgn * 0.21).unwrap().scaled(C::new(s, 0.0))
        };
        let built = mk(1.0).superpose(mk(-1.0)).unwrap();
        assert!(branchwise_mismatch(&built, &build_source_state(&p)) < 1e-14);
    }

    #[test]
    fn lossless_state_has_vacuum_environment_and_sign_pattern() {
        let st = build_analysis_state(&params(5.0, 0.1, 0.0, 0.0), &ChannelParams::lossless());
        assert_eq!(st.len(), 8);
        let signs: Vec<f64> = st.branches().iter().map(|b| b.coeff.re.signum()).collect();
        assert_eq!(signs, vec![1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0]);
        for b in st.branches() {
            assert_eq!(b.amps[2], C::new(0.0, 0.0));
            assert_eq!(b.amps[3], C::new(0.0, 0.0));
            assert_eq!(b.coeff.im, 0.0);
            assert_eq!(b.coeff.norm(), 0.125);
        }
    }

    #[test]
    fn sigma_phases_per_term() {
        let (s1, s2) = (0.4, 1.1);
        let st = build_analysis_state(&params(5.0, 0.1, s1, s2), &ChannelParams::lossless());
        let phases = [s2, 0.0, s1 + s2, s1, s2, 0.0, s1 + s2, s1];
        let signs = [1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0];
        for ((b, &ph), &sg) in st.branches().iter().zip(&phases).zip(&signs) {
            assert!((b.coeff - C::from_polar(0.125, ph) * sg).norm() < 1e-16);
        }
    }

    #[test]
    fn zero_net_phase_amplitude_is_imaginary() {
        let ch = ChannelParams::new(0.15, 70.0).unwrap();
        let st = build_analysis_state(&params(100.0, 0.0028, 0.0, 0.0), &ch);
        // term 4: beam1 (+,−), beam2 (−,+) ⇒ both zero net phase
        let b = &st.branches()[3];
        let ap = 891.251_f64.sqrt();
        assert_eq!(b.amps[0].re, 0.0);
        assert!((b.amps[0].im - ap).abs() < 1e-4);
        assert_eq!(b.amps[0], b.amps[1]);
        // environment: √(1−η) α e^{+iϕ} on env_a for source sign +
        let g = C::from_polar(9108.75_f64.sqrt(), 0.0028);
        assert!((b.amps[2] - g).norm() < 1e-3);
        assert!((b.amps[3] - g.conj()).norm() < 1e-3);
    }

    proptest! {
        #[test]
        fn direct_equals_compositional(
            alpha in 0.5..120.0f64,
            phi in -0.7..0.7f64,
            s1 in -4.0..4.0f64,
            s2 in -4.0..4.0f64,
            eta in 0.01..=1.0f64,
        ) {
            let p = params(alpha, phi, s1, s2);
            let ch = ChannelParams::from_transmittance(eta).unwrap();
            let direct = build_analysis_state(&p, &ch);
            let comp = build_analysis_state_compositional(&p, &ch);
            prop_assert!(branchwise_mismatch(&direct, &comp) < 1e-12);
            let (n1, n2) = (direct.norm_sqr(), comp.norm_sqr());
            // the eight coefficients have unit total magnitude, so the norm is
            // a sum of O(1) terms that may cancel
            prop_assert!((n1 - n2).abs() <= 1e-12);
        }
    }
}
