use super::closed::usd4_displacements;
use super::states::{build_analysis_state, modes::*};
use super::{Protocol, ProtocolParams, RateReport};
use crate::coherent::{
    detection_probability, project_single_photon, DetectionModel, ModeLabel, StateError,
    SuperposedState,
};
use crate::link::{attenuate, ChannelParams};
use crate::optics::{
    apply_beam_splitter, apply_displacement, apply_displacement_phase_free, BeamSplitterSpec,
};
use crate::scalar::{ComplexAmp, Real};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Which displacement operator the pipeline applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplacementConvention {
    /// `D(τ)|ν⟩ = e^{i Im(τν*)}|ν+τ⟩`
    #[default]
    Unitary,
    /// `|ν⟩ ↦ |ν+τ⟩`
    PhaseFree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub detection: DetectionModel,
    pub displacement: DisplacementConvention,
}

fn displace<T: Real>(
    state: &SuperposedState<T>,
    mode: &str,
    tau: ComplexAmp<T>,
    convention: DisplacementConvention,
) -> Result<SuperposedState<T>, StateError> {
    let mode = ModeLabel::from(mode);
    match convention {
        DisplacementConvention::Unitary => apply_displacement(state, &mode, tau),
        DisplacementConvention::PhaseFree => apply_displacement_phase_free(state, &mode, tau),
    }
}

fn detect<T: Real>(
    state: &SuperposedState<T>,
    detectors: &[&str],
    model: DetectionModel,
) -> Result<T, StateError> {
    let labels: Vec<ModeLabel> = detectors.iter().map(|&d| d.into()).collect();
    match model {
        DetectionModel::SinglePhoton => {
            let mut st = state.clone();
            for m in &labels {
                st = project_single_photon(&st, m)?;
            }
            Ok(st.norm_sqr())
        }
        DetectionModel::Click => detection_probability(state, &labels, model),
    }
}

fn usd4_pipeline<T: Real>(
    params: &ProtocolParams<T>,
    channel: &ChannelParams<T>,
    opts: &PipelineOptions,
) -> Result<T, StateError> {
    let alpha_prime = attenuate(params.alpha, channel).alpha_prime;
    let (l, r) = usd4_displacements(alpha_prime, params.phi);
    let half = T::lit(0.5);
    let mut st = build_analysis_state(params, channel)
        .with_vacuum_mode(VAC_A)?
        .with_vacuum_mode(VAC_B)?;
    st = apply_beam_splitter(&st, &BeamSplitterSpec::new(half, [VAC_A, BEAM1, OUT_A3, OUT_A4])?)?;
    st = apply_beam_splitter(&st, &BeamSplitterSpec::new(half, [VAC_B, BEAM2, OUT_B3, OUT_B4])?)?;
    for (mode, tau) in [(OUT_A3, l), (OUT_A4, r), (OUT_B3, l), (OUT_B4, r)] {
        st = displace(&st, mode, tau, opts.displacement)?;
    }
    detect(&st, &[OUT_A3, OUT_A4, OUT_B3, OUT_B4], opts.detection)
}

fn usd2_pipeline<T: Real>(
    params: &ProtocolParams<T>,
    channel: &ChannelParams<T>,
    opts: &PipelineOptions,
) -> Result<T, StateError> {
    let alpha_prime = attenuate(params.alpha, channel).alpha_prime;
    let tau = Complex::new(T::zero(), -alpha_prime);
    let mut st = build_analysis_state(params, channel);
    for mode in [BEAM1, BEAM2] {
        st = displace(&st, mode, tau, opts.displacement)?;
    }
    detect(&st, &[BEAM1, BEAM2], opts.detection)
}

/// Operator-pipeline success probability at the phases in `params`.
pub fn pipeline_probability<T: Real>(
    protocol: Protocol,
    params: &ProtocolParams<T>,
    channel: &ChannelParams<T>,
    opts: &PipelineOptions,
) -> T {
    let p = match protocol {
        Protocol::Usd4 => usd4_pipeline(params, channel, opts),
        Protocol::Usd2 => usd2_pipeline(params, channel, opts),
    };
    // a squared norm summed over interfering branches; cancellation can leave
    // it a few ulps below zero
    p.expect("pipeline mode layout is fixed").max(T::zero())
}

pub fn evaluate_with<T: Real>(
    protocol: Protocol,
    params: &ProtocolParams<T>,
    channel: &ChannelParams<T>,
    opts: &PipelineOptions,
) -> RateReport<T> {
    let at = |p: &ProtocolParams<T>| pipeline_probability(protocol, p, channel, opts);
    RateReport::from_fringe(
        at(params),
        at(&params.with_delta_sigma(T::PI())),
        at(&params.with_delta_sigma(T::zero())),
    )
}

pub fn evaluate<T: Real>(
    protocol: Protocol,
    params: &ProtocolParams<T>,
    channel: &ChannelParams<T>,
) -> RateReport<T> {
    evaluate_with(protocol, params, channel, &PipelineOptions::default())
}

/// Four-fold scheme: 50/50 split of each beam, displacements `L`, `R` on the
/// two halves, single photon required in all four detectors.
pub fn protocol_usd4<T: Real>(params: &ProtocolParams<T>, channel: &ChannelParams<T>) -> RateReport<T> {
    evaluate(Protocol::Usd4, params, channel)
}

pub fn protocol_usd4_with<T: Real>(
    params: &ProtocolParams<T>,
    channel: &ChannelParams<T>,
    opts: &PipelineOptions,
) -> RateReport<T> {
    evaluate_with(Protocol::Usd4, params, channel, opts)
}

/// Two-fold scheme: each beam displaced by `−i|α′|` so the zero-net-phase
/// component goes to vacuum; single photon required in both detectors.
pub fn protocol_usd2<T: Real>(params: &ProtocolParams<T>, channel: &ChannelParams<T>) -> RateReport<T> {
    evaluate(Protocol::Usd2, params, channel)
}

pub fn protocol_usd2_with<T: Real>(
    params: &ProtocolParams<T>,
    channel: &ChannelParams<T>,
    opts: &PipelineOptions,
) -> RateReport<T> {
    evaluate_with(Protocol::Usd2, params, channel, opts)
}
