//! Phase-entangled coherent states over lossy fiber links.
//!
//! The analytic layers ([`coherent`], [`optics`], [`link`], [`protocols`])
//! are generic over the scalar type (`f32` or `f64`); the aliases below fix
//! it to `f64`. [`fock`] is a truncated number-basis oracle for checking the
//! analytic results at small amplitude, and [`experiment`] turns probabilities
//! into counting rates, Monte Carlo runs and range plans.

pub mod coherent;
pub mod experiment;
pub mod fock;
pub mod link;
pub mod optics;
pub mod protocols;
pub mod scalar;

pub use coherent::{
    detection_probability, inner_product, overlap, project_single_photon, single_photon_amp,
    vacuum_amp, Branch, DetectionModel, ModeLabel, StateError, SuperposedState,
};
pub use link::{attenuate, Attenuation, ChannelParams, LinkError};
pub use optics::{
    apply_beam_splitter, apply_displacement, apply_displacement_phase_free, apply_loss,
    apply_loss_chain, apply_phase, BeamSplitterSpec, LossSpec,
};
pub use protocols::{ParamError, Protocol, ProtocolParams, RateReport};
pub use scalar::{ComplexAmp, Real};

pub type Amp = ComplexAmp<f64>;
pub type State = SuperposedState<f64>;
pub type StateF32 = SuperposedState<f32>;
pub type Params = ProtocolParams<f64>;
pub type Channel = ChannelParams<f64>;
pub type Report = RateReport<f64>;
