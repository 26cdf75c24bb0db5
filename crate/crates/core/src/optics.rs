//! Linear-optical operations on [`SuperposedState`]: beam splitter,
//! displacement, loss and phase shift. Each acts branch by branch on the
//! coherent amplitudes, so branch count is preserved.

use crate::coherent::{ModeLabel, StateError, SuperposedState};
use crate::scalar::{cis, ComplexAmp, Real};

/// Beam splitter of reflectivity `λ` taking modes `in1`, `in2` to `out3`, `out4`:
///
/// `(μ, ν) ↦ (√(1−λ)μ + √λν, −√λμ + √(1−λ)ν)`
#[derive(Clone, Debug, PartialEq)]
pub struct BeamSplitterSpec<T> {
    pub reflectivity: T,
    pub in1: ModeLabel,
    pub in2: ModeLabel,
    pub out3: ModeLabel,
    pub out4: ModeLabel,
}

impl<T: Real> BeamSplitterSpec<T> {
    pub fn new(reflectivity: T, ports: [&str; 4]) -> Result<Self, StateError> {
        let spec = Self {
            reflectivity,
            in1: ports[0].into(),
            in2: ports[1].into(),
            out3: ports[2].into(),
            out4: ports[3].into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), StateError> {
        let l = self.reflectivity;
        if !(l >= T::zero() && l <= T::one()) {
            return Err(StateError::InvalidReflectivity(l.as_f64()));
        }
        let ports = [&self.in1, &self.in2, &self.out3, &self.out4];
        for i in 0..4 {
            for j in 0..i {
                if ports[i] == ports[j] {
                    return Err(StateError::PortAliasing);
                }
            }
        }
        Ok(())
    }
}

/// Loss modelled as a beam splitter of transmittance `η` that routes
/// `√(1−η)ν` into a fresh environment mode.
#[derive(Clone, Debug, PartialEq)]
pub struct LossSpec<T> {
    pub transmittance: T,
    pub signal: ModeLabel,
    pub environment: ModeLabel,
}

impl<T: Real> LossSpec<T> {
    pub fn new(transmittance: T, signal: &str, environment: &str) -> Self {
        Self {
            transmittance,
            signal: signal.into(),
            environment: environment.into(),
        }
    }
}

pub fn apply_beam_splitter<T: Real>(
    state: &SuperposedState<T>,
    spec: &BeamSplitterSpec<T>,
) -> Result<SuperposedState<T>, StateError> {
    spec.validate()?;
    let i1 = state.mode_index(&spec.in1)?;
    let i2 = state.mode_index(&spec.in2)?;
    let t = (T::one() - spec.reflectivity).sqrt();
    let r = spec.reflectivity.sqrt();
    let mut out = state.clone();
    for b in out.branches_mut() {
        let (mu, nu) = (b.amps[i1], b.amps[i2]);
        b.amps[i1] = mu * t + nu * r;
        b.amps[i2] = -mu * r + nu * t;
    }
    out.rename_mode(i1, spec.out3.clone())?;
    out.rename_mode(i2, spec.out4.clone())?;
    Ok(out)
}

/// `D(τ)|ν⟩ = e^{(τν* − τ*ν)/2}|ν + τ⟩`; the phase lands in the branch coefficient.
pub fn apply_displacement<T: Real>(
    state: &SuperposedState<T>,
    mode: &ModeLabel,
    tau: ComplexAmp<T>,
) -> Result<SuperposedState<T>, StateError> {
    let i = state.mode_index(mode)?;
    let mut out = state.clone();
    for b in out.branches_mut() {
        let nu = b.amps[i];
        b.coeff = b.coeff * cis((tau * nu.conj()).im);
        b.amps[i] = nu + tau;
    }
    Ok(out)
}

/// Displacement with the phase prefactor dropped: `|ν⟩ ↦ |ν + τ⟩`.
pub fn apply_displacement_phase_free<T: Real>(
    state: &SuperposedState<T>,
    mode: &ModeLabel,
    tau: ComplexAmp<T>,
) -> Result<SuperposedState<T>, StateError> {
    let i = state.mode_index(mode)?;
    let mut out = state.clone();
    for b in out.branches_mut() {
        b.amps[i] = b.amps[i] + tau;
    }
    Ok(out)
}

pub fn apply_loss<T: Real>(
    state: &SuperposedState<T>,
    spec: &LossSpec<T>,
) -> Result<SuperposedState<T>, StateError> {
    let eta = spec.transmittance;
    if !(eta >= T::zero() && eta <= T::one()) {
        return Err(StateError::InvalidTransmittance(eta.as_f64()));
    }
    let i = state.mode_index(&spec.signal)?;
    let keep = eta.sqrt();
    let leak = (T::one() - eta).sqrt();
    let mut out = state.clone();
    out.push_mode(spec.environment.clone(), |b| b.amps[i] * leak)?;
    for b in out.branches_mut() {
        b.amps[i] = b.amps[i] * keep;
    }
    Ok(out)
}

/// Splits a total transmittance over `segments` equal beam splitters, each
/// with its own environment mode `{env_prefix}{k}`.
pub fn apply_loss_chain<T: Real>(
    state: &SuperposedState<T>,
    signal: &ModeLabel,
    total_transmittance: T,
    segments: usize,
    env_prefix: &str,
) -> Result<SuperposedState<T>, StateError> {
    let segments = segments.max(1);
    let per = total_transmittance.powf(T::one() / T::from_usize(segments).unwrap());
    let mut out = state.clone();
    for k in 0..segments {
        let spec = LossSpec {
            transmittance: per,
            signal: signal.clone(),
            environment: ModeLabel::new(format!("{env_prefix}{k}")),
        };
        out = apply_loss(&out, &spec)?;
    }
    Ok(out)
}

/// `ν ↦ e^{iθ}ν` in one mode.
pub fn apply_phase<T: Real>(
    state: &SuperposedState<T>,
    mode: &ModeLabel,
    theta: T,
) -> Result<SuperposedState<T>, StateError> {
    let i = state.mode_index(mode)?;
    let rot = cis(theta);
    let mut out = state.clone();
    for b in out.branches_mut() {
        b.amps[i] = b.amps[i] * rot;
    }
    Ok(out)
}

/// Photon number of one branch, `Σ_m |amp_m|²`.
pub fn branch_photon_number<T: Real>(amps: &[ComplexAmp<T>]) -> T {
    amps.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
}
