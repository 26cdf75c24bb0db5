//! Truncated number-basis oracle.
//!
//! Coherent states are expanded in `|0⟩..|dim−1⟩`, displacements and beam
//! splitters are matrix exponentials of their truncated generators, and
//! detector amplitudes are read off as number-basis coefficients. None of
//! this goes through the closed-form overlap algebra, so agreement with
//! [`crate::protocols`] is a real check. Environment modes are contracted
//! with the exact coherent overlap, since they are never measured.

use crate::coherent::overlap;
use crate::link::{attenuate, ChannelParams};
use crate::protocols::{build_analysis_state, Protocol, ProtocolParams};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

/// Largest surviving amplitude `|α′|` the protocol oracle accepts.
pub const MAX_ORACLE_ALPHA_PRIME: f64 = 4.0;

/// Tail weight above which a truncated result is rejected.
pub const TRUNCATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("dimension {dim} below hard floor {floor} for mean photon number {mean}")]
    DimBelowFloor { dim: usize, floor: usize, mean: f64 },
    #[error("reflectivity must be in [0, 1], got {0}")]
    Reflectivity(f64),
    #[error("truncation at dim {dim} leaves weight {tail_weight:.3e} in the top levels")]
    Truncation { dim: usize, tail_weight: f64 },
    #[error("|alpha'| = {alpha_prime} exceeds oracle budget (recommended max {max})")]
    AmplitudeTooLarge { alpha_prime: f64, max: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
}

/// `n̄ + 10√(n̄+1) + 20`: Poisson tail beyond it is far below 10⁻¹².
pub fn recommended_dim(mean_photons: f64) -> usize {
    (mean_photons + 10.0 * (mean_photons + 1.0).sqrt() + 20.0).ceil() as usize
}

fn hard_floor(mean_photons: f64) -> usize {
    (mean_photons + 5.0).ceil() as usize
}

/// Weight carried by the top eighth (at least 5 levels) of a vector.
fn tail_weight(coeffs: impl DoubleEndedIterator<Item = f64>, dim: usize) -> f64 {
    let top = (dim / 8).max(5).min(dim);
    coeffs.rev().take(top).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    coeffs: DVector<Complex64>,
}

impl FockVector {
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        Self {
            coeffs: DVector::from_vec(coeffs),
        }
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::number(0, dim)
    }

    pub fn number(n: usize, dim: usize) -> Self {
        let mut coeffs = DVector::zeros(dim);
        coeffs[n] = Complex64::new(1.0, 0.0);
        Self { coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        self.coeffs.as_slice()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `1 − ‖v‖²`, the weight lost to truncation for a unit-norm state.
    pub fn norm_deficit(&self) -> f64 {
        1.0 - self.norm_sqr()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &FockVector) -> Result<Complex64, FockError> {
        if self.dim() != other.dim() {
            return Err(FockError::DimMismatch(self.dim(), other.dim()));
        }
        Ok(self.coeffs.dotc(&other.coeffs))
    }

    fn tail_weight(&self) -> f64 {
        tail_weight(self.coeffs.iter().map(|c| c.norm_sqr()), self.dim())
    }
}

/// `cₙ = e^{−|ν|²/2} νⁿ/√(n!)` for `n < dim`.
pub fn coherent_fock(nu: Complex64, dim: usize) -> Result<FockVector, FockError> {
    let mean = nu.norm_sqr();
    let floor = hard_floor(mean);
    if dim < floor {
        return Err(FockError::DimBelowFloor { dim, floor, mean });
    }
    let mut coeffs = Vec::with_capacity(dim);
    let mut c = Complex64::new((-mean / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * nu / (n as f64).sqrt();
        }
        coeffs.push(c);
    }
    Ok(FockVector::from_coeffs(coeffs))
}

/// `exp(τa† − τ*a)` on the truncated space.
pub fn displacement_matrix(tau: Complex64, dim: usize) -> DMatrix<Complex64> {
    let mut g = DMatrix::<Complex64>::zeros(dim, dim);
    for n in 1..dim {
        let s = (n as f64).sqrt();
        // a†|n−1⟩ = √n |n⟩, a|n⟩ = √n |n−1⟩
        g[(n, n - 1)] = tau * s;
        g[(n - 1, n)] = -tau.conj() * s;
    }
    g.exp()
}

fn checked(v: DVector<Complex64>) -> Result<FockVector, FockError> {
    let out = FockVector { coeffs: v };
    let tail = out.tail_weight();
    if tail > TRUNCATION_TOLERANCE {
        return Err(FockError::Truncation {
            dim: out.dim(),
            tail_weight: tail,
        });
    }
    Ok(out)
}

pub fn displace_fock(v: &FockVector, tau: Complex64) -> Result<FockVector, FockError> {
    checked(displacement_matrix(tau, v.dim()) * &v.coeffs)
}

/// Two modes truncated at the same `dim`; entry `(i, j)` is the amplitude of `|i, j⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeFock {
    coeffs: DMatrix<Complex64>,
}

impl TwoModeFock {
    pub fn product(a: &FockVector, b: &FockVector) -> Result<Self, FockError> {
        if a.dim() != b.dim() {
            return Err(FockError::DimMismatch(a.dim(), b.dim()));
        }
        Ok(Self {
            coeffs: &a.coeffs * b.coeffs.transpose(),
        })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        self.coeffs[(i, j)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `|⟨a, b|self⟩|²` fidelity against a product of two single-mode vectors.
    pub fn product_fidelity(&self, a: &FockVector, b: &FockVector) -> Result<f64, FockError> {
        let other = Self::product(a, b)?;
        if other.dim() != self.dim() {
            return Err(FockError::DimMismatch(other.dim(), self.dim()));
        }
        let ip: Complex64 = other
            .coeffs
            .iter()
            .zip(self.coeffs.iter())
            .map(|(x, y)| x.conj() * y)
            .sum();
        Ok(ip.norm_sqr())
    }

    /// `(M₁ ⊗ M₂)` applied to the grid.
    pub fn apply_local(&self, m1: &DMatrix<Complex64>, m2: &DMatrix<Complex64>) -> Self {
        Self {
            coeffs: m1 * &self.coeffs * m2.transpose(),
        }
    }
}

/// Beam splitter as `exp(θ(a†b − ab†))` with `sin θ = √λ`, where `a` is the
/// first mode. It conserves total photon number, so the generator is applied
/// block by block over `|n, N−n⟩`.
#[derive(Clone, Debug)]
pub struct FockBeamSplitter {
    dim: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl FockBeamSplitter {
    pub fn new(lambda: f64, dim: usize) -> Result<Self, FockError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(FockError::Reflectivity(lambda));
        }
        let theta = lambda.sqrt().asin();
        let blocks = (0..dim)
            .map(|total| {
                let size = total + 1;
                let mut g = DMatrix::<f64>::zeros(size, size);
                // basis index n ↔ |n, total−n⟩; a†b raises n, ab† lowers it
                for n in 0..total {
                    let m = total - n;
                    let up = ((n + 1) as f64 * m as f64).sqrt();
                    g[(n + 1, n)] += theta * up;
                    g[(n, n + 1)] -= theta * up;
                }
                g.exp()
            })
            .collect();
        Ok(Self { dim, blocks })
    }

    /// Components with `n + m ≥ dim` are outside the blocks and are dropped;
    /// a tail-weight check rejects inputs where that matters.
    pub fn apply(&self, v: &TwoModeFock) -> Result<TwoModeFock, FockError> {
        if v.dim() != self.dim {
            return Err(FockError::DimMismatch(v.dim(), self.dim));
        }
        let dim = self.dim;
        let mut dropped = 0.0;
        for i in 0..dim {
            for j in (dim - i)..dim {
                dropped += v.coeffs[(i, j)].norm_sqr();
            }
        }
        let mut out = DMatrix::<Complex64>::zeros(dim, dim);
        for (total, block) in self.blocks.iter().enumerate() {
            let input = DVector::from_fn(total + 1, |n, _| v.coeffs[(n, total - n)]);
            let rotated = block.map(|x| Complex64::new(x, 0.0)) * input;
            for n in 0..=total {
                out[(n, total - n)] = rotated[n];
            }
        }
        // weight in the outermost total-number shells
        let top = (dim / 8).max(5).min(dim);
        let shell: f64 = (dim - top..dim)
            .flat_map(|t| (0..=t).map(move |n| (n, t - n)))
            .map(|(n, m)| out[(n, m)].norm_sqr())
            .sum();
        let tail = dropped + shell;
        if tail > TRUNCATION_TOLERANCE {
            return Err(FockError::Truncation {
                dim,
                tail_weight: tail,
            });
        }
        Ok(TwoModeFock { coeffs: out })
    }
}

pub fn beamsplitter_fock(v: &TwoModeFock, lambda: f64) -> Result<TwoModeFock, FockError> {
    FockBeamSplitter::new(lambda, v.dim())?.apply(v)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    /// Scales every truncation dimension; 2.0 is the convergence check.
    pub dim_multiplier: f64,
    pub max_alpha_prime: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            dim_multiplier: 1.0,
            max_alpha_prime: MAX_ORACLE_ALPHA_PRIME,
        }
    }
}

fn scaled_dim(mean: f64, opts: &OracleOptions) -> usize {
    (recommended_dim(mean) as f64 * opts.dim_multiplier).ceil() as usize
}

/// Detector amplitude of one beam for the two-fold scheme: `⟨1|D(−i|α′|)|β⟩`.
struct Usd2Beam {
    dim: usize,
    disp: DMatrix<Complex64>,
}

impl Usd2Beam {
    fn new(alpha_prime: f64, opts: &OracleOptions) -> Self {
        let dim = scaled_dim((2.0 * alpha_prime).powi(2), opts);
        Self {
            dim,
            disp: displacement_matrix(Complex64::new(0.0, -alpha_prime), dim),
        }
    }

    fn amplitude(&self, beta: Complex64) -> Result<Complex64, FockError> {
        let v = coherent_fock(beta, self.dim)?;
        Ok(checked(&self.disp * &v.coeffs)?.coeff(1))
    }
}

/// Four-fold scheme, one beam: 50/50 split against vacuum, `D(L)⊗D(R)` on
/// the outputs, amplitude of `|1, 1⟩`.
struct Usd4Beam {
    split_dim: usize,
    detect_dim: usize,
    splitter: FockBeamSplitter,
    disp_l: DMatrix<Complex64>,
    disp_r: DMatrix<Complex64>,
}

impl Usd4Beam {
    fn new(alpha_prime: f64, phi: f64, opts: &OracleOptions) -> Result<Self, FockError> {
        let split_dim = scaled_dim(alpha_prime.powi(2), opts);
        let detect_dim = scaled_dim(2.0 * alpha_prime.powi(2), opts).max(split_dim);
        let a = alpha_prime / 2f64.sqrt();
        let (s2, c2) = (2.0 * phi).sin_cos();
        Ok(Self {
            split_dim,
            detect_dim,
            splitter: FockBeamSplitter::new(0.5, split_dim)?,
            disp_l: displacement_matrix(Complex64::new(-a * s2, -a * c2), detect_dim),
            disp_r: displacement_matrix(Complex64::new(a * s2, -a * c2), detect_dim),
        })
    }

    fn amplitude(&self, beta: Complex64) -> Result<Complex64, FockError> {
        let input = TwoModeFock::product(
            &FockVector::vacuum(self.split_dim),
            &coherent_fock(beta, self.split_dim)?,
        )?;
        let split = self.splitter.apply(&input)?;
        let mut grid = DMatrix::<Complex64>::zeros(self.detect_dim, self.detect_dim);
        grid.view_mut((0, 0), (self.split_dim, self.split_dim))
            .copy_from(&split.coeffs);
        let out = TwoModeFock { coeffs: grid }.apply_local(&self.disp_l, &self.disp_r);
        let dim = self.detect_dim;
        let top = (dim / 8).max(5).min(dim);
        let tail: f64 = out
            .coeffs
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx % dim >= dim - top || idx / dim >= dim - top)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        if tail > TRUNCATION_TOLERANCE {
            return Err(FockError::Truncation {
                dim,
                tail_weight: tail,
            });
        }
        Ok(out.coeff(1, 1))
    }
}

/// Success probability by brute force in the number basis.
pub fn oracle_protocol_prob(
    params: &ProtocolParams<f64>,
    channel: &ChannelParams<f64>,
    which: Protocol,
) -> Result<f64, FockError> {
    oracle_protocol_prob_with(params, channel, which, &OracleOptions::default())
}

pub fn oracle_protocol_prob_with(
    params: &ProtocolParams<f64>,
    channel: &ChannelParams<f64>,
    which: Protocol,
    opts: &OracleOptions,
) -> Result<f64, FockError> {
    let alpha_prime = attenuate(params.alpha, channel).alpha_prime;
    if alpha_prime > opts.max_alpha_prime {
        return Err(FockError::AmplitudeTooLarge {
            alpha_prime,
            max: opts.max_alpha_prime,
        });
    }
    let state = build_analysis_state(params, channel);
    // mode order: beam1, beam2, env_a, env_b
    let detector_amps: Vec<Complex64> = match which {
        Protocol::Usd2 => {
            let beam = Usd2Beam::new(alpha_prime, opts);
            state
                .branches()
                .iter()
                .map(|b| Ok(beam.amplitude(b.amps[0])? * beam.amplitude(b.amps[1])?))
                .collect::<Result<_, FockError>>()?
        }
        Protocol::Usd4 => {
            let beam = Usd4Beam::new(alpha_prime, params.phi, opts)?;
            state
                .branches()
                .iter()
                .map(|b| Ok(beam.amplitude(b.amps[0])? * beam.amplitude(b.amps[1])?))
                .collect::<Result<_, FockError>>()?
        }
    };
    let branches = state.branches();
    let mut total = Complex64::new(0.0, 0.0);
    for (j, bj) in branches.iter().enumerate() {
        let aj = bj.coeff * detector_amps[j];
        for (k, bk) in branches.iter().enumerate() {
            let ak = bk.coeff * detector_amps[k];
            let env = overlap(bj.amps[2], bk.amps[2]) * overlap(bj.amps[3], bk.amps[3]);
            total += aj.conj() * ak * env;
        }
    }
    Ok(total.re)
}

/// Oracle over many points in parallel; results keep input order.
pub fn oracle_batch(
    points: &[(ProtocolParams<f64>, ChannelParams<f64>)],
    which: Protocol,
    opts: &OracleOptions,
) -> Vec<Result<f64, FockError>> {
    points
        .par_iter()
        .map(|(p, ch)| oracle_protocol_prob_with(p, ch, which, opts))
        .collect()
}
