//! Exact algebra of multimode coherent-state superpositions.
//!
//! A [`SuperposedState`] is a finite sum of branches, each a complex
//! coefficient times a product of coherent states, one per registered mode.
//! Every quantity needed downstream (norms, inner products, detector
//! projections) reduces to closed-form coherent overlaps, so the
//! representation is exact: there is no truncation anywhere in this module.

use crate::scalar::{is_finite, ComplexAmp, Real};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Branches whose coefficient magnitude falls below this may be dropped
/// with [`SuperposedState::pruned`].
pub const PRUNE_THRESHOLD: f64 = 1e-30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("mode `{0}` is already registered")]
    DuplicateMode(String),
    #[error("mode registries differ: {left:?} vs {right:?}")]
    RegistryMismatch { left: Vec<String>, right: Vec<String> },
    #[error("branch {branch} has {found} amplitudes, registry has {expected} modes")]
    BranchShape {
        branch: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite amplitude or coefficient")]
    NonFinite,
    #[error("beam-splitter reflectivity {0} outside [0, 1]")]
    InvalidReflectivity(f64),
    #[error("transmittance {0} outside [0, 1]")]
    InvalidTransmittance(f64),
    #[error("beam-splitter ports must be four distinct labels")]
    PortAliasing,
}

/// Name of an optical mode (beam, environment port, detector output).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeLabel(String);

impl ModeLabel {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ModeLabel {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One term of a superposition. `amps[i]` is the coherent amplitude in the
/// i-th mode of the owning state's registry.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch<T> {
    pub coeff: ComplexAmp<T>,
    pub amps: Vec<ComplexAmp<T>>,
}

impl<T: Real> Branch<T> {
    pub fn new(coeff: ComplexAmp<T>, amps: Vec<ComplexAmp<T>>) -> Self {
        Self { coeff, amps }
    }
}

/// Finite superposition of multimode coherent products.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperposedState<T> {
    registry: Vec<ModeLabel>,
    branches: Vec<Branch<T>>,
}

impl<T: Real> SuperposedState<T> {
    pub fn new(registry: Vec<ModeLabel>, branches: Vec<Branch<T>>) -> Result<Self, StateError> {
        for (i, m) in registry.iter().enumerate() {
            if registry[..i].contains(m) {
                return Err(StateError::DuplicateMode(m.to_string()));
            }
        }
        for (b, branch) in branches.iter().enumerate() {
            if branch.amps.len() != registry.len() {
                return Err(StateError::BranchShape {
                    branch: b,
                    expected: registry.len(),
                    found: branch.amps.len(),
                });
            }
            if !is_finite(branch.coeff) || !branch.amps.iter().all(|&a| is_finite(a)) {
                return Err(StateError::NonFinite);
            }
        }
        Ok(Self { registry, branches })
    }

    /// Single-branch product state with unit coefficient.
    pub fn product<L: Into<ModeLabel>>(
        modes: impl IntoIterator<Item = (L, ComplexAmp<T>)>,
    ) -> Result<Self, StateError> {
        let (registry, amps): (Vec<ModeLabel>, Vec<_>) =
            modes.into_iter().map(|(l, a)| (l.into(), a)).unzip();
        Self::new(registry, vec![Branch::new(Complex::new(T::one(), T::zero()), amps)])
    }

    pub fn registry(&self) -> &[ModeLabel] {
        &self.registry
    }

    pub fn branches(&self) -> &[Branch<T>] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn mode_index(&self, mode: &ModeLabel) -> Result<usize, StateError> {
        self.registry
            .iter()
            .position(|m| m == mode)
            .ok_or_else(|| StateError::UnknownMode(mode.to_string()))
    }

    /// Amplitude of `mode` in branch `branch`.
    pub fn amplitude(&self, branch: usize, mode: &ModeLabel) -> Result<ComplexAmp<T>, StateError> {
        let i = self.mode_index(mode)?;
        Ok(self.branches[branch].amps[i])
    }

    /// `⟨self|self⟩`, real and non-negative up to rounding.
    pub fn norm_sqr(&self) -> T {
        inner_product(self, self)
            .expect("registry matches itself")
            .re
    }

    /// Multiplies every branch coefficient by `factor`.
    pub fn scaled(mut self, factor: ComplexAmp<T>) -> Self {
        for b in &mut self.branches {
            b.coeff = b.coeff * factor;
        }
        self
    }

    /// Sum of two states over the same registry. Branch order is `self`
    /// followed by `other`.
    pub fn superpose(mut self, other: Self) -> Result<Self, StateError> {
        let perm = permutation(&self.registry, &other.registry)?;
        self.branches.extend(other.branches.into_iter().map(|b| Branch {
            coeff: b.coeff,
            amps: perm.iter().map(|&j| b.amps[j]).collect(),
        }));
        Ok(self)
    }

    /// Appends a mode prepared in vacuum in every branch.
    pub fn with_vacuum_mode(mut self, mode: impl Into<ModeLabel>) -> Result<Self, StateError> {
        let mode = mode.into();
        if self.registry.contains(&mode) {
            return Err(StateError::DuplicateMode(mode.to_string()));
        }
        self.registry.push(mode);
        for b in &mut self.branches {
            b.amps.push(Complex::new(T::zero(), T::zero()));
        }
        Ok(self)
    }

    /// Drops branches with `|coeff| < threshold`.
    pub fn pruned(mut self, threshold: T) -> Self {
        self.branches.retain(|b| b.coeff.norm() >= threshold);
        self
    }

    pub(crate) fn branches_mut(&mut self) -> &mut [Branch<T>] {
        &mut self.branches
    }

    pub(crate) fn rename_mode(&mut self, index: usize, label: ModeLabel) -> Result<(), StateError> {
        if self
            .registry
            .iter()
            .enumerate()
            .any(|(i, m)| i != index && *m == label)
        {
            return Err(StateError::DuplicateMode(label.to_string()));
        }
        self.registry[index] = label;
        Ok(())
    }

    pub(crate) fn push_mode(
        &mut self,
        label: ModeLabel,
        amp_of: impl Fn(&Branch<T>) -> ComplexAmp<T>,
    ) -> Result<(), StateError> {
        if self.registry.contains(&label) {
            return Err(StateError::DuplicateMode(label.to_string()));
        }
        for b in &mut self.branches {
            let a = amp_of(b);
            b.amps.push(a);
        }
        self.registry.push(label);
        Ok(())
    }
}

/// For each mode of `a`, the position of the same mode in `b`.
fn permutation(a: &[ModeLabel], b: &[ModeLabel]) -> Result<Vec<usize>, StateError> {
    let mismatch = || StateError::RegistryMismatch {
        left: a.iter().map(ToString::to_string).collect(),
        right: b.iter().map(ToString::to_string).collect(),
    };
    if a.len() != b.len() {
        return Err(mismatch());
    }
    a.iter()
        .map(|m| b.iter().position(|x| x == m).ok_or_else(mismatch))
        .collect()
}

/// `⟨μ|ν⟩ = exp(−(|μ|² + |ν|²)/2 + μ*ν)`.
pub fn overlap<T: Real>(mu: ComplexAmp<T>, nu: ComplexAmp<T>) -> ComplexAmp<T> {
    let half = T::lit(0.5);
    let exponent = mu.conj() * nu - Complex::new((mu.norm_sqr() + nu.norm_sqr()) * half, T::zero());
    exponent.exp()
}

/// `⟨1|ν⟩ = ν e^{−|ν|²/2}`.
pub fn single_photon_amp<T: Real>(nu: ComplexAmp<T>) -> ComplexAmp<T> {
    nu * (-nu.norm_sqr() * T::lit(0.5)).exp()
}

/// `⟨0|ν⟩ = e^{−|ν|²/2}`.
pub fn vacuum_amp<T: Real>(nu: ComplexAmp<T>) -> T {
    (-nu.norm_sqr() * T::lit(0.5)).exp()
}

/// `⟨a|b⟩` over a shared mode set (order may differ).
pub fn inner_product<T: Real>(
    a: &SuperposedState<T>,
    b: &SuperposedState<T>,
) -> Result<ComplexAmp<T>, StateError> {
    let perm = permutation(&a.registry, &b.registry)?;
    let mut acc = Complex::new(T::zero(), T::zero());
    for bj in &a.branches {
        for bk in &b.branches {
            let mut term = bj.coeff.conj() * bk.coeff;
            for (m, &k) in perm.iter().enumerate() {
                term = term * overlap(bj.amps[m], bk.amps[k]);
            }
            acc += term;
        }
    }
    Ok(acc)
}

/// Projects `mode` onto the one-photon state `⟨1|`, folding `⟨1|ν⟩` into each
/// branch coefficient and removing the mode from the registry. Branches whose
/// coefficient becomes exactly zero (vacuum in `mode`) are dropped.
pub fn project_single_photon<T: Real>(
    state: &SuperposedState<T>,
    mode: &ModeLabel,
) -> Result<SuperposedState<T>, StateError> {
    let idx = state.mode_index(mode)?;
    let mut registry = state.registry.clone();
    registry.remove(idx);
    let branches = state
        .branches
        .iter()
        .filter_map(|b| {
            let coeff = b.coeff * single_photon_amp(b.amps[idx]);
            if coeff.re == T::zero() && coeff.im == T::zero() {
                return None;
            }
            let mut amps = b.amps.clone();
            amps.remove(idx);
            Some(Branch { coeff, amps })
        })
        .collect();
    Ok(SuperposedState { registry, branches })
}

/// How a detector outcome is modelled when post-selecting on a click.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionModel {
    /// Projection onto exactly one photon, `|1⟩⟨1|`.
    #[default]
    SinglePhoton,
    /// Threshold detector, `1 − |0⟩⟨0|`.
    Click,
}

/// Probability that every mode in `modes` registers an outcome under `model`;
/// all other modes are traced out.
pub fn detection_probability<T: Real>(
    state: &SuperposedState<T>,
    modes: &[ModeLabel],
    model: DetectionModel,
) -> Result<T, StateError> {
    let detected = modes
        .iter()
        .map(|m| state.mode_index(m))
        .collect::<Result<Vec<_>, _>>()?;
    let mut acc = Complex::new(T::zero(), T::zero());
    for bj in &state.branches {
        for bk in &state.branches {
            let mut term = bj.coeff.conj() * bk.coeff;
            for (m, (&aj, &ak)) in bj.amps.iter().zip(&bk.amps).enumerate() {
                let kernel = if detected.contains(&m) {
                    match model {
                        DetectionModel::SinglePhoton => {
                            single_photon_amp(aj).conj() * single_photon_amp(ak)
                        }
                        DetectionModel::Click => {
                            overlap(aj, ak)
                                - Complex::new(vacuum_amp(aj) * vacuum_amp(ak), T::zero())
                        }
                    }
                } else {
                    overlap(aj, ak)
                };
                term = term * kernel;
            }
            acc += term;
        }
    }
    Ok(acc.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    // Independent route: sum the number-basis series of two coherent states.
    fn fock_series_overlap(mu: C, nu: C, dim: usize) -> C {
        let mut acc = C::new(0.0, 0.0);
        let mut cm = C::new((-mu.norm_sqr() / 2.0).exp(), 0.0);
        let mut cn = C::new((-nu.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..dim {
            if n > 0 {
                let s = (n as f64).sqrt();
                cm = cm * mu / s;
                cn = cn * nu / s;
            }
            acc += cm.conj() * cn;
        }
        acc
    }

    #[test]
    fn overlap_identical_is_one() {
        assert_eq!(overlap(c(2.0, 0.0), c(2.0, 0.0)), c(1.0, 0.0));
    }

    #[test]
    fn overlap_opposite_unit_amplitudes() {
        let o = overlap(c(1.0, 0.0), c(-1.0, 0.0));
        let oracle = fock_series_overlap(c(1.0, 0.0), c(-1.0, 0.0), 32);
        assert_relative_eq!(o.norm_sqr(), oracle.norm_sqr(), max_relative = 1e-12);
        assert_relative_eq!(o.norm_sqr(), 0.018_315_638_888_734_18, max_relative = 1e-12);
    }

    #[test]
    fn overlap_visibility_after_seventy_km() {
        // (rα)² = 9108.75, ϕ = 0.0028
        let r_alpha = 9108.75_f64.sqrt();
        let phi = 0.0028_f64;
        let o = overlap(C::from_polar(r_alpha, phi), C::from_polar(r_alpha, -phi));
        let exact = (-4.0 * 9108.75 * phi.sin().powi(2)).exp();
        assert_relative_eq!(o.norm_sqr(), exact, max_relative = 1e-10);
        assert!((o.norm_sqr() - 0.7515).abs() < 5e-4);
    }

    #[test]
    fn single_photon_amp_examples() {
        assert_eq!(single_photon_amp(c(0.0, 0.0)), c(0.0, 0.0));
        assert_relative_eq!(
            single_photon_amp(c(1.0, 0.0)).norm_sqr(),
            (-1.0f64).exp(),
            max_relative = 1e-14
        );
        let nu_sq = 2.0 * 891.251 * 0.0028_f64.sin().powi(2);
        let nu = C::from_polar(nu_sq.sqrt(), 0.7);
        let p = single_photon_amp(nu).norm_sqr();
        assert_relative_eq!(p, nu_sq * (-nu_sq).exp(), max_relative = 1e-13);
        assert!((p - 0.013780).abs() < 1e-6);
        // series coefficient of |1⟩
        let c1 = nu * (-nu.norm_sqr() / 2.0).exp();
        assert_relative_eq!(p, c1.norm_sqr(), max_relative = 1e-14);
    }

    #[test]
    fn cat_norm_matches_direct_expansion() {
        let g = C::from_polar(1.3, 0.4);
        let s = 1.0 / 2f64.sqrt();
        let st = SuperposedState::new(
            vec!["m".into()],
            vec![
                Branch::new(c(s, 0.0), vec![g]),
                Branch::new(c(s, 0.0), vec![g.conj()]),
            ],
        )
        .unwrap();
        let expected = 1.0 + overlap(g, g.conj()).re;
        assert_relative_eq!(st.norm_sqr(), expected, max_relative = 1e-14);
    }

    #[test]
    fn inner_product_rejects_registry_mismatch() {
        let a = SuperposedState::<f64>::product([("x", c(1.0, 0.0))]).unwrap();
        let b = SuperposedState::<f64>::product([("y", c(1.0, 0.0))]).unwrap();
        assert!(matches!(
            inner_product(&a, &b),
            Err(StateError::RegistryMismatch { .. })
        ));
    }

    #[test]
    fn inner_product_ignores_registry_order() {
        let a = SuperposedState::<f64>::product([("x", c(1.0, 0.2)), ("y", c(-0.3, 0.5))]).unwrap();
        let b = SuperposedState::<f64>::product([("y", c(-0.3, 0.5)), ("x", c(1.0, 0.2))]).unwrap();
        assert_relative_eq!(inner_product(&a, &b).unwrap().re, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn duplicate_modes_rejected() {
        let r = SuperposedState::<f64>::product([("x", c(0.0, 0.0)), ("x", c(0.0, 0.0))]);
        assert_eq!(r, Err(StateError::DuplicateMode("x".into())));
    }

    #[test]
    fn projecting_vacuum_kills_branch() {
        let st = SuperposedState::<f64>::product([("d", c(0.0, 0.0)), ("e", c(1.0, 0.0))]).unwrap();
        let p = project_single_photon(&st, &"d".into()).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.registry(), &["e".into()]);
        assert_eq!(p.norm_sqr(), 0.0);
    }

    #[test]
    fn projection_unknown_mode() {
        let st = SuperposedState::<f64>::product([("d", c(0.0, 0.0))]).unwrap();
        assert_eq!(
            project_single_photon(&st, &"q".into()),
            Err(StateError::UnknownMode("q".into()))
        );
    }

    #[test]
    fn two_mode_projection_matches_series() {
        // ⟨1,1| on (c0|a0,b0⟩ + c1|a1,b1⟩), computed by series coefficients.
        let (a0, b0, a1, b1) = (c(0.3, -0.2), c(0.7, 0.1), c(-0.5, 0.4), c(0.2, 0.9));
        let (c0, c1) = (c(0.6, 0.1), c(-0.2, 0.5));
        let st = SuperposedState::new(
            vec!["a".into(), "b".into()],
            vec![Branch::new(c0, vec![a0, b0]), Branch::new(c1, vec![a1, b1])],
        )
        .unwrap();
        let p = project_single_photon(&st, &"a".into()).unwrap();
        let p = project_single_photon(&p, &"b".into()).unwrap();
        let coef1 = |z: C| z * (-z.norm_sqr() / 2.0).exp();
        let amp = c0 * coef1(a0) * coef1(b0) + c1 * coef1(a1) * coef1(b1);
        assert_relative_eq!(p.norm_sqr(), amp.norm_sqr(), max_relative = 1e-12);
        let via_kernel =
            detection_probability(&st, &["a".into(), "b".into()], DetectionModel::SinglePhoton)
                .unwrap();
        assert_relative_eq!(via_kernel, amp.norm_sqr(), max_relative = 1e-12);
    }

    #[test]
    fn click_model_single_mode() {
        let nu = c(0.4, -0.3);
        let st = SuperposedState::<f64>::product([("d", nu)]).unwrap();
        let p = detection_probability(&st, &["d".into()], DetectionModel::Click).unwrap();
        assert_relative_eq!(p, 1.0 - (-nu.norm_sqr()).exp(), max_relative = 1e-12);
    }

    #[test]
    fn generic_over_f32() {
        let o = overlap(Complex::new(1.0f32, 0.0), Complex::new(-1.0f32, 0.0));
        assert!((o.norm_sqr() - (-4.0f32).exp()).abs() < 1e-6);
    }

    fn amp() -> impl Strategy<Value = C> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(r, i)| C::new(r, i))
    }

    fn state(modes: usize) -> impl Strategy<Value = SuperposedState<f64>> {
        prop::collection::vec((amp(), prop::collection::vec(amp(), modes)), 1..4).prop_map(
            move |bs| {
                let registry = (0..modes).map(|i| ModeLabel::new(format!("m{i}"))).collect();
                let raw = SuperposedState::new(
                    registry,
                    bs.into_iter()
                        .map(|(c, a)| Branch::new(c, a))
                        .collect(),
                )
                .unwrap();
                let n = raw.norm_sqr().max(1e-300).sqrt();
                raw.scaled(C::new(1.0 / n, 0.0))
            },
        )
    }

    proptest! {
        #[test]
        fn overlap_self_exact(mu in amp()) {
            prop_assert_eq!(overlap(mu, mu), C::new(1.0, 0.0));
        }

        #[test]
        fn overlap_magnitude_law(mu in amp(), nu in amp()) {
            let o = overlap(mu, nu);
            prop_assert!(o.norm() <= 1.0 + 1e-15);
            let expect = (-(mu - nu).norm_sqr()).exp();
            prop_assert!((o.norm_sqr() - expect).abs() <= 1e-12 * expect.max(1e-300) + 1e-300);
        }

        #[test]
        fn single_photon_bound(nu in amp()) {
            prop_assert!(single_photon_amp(nu).norm_sqr() <= (-1.0f64).exp() + 1e-15);
        }

        #[test]
        fn hermitian_and_positive(a in state(2), b in state(2)) {
            let ab = inner_product(&a, &b).unwrap();
            let ba = inner_product(&b, &a).unwrap();
            prop_assert!((ab - ba.conj()).norm() <= 1e-12 * (1.0 + ab.norm()));
            let aa = inner_product(&a, &a).unwrap();
            prop_assert!(aa.re > 0.0);
            prop_assert!(aa.im.abs() <= 1e-12 * aa.re);
            prop_assert!(aa.re <= 1.0 + 1e-12);
        }

        #[test]
        fn projections_commute(s in state(3)) {
            let (m, n) = (ModeLabel::new("m0"), ModeLabel::new("m2"));
            let mn = project_single_photon(&project_single_photon(&s, &m).unwrap(), &n).unwrap();
            let nm = project_single_photon(&project_single_photon(&s, &n).unwrap(), &m).unwrap();
            let (p, q) = (mn.norm_sqr(), nm.norm_sqr());
            let scale: f64 = mn.branches().iter().map(|b| b.coeff.norm()).sum();
            prop_assert!((p - q).abs() <= 1e-12 * scale * scale + 1e-300);
            prop_assert!(p <= 1.0 + 1e-12);
        }
    }
}
