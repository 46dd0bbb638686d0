//! Truncated Fock-space states.
//!
//! A [`PureState`] holds amplitudes `c_0..c_N` for a single mode; a
//! [`TwoModeState`] holds `c_{n1,n2}` row-major with mode 1 the signal and
//! mode 2 the auxiliary (herald or idler) mode. Conditional measurement
//! outcomes that are not kept are collected in a [`BranchEnsemble`].

use num_complex::Complex64;

use crate::error::{domain, ensure_finite, Error, Result};
use crate::special::log_factorial;

/// Global normalization and truncation tolerance.
pub const NORM_TOL: f64 = 1e-10;

/// Cutoff rule `ceil(n + m + 6 sqrt(n + m) + 10)` for a state whose mean
/// photon number is `nbar_eff` before `m` photons are added.
pub fn cutoff_for(nbar_eff: f64, m: u32) -> usize {
    let load = nbar_eff.max(0.0) + f64::from(m);
    (load + 6.0 * load.sqrt() + 10.0).ceil() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<Complex64>,
}

impl PureState {
    /// Wraps raw amplitudes without normalizing them.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(domain("a state needs at least one amplitude"));
        }
        if amps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(domain("amplitudes must be finite"));
        }
        Ok(Self { amps })
    }

    pub fn vacuum(cutoff: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); cutoff + 1];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    /// Coherent state `|alpha>`, `c_n = exp(-|alpha|^2/2) alpha^n / sqrt(n!)`.
    ///
    /// Amplitudes are built in log space so large cutoffs do not overflow.
    /// Fails if the last two levels carry more than [`NORM_TOL`] probability.
    pub fn coherent(alpha: Complex64, cutoff: usize) -> Result<Self> {
        ensure_finite("alpha", alpha.re)?;
        ensure_finite("alpha", alpha.im)?;
        let amps = coherent_amplitudes(alpha, cutoff);
        let state = Self { amps };
        let tail = state.tail_mass();
        if tail >= NORM_TOL {
            return Err(Error::Truncation(format!(
                "cutoff {cutoff} too small for |alpha|^2 = {:.6}: tail mass {tail:.3e}",
                alpha.norm_sqr()
            )));
        }
        Ok(state)
    }

    /// Number state `|m>` on a space with the given cutoff.
    pub fn fock(m: usize, cutoff: usize) -> Result<Self> {
        if m > cutoff {
            return Err(domain(format!("photon number {m} exceeds cutoff {cutoff}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); cutoff + 1];
        amps[m] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn cutoff(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Probability in the two highest retained levels.
    pub fn tail_mass(&self) -> f64 {
        self.amps.iter().rev().take(2).map(|c| c.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < NORM_TOL
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(domain("cannot normalize a zero-norm state"));
        }
        for c in &mut self.amps {
            *c /= norm;
        }
        Ok(self)
    }

    /// Zero-pads (or truncates) to a new cutoff.
    pub fn resized(&self, cutoff: usize) -> Self {
        let mut amps = self.amps.clone();
        amps.resize(cutoff + 1, Complex64::new(0.0, 0.0));
        Self { amps }
    }

    pub fn number_distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn mean_photon(&self) -> f64 {
        self.amps.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(n, c)| (n * n) as f64 * c.norm_sqr())
            .sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.cutoff() != other.cutoff() {
            return Err(domain(format!(
                "cutoff mismatch: {} vs {}",
                self.cutoff(),
                other.cutoff()
            )));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<a|b>|^2`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

pub(crate) fn coherent_amplitudes(alpha: Complex64, cutoff: usize) -> Vec<Complex64> {
    let r = alpha.norm();
    let phase = alpha.arg();
    (0..=cutoff)
        .map(|n| {
            if r == 0.0 {
                return if n == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            let log_mag = -0.5 * r * r + n as f64 * r.ln() - 0.5 * log_factorial(n as u64);
            Complex64::from_polar(log_mag.exp(), n as f64 * phase)
        })
        .collect()
}

/// Two-mode amplitude matrix, row-major over `(n1, n2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    dims: (usize, usize),
    amps: Vec<Complex64>,
}

impl TwoModeState {
    pub fn zeros(dim1: usize, dim2: usize) -> Self {
        Self {
            dims: (dim1, dim2),
            amps: vec![Complex64::new(0.0, 0.0); dim1 * dim2],
        }
    }

    pub fn from_amplitudes(dim1: usize, dim2: usize, amps: Vec<Complex64>) -> Result<Self> {
        if dim1 == 0 || dim2 == 0 || amps.len() != dim1 * dim2 {
            return Err(domain(format!(
                "amplitude count {} does not match dims {dim1}x{dim2}",
                amps.len()
            )));
        }
        Ok(Self {
            dims: (dim1, dim2),
            amps,
        })
    }

    /// `a ⊗ b`.
    pub fn product(a: &PureState, b: &PureState) -> Self {
        let (d1, d2) = (a.amps.len(), b.amps.len());
        let mut amps = Vec::with_capacity(d1 * d2);
        for ca in &a.amps {
            for cb in &b.amps {
                amps.push(ca * cb);
            }
        }
        Self { dims: (d1, d2), amps }
    }

    /// Number of levels per mode, `(cutoff1 + 1, cutoff2 + 1)`.
    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn get(&self, n1: usize, n2: usize) -> Complex64 {
        self.amps[n1 * self.dims.1 + n2]
    }

    pub(crate) fn get_mut(&mut self, n1: usize, n2: usize) -> &mut Complex64 {
        &mut self.amps[n1 * self.dims.1 + n2]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Probability on the highest retained level of either mode.
    pub fn edge_mass(&self) -> f64 {
        let (d1, d2) = self.dims;
        let mut mass = 0.0;
        for n1 in 0..d1 {
            for n2 in 0..d2 {
                if n1 + 1 == d1 || n2 + 1 == d2 {
                    mass += self.get(n1, n2).norm_sqr();
                }
            }
        }
        mass
    }

    /// Zero-pads (or truncates) both modes.
    pub fn resized(&self, dim1: usize, dim2: usize) -> Self {
        let mut out = Self::zeros(dim1, dim2);
        for n1 in 0..dim1.min(self.dims.0) {
            for n2 in 0..dim2.min(self.dims.1) {
                *out.get_mut(n1, n2) = self.get(n1, n2);
            }
        }
        out
    }

    /// `|<self|other>|^2`, zero-padding the smaller state.
    pub fn fidelity(&self, other: &Self) -> f64 {
        let d1 = self.dims.0.max(other.dims.0);
        let d2 = self.dims.1.max(other.dims.1);
        let a = self.resized(d1, d2);
        let b = other.resized(d1, d2);
        a.amps
            .iter()
            .zip(&b.amps)
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// Joint photon-number probabilities `p[n1][n2]`.
    pub fn joint_distribution(&self) -> Vec<Vec<f64>> {
        let (d1, d2) = self.dims;
        (0..d1)
            .map(|n1| (0..d2).map(|n2| self.get(n1, n2).norm_sqr()).collect())
            .collect()
    }

    /// Unnormalized mode-1 amplitudes conditioned on mode 2 holding `k` photons.
    pub fn project_mode2(&self, k: usize) -> Result<PureState> {
        if k >= self.dims.1 {
            return Err(domain(format!("outcome {k} outside mode-2 dimension {}", self.dims.1)));
        }
        let amps = (0..self.dims.0).map(|n1| self.get(n1, k)).collect();
        PureState::from_amplitudes(amps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchMember {
    /// Photon count registered by the heralding detector.
    pub outcome: usize,
    pub weight: f64,
    pub state: PureState,
}

/// Weighted pure states representing the outcomes of one branch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BranchEnsemble {
    members: Vec<BranchMember>,
    total_weight: f64,
}

impl BranchEnsemble {
    /// Members must carry non-negative weights and normalized states.
    pub fn new(members: Vec<BranchMember>) -> Result<Self> {
        for m in &members {
            if m.weight.is_nan() || m.weight < 0.0 {
                return Err(domain(format!("negative branch weight {}", m.weight)));
            }
            if !m.state.is_normalized() {
                return Err(domain(format!(
                    "branch member for outcome {} is not normalized",
                    m.outcome
                )));
            }
        }
        let total_weight = members.iter().map(|m| m.weight).sum();
        Ok(Self { members, total_weight })
    }

    pub fn members(&self) -> &[BranchMember] {
        &self.members
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_cutoff(&self) -> usize {
        self.members.iter().map(|m| m.state.cutoff()).max().unwrap_or(0)
    }

    /// Weight-averaged number distribution, normalized by the total weight.
    pub fn pooled_distribution(&self) -> Vec<f64> {
        let mut pooled = vec![0.0; self.max_cutoff() + 1];
        if self.total_weight == 0.0 {
            return pooled;
        }
        for m in &self.members {
            for (n, p) in m.state.number_distribution().into_iter().enumerate() {
                pooled[n] += m.weight * p;
            }
        }
        for p in &mut pooled {
            *p /= self.total_weight;
        }
        pooled
    }

    pub fn mean_photon(&self) -> f64 {
        self.weighted(PureState::mean_photon)
    }

    pub fn second_moment(&self) -> f64 {
        self.weighted(PureState::second_moment)
    }

    fn weighted(&self, f: impl Fn(&PureState) -> f64) -> f64 {
        if self.total_weight == 0.0 {
            return 0.0;
        }
        self.members.iter().map(|m| m.weight * f(&m.state)).sum::<f64>() / self.total_weight
    }
}

/// Mean and second moment of a probability vector indexed by photon number.
pub fn distribution_moments(p: &[f64]) -> (f64, f64) {
    p.iter().enumerate().fold((0.0, 0.0), |(m1, m2), (n, &pn)| {
        let n = n as f64;
        (m1 + n * pn, m2 + n * n * pn)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coherent_vacuum_and_poisson_weights() {
        let vac = PureState::coherent(c(0.0, 0.0), 12).unwrap();
        assert_eq!(vac.amplitudes()[0], c(1.0, 0.0));
        assert!(vac.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));

        let s = PureState::coherent(c(1.0, 0.0), cutoff_for(1.0, 0)).unwrap();
        assert!((s.number_distribution()[0] - (-1.0f64).exp()).abs() < 1e-15);
        let mut fact = 1.0;
        for (n, p) in s.number_distribution().iter().enumerate().take(10) {
            if n > 0 {
                fact *= n as f64;
            }
            assert!((p - (-1.0f64).exp() / fact).abs() < 1e-15);
        }
        assert!((s.mean_photon() - 1.0).abs() < 1e-12);
        assert!((s.second_moment() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_mean_from_poisson_oracle() {
        let alpha = c(2.0, 0.0);
        let s = PureState::coherent(alpha, cutoff_for(4.0, 0)).unwrap();
        // Poisson mean Σ n e^{-λ} λ^n / n! accumulated by ratio recursion
        let lambda = 4.0f64;
        let (mut term, mut mean) = ((-lambda).exp(), 0.0);
        for n in 1..200 {
            term *= lambda / n as f64;
            mean += n as f64 * term;
        }
        assert!((s.mean_photon() - mean).abs() < 1e-9);
        assert!((s.mean_photon() - 4.0).abs() < 1e-9);
        assert!(s.is_normalized());
    }

    #[test]
    fn coherent_truncation_error() {
        let err = PureState::coherent(c(3.0, 0.0), 10).unwrap_err();
        assert!(matches!(err, Error::Truncation(_)));
    }

    #[test]
    fn fock_states() {
        let vac = PureState::fock(0, 5).unwrap();
        assert_eq!(vac, PureState::vacuum(5));
        let one = PureState::fock(1, 5).unwrap();
        assert_eq!(one.mean_photon(), 1.0);
        let three = PureState::fock(3, 5).unwrap();
        assert_eq!(three.second_moment(), 9.0);
        assert_eq!(PureState::fock(1, 5).unwrap().number_distribution()[1], 1.0);
        assert!(matches!(PureState::fock(6, 5), Err(Error::Domain(_))));
    }

    #[test]
    fn fidelity_basics() {
        let s = PureState::coherent(c(0.7, -0.2), 30).unwrap();
        assert!((s.fidelity(&s).unwrap() - 1.0).abs() < 1e-12);
        let f01 = PureState::fock(0, 4).unwrap().fidelity(&PureState::fock(1, 4).unwrap());
        assert_eq!(f01.unwrap(), 0.0);
        assert!(matches!(
            PureState::vacuum(3).fidelity(&PureState::vacuum(4)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn single_added_coherent_by_amplitudes() {
        // a†|α> built by hand: c'_{n+1} = c_n sqrt(n+1)
        let base = PureState::coherent(c(1.0, 0.0), 40).unwrap();
        let mut amps = vec![c(0.0, 0.0); 42];
        for (n, cn) in base.amplitudes().iter().enumerate() {
            amps[n + 1] = cn * ((n + 1) as f64).sqrt();
        }
        let added = PureState::from_amplitudes(amps).unwrap().normalized().unwrap();
        assert!((added.mean_photon() - 2.5).abs() < 1e-12);
        let p = added.number_distribution();
        assert_eq!(p[0], 0.0);
        // mass moves right of the Poisson peak
        assert!(p[2] > base.number_distribution()[2]);
    }

    #[test]
    fn two_mode_projection_and_edges() {
        let a = PureState::coherent(c(0.5, 0.0), 20).unwrap();
        let b = PureState::fock(1, 2).unwrap();
        let joint = TwoModeState::product(&a, &b);
        assert_eq!(joint.dims(), (21, 3));
        assert!((joint.norm_sqr() - a.norm_sqr()).abs() < 1e-15);
        let cond = joint.project_mode2(1).unwrap();
        assert!((cond.fidelity(&a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(joint.project_mode2(0).unwrap().norm_sqr(), 0.0);
        assert!(joint.project_mode2(3).is_err());
        assert!(joint.edge_mass() < 1e-10);
    }

    proptest! {
        #[test]
        fn coherent_constructor_normalized(re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let alpha = c(re, im);
            let s = PureState::coherent(alpha, cutoff_for(alpha.norm_sqr(), 0)).unwrap();
            prop_assert!(s.is_normalized());
            prop_assert!(s.tail_mass() < NORM_TOL);
        }

        #[test]
        fn coherent_overlap(ar in -1.5f64..1.5, ai in -1.5f64..1.5, br in -1.5f64..1.5, bi in -1.5f64..1.5) {
            let (a, b) = (c(ar, ai), c(br, bi));
            let n = cutoff_for(4.5, 0);
            let f = PureState::coherent(a, n).unwrap().fidelity(&PureState::coherent(b, n).unwrap()).unwrap();
            let want = (-(a - b).norm_sqr()).exp();
            prop_assert!((f - want).abs() < 1e-10);
        }

        #[test]
        fn ensemble_moments_match_pooled(weights in proptest::collection::vec(0.0f64..1.0, 1..5), r in 0.1f64..1.5) {
            let members: Vec<_> = weights.iter().enumerate().map(|(k, &w)| BranchMember {
                outcome: k + 1,
                weight: w,
                state: PureState::coherent(c(r * (k as f64 + 1.0) / 3.0, 0.2), 40).unwrap().normalized().unwrap(),
            }).collect();
            let ens = BranchEnsemble::new(members).unwrap();
            prop_assume!(ens.total_weight() > 1e-3);
            let (m1, m2) = distribution_moments(&ens.pooled_distribution());
            prop_assert!((ens.mean_photon() - m1).abs() < 1e-12);
            prop_assert!((ens.second_moment() - m2).abs() < 1e-12 * (1.0 + m2));
            let total: f64 = weights.iter().sum();
            prop_assert!((ens.total_weight() - total).abs() < 1e-10);
        }
    }
}
