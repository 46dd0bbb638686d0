//! Heralded photon addition and subtraction by explicit conditional projection.
//!
//! Every scheme builds the joint signal/auxiliary state, applies the
//! interaction, and projects the auxiliary mode onto a photon-number outcome.
//! The kept outcome gives the success branch; all other outcomes form the
//! failure [`BranchEnsemble`], indexed by the auxiliary detector count.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    apply_loss, beam_splitter, gain_to_squeezing, mzi_ports, two_mode_squeezer_with_leakage, BeamSplitterSpec,
    LossSpec, MziPorts, MziSpec,
};
use crate::error::{domain, Error, Result};
use crate::fock::{cutoff_for, BranchEnsemble, BranchMember, PureState, TwoModeState};
use crate::special::{log_factorial, PolynomialOrder};

/// Total probability below which a branch member is dropped.
const NEGLIGIBLE_WEIGHT: f64 = 1e-30;

const INPUT_NORM_TOL: f64 = 1e-9;

/// Leakage target when the squeezer cutoff is grown adaptively.
const PDC_EDGE_TARGET: f64 = 1e-24;
const PDC_MAX_CUTOFF: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct HeraldResult {
    /// `None` when the heralding outcome has zero probability.
    pub success_state: Option<PureState>,
    pub success_probability: f64,
    pub failure_branch: BranchEnsemble,
    /// Herald count that signals success (0 for beam-splitter addition, `m` otherwise).
    pub kept_outcome: usize,
}

impl HeraldResult {
    pub fn failure_probability(&self) -> f64 {
        self.failure_branch.total_weight()
    }

    /// Mode-1 photon-number distribution before the herald is read out.
    pub fn unconditional_distribution(&self) -> Vec<f64> {
        let len = self
            .failure_branch
            .max_cutoff()
            .max(self.success_state.as_ref().map_or(0, |s| s.cutoff()))
            + 1;
        let mut p = vec![0.0; len];
        if let Some(s) = &self.success_state {
            for (n, pn) in s.number_distribution().into_iter().enumerate() {
                p[n] += self.success_probability * pn;
            }
        }
        for m in self.failure_branch.members() {
            for (n, pn) in m.state.number_distribution().into_iter().enumerate() {
                p[n] += m.weight * pn;
            }
        }
        p
    }
}

/// Inputs must carry unit probability. A deficit means the cutoff dropped
/// part of the state; an excess means the amplitudes were never normalized.
fn ensure_input(input: &PureState) -> Result<()> {
    let norm = input.norm_sqr();
    if norm < 1.0 - INPUT_NORM_TOL {
        return Err(Error::Truncation(format!(
            "input carries probability {norm} at cutoff {}; raise the cutoff",
            input.cutoff()
        )));
    }
    if norm > 1.0 + INPUT_NORM_TOL {
        return Err(domain(format!("input state must be normalized, norm^2 = {norm}")));
    }
    Ok(())
}

/// Splits a joint state on the mode-2 outcome `keep`.
fn herald(joint: &TwoModeState, keep: usize) -> Result<HeraldResult> {
    let (_, d2) = joint.dims();
    let mut success_state = None;
    let mut success_probability = 0.0;
    let mut members = Vec::new();
    for k in 0..d2 {
        let cond = joint.project_mode2(k)?;
        let weight = cond.norm_sqr();
        if k == keep {
            success_probability = weight;
            if weight > NEGLIGIBLE_WEIGHT {
                success_state = Some(cond.normalized()?);
            }
        } else if weight > NEGLIGIBLE_WEIGHT {
            members.push(BranchMember {
                outcome: k,
                weight,
                state: cond.normalized()?,
            });
        }
    }
    Ok(HeraldResult {
        success_state,
        success_probability,
        failure_branch: BranchEnsemble::new(members)?,
        kept_outcome: keep,
    })
}

/// Photon addition by mixing `|m>` with the input on a beam splitter of
/// transmissivity `T` and keeping the events where the auxiliary output
/// registers no photons.
pub fn herald_addition_bs(input: &PureState, m: PolynomialOrder, transmissivity: f64) -> Result<HeraldResult> {
    let spec = BeamSplitterSpec::new(transmissivity)?;
    ensure_input(input)?;
    let aux = PureState::fock(m.as_usize(), m.as_usize())?;
    let joint = beam_splitter(&TwoModeState::product(input, &aux), spec);
    herald(&joint, 0)
}

/// Photon subtraction: tap the input on a beam splitter with a vacuum
/// auxiliary and keep the events where the tap registers exactly `m` photons.
pub fn herald_subtraction(input: &PureState, m: PolynomialOrder, transmissivity: f64) -> Result<HeraldResult> {
    let spec = BeamSplitterSpec::new(transmissivity)?;
    ensure_input(input)?;
    let joint = beam_splitter(&TwoModeState::product(input, &PureState::vacuum(0)), spec);
    herald(&joint, m.as_usize())
}

/// Photon addition by parametric down-conversion with gain `G = cosh^2(r)`:
/// the input seeds the signal, the idler starts in vacuum, and events with
/// exactly `m` idler photons are kept.
///
/// The working cutoff starts from the usual rule with mean photon number
/// `G (n + 1)` and doubles until the squeezer's edge leakage is negligible.
pub fn herald_addition_pdc(input: &PureState, m: PolynomialOrder, gain: f64) -> Result<HeraldResult> {
    let r = gain_to_squeezing(gain)?;
    ensure_input(input)?;
    let nbar_eff = gain * (input.mean_photon() + 1.0);
    let mut cutoff = cutoff_for(nbar_eff, m.get()).max(input.cutoff() + m.as_usize() + 10);
    loop {
        let joint = TwoModeState::product(&input.resized(cutoff), &PureState::vacuum(cutoff));
        let (out, leakage) = two_mode_squeezer_with_leakage(&joint, r)?;
        if leakage <= PDC_EDGE_TARGET || cutoff >= PDC_MAX_CUTOFF {
            if leakage > crate::circuit::SQUEEZE_LEAKAGE_TOL {
                return Err(Error::Truncation(format!(
                    "squeezer leakage {leakage:.3e} at cutoff {cutoff} for gain {gain}"
                )));
            }
            return herald(&out, m.as_usize());
        }
        cutoff = (cutoff * 2).min(PDC_MAX_CUTOFF);
    }
}

/// Normalized `(a†)^m |α>` with the coherent part truncated at `cutoff`;
/// the beam-splitter success state in the limit `T -> 1`.
pub fn photon_added_coherent(alpha: Complex64, m: PolynomialOrder, cutoff: usize) -> Result<PureState> {
    let base = PureState::coherent(alpha, cutoff)?;
    let shift = m.as_usize();
    let mut amps = vec![Complex64::new(0.0, 0.0); cutoff + shift + 1];
    for (n, &c) in base.amplitudes().iter().enumerate() {
        let n = n as u64;
        amps[n as usize + shift] = c * (0.5 * (log_factorial(n + shift as u64) - log_factorial(n))).exp();
    }
    PureState::from_amplitudes(amps)?.normalized()
}

/// Which physical process performs the addition, with its coupling parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum AdditionModel {
    /// Fock state on a beam splitter of the given transmissivity.
    BeamSplitter { transmissivity: f64 },
    /// Seeded down-conversion with the given gain `G >= 1`.
    DownConversion { gain: f64 },
}

impl AdditionModel {
    pub fn coupling(&self) -> f64 {
        match *self {
            Self::BeamSplitter { transmissivity } => transmissivity,
            Self::DownConversion { gain } => gain,
        }
    }

    pub fn with_coupling(&self, value: f64) -> Self {
        match self {
            Self::BeamSplitter { .. } => Self::BeamSplitter { transmissivity: value },
            Self::DownConversion { .. } => Self::DownConversion { gain: value },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BeamSplitter { .. } => "bs",
            Self::DownConversion { .. } => "pdc",
        }
    }
}

pub fn herald_addition(input: &PureState, m: PolynomialOrder, model: AdditionModel) -> Result<HeraldResult> {
    match model {
        AdditionModel::BeamSplitter { transmissivity } => herald_addition_bs(input, m, transmissivity),
        AdditionModel::DownConversion { gain } => herald_addition_pdc(input, m, gain),
    }
}

/// The full arrangement: coherent light through the interferometer, the
/// loss substitution, then heralded addition on the top port. The bottom
/// port stays coherent and is independent of the herald.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheme {
    pub nbar: f64,
    pub theta: f64,
    pub phi: f64,
    pub m: PolynomialOrder,
    pub model: AdditionModel,
    pub loss: LossSpec,
    pub cutoff_override: Option<usize>,
}

impl Scheme {
    pub fn new(nbar: f64, m: PolynomialOrder, model: AdditionModel) -> Result<Self> {
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(domain(format!(
                "mean photon number must be finite and non-negative, got {nbar}"
            )));
        }
        Ok(Self {
            nbar,
            theta: 0.0,
            phi: 0.0,
            m,
            model,
            loss: LossSpec::lossless(),
            cutoff_override: None,
        })
    }

    pub fn ports(&self) -> MziPorts {
        let alpha = Complex64::new(self.nbar.sqrt(), 0.0);
        let ports = mzi_ports(MziSpec::new(alpha, self.theta, self.phi));
        MziPorts {
            top: apply_loss(ports.top, self.loss),
            bottom: apply_loss(ports.bottom, self.loss),
        }
    }

    /// Post-loss mean photon number reaching the addition stage.
    pub fn nbar_at_addition(&self) -> f64 {
        self.ports().top.norm_sqr()
    }

    /// Cutoff for the addition-stage input. It depends only on the input
    /// power, not on `φ`, so distributions at neighbouring phases align.
    pub fn input_cutoff(&self) -> usize {
        self.cutoff_override.unwrap_or_else(|| {
            let eta = self.loss.amplitude_factor().powi(2);
            cutoff_for(self.nbar * eta, self.m.get())
        })
    }

    pub fn input_state(&self) -> Result<PureState> {
        PureState::coherent(self.ports().top, self.input_cutoff())
    }

    pub fn herald(&self) -> Result<HeraldResult> {
        herald_addition(&self.input_state()?, self.m, self.model)
    }

    /// The success-branch state. At `T = 1` the beam-splitter herald never
    /// fires, and the `T -> 1` limit `(a†)^m |α>` is returned instead.
    pub fn added_state(&self) -> Result<PureState> {
        if let AdditionModel::BeamSplitter { transmissivity } = self.model {
            if transmissivity == 1.0 {
                return photon_added_coherent(self.ports().top, self.m, self.input_cutoff());
            }
        }
        self.herald()?.success_state.ok_or_else(|| {
            domain(format!(
                "the {} herald never succeeds at this setting",
                self.model.name()
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::laguerre;

    fn order(m: u32) -> PolynomialOrder {
        PolynomialOrder::new(m).unwrap()
    }

    fn coherent(nbar: f64, m: u32) -> PureState {
        PureState::coherent(Complex64::new(nbar.sqrt(), 0.0), cutoff_for(nbar, m)).unwrap()
    }

    /// Normalized (a†)^m applied to `base`, built amplitude by amplitude.
    fn creation_oracle(base: &PureState, m: usize) -> PureState {
        let mut amps = vec![Complex64::new(0.0, 0.0); base.cutoff() + m + 1];
        for (n, c) in base.amplitudes().iter().enumerate() {
            let factor: f64 = ((n + 1)..=(n + m)).map(|k| (k as f64).sqrt()).product();
            amps[n + m] = c * factor;
        }
        PureState::from_amplitudes(amps).unwrap().normalized().unwrap()
    }

    #[test]
    fn unit_transmissivity_limit() {
        let input = coherent(1.0, 1);
        let near = herald_addition_bs(&input, order(1), 1.0 - 1e-7)
            .unwrap()
            .success_state
            .unwrap();
        let scheme = Scheme::new(1.0, order(1), AdditionModel::BeamSplitter { transmissivity: 1.0 }).unwrap();
        let limit = scheme.added_state().unwrap();
        assert!(limit.fidelity(&near).unwrap() > 1.0 - 1e-6);
        assert!((limit.mean_photon() - 2.5).abs() < 1e-9);
        assert_eq!(limit.number_distribution()[0], 0.0);
        let pdc = Scheme::new(1.0, order(1), AdditionModel::DownConversion { gain: 1.0 }).unwrap();
        assert!(pdc.added_state().is_err());
    }

    #[test]
    fn vacuum_plus_photon_reflects() {
        for &t in &[0.0, 0.3, 0.8] {
            let h = herald_addition_bs(&PureState::vacuum(5), order(1), t).unwrap();
            assert!((h.success_probability - (1.0 - t)).abs() < 1e-14);
            if t < 1.0 {
                let s = h.success_state.unwrap();
                assert!((s.number_distribution()[1] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_addition_probability() {
        let h = herald_addition_bs(&coherent(1.0, 1), order(1), 0.5).unwrap();
        let want = 0.75 * (-0.5f64).exp();
        assert!((h.success_probability - want).abs() < 1e-10);
        assert!((want - 0.454898).abs() < 1e-6);
        assert!((h.success_probability + h.failure_probability() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn full_transmission_never_succeeds() {
        for m in 1..=3 {
            let h = herald_addition_bs(&coherent(1.0, m), order(m), 1.0).unwrap();
            assert_eq!(h.success_probability, 0.0);
            assert!(h.success_state.is_none());
            assert!((h.failure_probability() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_added_photons_attenuates() {
        let (nbar, t) = (1.5, 0.6);
        let input = coherent(nbar, 0);
        let h = herald_addition_bs(&input, order(0), t).unwrap();
        assert!((h.success_probability - (-(1.0 - t) * nbar).exp()).abs() < 1e-10);
        let s = h.success_state.unwrap();
        let want = PureState::coherent(Complex64::new((t * nbar).sqrt(), 0.0), s.cutoff()).unwrap();
        assert!(s.fidelity(&want).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn state_matches_creation_construction() {
        for m in 1..=3u32 {
            for &t in &[0.2, 0.5, 0.9] {
                let nbar = 1.0;
                let h = herald_addition_bs(&coherent(nbar, m), order(m), t).unwrap();
                let s = h.success_state.unwrap();
                let base =
                    PureState::coherent(Complex64::new((t * nbar).sqrt(), 0.0), s.cutoff() - m as usize).unwrap();
                let oracle = creation_oracle(&base, m as usize);
                assert!(s.fidelity(&oracle).unwrap() > 1.0 - 1e-9, "m={m} t={t}");
                assert_eq!(s.number_distribution()[..m as usize].iter().sum::<f64>(), 0.0);
            }
        }
    }

    #[test]
    fn probability_matches_laguerre_form() {
        for m in 1..=3u32 {
            for &nbar in &[0.5, 1.0, 2.0] {
                for i in 1..10 {
                    let t = i as f64 / 10.0;
                    let h = herald_addition_bs(&coherent(nbar, m), order(m), t).unwrap();
                    let want = (1.0 - t).powi(m as i32) * (nbar * (t - 1.0)).exp() * laguerre(order(m), -t * nbar);
                    assert!((h.success_probability - want).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn failure_branch_outcomes() {
        let h = herald_addition_bs(&coherent(1.0, 2), order(2), 0.4).unwrap();
        for member in h.failure_branch.members() {
            assert!(member.outcome >= 1);
            assert!(member.state.is_normalized());
        }
        // no-signaling: the unconditional mode-1 distribution is the
        // beam-splitter output marginal with R|m> photons fed in
        let total: f64 = h.unconditional_distribution().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn subtraction_leaves_coherent() {
        for &nbar in &[1.0f64, 4.0] {
            for &t in &[0.5, 0.9] {
                let alpha = Complex64::new(nbar.sqrt(), 0.0);
                let input = PureState::coherent(alpha, cutoff_for(nbar, 0)).unwrap();
                let h = herald_subtraction(&input, order(1), t).unwrap();
                let s = h.success_state.unwrap();
                let want = PureState::coherent(alpha * t.sqrt(), s.cutoff()).unwrap();
                assert!(s.fidelity(&want).unwrap() > 1.0 - 1e-10);
                let rn = (1.0 - t) * nbar;
                assert!((h.success_probability - (-rn).exp() * rn).abs() < 1e-10);
            }
        }
        let h = herald_subtraction(&coherent(1.0, 0), order(1), 0.9).unwrap();
        assert!((h.success_probability - (-0.1f64).exp() * 0.1).abs() < 1e-10);
        assert!((h.success_probability - 0.090484).abs() < 1e-6);
        let vac = herald_subtraction(&PureState::vacuum(4), order(2), 0.5).unwrap();
        assert_eq!(vac.success_probability, 0.0);
    }

    #[test]
    fn pdc_vacuum_heralding() {
        for i in 0..=19 {
            let g = 1.1 + 0.1 * i as f64;
            let h = herald_addition_pdc(&PureState::vacuum(0), order(1), g).unwrap();
            assert!((h.success_probability - (g - 1.0) / (g * g)).abs() < 1e-8, "G={g}");
            let s = h.success_state.unwrap();
            assert!((s.number_distribution()[1] - 1.0).abs() < 1e-10);
        }
        let none = herald_addition_pdc(&PureState::vacuum(0), order(1), 1.0).unwrap();
        assert_eq!(none.success_probability, 0.0);
        assert!(matches!(
            herald_addition_pdc(&PureState::vacuum(0), order(1), 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn pdc_coherent_seed_matches_disentangled_form() {
        // S|n,0> = cosh^{-(n+1)} Σ_k tanh^k sqrt(C(n+k,k)) |n+k,k>; keep k = m
        let (nbar, m, g) = (1.0, 1usize, 1.5);
        let input = coherent(nbar, 1);
        let h = herald_addition_pdc(&input, order(m as u32), g).unwrap();
        let r = gain_to_squeezing(g).unwrap();
        let mut p = 0.0;
        for (n, c) in input.amplitudes().iter().enumerate() {
            let amp = r.cosh().powi(-(n as i32 + 1)) * r.tanh().powi(m as i32) * (((n + 1) as f64).sqrt());
            p += c.norm_sqr() * amp * amp;
        }
        assert!((h.success_probability - p).abs() < 1e-10);
        assert!((h.success_probability + h.failure_probability() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_unnormalized_or_truncated_input() {
        let amps = vec![Complex64::new(0.7, 0.0); 3];
        let bad = PureState::from_amplitudes(amps).unwrap();
        assert!(matches!(herald_addition_bs(&bad, order(1), 0.5), Err(Error::Domain(_))));
        // coherent amplitudes for |α|² = 4 cut at five levels
        let alpha = Complex64::new(2.0, 0.0);
        let cut: Vec<_> = (0..5u32)
            .map(|n| alpha.powu(n) * (-2.0f64).exp() / (1..=n).map(f64::from).product::<f64>().sqrt())
            .collect();
        let truncated = PureState::from_amplitudes(cut).unwrap();
        assert!(matches!(
            herald_addition_bs(&truncated, order(1), 0.5),
            Err(Error::Truncation(_))
        ));
        assert!(herald_addition_bs(&PureState::fock(3, 3).unwrap(), order(1), 0.5).is_ok());
    }
}
