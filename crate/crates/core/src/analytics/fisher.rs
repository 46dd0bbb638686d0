//! Classical Fisher information of photon-counting outcomes with respect to
//! the interferometer phase, computed by central finite differences.
//!
//! For the heralded scheme the outcome of one trial is the triple
//! `(k, n, n_b)`: herald count, count at the top detector, and count at the
//! bottom port. Four figures are reported:
//!
//! - `F_s`, `F_f`: information in the outcomes conditioned on each branch,
//! - `F_combined = P_s F_s + P_f F_f`,
//! - `F_joint`: information in the full outcome distribution, which adds the
//!   information carried by the branch probabilities themselves.

use num_complex::Complex64;

use crate::error::{domain, ensure_unit_interval, Result};
use crate::fock::{cutoff_for, PureState};
use crate::herald::{HeraldResult, Scheme};

pub const DEFAULT_DPHI: f64 = 1e-4;

/// Probabilities below this are left out of the Fisher sum.
const DROP_BELOW: f64 = 1e-14;
const NORMALIZATION_TOL: f64 = 1e-8;
const PROBABILITY_SUM_TOL: f64 = 1e-9;

fn check_step(dphi: f64) -> Result<()> {
    if !(1e-5..=1e-2).contains(&dphi) {
        return Err(domain(format!("finite-difference step {dphi} outside [1e-5, 1e-2]")));
    }
    Ok(())
}

fn check_normalized(p: &[f64], at: f64) -> Result<()> {
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL || p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(domain(format!(
            "distribution at phi = {at} is not normalized (sum {total})"
        )));
    }
    Ok(())
}

/// `Σ_n (∂p_n/∂φ)² / p_n` from distributions at `φ`, `φ ± dphi`. Shorter
/// vectors are treated as zero-padded.
fn central_fisher(center: &[f64], plus: &[f64], minus: &[f64], dphi: f64) -> f64 {
    let at = |v: &[f64], n: usize| v.get(n).copied().unwrap_or(0.0);
    let len = center.len().max(plus.len()).max(minus.len());
    (0..len)
        .filter_map(|n| {
            let p = at(center, n);
            if p < DROP_BELOW {
                return None;
            }
            let d = (at(plus, n) - at(minus, n)) / (2.0 * dphi);
            Some(d * d / p)
        })
        .sum()
}

/// Fisher information of a phase-dependent outcome distribution.
pub fn fisher_from_distribution<F>(dist: F, phi: f64, dphi: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    check_step(dphi)?;
    let center = dist(phi)?;
    let plus = dist(phi + dphi)?;
    let minus = dist(phi - dphi)?;
    check_normalized(&center, phi)?;
    check_normalized(&plus, phi + dphi)?;
    check_normalized(&minus, phi - dphi)?;
    Ok(central_fisher(&center, &plus, &minus, dphi))
}

/// `P_s F_s + P_f F_f`.
pub fn fisher_combined(ps: f64, fs: f64, pf: f64, ff: f64) -> Result<f64> {
    ensure_unit_interval("success probability", ps)?;
    ensure_unit_interval("failure probability", pf)?;
    if fs < 0.0 || ff < 0.0 {
        return Err(domain("Fisher information must be non-negative"));
    }
    if (ps + pf - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(domain(format!("branch probabilities sum to {}, not 1", ps + pf)));
    }
    Ok(ps * fs + pf * ff)
}

fn poisson(amplitude: Complex64, cutoff: usize) -> Result<Vec<f64>> {
    Ok(PureState::coherent(amplitude, cutoff)?.number_distribution())
}

/// Two-port photon counting on the plain interferometer (no addition stage).
pub fn coherent_mzi_fisher(nbar: f64, theta: f64, phi: f64, dphi: f64) -> Result<f64> {
    let cutoff = cutoff_for(nbar, 0);
    let dist = |phi: f64| -> Result<Vec<f64>> {
        let ports = crate::circuit::mzi_ports(crate::circuit::MziSpec::new(
            Complex64::new(nbar.sqrt(), 0.0),
            theta,
            phi,
        ));
        let top = poisson(ports.top, cutoff)?;
        let bottom = poisson(ports.bottom, cutoff)?;
        Ok(top.iter().flat_map(|a| bottom.iter().map(move |b| a * b)).collect())
    };
    fisher_from_distribution(dist, phi, dphi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherReport {
    pub phi: f64,
    pub success_probability: f64,
    pub fisher_success: f64,
    pub fisher_failure: f64,
    pub fisher_combined: f64,
    pub fisher_joint: f64,
    /// Shot-noise phase variance bound `1 / (nu nbar)`.
    pub qcrb: f64,
    pub trials: u32,
}

/// Outcome tables of one heralding run laid out on shared strides.
struct Outcomes {
    success_probability: f64,
    failure_probability: f64,
    joint: Vec<f64>,
    success: Vec<f64>,
    failure: Vec<f64>,
}

fn outcome_tables(h: &HeraldResult, bottom: &[f64], herald_dim: usize, signal_dim: usize) -> Outcomes {
    let nb = bottom.len();
    let block = signal_dim * nb;
    let mut joint = vec![0.0; herald_dim * block];
    let mut fill = |k: usize, weight: f64, dist: &[f64]| {
        for (n, pn) in dist.iter().enumerate() {
            for (j, pb) in bottom.iter().enumerate() {
                joint[k * block + n * nb + j] = weight * pn * pb;
            }
        }
    };
    if let Some(s) = &h.success_state {
        fill(h.kept_outcome, h.success_probability, &s.number_distribution());
    }
    for m in h.failure_branch.members() {
        fill(m.outcome, m.weight, &m.state.number_distribution());
    }
    let ps = h.success_probability;
    let pf = h.failure_probability();
    let kept = h.kept_outcome * block..(h.kept_outcome + 1) * block;
    let success = if ps > 0.0 {
        joint[kept.clone()].iter().map(|p| p / ps).collect()
    } else {
        Vec::new()
    };
    let failure = if pf > 0.0 {
        joint
            .iter()
            .enumerate()
            .map(|(i, p)| if kept.contains(&i) { 0.0 } else { p / pf })
            .collect()
    } else {
        Vec::new()
    };
    Outcomes {
        success_probability: ps,
        failure_probability: pf,
        joint,
        success,
        failure,
    }
}

/// Fisher information of the heralded scheme at `scheme.phi`.
pub fn scheme_fisher(scheme: &Scheme, trials: u32, dphi: f64) -> Result<FisherReport> {
    check_step(dphi)?;
    let qcrb = super::qcrb(scheme.nbar, trials)?;
    let at = |phi: f64| -> Result<(HeraldResult, Vec<f64>)> {
        let shifted = Scheme { phi, ..*scheme };
        let bottom_cutoff = cutoff_for(scheme.nbar * scheme.loss.amplitude_factor().powi(2), 0);
        Ok((shifted.herald()?, poisson(shifted.ports().bottom, bottom_cutoff)?))
    };
    let runs = [at(scheme.phi)?, at(scheme.phi + dphi)?, at(scheme.phi - dphi)?];

    let signal_dim = runs
        .iter()
        .map(|(h, _)| {
            let s = h.success_state.as_ref().map_or(0, |s| s.cutoff());
            s.max(h.failure_branch.max_cutoff()) + 1
        })
        .max()
        .unwrap_or(1);
    let herald_dim = runs
        .iter()
        .map(|(h, _)| {
            let last = h.failure_branch.members().iter().map(|m| m.outcome).max().unwrap_or(0);
            last.max(h.kept_outcome) + 1
        })
        .max()
        .unwrap_or(1);
    let [c, p, m] = runs.map(|(h, bottom)| outcome_tables(&h, &bottom, herald_dim, signal_dim));
    for o in [&c, &p, &m] {
        check_normalized(&o.joint, scheme.phi)?;
    }

    let fisher_joint = central_fisher(&c.joint, &p.joint, &m.joint, dphi);
    let branch = |f: fn(&Outcomes) -> &Vec<f64>| -> f64 {
        if [&c, &p, &m].iter().any(|o| f(o).is_empty()) {
            0.0
        } else {
            central_fisher(f(&c), f(&p), f(&m), dphi)
        }
    };
    let fisher_success = branch(|o| &o.success);
    let fisher_failure = branch(|o| &o.failure);
    let total = c.success_probability + c.failure_probability;
    let fisher_combined = fisher_combined(
        (c.success_probability / total).clamp(0.0, 1.0),
        fisher_success,
        (c.failure_probability / total).clamp(0.0, 1.0),
        fisher_failure,
    )?;
    Ok(FisherReport {
        phi: scheme.phi,
        success_probability: c.success_probability,
        fisher_success,
        fisher_failure,
        fisher_combined,
        fisher_joint,
        qcrb,
        trials,
    })
}
