//! Closed-form results for `m`-photon-added coherent states made with the
//! beam-splitter model, signal-to-noise figures, and Fisher information.
//!
//! Every formula takes the transmissivity `T` of the addition beam splitter
//! and the mean photon number `nbar = |α|²` that reaches it. Laguerre
//! polynomials are evaluated at `-T nbar <= 0`, where they are at least one.

pub mod fisher;

use crate::error::{domain, ensure_unit_interval, Error, Result};
use crate::fock::distribution_moments;
use crate::herald::HeraldResult;
use crate::special::{laguerre, PolynomialOrder};

pub use fisher::{
    coherent_mzi_fisher, fisher_combined, fisher_from_distribution, scheme_fisher, FisherReport, DEFAULT_DPHI,
};

/// Variance (relative to `max(1, mean²)`) treated as zero.
const ZERO_VARIANCE: f64 = 1e-12;

fn check_args(t: f64, nbar: f64) -> Result<()> {
    ensure_unit_interval("transmissivity", t)?;
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(domain(format!("nbar must be finite and non-negative, got {nbar}")));
    }
    Ok(())
}

fn lag(m: u32, x: f64) -> f64 {
    // orders here never exceed MAX_ORDER + 2 in practice; the callers validate m
    laguerre(PolynomialOrder::new(m).expect("order validated by caller"), x)
}

fn check_order(m: PolynomialOrder) -> Result<()> {
    // second moment needs L_{m+2}
    PolynomialOrder::new(m.get() + 2).map(|_| ())
}

/// Success probability `(1-T)^m e^{nbar(T-1)} L_m(-T nbar)`.
pub fn p_add_closed(m: PolynomialOrder, t: f64, nbar: f64) -> Result<f64> {
    check_args(t, nbar)?;
    Ok((1.0 - t).powi(m.get() as i32) * (nbar * (t - 1.0)).exp() * laguerre(m, -t * nbar))
}

/// Single-photon form `-(T-1)(1 + T nbar) e^{nbar(T-1)}`.
pub fn p_add_single(t: f64, nbar: f64) -> Result<f64> {
    check_args(t, nbar)?;
    Ok(-(t - 1.0) * (1.0 + t * nbar) * (nbar * (t - 1.0)).exp())
}

/// `<n> = T nbar + 2m - m L_{m-1}(-T nbar) / L_m(-T nbar)`.
pub fn mean_n_added(m: PolynomialOrder, t: f64, nbar: f64) -> Result<f64> {
    check_args(t, nbar)?;
    let m = m.get();
    let x = -t * nbar;
    if m == 0 {
        return Ok(t * nbar);
    }
    let mf = f64::from(m);
    Ok(t * nbar + 2.0 * mf - mf * lag(m - 1, x) / lag(m, x))
}

/// `<n²> = [(m+2)(m+1) L_{m+2} - 3(m+1) L_{m+1} + L_m] / L_m`, all at `-T nbar`.
pub fn second_moment_added(m: PolynomialOrder, t: f64, nbar: f64) -> Result<f64> {
    check_args(t, nbar)?;
    check_order(m)?;
    let m = m.get();
    let x = -t * nbar;
    let mf = f64::from(m);
    let lm = lag(m, x);
    Ok(((mf + 2.0) * (mf + 1.0) * lag(m + 2, x) - 3.0 * (mf + 1.0) * lag(m + 1, x) + lm) / lm)
}

/// `(mean - offset) / sqrt(second - mean²)`; zero variance is [`Error::DivergentSnr`].
pub fn snr_from_moments(mean: f64, second: f64, offset: f64) -> Result<f64> {
    let var = second - mean * mean;
    if var <= ZERO_VARIANCE * mean.powi(2).max(1.0) {
        return Err(Error::DivergentSnr);
    }
    Ok((mean - offset) / var.sqrt())
}

/// SNR of the `m`-added state with the `m` injected photons subtracted from the signal.
pub fn snr_added(m: PolynomialOrder, t: f64, nbar: f64) -> Result<f64> {
    let mean = mean_n_added(m, t, nbar)?;
    let second = second_moment_added(m, t, nbar)?;
    snr_from_moments(mean, second, f64::from(m.get()))
}

/// Coherent-state SNR, `|α| = sqrt(nbar)`.
pub fn snr_coherent(nbar: f64) -> f64 {
    nbar.sqrt()
}

/// [`snr_added`] relative to an unamplified coherent state of the same `nbar`.
pub fn snr_ratio(m: PolynomialOrder, t: f64, nbar: f64) -> Result<f64> {
    if nbar <= 0.0 {
        return Err(domain("SNR ratio needs a positive coherent baseline"));
    }
    Ok(snr_added(m, t, nbar)? / snr_coherent(nbar))
}

/// `sqrt(P) * snr`.
pub fn weighted_metric(p: f64, snr: f64) -> Result<f64> {
    ensure_unit_interval("probability", p)?;
    Ok(p.sqrt() * snr)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrReport {
    pub snr: f64,
    pub snr_ratio: f64,
    pub success_probability: f64,
    pub weighted_metric: f64,
}

pub fn snr_report(m: PolynomialOrder, t: f64, nbar: f64) -> Result<SnrReport> {
    let snr = snr_added(m, t, nbar)?;
    let success_probability = p_add_closed(m, t, nbar)?;
    Ok(SnrReport {
        snr,
        snr_ratio: snr / snr_coherent(nbar),
        success_probability,
        weighted_metric: weighted_metric(success_probability, snr)?,
    })
}

/// Shot-noise phase variance bound `1 / (nu nbar)`.
pub fn qcrb(nbar: f64, nu: u32) -> Result<f64> {
    if !(nbar > 0.0 && nbar.is_finite()) {
        return Err(domain(format!("QCRB needs nbar > 0, got {nbar}")));
    }
    if nu == 0 {
        return Err(domain("QCRB needs at least one trial"));
    }
    Ok(1.0 / (f64::from(nu) * nbar))
}

/// Per-branch SNR figures of a heralding outcome.
///
/// The success branch subtracts the `m` added photons from its signal; the
/// failure branch uses the plain SNR of its pooled distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchMetrics {
    pub success_probability: f64,
    pub failure_probability: f64,
    pub success_snr: Option<f64>,
    pub failure_snr: Option<f64>,
    pub weighted_success: Option<f64>,
    pub weighted_failure: Option<f64>,
}

pub fn branch_metrics(herald: &HeraldResult, m: PolynomialOrder) -> BranchMetrics {
    let ps = herald.success_probability.clamp(0.0, 1.0);
    let pf = herald.failure_probability().clamp(0.0, 1.0);
    let success_snr = herald
        .success_state
        .as_ref()
        .and_then(|s| snr_from_moments(s.mean_photon(), s.second_moment(), f64::from(m.get())).ok());
    let failure_snr = if herald.failure_branch.is_empty() {
        None
    } else {
        let (m1, m2) = distribution_moments(&herald.failure_branch.pooled_distribution());
        snr_from_moments(m1, m2, 0.0).ok()
    };
    BranchMetrics {
        success_probability: ps,
        failure_probability: pf,
        success_snr,
        failure_snr,
        weighted_success: success_snr.map(|s| ps.sqrt() * s),
        weighted_failure: failure_snr.map(|s| pf.sqrt() * s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{apply_loss, LossSpec};
    use crate::fock::{cutoff_for, PureState};
    use crate::herald::{herald_addition_bs, AdditionModel, Scheme};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn order(m: u32) -> PolynomialOrder {
        PolynomialOrder::new(m).unwrap()
    }

    #[test]
    fn probability_examples() {
        assert!((p_add_closed(order(1), 0.3, 0.0).unwrap() - 0.7).abs() < 1e-15);
        // L_2(-1/2) = (1/4 + 2 + 2) / 2 = 2.125
        let p2 = p_add_closed(order(2), 0.5, 1.0).unwrap();
        assert!((p2 - 0.25 * (-0.5f64).exp() * 2.125).abs() < 1e-15);
        let input = PureState::coherent(Complex64::new(1.0, 0.0), cutoff_for(1.0, 2)).unwrap();
        let numeric = herald_addition_bs(&input, order(2), 0.5).unwrap().success_probability;
        assert!((p2 - numeric).abs() < 1e-10);
        for m in 1..=3 {
            assert_eq!(p_add_closed(order(m), 1.0, 1.7).unwrap(), 0.0);
        }
        assert!(p_add_closed(order(1), 1.2, 1.0).is_err());
        assert!(p_add_closed(order(1), 0.5, -1.0).is_err());
    }

    #[test]
    fn single_and_general_forms_agree() {
        for i in 0..20 {
            for j in 0..20 {
                let t = i as f64 / 19.0;
                let nbar = 3.0 * j as f64 / 19.0;
                let a = p_add_closed(order(1), t, nbar).unwrap();
                let b = p_add_single(t, nbar).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn moment_examples() {
        assert!((mean_n_added(order(1), 1.0, 1.0).unwrap() - 2.5).abs() < 1e-14);
        assert!((mean_n_added(order(1), 1.0, 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(mean_n_added(order(0), 0.4, 2.0).unwrap(), 0.8);
        assert!((second_moment_added(order(1), 1.0, 1.0).unwrap() - 7.5).abs() < 1e-13);
        assert!((second_moment_added(order(1), 1.0, 0.0).unwrap() - 1.0).abs() < 1e-14);
        for &(t, nbar) in &[(0.3, 1.0), (1.0, 2.5), (0.7, 0.2)] {
            let tn: f64 = t * nbar;
            assert!((second_moment_added(order(0), t, nbar).unwrap() - (tn * tn + tn)).abs() < 1e-12);
        }
        // the single-photon mean quoted in closed form
        for &tn in &[0.1, 0.5, 1.0, 3.0] {
            let want = tn + 2.0 - 1.0 / (1.0 + tn);
            assert!((mean_n_added(order(1), 1.0, tn).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn snr_examples() {
        for &nbar in &[0.5, 1.0, 4.0] {
            assert!((snr_added(order(0), 1.0, nbar).unwrap() - nbar.sqrt()).abs() < 1e-12);
            assert!((snr_added(order(0), 0.36, nbar).unwrap() - (0.36 * nbar).sqrt()).abs() < 1e-12);
        }
        let s = snr_added(order(1), 1.0, 1.0).unwrap();
        assert!((s - 1.5 / 1.25f64.sqrt()).abs() < 1e-12);
        assert!((snr_ratio(order(1), 1.0, 1.0).unwrap() - 1.341641).abs() < 1e-6);
        assert_eq!(snr_added(order(1), 1.0, 0.0), Err(Error::DivergentSnr));
    }

    #[test]
    fn snr_ordering_at_full_transmission() {
        let r: Vec<f64> = (1..=3).map(|m| snr_ratio(order(m), 1.0, 1.0).unwrap()).collect();
        assert!(r[2] > r[1] && r[1] > r[0] && r[0] > 1.0);
    }

    #[test]
    fn small_transmission_degrades() {
        assert!(snr_ratio(order(1), 0.05, 1.0).unwrap() < 1.0);
    }

    #[test]
    fn loss_improves_ratio() {
        let eta = LossSpec::new(0.3, 0.7).unwrap().amplitude_factor().powi(2);
        assert!((eta - 0.2401).abs() < 1e-15);
        for m in 1..=3 {
            for i in 1..=20 {
                let t = i as f64 / 20.0;
                let lossless = snr_ratio(order(m), t, 1.0).unwrap();
                let lossy = snr_ratio(order(m), t, eta).unwrap();
                assert!(lossy >= lossless, "m={m} T={t}: {lossy} < {lossless}");
            }
        }
    }

    #[test]
    fn weighted_and_qcrb() {
        assert_eq!(weighted_metric(1.0, 1.7).unwrap(), 1.7);
        assert_eq!(weighted_metric(0.0, 1.7).unwrap(), 0.0);
        assert!(weighted_metric(1.5, 1.0).is_err());
        assert_eq!(qcrb(1.0, 1).unwrap(), 1.0);
        assert_eq!(qcrb(4.0, 1).unwrap(), 0.25);
        assert!((qcrb(1.0, 100).unwrap() - 0.01).abs() < 1e-15);
        assert!(qcrb(0.0, 1).is_err());
    }

    #[test]
    fn closed_forms_match_heralded_states() {
        for m in 1..=3u32 {
            for &nbar in &[0.5f64, 1.0, 2.0] {
                for i in 1..10 {
                    let t = i as f64 / 10.0;
                    let input = PureState::coherent(Complex64::new(nbar.sqrt(), 0.0), cutoff_for(nbar, m)).unwrap();
                    let h = herald_addition_bs(&input, order(m), t).unwrap();
                    let s = h.success_state.unwrap();
                    assert!((s.mean_photon() - mean_n_added(order(m), t, nbar).unwrap()).abs() < 1e-8);
                    assert!((s.second_moment() - second_moment_added(order(m), t, nbar).unwrap()).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn failure_branch_beats_success_when_weighted() {
        let mut scheme = Scheme::new(1.0, order(1), AdditionModel::BeamSplitter { transmissivity: 0.05 }).unwrap();
        scheme.phi = PI / 2.0;
        let metrics = branch_metrics(&scheme.herald().unwrap(), order(1));
        assert!(metrics.weighted_failure.unwrap() > metrics.weighted_success.unwrap());
        assert!((metrics.success_probability + metrics.failure_probability - 1.0).abs() < 1e-9);
    }

    #[test]
    fn snr_report_consistency() {
        let rep = snr_report(order(2), 0.6, 1.0).unwrap();
        assert!((rep.weighted_metric - rep.success_probability.sqrt() * rep.snr).abs() < 1e-15);
        let lossy = apply_loss(Complex64::new(1.0, 0.0), LossSpec::new(0.3, 0.7).unwrap());
        assert!((lossy.norm_sqr() - 0.2401).abs() < 1e-15);
    }
}
