//! Linear-optical elements and the two-mode squeezer.
//!
//! Beam-splitter convention (creation operators, real orthogonal):
//!
//! ```text
//! a† -> √T a† - √R b†
//! b† -> √R a† + √T b†
//! ```
//!
//! so a coherent amplitude `α` entering mode `a` leaves as `√T α` in `a` and
//! `-√R α` in `b`, and `|1,0>` at `T = 1/2` becomes `(|1,0> - |0,1>)/√2`.
//! The interferometer uses this splitter at its input and the adjoint at its
//! output, so at `φ = 0` every photon exits the top port.

use num_complex::Complex64;

use crate::error::{domain, ensure_finite, ensure_unit_interval, Error, Result};
use crate::fock::TwoModeState;
use crate::special::{log_binomial, log_factorial};

/// Leakage above which a squeezer output is rejected.
pub const SQUEEZE_LEAKAGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitterSpec {
    transmissivity: f64,
}

impl BeamSplitterSpec {
    pub fn new(transmissivity: f64) -> Result<Self> {
        ensure_unit_interval("transmissivity", transmissivity)?;
        Ok(Self { transmissivity })
    }

    pub fn balanced() -> Self {
        Self { transmissivity: 0.5 }
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }

    pub fn reflectivity(&self) -> f64 {
        1.0 - self.transmissivity
    }
}

/// Coherent input `alpha·e^{iθ}` into a balanced interferometer with relative phase `φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziSpec {
    pub alpha: Complex64,
    pub theta: f64,
    pub phi: f64,
}

impl MziSpec {
    pub fn new(alpha: Complex64, theta: f64, phi: f64) -> Self {
        Self { alpha, theta, phi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziPorts {
    pub top: Complex64,
    pub bottom: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    loss: f64,
    detector_efficiency: f64,
}

impl LossSpec {
    pub fn new(loss: f64, detector_efficiency: f64) -> Result<Self> {
        ensure_unit_interval("photon loss", loss)?;
        ensure_unit_interval("detector efficiency", detector_efficiency)?;
        Ok(Self {
            loss,
            detector_efficiency,
        })
    }

    pub fn lossless() -> Self {
        Self {
            loss: 0.0,
            detector_efficiency: 1.0,
        }
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn detector_efficiency(&self) -> f64 {
        self.detector_efficiency
    }

    /// Amplitude scale `(1 - L) D`.
    pub fn amplitude_factor(&self) -> f64 {
        (1.0 - self.loss) * self.detector_efficiency
    }
}

impl Default for LossSpec {
    fn default() -> Self {
        Self::lossless()
    }
}

/// Applies the beam splitter. The output keeps every photon: each mode of the
/// result has `d1 + d2 - 1` levels, so no amplitude is lost to truncation.
pub fn beam_splitter(state: &TwoModeState, spec: BeamSplitterSpec) -> TwoModeState {
    mix(state, spec, 1.0)
}

/// Inverse of [`beam_splitter`] for the same spec.
pub fn beam_splitter_adjoint(state: &TwoModeState, spec: BeamSplitterSpec) -> TwoModeState {
    mix(state, spec, -1.0)
}

fn mix(state: &TwoModeState, spec: BeamSplitterSpec, sign: f64) -> TwoModeState {
    let (d1, d2) = state.dims();
    let dim = d1 + d2 - 1;
    let t = spec.transmissivity().sqrt();
    let r = sign * spec.reflectivity().sqrt();
    let mut out = TwoModeState::zeros(dim, dim);

    // (a†)^j (b†)^l |0> / sqrt(j! l!) expanded binomially in the output operators
    for j in 0..d1 {
        for l in 0..d2 {
            let c = state.get(j, l);
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let n = j + l;
            let norm_in = log_factorial(j as u64) + log_factorial(l as u64);
            for p in 0..=j {
                let a_part = t.powi(p as i32) * (-r).powi((j - p) as i32);
                if a_part == 0.0 {
                    continue;
                }
                let log_a = log_binomial(j as u64, p as u64);
                for q in 0..=l {
                    let b_part = r.powi(q as i32) * t.powi((l - q) as i32);
                    if b_part == 0.0 {
                        continue;
                    }
                    let k1 = p + q;
                    let k2 = n - k1;
                    let log_mag = log_a
                        + log_binomial(l as u64, q as u64)
                        + 0.5 * (log_factorial(k1 as u64) + log_factorial(k2 as u64) - norm_in);
                    *out.get_mut(k1, k2) += c * (a_part * b_part * log_mag.exp());
                }
            }
        }
    }
    out
}

/// Both output amplitudes of the interferometer for a coherent input and vacuum.
///
/// `top = α e^{iθ} (1 + e^{iφ}) / 2` and `bottom = α e^{iθ} (e^{iφ} - 1) / 2`,
/// i.e. `top = α e^{iθ} e^{iφ/2} cos(φ/2)`.
pub fn mzi_ports(spec: MziSpec) -> MziPorts {
    let input = spec.alpha * Complex64::from_polar(1.0, spec.theta);
    let shift = Complex64::from_polar(1.0, spec.phi);
    MziPorts {
        top: input * (Complex64::new(1.0, 0.0) + shift) * 0.5,
        bottom: input * (shift - Complex64::new(1.0, 0.0)) * 0.5,
    }
}

/// Amplitude leaving the top (addition-stage) port.
pub fn mzi_output_amplitude(spec: MziSpec) -> Complex64 {
    mzi_ports(spec).top
}

/// `α -> (1 - L) D α`.
pub fn apply_loss(alpha: Complex64, loss: LossSpec) -> Complex64 {
    alpha * loss.amplitude_factor()
}

/// Squeezing parameter for a parametric gain `G = cosh^2(r)`.
pub fn gain_to_squeezing(gain: f64) -> Result<f64> {
    ensure_finite("gain", gain)?;
    if gain < 1.0 {
        return Err(domain(format!("gain must be at least 1, got {gain}")));
    }
    Ok(gain.sqrt().acosh())
}

pub fn squeezing_to_gain(r: f64) -> f64 {
    r.cosh().powi(2)
}

/// Applies `exp[r (a†b† - ab)]` on the truncated space of `state`.
///
/// Rejects the result when more than [`SQUEEZE_LEAKAGE_TOL`] of the
/// probability reaches the highest retained level of either mode.
pub fn two_mode_squeezer(state: &TwoModeState, r: f64) -> Result<TwoModeState> {
    let (out, leakage) = two_mode_squeezer_with_leakage(state, r)?;
    if leakage > SQUEEZE_LEAKAGE_TOL {
        return Err(Error::Truncation(format!(
            "two-mode squeezer leakage {leakage:.3e} exceeds {SQUEEZE_LEAKAGE_TOL:.0e}; raise the cutoff"
        )));
    }
    Ok(out)
}

/// Same as [`two_mode_squeezer`] but returns the edge leakage instead of
/// checking it.
///
/// The generator conserves `n1 - n2`, so it is exponentiated separately on
/// each difference chain. On a chain it is real, tridiagonal and
/// antisymmetric; its exponential is applied to the amplitudes by scaling the
/// step until its norm is at most 1/2 and summing the Taylor series per step.
pub fn two_mode_squeezer_with_leakage(state: &TwoModeState, r: f64) -> Result<(TwoModeState, f64)> {
    ensure_finite("squeezing parameter", r)?;
    if r < 0.0 {
        return Err(domain(format!("squeezing parameter must be non-negative, got {r}")));
    }
    let (d1, d2) = state.dims();
    let mut out = state.clone();
    if r == 0.0 {
        let leak = out.edge_mass();
        return Ok((out, leak));
    }
    for diff in -(d2 as i64 - 1)..=(d1 as i64 - 1) {
        let chain = chain_sites(diff, d1, d2);
        if chain.len() < 2 {
            continue;
        }
        let v: Vec<Complex64> = chain.iter().map(|&(n1, n2)| state.get(n1, n2)).collect();
        if v.iter().all(|c| c.norm_sqr() == 0.0) {
            continue;
        }
        // coupling between chain sites k and k+1
        let g: Vec<f64> = chain
            .windows(2)
            .map(|w| (((w[0].0 + 1) * (w[0].1 + 1)) as f64).sqrt())
            .collect();
        let w = expm_chain(&g, r, v);
        for (&(n1, n2), c) in chain.iter().zip(w) {
            *out.get_mut(n1, n2) = c;
        }
    }
    let leak = out.edge_mass();
    Ok((out, leak))
}

fn chain_sites(diff: i64, d1: usize, d2: usize) -> Vec<(usize, usize)> {
    let (mut n1, mut n2) = if diff >= 0 {
        (diff as usize, 0)
    } else {
        (0, (-diff) as usize)
    };
    let mut sites = Vec::new();
    while n1 < d1 && n2 < d2 {
        sites.push((n1, n2));
        n1 += 1;
        n2 += 1;
    }
    sites
}

/// `exp(r A) v` where `A[k+1][k] = g[k]`, `A[k][k+1] = -g[k]`.
fn expm_chain(g: &[f64], r: f64, mut v: Vec<Complex64>) -> Vec<Complex64> {
    let max_g = g.iter().cloned().fold(0.0, f64::max);
    let norm = 2.0 * max_g * r;
    let steps = (norm / 0.5).ceil().max(1.0) as usize;
    let h = r / steps as f64;
    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        let n = x.len();
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n - 1 {
            y[k + 1] += x[k] * g[k];
            y[k] -= x[k + 1] * g[k];
        }
        y
    };
    for _ in 0..steps {
        let mut term = v.clone();
        let mut sum = v.clone();
        for j in 1..80 {
            let next = apply(&term);
            let scale = h / j as f64;
            term = next.into_iter().map(|c| c * scale).collect();
            let term_norm: f64 = term.iter().map(|c| c.norm_sqr()).sum();
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
            let sum_norm: f64 = sum.iter().map(|c| c.norm_sqr()).sum();
            if term_norm <= 1e-36 * sum_norm {
                break;
            }
        }
        v = sum;
    }
    v
}
