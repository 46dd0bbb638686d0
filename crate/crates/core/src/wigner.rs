//! Wigner functions on quadrature phase space.
//!
//! Quadratures follow the two-mode input function: a coherent state `|α>` is
//! a Gaussian centred at `(√2 Re α, √2 Im α)`, the vacuum is
//! `e^{-x²-p²}/π`, and `∫∫ W dx dp = 1`. A point `(x, p)` corresponds to the
//! displacement `β = (x + ip)/√2`.
//!
//! Fock-domain states are evaluated by displaced parity,
//! `W(β) = (1/π) Σ_k (-1)^k |<k| D(-β) |ψ>|²`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_unit_interval, Error, Result};
use crate::fock::{coherent_amplitudes, PureState, TwoModeState};
use crate::special::{laguerre, log_binomial, PolynomialOrder};

/// Largest displaced-space dimension tried before reporting truncation.
const MAX_DISPLACED_DIM: usize = 4096;
/// Missing probability in the displaced state that triggers a larger space.
const DISPLACED_MASS_TOL: f64 = 1e-12;
/// Cutoff at which a coherent state with `n̄ ≤ 4` is exact to well below
/// `1e-12` in every Wigner sample.
pub const COHERENT_WIGNER_CUTOFF: usize = 60;
/// Largest `|W|` tolerated on the edge of an integration grid.
const EDGE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpacePoint {
    pub x: f64,
    pub p: f64,
}

impl PhaseSpacePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    pub fn displacement(&self) -> Complex64 {
        Complex64::new(self.x, self.p) / SQRT_2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
}

impl Default for PhaseSpaceGrid {
    fn default() -> Self {
        Self {
            x_min: -6.0,
            x_max: 6.0,
            n_x: 201,
            p_min: -6.0,
            p_max: 6.0,
            n_p: 201,
        }
    }
}

impl PhaseSpaceGrid {
    pub fn new(x_min: f64, x_max: f64, n_x: usize, p_min: f64, p_max: f64, n_p: usize) -> Result<Self> {
        let grid = Self {
            x_min,
            x_max,
            n_x,
            p_min,
            p_max,
            n_p,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = [self.x_min, self.x_max, self.p_min, self.p_max];
        if bounds.iter().any(|b| !b.is_finite()) {
            return Err(domain("grid bounds must be finite"));
        }
        if !(self.x_min < self.x_max && self.p_min < self.p_max) {
            return Err(domain("grid bounds must be ordered"));
        }
        if self.n_x < 2 || self.n_p < 2 {
            return Err(domain("grid needs at least two samples per axis"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_x - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_p - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    fn is_edge(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.n_x || j + 1 == self.n_p
    }

    /// Trapezoid-rule quadrature weight of sample `(i, j)`.
    fn weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i + 1 == self.n_x { 0.5 } else { 1.0 };
        let wp = if j == 0 || j + 1 == self.n_p { 0.5 } else { 1.0 };
        wx * wp * self.dx() * self.dp()
    }
}

/// Samples of `W` on a grid, row-major with `x` as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_p + j]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Point of the largest sample.
    pub fn argmax(&self) -> PhaseSpacePoint {
        let (idx, _) =
            self.values.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |best, (k, &v)| if v > best.1 { (k, v) } else { best },
            );
        PhaseSpacePoint::new(self.grid.x(idx / self.grid.n_p), self.grid.p(idx % self.grid.n_p))
    }

    pub fn integral(&self) -> f64 {
        let g = &self.grid;
        (0..g.n_x)
            .flat_map(|i| (0..g.n_p).map(move |j| (i, j)))
            .map(|(i, j)| g.weight(i, j) * self.get(i, j))
            .sum()
    }
}

/// `D(γ)|ψ>` on a space large enough to hold the displaced state.
///
/// Columns come from `D(γ)|n> = (a† - γ*) D(γ)|n-1> / √n` starting at the
/// coherent state `D(γ)|0>`. The recurrence only reads lower levels, so
/// every retained level is exact up to rounding.
fn displaced(state: &[Complex64], gamma: Complex64) -> Result<Vec<Complex64>> {
    let n_max = state.len() - 1;
    let weight: f64 = state.iter().map(|c| c.norm_sqr()).sum();
    let reach = gamma.norm() + ((n_max + 1) as f64).sqrt();
    let mut dim = (reach * reach + 10.0 * reach + 20.0).ceil() as usize;
    loop {
        let mut col = coherent_amplitudes(gamma, dim - 1);
        let mut out: Vec<Complex64> = col.iter().map(|c| c * state[0]).collect();
        for (n, &cn) in state.iter().enumerate().skip(1) {
            let inv = 1.0 / (n as f64).sqrt();
            let mut next = vec![Complex64::new(0.0, 0.0); dim];
            for k in 0..dim {
                let raised = if k > 0 {
                    col[k - 1] * (k as f64).sqrt()
                } else {
                    Complex64::new(0.0, 0.0)
                };
                next[k] = (raised - gamma.conj() * col[k]) * inv;
            }
            col = next;
            if cn.norm_sqr() > 0.0 {
                for (o, c) in out.iter_mut().zip(&col) {
                    *o += cn * c;
                }
            }
        }
        let kept: f64 = out.iter().map(|c| c.norm_sqr()).sum();
        if (weight - kept).abs() <= DISPLACED_MASS_TOL * weight.max(1e-300) || weight == 0.0 {
            return Ok(out);
        }
        if dim >= MAX_DISPLACED_DIM {
            return Err(Error::Truncation(format!(
                "displaced state at |beta| = {:.3} does not fit in {dim} levels",
                gamma.norm()
            )));
        }
        dim = (dim * 2).min(MAX_DISPLACED_DIM);
    }
}

fn parity_sum(v: &[Complex64]) -> f64 {
    v.iter()
        .enumerate()
        .map(|(k, c)| if k % 2 == 0 { c.norm_sqr() } else { -c.norm_sqr() })
        .sum()
}

/// `W(x, p)` of a single-mode state.
pub fn wigner_point(state: &PureState, pt: PhaseSpacePoint) -> Result<f64> {
    if !(pt.x.is_finite() && pt.p.is_finite()) {
        return Err(domain("phase-space point must be finite"));
    }
    let v = displaced(state.amplitudes(), -pt.displacement())?;
    Ok(parity_sum(&v) / PI)
}

/// `W` on every grid point, evaluated row by row in parallel.
pub fn wigner_grid(state: &PureState, grid: PhaseSpaceGrid) -> Result<WignerGrid> {
    grid.validate()?;
    let rows: Vec<Vec<f64>> = (0..grid.n_x)
        .into_par_iter()
        .map(|i| {
            (0..grid.n_p)
                .map(|j| wigner_point(state, PhaseSpacePoint::new(grid.x(i), grid.p(j))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(WignerGrid {
        grid,
        values: rows.concat(),
    })
}

/// Reduced Wigner function of mode 2 of a two-mode pure state, summing the
/// displaced parity of each mode-1 conditional vector.
pub fn reduced_mode2_wigner(state: &TwoModeState, pt: PhaseSpacePoint) -> Result<f64> {
    let (d1, d2) = state.dims();
    let gamma = -pt.displacement();
    let mut total = 0.0;
    for n1 in 0..d1 {
        let row: Vec<Complex64> = (0..d2).map(|n2| state.get(n1, n2)).collect();
        if row.iter().all(|c| c.norm_sqr() == 0.0) {
            continue;
        }
        total += parity_sum(&displaced(&row, gamma)?);
    }
    Ok(total / PI)
}

/// Product of a coherent state `|α| e^{iθ}` in mode 1 and vacuum in mode 2.
pub fn input_wigner_analytic(x1: f64, p1: f64, x2: f64, p2: f64, alpha_mag: f64, theta: f64) -> f64 {
    let cx = SQRT_2 * alpha_mag * theta.cos();
    let cp = SQRT_2 * alpha_mag * theta.sin();
    (-(x1 - cx).powi(2) - (p1 - cp).powi(2) - x2 * x2 - p2 * p2).exp() / (PI * PI)
}

/// Number state: `W_n = (-1)^n e^{-r²} L_n(2r²) / π` with `r² = x² + p²`.
pub fn fock_wigner(n: PolynomialOrder, x: f64, p: f64) -> f64 {
    let r2 = x * x + p * p;
    let sign = if n.get().is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (-r2).exp() * laguerre(n, 2.0 * r2) / PI
}

/// Phase-space form of the herald-mode state in beam-splitter addition.
///
/// With `|α>` on the signal port and `|m>` on the auxiliary port, the herald
/// output is `|m>` thinned binomially by `T` and displaced by `-√(1-T) α`.
pub fn bs_herald_mode_wigner(
    alpha: Complex64,
    m: PolynomialOrder,
    transmissivity: f64,
) -> Result<impl Fn(f64, f64) -> f64 + Sync> {
    ensure_unit_interval("transmissivity", transmissivity)?;
    let r = 1.0 - transmissivity;
    let centre = -alpha * r.sqrt() * SQRT_2;
    let mm = m.get();
    let weights: Vec<(PolynomialOrder, f64)> = (0..=mm)
        .map(|j| {
            let w = log_binomial(u64::from(mm), u64::from(j)).exp()
                * transmissivity.powi(j as i32)
                * r.powi((mm - j) as i32);
            (PolynomialOrder::new(j).expect("j <= m"), w)
        })
        .filter(|&(_, w)| w > 0.0)
        .collect();
    Ok(move |x: f64, p: f64| {
        weights
            .iter()
            .map(|&(j, w)| w * fock_wigner(j, x - centre.re, p - centre.im))
            .sum()
    })
}

/// Probability that the sampled mode is found in vacuum,
/// `∫∫ W(x, p) · 2 e^{-x²-p²} dx dp`, by the trapezoid rule on `grid`.
///
/// Fails if `|W|` on the grid edge exceeds `1e-8`, since the integral would
/// then miss part of the state.
pub fn vacuum_overlap_probability<F>(sampler: F, grid: PhaseSpaceGrid) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    grid.validate()?;
    let (sum, edge) = (0..grid.n_x)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            let mut sum = 0.0;
            let mut edge: f64 = 0.0;
            for j in 0..grid.n_p {
                let p = grid.p(j);
                let w = sampler(x, p);
                if grid.is_edge(i, j) {
                    edge = edge.max(w.abs());
                }
                sum += grid.weight(i, j) * w * 2.0 * (-x * x - p * p).exp();
            }
            (sum, edge)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    if edge > EDGE_TOL {
        return Err(Error::Accuracy(format!(
            "grid does not cover the state: |W| reaches {edge:.3e} on its edge"
        )));
    }
    Ok(sum)
}
