//! Special functions used by the closed-form photon-addition formulas and by
//! Fock-space amplitude normalization.

use std::sync::OnceLock;

use crate::error::{domain, Result};

/// Highest Laguerre order accepted at the API boundary.
pub const MAX_ORDER: u32 = 32;

/// Number of added photons, doubling as a Laguerre polynomial order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolynomialOrder(u32);

impl PolynomialOrder {
    pub fn new(m: u32) -> Result<Self> {
        if m > MAX_ORDER {
            return Err(domain(format!("polynomial order {m} exceeds the ceiling {MAX_ORDER}")));
        }
        Ok(Self(m))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u32> for PolynomialOrder {
    type Error = crate::Error;

    fn try_from(m: u32) -> Result<Self> {
        Self::new(m)
    }
}

/// Laguerre polynomial `L_m(x)` by the upward three-term recurrence
/// `(k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}`.
///
/// For `x <= 0` every term of the recurrence is positive, so there is no
/// cancellation in the argument range the photon-addition formulas use.
pub fn laguerre(order: PolynomialOrder, x: f64) -> f64 {
    let m = order.get();
    if m == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut curr = 1.0 - x;
    for k in 1..m {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0 - x) * curr - k * prev) / (k + 1.0);
        prev = curr;
        curr = next;
    }
    curr
}

const TABLE_LEN: usize = 1024;

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        let mut acc = 0.0_f64;
        t.push(0.0);
        for k in 1..TABLE_LEN {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`. Tabulated below 1024, Stirling series above.
pub fn log_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        return table()[n as usize];
    }
    let x = n as f64 + 1.0;
    // ln Γ(x) with x = n + 1; the series tail beyond 1/x^7 is below 1e-24 here
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// `ln C(n, k)`; callers guarantee `k <= n`.
pub fn log_binomial(n: u64, k: u64) -> f64 {
    log_factorial(n) - log_factorial(k) - log_factorial(n - k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Explicit coefficient form `Σ_k C(m,k) (-x)^k / k!`, independent of the recurrence.
    fn laguerre_oracle(m: u32, x: f64) -> f64 {
        let mut sum = 0.0;
        let mut binom = 1.0;
        let mut fact = 1.0;
        for k in 0..=m {
            if k > 0 {
                binom *= f64::from(m - k + 1) / f64::from(k);
                fact *= f64::from(k);
            }
            sum += binom * (-x).powi(k as i32) / fact;
        }
        sum
    }

    fn order(m: u32) -> PolynomialOrder {
        PolynomialOrder::new(m).unwrap()
    }

    #[test]
    fn low_orders() {
        assert_eq!(laguerre(order(0), 7.3), 1.0);
        assert!((laguerre(order(1), -1.0) - 2.0).abs() < 1e-15);
        assert!((laguerre(order(3), -1.0) - 17.0 / 3.0).abs() < 1e-13);
        assert!((laguerre_oracle(3, -1.0) - 17.0 / 3.0).abs() < 1e-13);
        assert!((laguerre(order(2), -1.0) - 3.5).abs() < 1e-14);
        assert!((laguerre(order(2), -0.5) - 2.125).abs() < 1e-14);
    }

    #[test]
    fn order_ceiling() {
        assert!(PolynomialOrder::new(32).is_ok());
        assert!(matches!(PolynomialOrder::new(33), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn unit_at_origin() {
        for m in 0..=MAX_ORDER {
            assert!((laguerre(order(m), 0.0) - 1.0).abs() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn log_factorial_values() {
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
        assert!((log_factorial(5) - 120f64.ln()).abs() < 1e-14);
        let direct: f64 = (1..=200).map(|k| (k as f64).ln()).sum();
        assert!(((log_factorial(200) - direct) / direct).abs() < 1e-12);
    }

    #[test]
    fn stirling_branch_matches_table() {
        // continue the direct sum past the table edge
        let direct: f64 = (1..=1500u64).map(|k| (k as f64).ln()).sum();
        assert!(((log_factorial(1500) - direct) / direct).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn recurrence_matches_coefficient_sum(m in 0u32..=10, x in -50.0f64..50.0) {
            let got = laguerre(order(m), x);
            let want = laguerre_oracle(m, x);
            prop_assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()), "m={} x={} {} vs {}", m, x, got, want);
        }

        #[test]
        fn consecutive_factorial_ratio(n in 0u64..300) {
            let ratio = (log_factorial(n + 1) - log_factorial(n)).exp();
            let want = (n + 1) as f64;
            prop_assert!(((ratio - want) / want).abs() < 1e-12);
        }
    }
}
