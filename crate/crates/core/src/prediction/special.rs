//! Digamma and trigamma at positive integers via exact harmonic sums.

use crate::error::{domain, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// psi(n) = -gamma_E + sum_{i=1}^{n-1} 1/i.
pub fn digamma(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(domain("digamma is defined here for n >= 1"));
    }
    // Sum smallest terms first.
    let h: f64 = (1..n).rev().map(|i| 1.0 / i as f64).sum();
    Ok(h - EULER_GAMMA)
}

/// psi'(n) = pi^2/6 - sum_{i=1}^{n-1} 1/i^2.
pub fn trigamma(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(domain("trigamma is defined here for n >= 1"));
    }
    let s: f64 = (1..n).rev().map(|i| 1.0 / (i as f64 * i as f64)).sum();
    Ok(std::f64::consts::PI * std::f64::consts::PI / 6.0 - s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn known_values() {
        assert_relative_eq!(digamma(1).unwrap(), -0.577_215_664_9, epsilon = 1e-10);
        // H_7 - gamma_E
        assert_relative_eq!(digamma(8).unwrap(), 2.015_641_478_0, epsilon = 1e-10);
        assert_relative_eq!(trigamma(1).unwrap(), 1.644_934_066_8, epsilon = 1e-10);
        assert_relative_eq!(trigamma(8).unwrap(), 0.133_137_014_6, epsilon = 1e-9);
    }

    #[test]
    fn recurrences() {
        for n in 1..50usize {
            let x = n as f64;
            assert_relative_eq!(digamma(n + 1).unwrap(), digamma(n).unwrap() + 1.0 / x, epsilon = 1e-12);
            assert_relative_eq!(
                trigamma(n + 1).unwrap(),
                trigamma(n).unwrap() - 1.0 / (x * x),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn rejects_zero() {
        assert!(digamma(0).is_err());
        assert!(trigamma(0).is_err());
    }
}
