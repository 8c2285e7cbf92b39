//! Small statistics toolkit: moments, empirical CDFs, Kolmogorov-Smirnov
//! distance, sign test and rank correlation.

use statrs::distribution::{Binomial, Continuous, ContinuousCDF, DiscreteCDF, Normal};

/// Streaming first and second moments (Welford), mergeable across chunks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn std_err(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn standard_normal_pdf(x: f64) -> f64 {
    Normal::standard().pdf(x)
}

/// Empirical CDF as `(value, F(value))` steps over sorted distinct values.
pub fn ecdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => out.push((x, f)),
        }
    }
    out
}

/// Fraction of `sorted` that is <= x.
pub fn ecdf_at(sorted: &[f64], x: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// One-sample KS distance sup_x |F_n(x) - F(x)|. `sorted` must be ascending.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// Standardises by sample mean and standard deviation, then returns the KS
/// distance to N(0, 1).
pub fn ks_vs_standard_normal(samples: &[f64]) -> f64 {
    let m: Moments = samples.iter().copied().collect();
    let sd = m.std_dev();
    if sd == 0.0 {
        return 1.0;
    }
    let mut z: Vec<f64> = samples.iter().map(|x| (x - m.mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    ks_distance(&z, standard_normal_cdf)
}

/// Density histogram of standardised samples on `[-range, range]`.
pub fn standardized_histogram(samples: &[f64], bins: usize, range: f64) -> Vec<(f64, f64)> {
    let m: Moments = samples.iter().copied().collect();
    let sd = m.std_dev();
    let width = 2.0 * range / bins as f64;
    let mut counts = vec![0usize; bins];
    if sd > 0.0 {
        for &x in samples {
            let z = (x - m.mean) / sd;
            if z >= -range && z < range {
                counts[((z + range) / width) as usize] += 1;
            }
        }
    }
    let n = samples.len().max(1) as f64;
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (-range + (i as f64 + 0.5) * width, c as f64 / (n * width)))
        .collect()
}

/// One-sided sign test for "a <= b" over paired samples. Tied pairs are
/// dropped; among the rest, counts pairs with `a_i < b_i` and returns
/// P(X >= successes) for X ~ Binomial(n, 1/2).
pub fn sign_test_le(a: &[f64], b: &[f64]) -> SignTest {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let untied: Vec<(f64, f64)> = a.iter().zip(b).filter(|(x, y)| x != y).map(|(x, y)| (*x, *y)).collect();
    let n = untied.len() as u64;
    let successes = untied.iter().filter(|(x, y)| x < y).count() as u64;
    let p_value = if n == 0 || successes == 0 {
        1.0
    } else {
        let bin = Binomial::new(0.5, n).expect("valid binomial");
        1.0 - bin.cdf(successes - 1)
    };
    SignTest {
        n,
        ties: a.len() as u64 - n,
        successes,
        p_value,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    /// Untied pairs.
    pub n: u64,
    pub ties: u64,
    pub successes: u64,
    pub p_value: f64,
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.3).collect();
        let whole: Moments = xs.iter().copied().collect();
        let mut a: Moments = xs[..333].iter().copied().collect();
        let b: Moments = xs[333..].iter().copied().collect();
        a.merge(&b);
        assert_relative_eq!(a.mean, whole.mean, epsilon = 1e-12);
        assert_relative_eq!(a.variance(), whole.variance(), max_relative = 1e-12);
        assert_eq!(a.count, 1000);
    }

    #[test]
    fn ecdf_steps() {
        let e = ecdf(&[0.0, 0.0, 0.0]);
        assert_eq!(e, vec![(0.0, 1.0)]);
        let e = ecdf(&[2.0, 1.0, 2.0, 3.0]);
        assert_eq!(e, vec![(1.0, 0.25), (2.0, 0.75), (3.0, 1.0)]);
        assert!(ecdf(&[5.0, 1.0, 3.0, 3.0, 9.0]).len() <= 5);
    }

    #[test]
    fn ks_of_uniform_grid_against_uniform_cdf() {
        let n = 1000;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&v, |x| x.clamp(0.0, 1.0));
        assert_relative_eq!(d, 0.5 / n as f64, epsilon = 1e-12);
    }

    #[test]
    fn sign_test_values() {
        let a = vec![0.0; 10];
        let b = vec![1.0; 10];
        let t = sign_test_le(&a, &b);
        assert_eq!(t.successes, 10);
        assert_relative_eq!(t.p_value, 0.5f64.powi(10), max_relative = 1e-9);
        let t = sign_test_le(&b, &a);
        assert_eq!(t.successes, 0);
        assert_eq!(t.p_value, 1.0);
        let t = sign_test_le(&[1.0, 2.0, 3.0, 0.0], &[1.0, 2.0, 4.0, 5.0]);
        assert_eq!((t.n, t.ties, t.successes), (2, 2, 2));
        assert_relative_eq!(t.p_value, 0.25, max_relative = 1e-9);
    }

    #[test]
    fn spearman_monotone() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(spearman(&x, &[1.0, 4.0, 9.0, 16.0]), 1.0, epsilon = 1e-12);
        assert_relative_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]), -1.0, epsilon = 1e-12);
    }
}
