//! Small distributional diagnostics used by the Monte Carlo harness.

use crate::models::std_normal_cdf;

/// Stephens' 1% critical value for the modified Anderson-Darling statistic
/// when mean and variance are estimated.
pub const AD_NORMAL_CRITICAL_1PCT: f64 = 1.035;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Modified Anderson-Darling statistic `A^2 (1 + 0.75/n + 2.25/n^2)` for
/// normality with estimated mean and variance. `None` when the sample has
/// fewer than 8 points or zero variance.
pub fn anderson_darling_normal(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 8 {
        return None;
    }
    let m = mean(x);
    let sd = variance(x).sqrt();
    if !(sd > 0.0) {
        return None;
    }
    let mut z: Vec<f64> = x.iter().map(|v| std_normal_cdf((v - m) / sd)).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    let tiny = 1e-300;
    let s: f64 = (0..n)
        .map(|i| {
            let a = z[i].max(tiny).ln();
            let b = (1.0 - z[n - 1 - i]).max(tiny).ln();
            (2.0 * i as f64 + 1.0) * (a + b)
        })
        .sum();
    let a2 = -nf - s / nf;
    Some(a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf)))
}

/// Two-sample Kolmogorov-Smirnov distance `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample KS distance against the uniform law on `[0, 1]`.
pub fn ks_uniform(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &u)| {
            let u = u.clamp(0.0, 1.0);
            ((i as f64 + 1.0) / n - u).max(u - i as f64 / n)
        })
        .fold(0.0, f64::max)
}
