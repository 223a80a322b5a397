//! Small statistics helpers for sweep summaries and acceptance checks.

use statrs::distribution::{ContinuousCDF, Discrete, DiscreteCDF, Hypergeometric, Normal};

/// Wilson score interval for `k` successes in `n` trials, as fractions.
pub fn wilson_interval(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.5 + confidence / 2.0);
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    // Exact bounds at the edges; the formula leaves rounding noise there.
    let lo = if p == 0.0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if p == 1.0 { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

fn table(k1: u64, n1: u64, k2: u64, n2: u64) -> Option<Hypergeometric> {
    assert!(k1 <= n1 && k2 <= n2, "successes exceed trials");
    if n1 + n2 == 0 {
        return None;
    }
    // Successes of group 2 given the margins.
    Hypergeometric::new(n1 + n2, k1 + k2, n2).ok()
}

/// One-sided Fisher exact p-value for the alternative that group 2 has a
/// higher success rate than group 1.
pub fn fisher_greater(k1: u64, n1: u64, k2: u64, n2: u64) -> f64 {
    let Some(h) = table(k1, n1, k2, n2) else { return 1.0 };
    if k2 == 0 {
        return 1.0;
    }
    (1.0 - h.cdf(k2 - 1)).clamp(0.0, 1.0)
}

/// Two-sided Fisher exact p-value: total probability of tables no more
/// likely than the observed one.
pub fn fisher_two_sided(k1: u64, n1: u64, k2: u64, n2: u64) -> f64 {
    let Some(h) = table(k1, n1, k2, n2) else { return 1.0 };
    let observed = h.pmf(k2);
    let lo = (k1 + k2).saturating_sub(n1);
    let hi = (k1 + k2).min(n2);
    let p: f64 = (lo..=hi).map(|x| h.pmf(x)).filter(|&q| q <= observed * (1.0 + 1e-7)).sum();
    p.min(1.0)
}

/// Least-squares line through the points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

/// Slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly).map(|f| f.slope)
}
