//! Goodness-of-fit tests used to check simulated output against null models.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Kolmogorov survival function Q(λ) = P(K > λ).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // small-λ form converges where the alternating series does not
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let s: f64 = (1..=40)
            .map(|j: i32| y.powi((2 * j - 1) * (2 * j - 1)))
            .sum();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * s;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|j: i32| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (j * j) as f64 * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample KS test of `samples` against a continuous CDF.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut u: Vec<f64> = samples.iter().map(|&x| cdf(x)).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len();
    if n == 0 {
        return KsResult {
            n,
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let nf = n as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / nf).max((i + 1) as f64 / nf - v))
        .fold(0.0, f64::max);
    let sqrt_n = nf.sqrt();
    KsResult {
        n,
        statistic: d,
        p_value: kolmogorov_sf((sqrt_n + 0.12 + 0.11 / sqrt_n) * d),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed counts against cell probabilities.
/// Cells with expected count below 5 are pooled into one cell.
pub fn chi_square_test(observed: &[u64], probabilities: &[f64]) -> ChiSquareResult {
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        let e = p * n;
        if e >= 5.0 {
            cells.push((o as f64, e));
        } else {
            pooled_o += o as f64;
            pooled_e += e;
        }
    }
    if pooled_e > 0.0 || pooled_o > 0.0 {
        cells.push((pooled_o, pooled_e));
    }
    let statistic: f64 = cells
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else if o > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else if statistic.is_infinite() {
        0.0
    } else {
        1.0 - ChiSquared::new(dof as f64).map_or(1.0, |c| c.cdf(statistic))
    };
    ChiSquareResult {
        statistic,
        dof,
        p_value,
    }
}
