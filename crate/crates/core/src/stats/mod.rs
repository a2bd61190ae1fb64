//! Null-model statistics: Rayleigh threshold math, RA-bin event
//! probabilities, binomial tails, Cohen's d and the likelihood surrogates.

pub mod gof;

use std::f64::consts::{LN_10, PI};

use statrs::function::factorial::ln_binomial;

use crate::candidates::{pair_order, PairRecord};
use crate::error::{Error, Result};
use crate::sim::BaselineGeometry;
use crate::timebase::{RA_BIN_COUNT, RA_BIN_WIDTH_HR};

/// Probability a Rayleigh amplitude exceeds `r`.
pub fn rayleigh_tail(r: f64, sigma: f64) -> f64 {
    (-(r * r) / (2.0 * sigma * sigma)).exp()
}

/// Candidate-rate model of an M-element interferometer with an N-bin FFT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdModel {
    pub sigma: f64,
    pub snr_threshold_db: f64,
    pub n_fft: f64,
    pub n_elements: u32,
}

impl ThresholdModel {
    pub fn new(sigma: f64, snr_threshold_db: f64, n_fft: f64, n_elements: u32) -> Result<Self> {
        if n_elements < 1 || !(n_fft >= 1.0) || !(sigma > 0.0) {
            return Err(Error::Range("need n_elements ≥ 1, n_fft ≥ 1, sigma > 0".into()));
        }
        Ok(Self {
            sigma,
            snr_threshold_db,
            n_fft,
            n_elements,
        })
    }

    /// r²/2σ² for the threshold.
    pub fn threshold_linear(&self) -> f64 {
        10f64.powf(self.snr_threshold_db / 10.0)
    }

    /// Amplitude threshold r.
    pub fn threshold_amplitude(&self) -> f64 {
        self.sigma * (2.0 * self.threshold_linear()).sqrt()
    }

    /// Per-bin probability that every element exceeds the threshold.
    pub fn joint_tail(&self) -> f64 {
        rayleigh_tail(self.threshold_amplitude(), self.sigma).powi(self.n_elements as i32)
    }
}

/// Expected candidates per FFT: N·exp(−M·r²/2σ²).
pub fn expected_candidates(model: &ThresholdModel) -> f64 {
    model.n_fft * (-(model.n_elements as f64) * model.threshold_linear()).exp()
}

/// Threshold giving `to_elements` the same candidate rate that
/// `from_elements` has at `threshold_db`.
pub fn equal_rate_threshold_db(threshold_db: f64, from_elements: u32, to_elements: u32) -> f64 {
    threshold_db - 10.0 * (to_elements as f64 / from_elements as f64).log10()
}

/// RA coverage of one capture file: start RA and swept span, hours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dwell {
    pub ra_start_hr: f64,
    pub span_hr: f64,
}

/// Normalized dwell time per 0.1 hr RA bin.
pub fn event_probabilities(dwell: &[Dwell]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; RA_BIN_COUNT];
    let mut total = 0.0;
    for d in dwell {
        if !(d.span_hr >= 0.0) || d.span_hr > 24.0 || !d.ra_start_hr.is_finite() {
            return Err(Error::Range(format!("dwell span {} hr", d.span_hr)));
        }
        // walk in bin units so every step lands exactly on an integer edge
        let mut pos = d.ra_start_hr.rem_euclid(24.0) / RA_BIN_WIDTH_HR;
        let mut left = d.span_hr / RA_BIN_WIDTH_HR;
        while left > 0.0 {
            let bin = (pos.floor() as usize).min(RA_BIN_COUNT - 1);
            let take = (bin as f64 + 1.0 - pos).min(left);
            acc[bin] += take * RA_BIN_WIDTH_HR;
            left -= take;
            pos = ((bin + 1) % RA_BIN_COUNT) as f64;
        }
        total += d.span_hr;
    }
    if !(total > 0.0) {
        return Err(Error::Degenerate("zero total dwell".into()));
    }
    acc.iter_mut().for_each(|a| *a /= total);
    Ok(acc)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Range(format!("event probability {p} outside (0, 1)")));
    }
    Ok(())
}

fn ln_pmf(n: u64, j: u64, p: f64) -> f64 {
    ln_binomial(n, j) + j as f64 * p.ln() + (n - j) as f64 * (-p).ln_1p()
}

/// log Σ pmf(j) over `js`, stopping once terms are negligible. `js` must
/// move away from the distribution's mode so terms only shrink.
fn ln_sum_receding(n: u64, p: f64, js: impl Iterator<Item = u64>) -> f64 {
    let mut ln_total = f64::NEG_INFINITY;
    for j in js {
        let t = ln_pmf(n, j, p);
        if t < ln_total - 46.0 {
            break;
        }
        ln_total = if ln_total == f64::NEG_INFINITY {
            t
        } else {
            let (hi, lo) = if t > ln_total { (t, ln_total) } else { (ln_total, t) };
            hi + (lo - hi).exp().ln_1p()
        };
    }
    ln_total
}

fn ln_sum(n: u64, p: f64, js: impl Iterator<Item = u64>) -> f64 {
    let terms: Vec<f64> = js.map(|j| ln_pmf(n, j, p)).collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// P(X ≥ k) for X ~ Binomial(n, p), summed exactly in log space.
pub fn binomial_tail(n: u64, k: u64, p: f64) -> Result<f64> {
    check_p(p)?;
    if k > n {
        return Err(Error::Range(format!("k = {k} exceeds n = {n}")));
    }
    if k == 0 {
        return Ok(1.0);
    }
    let mode = ((n + 1) as f64 * p).floor() as u64;
    if k > mode {
        Ok(ln_sum_receding(n, p, k..=n).exp())
    } else {
        // upper tail holds most of the mass; sum the head instead
        let head = if k - 1 < mode {
            ln_sum(n, p, 0..k)
        } else {
            ln_sum_receding(n, p, (0..k).rev())
        };
        Ok((1.0 - head.exp()).max(0.0))
    }
}

/// P(X ≤ k) for X ~ Binomial(n, p).
pub fn binomial_cdf(n: u64, k: u64, p: f64) -> Result<f64> {
    check_p(p)?;
    if k >= n {
        return Ok(1.0);
    }
    let mode = ((n + 1) as f64 * p).floor() as u64;
    if k < mode {
        Ok(ln_sum_receding(n, p, (0..=k).rev()).exp())
    } else {
        let tail = if k + 1 > mode {
            ln_sum_receding(n, p, (k + 1)..=n)
        } else {
            ln_sum(n, p, (k + 1)..=n)
        };
        Ok((1.0 - tail.exp()).max(0.0))
    }
}

/// Effect size of `events` in `trials` against a binomial(p) expectation.
pub fn cohens_d(events: u64, trials: u64, p: f64) -> Result<f64> {
    check_p(p)?;
    if trials == 0 {
        return Err(Error::Range("cohens_d needs at least one trial".into()));
    }
    let n = trials as f64;
    Ok((events as f64 - n * p) / (n * p * (1.0 - p)).sqrt())
}

/// One event of the running effect-size series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DPoint {
    /// 1-based trial index.
    pub trial: usize,
    pub ra_bin: usize,
    pub d: f64,
}

/// Per-RA-bin event statistics over a sorted pair list.
#[derive(Debug, Clone, PartialEq)]
pub struct RaBinTable {
    pub event_probability: Vec<f64>,
    pub trials: usize,
    /// 1-based trial indices at which each bin received an event.
    pub event_trials: Vec<Vec<usize>>,
    pub sum_log10_df: Vec<f64>,
}

impl RaBinTable {
    pub fn new(event_probability: Vec<f64>) -> Result<Self> {
        if event_probability.len() != RA_BIN_COUNT {
            return Err(Error::Range(format!("need {RA_BIN_COUNT} bin probabilities")));
        }
        let sum: f64 = event_probability.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || event_probability.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Range(format!("bin probabilities sum to {sum}")));
        }
        Ok(Self {
            event_probability,
            trials: 0,
            event_trials: vec![Vec::new(); RA_BIN_COUNT],
            sum_log10_df: vec![0.0; RA_BIN_COUNT],
        })
    }

    pub fn events(&self, bin: usize) -> usize {
        self.event_trials[bin].len()
    }

    /// Bins with nonzero dwell.
    pub fn occupied_bins(&self) -> impl Iterator<Item = usize> + '_ {
        (0..RA_BIN_COUNT).filter(|&b| self.event_probability[b] > 0.0)
    }

    /// Effect size of `bin` after `trial` trials, or `None` for bins
    /// without dwell.
    pub fn d_at(&self, bin: usize, trial: usize) -> Option<f64> {
        let p = self.event_probability[bin];
        if !(p > 0.0 && p < 1.0) || trial == 0 {
            return None;
        }
        let k = self.event_trials[bin].partition_point(|&t| t <= trial);
        cohens_d(k as u64, trial as u64, p).ok()
    }

    pub fn final_d(&self, bin: usize) -> Option<f64> {
        self.d_at(bin, self.trials)
    }

    /// d after every trial 1..=N for one bin.
    pub fn cohens_d_series(&self, bin: usize) -> Vec<f64> {
        (1..=self.trials).filter_map(|t| self.d_at(bin, t)).collect()
    }

    /// d of each bin at the trials where that bin gained an event.
    pub fn event_points(&self) -> Vec<DPoint> {
        let mut pts: Vec<DPoint> = (0..RA_BIN_COUNT)
            .flat_map(|b| {
                self.event_trials[b].iter().filter_map(move |&t| {
                    self.d_at(b, t).map(|d| DPoint {
                        trial: t,
                        ra_bin: b,
                        d,
                    })
                })
            })
            .collect();
        pts.sort_by_key(|p| (p.trial, p.ra_bin));
        pts
    }
}

/// Accumulate sorted pairs into `table` as successive binomial trials.
pub fn running_d_series(sorted_pairs: &[PairRecord], table: &mut RaBinTable) -> Result<()> {
    if sorted_pairs
        .windows(2)
        .any(|w| pair_order(&w[0], &w[1]) == std::cmp::Ordering::Greater)
    {
        return Err(Error::Ordering("pairs must be sorted by ascending |ΔΔΦ|".into()));
    }
    table.trials = sorted_pairs.len();
    table.event_trials.iter_mut().for_each(Vec::clear);
    table.sum_log10_df.iter_mut().for_each(|s| *s = 0.0);
    for (i, p) in sorted_pairs.iter().enumerate() {
        if p.ra_bin >= RA_BIN_COUNT {
            return Err(Error::Range(format!("RA bin {}", p.ra_bin)));
        }
        table.event_trials[p.ra_bin].push(i + 1);
        table.sum_log10_df[p.ra_bin] += p.log10_df_mhz;
    }
    Ok(())
}

/// Surrogate Δf likelihood: chance a Poisson-spaced neighbour at
/// `candidate_density` per Hz falls within `delta_f_hz`.
pub fn df_likelihood(delta_f_hz: f64, candidate_density: f64) -> f64 {
    -(-candidate_density * delta_f_hz).exp_m1()
}

/// Surrogate SNR log-likelihood: log10 of the dual-element Rayleigh tail.
pub fn snr_likelihood_log10(snr_db: f64) -> f64 {
    -2.0 * 10f64.powf(snr_db / 10.0) / LN_10
}

/// Log10 likelihood of one candidate's East and West SNRs under AWGN.
pub fn candidate_snr_log10_likelihood(snr_east_db: f64, snr_west_db: f64) -> f64 {
    -(10f64.powf(snr_east_db / 10.0) + 10f64.powf(snr_west_db / 10.0)) / LN_10
}

/// Sky angle, degrees, matching a differential phase on the baseline.
pub fn phase_to_sky_angle_deg(dd_phi_rad: f64, geometry: &BaselineGeometry) -> f64 {
    (dd_phi_rad / (2.0 * PI * geometry.baseline_wavelengths)).to_degrees()
}
