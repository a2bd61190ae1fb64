//! FFT channelization of element frames.
//!
//! Spectra use a unitary, unwindowed transform so that per-bin noise power
//! equals the per-sample noise variance σ², and Parseval holds exactly.

use std::sync::Arc;

use rustfft::{num_complex::Complex32, Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::frame::{BandPlan, Element, IqFrame, SEGMENT_BINS};

/// Wideband power window: 50 MHz centred on the first-level band.
pub const WIDEBAND_CENTER_HZ: f64 = 1424.5e6;
pub const WIDEBAND_WIDTH_HZ: f64 = 50e6;

/// Complex spectrum of one element over one FFT interval.
#[derive(Debug, Clone)]
pub struct SpectralFrame {
    pub element: Element,
    pub start_mjd: f64,
    pub band: BandPlan,
    /// RF-ascending complex bins.
    pub bins: Vec<Complex32>,
    /// Σ|bin|² per 256-bin segment.
    pub segment_power: Vec<f64>,
    /// Σ|bin|² over the 50 MHz wideband window.
    pub wideband_power: f64,
}

impl SpectralFrame {
    pub fn bin_width_hz(&self) -> f64 {
        self.band.bin_width_hz()
    }

    pub fn power(&self, bin: usize) -> f64 {
        bin_power(&self.bins[bin])
    }

    /// Phase of a bin in `(-π, π]`.
    pub fn phase(&self, bin: usize) -> f64 {
        let c = self.bins[bin];
        let p = (c.im as f64).atan2(c.re as f64);
        if p <= -std::f64::consts::PI {
            std::f64::consts::PI
        } else {
            p
        }
    }

    pub fn total_power(&self) -> f64 {
        self.segment_power.iter().sum()
    }
}

fn bin_power(c: &Complex32) -> f64 {
    (c.re as f64).powi(2) + (c.im as f64).powi(2)
}

/// Reusable channelizer holding an FFT plan for one band.
pub struct Channelizer {
    band: BandPlan,
    fft: Arc<dyn Fft<f32>>,
    buffer: Vec<Complex32>,
    scratch: Vec<Complex32>,
    wideband: std::ops::Range<usize>,
}

impl std::fmt::Debug for Channelizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Channelizer").field("band", &self.band).finish()
    }
}

impl Channelizer {
    pub fn new(band: BandPlan) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(band.fft_len);
        let scratch = vec![Complex32::default(); fft.get_inplace_scratch_len()];
        let lo = WIDEBAND_CENTER_HZ - WIDEBAND_WIDTH_HZ / 2.0;
        let hi = WIDEBAND_CENTER_HZ + WIDEBAND_WIDTH_HZ / 2.0;
        let first = (0..band.fft_len)
            .find(|&b| band.rf_of_bin(b) >= lo)
            .unwrap_or(band.fft_len);
        let last = (0..band.fft_len)
            .rev()
            .find(|&b| band.rf_of_bin(b) < hi)
            .map_or(first, |b| b + 1);
        Self {
            band,
            fft,
            buffer: vec![Complex32::default(); band.fft_len],
            scratch,
            wideband: first..last.max(first),
        }
    }

    pub fn band(&self) -> &BandPlan {
        &self.band
    }

    pub fn channelize(&mut self, frame: &IqFrame) -> Result<SpectralFrame> {
        let n = self.band.fft_len;
        if frame.samples.len() != n {
            return Err(Error::FrameLength {
                expected: n,
                got: frame.samples.len(),
            });
        }
        self.buffer.copy_from_slice(&frame.samples);
        self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);

        let scale = 1.0 / (n as f32).sqrt();
        let half = n / 2;
        let mut bins = Vec::with_capacity(n);
        bins.extend(self.buffer[half..].iter().map(|c| c * scale));
        bins.extend(self.buffer[..half].iter().map(|c| c * scale));

        let segment_power: Vec<f64> = bins
            .chunks(SEGMENT_BINS)
            .map(|seg| seg.iter().map(bin_power).sum())
            .collect();
        let wideband_power = bins[self.wideband.clone()]
            .iter()
            .map(bin_power)
            .sum();

        Ok(SpectralFrame {
            element: frame.element,
            start_mjd: frame.start_mjd,
            band: self.band,
            bins,
            segment_power,
            wideband_power,
        })
    }
}

/// One-shot channelization; plans a fresh FFT.
pub fn channelize(frame: &IqFrame, band: BandPlan) -> Result<SpectralFrame> {
    Channelizer::new(band).channelize(frame)
}

pub fn segment_power(frame: &SpectralFrame, segment_index: usize) -> Result<f64> {
    frame
        .segment_power
        .get(segment_index)
        .copied()
        .ok_or_else(|| {
            Error::Range(format!(
                "segment {segment_index} outside 0..{}",
                frame.segment_power.len()
            ))
        })
}

/// Ratio of a bin's power to the mean power of the other bins in its segment.
pub fn bin_snr_ratio(frame: &SpectralFrame, bin: usize) -> Result<f64> {
    if bin >= frame.bins.len() {
        return Err(Error::Range(format!("bin {bin} outside 0..{}", frame.bins.len())));
    }
    let seg = frame.band.segment_of_bin(bin);
    let others = frame.band.segment_bins(seg).len() - 1;
    let p = frame.power(bin);
    let rest = (frame.segment_power[seg] - p).max(0.0);
    if others == 0 || rest <= 0.0 {
        return Err(Error::Degenerate(format!("zero noise estimate for bin {bin}")));
    }
    Ok(p / (rest / others as f64))
}

pub fn bin_snr_db(frame: &SpectralFrame, bin: usize) -> Result<f64> {
    bin_snr_ratio(frame, bin).map(|r| 10.0 * r.log10())
}

/// Per-bin detection threshold calibrated for the finite noise estimate.
///
/// The noise reference of a bin is the mean of `noise_bins` other bins, so
/// under AWGN the power ratio r satisfies P(r > x) = (1 + x/m)^-m rather
/// than exp(-x). Comparing r against m·(exp(T/m) − 1) gives a false-alarm
/// probability of exactly exp(-T) per bin, T = 10^(dB/10).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionThreshold {
    pub snr_db: f64,
    pub noise_bins: usize,
    ratio: f64,
}

impl DetectionThreshold {
    pub fn new(snr_db: f64, noise_bins: usize) -> Self {
        let t = 10f64.powf(snr_db / 10.0);
        let m = noise_bins.max(1) as f64;
        Self {
            snr_db,
            noise_bins,
            ratio: m * (t / m).exp_m1(),
        }
    }

    /// Threshold for the standard 256-bin segment.
    pub fn for_segments(snr_db: f64) -> Self {
        Self::new(snr_db, SEGMENT_BINS - 1)
    }

    /// Power ratio a bin must exceed.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn exceeds(&self, ratio: f64) -> bool {
        ratio > self.ratio
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn plan(n: usize) -> BandPlan {
        BandPlan::new(n, n as f64 * 3.90625, 1415e6).unwrap()
    }

    fn noise_frame(n: usize, sigma: f32, rng: &mut ChaCha8Rng) -> IqFrame {
        let s = sigma / 2f32.sqrt();
        let samples = (0..n)
            .map(|_| {
                let re: f32 = StandardNormal.sample(rng);
                let im: f32 = StandardNormal.sample(rng);
                Complex32::new(re * s, im * s)
            })
            .collect();
        IqFrame {
            element: Element::East,
            start_mjd: 60_300.0,
            samples,
            clipped: 0,
        }
    }

    fn tone_frame(n: usize, bin: usize, amp: f32, band: &BandPlan) -> IqFrame {
        let k = band.fft_index(bin) as f64;
        let samples = (0..n)
            .map(|i| {
                let ph = 2.0 * std::f64::consts::PI * k * i as f64 / n as f64;
                Complex32::new(amp * ph.cos() as f32, amp * ph.sin() as f32)
            })
            .collect();
        IqFrame {
            element: Element::West,
            start_mjd: 60_300.0,
            samples,
            clipped: 0,
        }
    }

    #[test]
    fn tone_lands_in_one_bin() {
        let n = 4096;
        let band = plan(n);
        let target = 1000;
        let spec = channelize(&tone_frame(n, target, 0.5, &band), band).unwrap();
        // unitary FFT: bin power = A²·N
        assert_relative_eq!(spec.power(target), 0.25 * n as f64, max_relative = 1e-4);
        let rest: f64 = (0..n).filter(|&b| b != target).map(|b| spec.power(b)).sum();
        assert!(rest < 1e-6 * spec.power(target));
    }

    #[test]
    fn zero_frame_gives_zero_spectrum() {
        let n = 1024;
        let frame = IqFrame {
            element: Element::East,
            start_mjd: 0.0,
            samples: vec![Complex32::default(); n],
            clipped: 0,
        };
        let spec = channelize(&frame, plan(n)).unwrap();
        assert!(spec.bins.iter().all(|c| c.norm_sqr() == 0.0));
        assert_eq!(spec.total_power(), 0.0);
        assert_eq!(segment_power(&spec, 2).unwrap(), 0.0);
        assert!(matches!(bin_snr_db(&spec, 5), Err(Error::Degenerate(_))));
    }

    #[test]
    fn length_mismatch_is_a_frame_error() {
        let frame = IqFrame {
            element: Element::East,
            start_mjd: 0.0,
            samples: vec![Complex32::default(); 100],
            clipped: 0,
        };
        assert!(matches!(
            channelize(&frame, plan(128)),
            Err(Error::FrameLength { expected: 128, got: 100 })
        ));
    }

    #[test]
    fn parseval_and_segment_sum() {
        let n = 1 << 14;
        let band = plan(n);
        let mut ch = Channelizer::new(band);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let frame = noise_frame(n, 1.3, &mut rng);
        let spec = ch.channelize(&frame).unwrap();
        let time_power: f64 = frame.samples.iter().map(|c| c.norm_sqr() as f64).sum();
        let bin_power: f64 = (0..n).map(|b| spec.power(b)).sum();
        assert!((bin_power - time_power).abs() / time_power < 1e-6);
        assert!((spec.total_power() - bin_power).abs() / bin_power < 1e-12);
        assert_eq!(spec.segment_power.len(), n / SEGMENT_BINS);
        // desk-scale band is entirely inside the wideband window
        assert!((spec.wideband_power - bin_power).abs() / bin_power < 1e-12);
    }

    #[test]
    fn white_noise_mean_bin_power_is_sigma_squared() {
        let n = 1 << 12;
        let sigma = 0.7f32;
        let mut ch = Channelizer::new(plan(n));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let frames = 100;
        let mut sum = 0.0;
        for _ in 0..frames {
            let spec = ch.channelize(&noise_frame(n, sigma, &mut rng)).unwrap();
            sum += spec.total_power();
        }
        let count = (frames * n) as f64;
        let mean = sum / count;
        let var = (sigma as f64).powi(2);
        // per-bin power is exponential: std = mean
        let se = var / count.sqrt();
        assert!((mean - var).abs() < 3.0 * se, "mean {mean} var {var} se {se}");
    }

    #[test]
    fn segment_power_of_flat_noise() {
        let n = 1 << 14;
        let mut ch = Channelizer::new(plan(n));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut vals = Vec::new();
        for _ in 0..20 {
            let spec = ch.channelize(&noise_frame(n, 1.0, &mut rng)).unwrap();
            vals.extend(spec.segment_power.iter().copied());
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        // sum of 256 unit exponentials: mean 256, std 16
        let se = 16.0 / (vals.len() as f64).sqrt();
        assert!((mean - 256.0).abs() < 3.0 * se, "{mean}");
        assert!(segment_power(&ch.channelize(&noise_frame(n, 1.0, &mut rng)).unwrap(), n / 256).is_err());
    }

    #[test]
    fn tone_adds_to_segment_power() {
        let n = 1 << 12;
        let band = plan(n);
        let mut ch = Channelizer::new(band);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let bin = 700;
        let seg = band.segment_of_bin(bin);
        let amp = (100.0 / n as f64).sqrt() as f32;
        let mut acc = 0.0;
        let trials = 400;
        for _ in 0..trials {
            let mut f = noise_frame(n, 1.0, &mut rng);
            let tone = tone_frame(n, bin, amp, &band);
            for (a, b) in f.samples.iter_mut().zip(&tone.samples) {
                *a += b;
            }
            acc += ch.channelize(&f).unwrap().segment_power[seg];
        }
        let mean = acc / trials as f64;
        let se = (256.0 + 2.0 * 100.0f64).sqrt() / (trials as f64).sqrt();
        assert!((mean - 356.0).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn snr_of_a_bin_at_noise_mean_is_zero_db() {
        let n = 512;
        let band = plan(n);
        let mut spec = SpectralFrame {
            element: Element::East,
            start_mjd: 0.0,
            band,
            bins: vec![Complex32::new(1.0, 0.0); n],
            segment_power: vec![],
            wideband_power: 0.0,
        };
        spec.segment_power = vec![256.0, 256.0];
        assert!(bin_snr_db(&spec, 17).unwrap().abs() < 1e-12);
        spec.bins[17] = Complex32::new(10.0, 0.0);
        spec.segment_power[0] = 255.0 + 100.0;
        assert!((bin_snr_db(&spec, 17).unwrap() - 20.0).abs() < 1e-9);
        assert!(bin_snr_db(&spec, n).is_err());
    }

    #[test]
    fn calibrated_threshold_tail_matches_rayleigh() {
        // P(Exp(1) > x·G/m) with G ~ Gamma(m, 1) is (1 + x/m)^-m; at the
        // calibrated ratio this must equal exp(-T).
        for db in [3.0, 8.5, 12.0] {
            let th = DetectionThreshold::for_segments(db);
            let m = th.noise_bins as f64;
            let tail = (1.0 + th.ratio() / m).powf(-m);
            let t = 10f64.powf(db / 10.0);
            assert_relative_eq!(tail, (-t).exp(), max_relative = 1e-12);
            assert!(th.ratio() > t);
        }
    }
}
