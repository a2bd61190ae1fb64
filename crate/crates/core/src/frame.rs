//! Sample frames and the bin ↔ RF frequency plan of a zero-IF receiver.

use std::fmt;

use rustfft::num_complex::Complex32;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// FFT bins per RFI bookkeeping segment (≈954 Hz at 3.7 Hz bins).
pub const SEGMENT_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    East,
    West,
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::East => f.write_str("east"),
            Element::West => f.write_str("west"),
        }
    }
}

/// One FFT interval of complex baseband samples from one element.
#[derive(Debug, Clone)]
pub struct IqFrame {
    pub element: Element,
    pub start_mjd: f64,
    pub samples: Vec<Complex32>,
    /// Samples clipped by the digitizer model.
    pub clipped: u64,
}

/// Frequency plan of the receiver: FFT length, sample rate and LO.
///
/// Spectra are kept in ascending RF order: bin `fft_len / 2` holds the
/// LO (DC) and bin 0 the most negative baseband frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPlan {
    pub fft_len: usize,
    pub sample_rate_hz: f64,
    pub lo_freq_hz: f64,
}

impl BandPlan {
    pub fn new(fft_len: usize, sample_rate_hz: f64, lo_freq_hz: f64) -> Result<Self> {
        if fft_len < 2 || !fft_len.is_multiple_of(2) {
            return Err(Error::Config(format!("fft_len {fft_len} must be even and ≥ 2")));
        }
        if !(sample_rate_hz > 0.0) || !lo_freq_hz.is_finite() {
            return Err(Error::Config("sample rate and LO must be positive and finite".into()));
        }
        Ok(Self {
            fft_len,
            sample_rate_hz,
            lo_freq_hz,
        })
    }

    pub fn bin_width_hz(&self) -> f64 {
        self.sample_rate_hz / self.fft_len as f64
    }

    /// Duration of one FFT interval, seconds.
    pub fn frame_duration_s(&self) -> f64 {
        self.fft_len as f64 / self.sample_rate_hz
    }

    pub fn segment_count(&self) -> usize {
        self.fft_len.div_ceil(SEGMENT_BINS)
    }

    pub fn rf_of_bin(&self, bin: usize) -> f64 {
        self.lo_freq_hz + (bin as f64 - (self.fft_len / 2) as f64) * self.bin_width_hz()
    }

    /// Nearest bin to `rf_hz`, or `None` outside the sampled band.
    pub fn bin_of_rf(&self, rf_hz: f64) -> Option<usize> {
        let k = ((rf_hz - self.lo_freq_hz) / self.bin_width_hz()).round() + (self.fft_len / 2) as f64;
        if k >= 0.0 && k < self.fft_len as f64 {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Natural FFT index of an RF-ordered bin.
    pub fn fft_index(&self, bin: usize) -> usize {
        (bin + self.fft_len / 2) % self.fft_len
    }

    /// Sampled RF range `[low, high)`.
    pub fn sampled_band(&self) -> (f64, f64) {
        let half = self.bin_width_hz() / 2.0;
        (self.rf_of_bin(0) - half, self.rf_of_bin(self.fft_len - 1) + half)
    }

    pub fn contains_rf(&self, rf_hz: f64) -> bool {
        let (lo, hi) = self.sampled_band();
        rf_hz >= lo && rf_hz < hi
    }

    pub fn segment_of_bin(&self, bin: usize) -> usize {
        bin / SEGMENT_BINS
    }

    pub fn segment_bins(&self, segment: usize) -> std::ops::Range<usize> {
        let start = segment * SEGMENT_BINS;
        start..(start + SEGMENT_BINS).min(self.fft_len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lo_sits_at_center_bin() {
        let plan = BandPlan::new(1 << 18, 1.024e6, 1415e6).unwrap();
        assert_eq!(plan.rf_of_bin(1 << 17), 1415e6);
        assert_eq!(plan.fft_index(1 << 17), 0);
        assert_eq!(plan.fft_index(0), 1 << 17);
        assert_eq!(plan.segment_count(), 1024);
    }

    #[test]
    fn odd_lengths_are_rejected() {
        assert!(BandPlan::new(255, 1e6, 1e9).is_err());
    }

    proptest! {
        #[test]
        fn rf_mapping_round_trips(bin in 0usize..(1 << 18)) {
            let plan = BandPlan::new(1 << 18, 1.024e6, 1415e6).unwrap();
            prop_assert_eq!(plan.bin_of_rf(plan.rf_of_bin(bin)), Some(bin));
        }

        #[test]
        fn bin_of_rf_within_one_bin(f in 1414.49e6f64..1415.51e6) {
            let plan = BandPlan::new(1 << 18, 1.024e6, 1415e6).unwrap();
            if let Some(b) = plan.bin_of_rf(f) {
                prop_assert!((plan.rf_of_bin(b) - f).abs() <= plan.bin_width_hz());
            }
        }
    }
}
