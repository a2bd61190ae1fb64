//! FX correlator: per-bin conjugate products transformed to delay taps.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::channelizer::SpectralFrame;
use crate::error::{Error, Result};

/// Complex correlation against integer-sample delay of the West element.
#[derive(Debug, Clone, PartialEq)]
pub struct LagSpectrum {
    /// Tap k holds the coherence with West delayed by k samples (circular;
    /// taps past N/2 are negative delays).
    pub taps: Vec<Complex64>,
    pub tap_interval_s: f64,
    pub zero_lag_index: usize,
}

impl LagSpectrum {
    /// Signed delay of tap `k`, seconds.
    pub fn delay_of_tap(&self, k: usize) -> f64 {
        let n = self.taps.len() as i64;
        let k = k as i64;
        let signed = if k < n / 2 { k } else { k - n };
        signed as f64 * self.tap_interval_s
    }

    pub fn magnitude(&self, k: usize) -> f64 {
        self.taps[k].norm()
    }

    /// Tap with the largest magnitude.
    pub fn peak_tap(&self) -> usize {
        self.taps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .map_or(0, |(k, _)| k)
    }
}

/// Cross-correlate aligned East and West spectra. Normalized by the
/// geometric mean of the frame powers so identical inputs give 1 at zero lag.
pub fn cross_correlate(east: &SpectralFrame, west: &SpectralFrame) -> Result<LagSpectrum> {
    if east.start_mjd != west.start_mjd {
        return Err(Error::Alignment(format!(
            "frame start MJDs differ: {} vs {}",
            east.start_mjd, west.start_mjd
        )));
    }
    if east.band != west.band || east.bins.len() != west.bins.len() {
        return Err(Error::Alignment("frames are on different bin grids".into()));
    }
    let band = east.band;
    let n = east.bins.len();
    let pe: f64 = east.bins.iter().map(|c| c.norm_sqr() as f64).sum();
    let pw: f64 = west.bins.iter().map(|c| c.norm_sqr() as f64).sum();
    let norm = (pe * pw).sqrt();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("zero-power frame".into()));
    }
    let mut buf = vec![Complex64::default(); n];
    for (b, (e, w)) in east.bins.iter().zip(&west.bins).enumerate() {
        let e = Complex64::new(e.re as f64, e.im as f64);
        let w = Complex64::new(w.re as f64, w.im as f64);
        buf[band.fft_index(b)] = e * w.conj();
    }
    // forward kernel puts a West delay of k samples at tap +k
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter_mut().for_each(|c| *c /= norm);
    Ok(LagSpectrum {
        taps: buf,
        tap_interval_s: 1.0 / band.sample_rate_hz,
        zero_lag_index: 0,
    })
}
