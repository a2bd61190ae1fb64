//! Two-element baseband sky simulator.
//!
//! Each element receives circular complex Gaussian noise of variance σ²,
//! a `correlated_fraction` share of which is one realization common to both
//! elements. Pulse pairs and RFI are added as tones scaled to a per-bin SNR
//! and the result is optionally quantized by a mid-rise digitizer model.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::{Complex32, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{BandPlan, Element, IqFrame};
use crate::timebase::{self, ObservatoryClock, Pointing, SECONDS_PER_DAY};

/// Two adjacent-time FFT intervals are processed per acquisition tick.
pub const FRAMES_PER_TICK: usize = 2;

/// Digitizer full scale in units of σ.
const FULL_SCALE_SIGMA: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalePreset {
    Full,
    Desk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub sample_rate_hz: f64,
    pub fft_len: usize,
    pub lo_freq_hz: f64,
    /// Per-element noise standard deviation.
    pub sigma: f64,
    pub correlated_fraction: f64,
    /// 0 disables quantization.
    pub quantize_bits: u32,
    pub seed: u64,
    /// Snap injected tones to the nearest bin centre.
    pub tones_on_bin_center: bool,
}

impl SimConfig {
    /// 1/16 ns sampling, 2^24-point FFT (≈3.7 Hz bins), LO at 1425 MHz.
    pub fn full() -> Self {
        Self {
            sample_rate_hz: 62.5e6,
            fft_len: 1 << 24,
            lo_freq_hz: 1425e6,
            sigma: 1.0,
            correlated_fraction: 0.0,
            quantize_bits: 8,
            seed: 1,
            tones_on_bin_center: true,
        }
    }

    /// 1.024 MHz sampling, 2^18-point FFT (≈3.9 Hz bins). The LO is moved
    /// to 1415 MHz so the narrow band clears the 1424–1426 MHz exclusion.
    pub fn desk() -> Self {
        Self {
            sample_rate_hz: 1.024e6,
            fft_len: 1 << 18,
            lo_freq_hz: 1415e6,
            ..Self::full()
        }
    }

    pub fn preset(p: ScalePreset) -> Self {
        match p {
            ScalePreset::Full => Self::full(),
            ScalePreset::Desk => Self::desk(),
        }
    }

    pub fn band(&self) -> Result<BandPlan> {
        BandPlan::new(self.fft_len, self.sample_rate_hz, self.lo_freq_hz)
    }

    pub fn validate(&self) -> Result<()> {
        self.band()?;
        if !(self.sigma > 0.0) {
            return Err(Error::Config("sigma must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.correlated_fraction) {
            return Err(Error::Config("correlated_fraction must lie in [0, 1]".into()));
        }
        if self.quantize_bits > 16 {
            return Err(Error::Config("quantize_bits must be ≤ 16".into()));
        }
        Ok(())
    }
}

/// East-West baseline measured in wavelengths at a reference frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineGeometry {
    pub baseline_wavelengths: f64,
    pub reference_freq_hz: f64,
}

impl Default for BaselineGeometry {
    fn default() -> Self {
        Self {
            baseline_wavelengths: 32.0,
            reference_freq_hz: 1425e6,
        }
    }
}

impl BaselineGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.baseline_wavelengths > 0.0) || !(self.reference_freq_hz > 0.0) {
            return Err(Error::Config("baseline length and reference frequency must be positive".into()));
        }
        Ok(())
    }
}

/// East-West projected angle of a source from the meridian, radians.
pub fn offset_angle_rad(hour_angle_hr: f64, dec_deg: f64) -> f64 {
    (hour_angle_hr * 15.0).to_radians() * dec_deg.to_radians().cos()
}

/// West − East phase for a source `offset_angle_rad` from the meridian.
/// Positive angles (source west of the meridian) give positive phase.
pub fn fringe_phase(offset_angle_rad: f64, geometry: &BaselineGeometry, rf_hz: f64) -> f64 {
    2.0 * PI * geometry.baseline_wavelengths * (rf_hz / geometry.reference_freq_hz) * offset_angle_rad.sin()
}

/// West − East phase of a source at `source_ra_hr` observed at `mjd`.
pub fn element_phase_offset(
    source_ra_hr: f64,
    mjd: f64,
    geometry: &BaselineGeometry,
    rf_hz: f64,
    clock: &ObservatoryClock,
    pointing: &Pointing,
) -> f64 {
    let lst = timebase::lst_hours(mjd, clock.site_longitude_deg);
    let ha = timebase::hour_angle_hours(lst, source_ra_hr);
    fringe_phase(offset_angle_rad(ha, pointing.dec_deg), geometry, rf_hz)
}

/// A Δt = 0 pulse pair: two simultaneous tones `delta_f_hz` apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectedPair {
    pub f_low_hz: f64,
    pub delta_f_hz: f64,
    pub snr_db: f64,
    pub source_ra_hr: f64,
    pub start_mjd: f64,
    /// Defaults to one FFT interval.
    #[serde(default)]
    pub duration_s: Option<f64>,
}

/// Narrowband interference present in both elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectedRfi {
    pub freq_hz: f64,
    /// Per-bin power in units of σ².
    pub power: f64,
    #[serde(default = "one")]
    pub duty_cycle: f64,
    /// Persistent carriers keep one phase; others re-phase every frame.
    #[serde(default = "yes")]
    pub persistent: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// A fixed-RA emitter producing pulse pairs while it transits the beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulsedSource {
    pub ra_hr: f64,
    /// Half-width of the (boxcar) beam in hour angle.
    pub beam_halfwidth_hr: f64,
    /// Chance of a pair in any processed frame while in the beam.
    pub probability_per_frame: f64,
    pub snr_db: f64,
    pub delta_f_hz: f64,
    pub f_low_min_hz: f64,
    pub f_low_max_hz: f64,
}

/// Pulse pairs arriving at uniformly random times from the beam centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundPairs {
    pub probability_per_frame: f64,
    pub snr_db: f64,
    pub delta_f_min_hz: f64,
    pub delta_f_max_hz: f64,
    pub f_low_min_hz: f64,
    pub f_low_max_hz: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Injections {
    #[serde(rename = "pair")]
    pub pairs: Vec<InjectedPair>,
    pub rfi: Vec<InjectedRfi>,
    #[serde(rename = "source")]
    pub sources: Vec<PulsedSource>,
    pub background: Vec<BackgroundPairs>,
}

/// Ground truth of one injected tone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectedTone {
    pub rf_hz: f64,
    pub west_minus_east_rad: f64,
}

/// Simultaneous frames of both elements plus what was injected into them.
#[derive(Debug, Clone)]
pub struct FramePair {
    pub east: IqFrame,
    pub west: IqFrame,
    pub injected_pairs: Vec<(InjectedTone, InjectedTone)>,
}

#[derive(Debug, Clone, Copy)]
struct Tone {
    rf_hz: f64,
    amplitude: f64,
    phase_east: f64,
    phase_west: f64,
}

#[derive(Debug, Clone, Copy)]
struct RfiState {
    phase_east: f64,
    west_offset: f64,
}

#[derive(Debug, Clone)]
pub struct SkySimulator {
    cfg: SimConfig,
    band: BandPlan,
    geometry: BaselineGeometry,
    clock: ObservatoryClock,
    pointing: Pointing,
    injections: Injections,
    rfi_state: Vec<RfiState>,
}

impl SkySimulator {
    pub fn new(
        cfg: SimConfig,
        geometry: BaselineGeometry,
        clock: ObservatoryClock,
        pointing: Pointing,
        injections: Injections,
    ) -> Result<Self> {
        cfg.validate()?;
        geometry.validate()?;
        clock.validate()?;
        pointing.validate()?;
        let band = cfg.band()?;
        if FRAMES_PER_TICK as f64 * band.frame_duration_s() > clock.tick_interval_s {
            return Err(Error::Config(format!(
                "{FRAMES_PER_TICK} frames of {:.3} s do not fit in a {} s tick",
                band.frame_duration_s(),
                clock.tick_interval_s
            )));
        }
        check_injections(&band, &injections)?;

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(u64::MAX);
        let rfi_state = injections
            .rfi
            .iter()
            .map(|_| RfiState {
                phase_east: rng.gen_range(-PI..PI),
                west_offset: rng.gen_range(-PI..PI),
            })
            .collect();

        Ok(Self {
            cfg,
            band,
            geometry,
            clock,
            pointing,
            injections,
            rfi_state,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn band(&self) -> &BandPlan {
        &self.band
    }

    pub fn clock(&self) -> &ObservatoryClock {
        &self.clock
    }

    pub fn pointing(&self) -> &Pointing {
        &self.pointing
    }

    pub fn geometry(&self) -> &BaselineGeometry {
        &self.geometry
    }

    /// Frames for `n_ticks` acquisition ticks starting at `start_mjd`.
    ///
    /// `stream` selects independent random streams; distinct capture files
    /// use distinct stream numbers so they can be generated in any order.
    pub fn frames(&self, start_mjd: f64, n_ticks: u64, stream: u64) -> FrameStream<'_> {
        let rng = |k: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(self.cfg.seed);
            r.set_stream(stream.wrapping_mul(4).wrapping_add(k));
            r
        };
        FrameStream {
            sim: self,
            start_mjd,
            total: n_ticks * FRAMES_PER_TICK as u64,
            next: 0,
            east_rng: rng(0),
            west_rng: rng(1),
            shared_rng: rng(2),
            inject_rng: rng(3),
        }
    }

    fn snap(&self, rf_hz: f64) -> f64 {
        if self.cfg.tones_on_bin_center {
            self.band
                .bin_of_rf(rf_hz)
                .map_or(rf_hz, |b| self.band.rf_of_bin(b))
        } else {
            rf_hz
        }
    }

    /// Sample amplitude of a tone with the given per-bin SNR.
    fn tone_amplitude(&self, snr_linear: f64) -> f64 {
        self.cfg.sigma * (snr_linear / self.cfg.fft_len as f64).sqrt()
    }

    #[allow(clippy::too_many_arguments)]
    fn pair_tones(
        &self,
        f_low: f64,
        delta_f: f64,
        snr_db: f64,
        source_ra_hr: f64,
        mjd: f64,
        rng: &mut ChaCha8Rng,
        tones: &mut Vec<Tone>,
    ) -> (InjectedTone, InjectedTone) {
        let amp = self.tone_amplitude(10f64.powf(snr_db / 10.0));
        let mut truth = [InjectedTone {
            rf_hz: 0.0,
            west_minus_east_rad: 0.0,
        }; 2];
        for (i, f) in [f_low, f_low + delta_f].into_iter().enumerate() {
            let rf = self.snap(f);
            let dphi = element_phase_offset(source_ra_hr, mjd, &self.geometry, rf, &self.clock, &self.pointing);
            let phase_east = rng.gen_range(-PI..PI);
            tones.push(Tone {
                rf_hz: rf,
                amplitude: amp,
                phase_east,
                phase_west: phase_east + dphi,
            });
            truth[i] = InjectedTone {
                rf_hz: rf,
                west_minus_east_rad: dphi,
            };
        }
        (truth[0], truth[1])
    }
}

fn check_injections(band: &BandPlan, inj: &Injections) -> Result<()> {
    let in_band = |f: f64, what: &str| {
        if band.contains_rf(f) {
            Ok(())
        } else {
            let (lo, hi) = band.sampled_band();
            Err(Error::Band(format!("{what} at {f} Hz outside [{lo}, {hi})")))
        }
    };
    for p in &inj.pairs {
        if !(p.delta_f_hz > 0.0) {
            return Err(Error::Config("pair delta_f_hz must be positive".into()));
        }
        if !(0.0..24.0).contains(&p.source_ra_hr) {
            return Err(Error::Range(format!("source RA {} hr", p.source_ra_hr)));
        }
        in_band(p.f_low_hz, "pair low tone")?;
        in_band(p.f_low_hz + p.delta_f_hz, "pair high tone")?;
    }
    for r in &inj.rfi {
        if !(r.duty_cycle > 0.0 && r.duty_cycle <= 1.0) {
            return Err(Error::Config("rfi duty_cycle must lie in (0, 1]".into()));
        }
        in_band(r.freq_hz, "rfi")?;
    }
    for s in &inj.sources {
        if !(s.delta_f_hz > 0.0) || !(0.0..=1.0).contains(&s.probability_per_frame) {
            return Err(Error::Config("source needs delta_f_hz > 0 and a probability in [0, 1]".into()));
        }
        if s.f_low_min_hz > s.f_low_max_hz {
            return Err(Error::Config("source f_low range is reversed".into()));
        }
        in_band(s.f_low_min_hz, "source low tone")?;
        in_band(s.f_low_max_hz + s.delta_f_hz, "source high tone")?;
    }
    for b in &inj.background {
        if !(b.delta_f_min_hz > 0.0) || b.delta_f_min_hz > b.delta_f_max_hz {
            return Err(Error::Config("background delta_f range must be positive and ordered".into()));
        }
        if !(0.0..=1.0).contains(&b.probability_per_frame) || b.f_low_min_hz > b.f_low_max_hz {
            return Err(Error::Config("background probability or f_low range invalid".into()));
        }
        in_band(b.f_low_min_hz, "background low tone")?;
        in_band(b.f_low_max_hz + b.delta_f_max_hz, "background high tone")?;
    }
    Ok(())
}

/// Iterator over simulated frame pairs; see [`SkySimulator::frames`].
pub struct FrameStream<'a> {
    sim: &'a SkySimulator,
    start_mjd: f64,
    total: u64,
    next: u64,
    east_rng: ChaCha8Rng,
    west_rng: ChaCha8Rng,
    shared_rng: ChaCha8Rng,
    inject_rng: ChaCha8Rng,
}

impl FrameStream<'_> {
    /// MJD at which frame `index` of this stream starts.
    pub fn frame_mjd(&self, index: u64) -> f64 {
        let tick = index / FRAMES_PER_TICK as u64;
        let slot = index % FRAMES_PER_TICK as u64;
        self.sim.clock.tick_mjd(self.start_mjd, tick)
            + slot as f64 * self.sim.band.frame_duration_s() / SECONDS_PER_DAY
    }

    fn generate(&mut self, mjd: f64) -> FramePair {
        let sim = self.sim;
        let n = sim.cfg.fft_len;
        let f = sim.cfg.correlated_fraction;
        let own = (sim.cfg.sigma * sim.cfg.sigma * (1.0 - f) / 2.0).sqrt() as f32;
        let shared = (sim.cfg.sigma * sim.cfg.sigma * f / 2.0).sqrt() as f32;

        let mut east = noise(n, own, &mut self.east_rng);
        let mut west = noise(n, own, &mut self.west_rng);
        if shared > 0.0 {
            for (e, w) in east.iter_mut().zip(west.iter_mut()) {
                let re: f32 = self.shared_rng.sample(StandardNormal);
                let im: f32 = self.shared_rng.sample(StandardNormal);
                let c = Complex32::new(re * shared, im * shared);
                *e += c;
                *w += c;
            }
        }

        let frame_days = sim.band.frame_duration_s() / SECONDS_PER_DAY;
        let mid = mjd + frame_days / 2.0;
        let lst = timebase::lst_hours(mid, sim.clock.site_longitude_deg);
        let mut tones = Vec::new();
        let mut injected_pairs = Vec::new();
        let rng = &mut self.inject_rng;

        for p in &sim.injections.pairs {
            let dur = p.duration_s.unwrap_or_else(|| sim.band.frame_duration_s()) / SECONDS_PER_DAY;
            if p.start_mjd < mjd + frame_days && p.start_mjd + dur > mjd {
                injected_pairs.push(sim.pair_tones(
                    p.f_low_hz,
                    p.delta_f_hz,
                    p.snr_db,
                    p.source_ra_hr,
                    mid,
                    rng,
                    &mut tones,
                ));
            }
        }
        for s in &sim.injections.sources {
            // draw unconditionally so the stream position does not depend on pointing
            let hit = rng.gen::<f64>() < s.probability_per_frame;
            let f_low = rng.gen_range(s.f_low_min_hz..=s.f_low_max_hz);
            if hit && timebase::hour_angle_hours(lst, s.ra_hr).abs() <= s.beam_halfwidth_hr {
                injected_pairs.push(sim.pair_tones(f_low, s.delta_f_hz, s.snr_db, s.ra_hr, mid, rng, &mut tones));
            }
        }
        for b in &sim.injections.background {
            let hit = rng.gen::<f64>() < b.probability_per_frame;
            let f_low = rng.gen_range(b.f_low_min_hz..=b.f_low_max_hz);
            let df = rng.gen_range(b.delta_f_min_hz..=b.delta_f_max_hz);
            if hit {
                injected_pairs.push(sim.pair_tones(f_low, df, b.snr_db, lst, mid, rng, &mut tones));
            }
        }
        for (r, state) in sim.injections.rfi.iter().zip(&sim.rfi_state) {
            let on = rng.gen::<f64>() < r.duty_cycle;
            let phase = rng.gen_range(-PI..PI);
            if on {
                let phase_east = if r.persistent { state.phase_east } else { phase };
                tones.push(Tone {
                    rf_hz: sim.snap(r.freq_hz),
                    amplitude: sim.tone_amplitude(r.power),
                    phase_east,
                    phase_west: phase_east + state.west_offset,
                });
            }
        }

        for t in &tones {
            add_tone(&mut east, &mut west, t, &sim.band);
        }

        let (mut clip_e, mut clip_w) = (0, 0);
        if sim.cfg.quantize_bits > 0 {
            clip_e = quantize(&mut east, sim.cfg.quantize_bits, sim.cfg.sigma);
            clip_w = quantize(&mut west, sim.cfg.quantize_bits, sim.cfg.sigma);
        }

        FramePair {
            east: IqFrame {
                element: Element::East,
                start_mjd: mjd,
                samples: east,
                clipped: clip_e,
            },
            west: IqFrame {
                element: Element::West,
                start_mjd: mjd,
                samples: west,
                clipped: clip_w,
            },
            injected_pairs,
        }
    }
}

impl Iterator for FrameStream<'_> {
    type Item = FramePair;

    fn next(&mut self) -> Option<FramePair> {
        if self.next >= self.total {
            return None;
        }
        let mjd = self.frame_mjd(self.next);
        self.next += 1;
        Some(self.generate(mjd))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

fn noise(n: usize, scale: f32, rng: &mut ChaCha8Rng) -> Vec<Complex32> {
    if scale == 0.0 {
        return vec![Complex32::default(); n];
    }
    (0..n)
        .map(|_| {
            let re: f32 = rng.sample(StandardNormal);
            let im: f32 = rng.sample(StandardNormal);
            Complex32::new(re * scale, im * scale)
        })
        .collect()
}

fn add_tone(east: &mut [Complex32], west: &mut [Complex32], tone: &Tone, band: &BandPlan) {
    const BLOCK: usize = 4096;
    let omega = 2.0 * PI * (tone.rf_hz - band.lo_freq_hz) / band.sample_rate_hz;
    let step = Complex64::from_polar(1.0, omega);
    let west_rot = Complex64::from_polar(1.0, tone.phase_west - tone.phase_east);
    for (block, (e, w)) in east.chunks_mut(BLOCK).zip(west.chunks_mut(BLOCK)).enumerate() {
        // re-seed the recurrence each block to bound rounding drift
        let start = (omega * (block * BLOCK) as f64).rem_euclid(2.0 * PI);
        let mut z = Complex64::from_polar(tone.amplitude, tone.phase_east + start);
        for (e, w) in e.iter_mut().zip(w.iter_mut()) {
            let zw = z * west_rot;
            *e += Complex32::new(z.re as f32, z.im as f32);
            *w += Complex32::new(zw.re as f32, zw.im as f32);
            z *= step;
        }
    }
}

/// Mid-rise uniform quantizer with full scale at ±4σ. Returns clip count.
fn quantize(samples: &mut [Complex32], bits: u32, sigma: f64) -> u64 {
    let levels = 1i64 << bits;
    let half = levels / 2;
    let step = (2.0 * FULL_SCALE_SIGMA * sigma / levels as f64) as f32;
    let mut clipped = 0;
    let mut q = |x: f32| -> f32 {
        let k = (x / step).floor() as i64;
        let k = if k < -half {
            clipped += 1;
            -half
        } else if k > half - 1 {
            clipped += 1;
            half - 1
        } else {
            k
        };
        (k as f32 + 0.5) * step
    };
    for s in samples.iter_mut() {
        *s = Complex32::new(q(s.re), q(s.im));
    }
    clipped
}
