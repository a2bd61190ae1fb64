//! First-level detection, Δt = 0 pair formation and second-level filtering.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channelizer::{DetectionThreshold, SpectralFrame};
use crate::error::{Error, Result};
use crate::excision::{notch_check, FilterLevel, MarginSnapshot, NotchSet, Route, SegmentLedger};
use crate::frame::{BandPlan, Element, SEGMENT_BINS};
use crate::timebase::{ra_bin_of, RaBin};

pub const DEFAULT_SNR_THRESHOLD_DB: f64 = 8.5;
pub const MAX_PAIR_DELTA_F_HZ: f64 = 100e3;
pub const MAX_DD_PHI_RAD: f64 = 0.1;

/// One first-level detection: a bin above threshold on both elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub mjd: f64,
    pub ra_hr: f64,
    pub ra_bin: usize,
    pub rf_hz: f64,
    pub bin_index: usize,
    pub snr_east_db: f64,
    pub snr_west_db: f64,
    pub phi_east_rad: f64,
    pub phi_west_rad: f64,
    pub p954_east: f64,
    pub p954_west: f64,
    pub p50m_east: f64,
    pub p50m_west: f64,
    pub margin_low: usize,
    pub margin_high: usize,
}

impl CandidateRecord {
    pub fn segment(&self) -> usize {
        self.bin_index / SEGMENT_BINS
    }

    /// West − East interferometer phase.
    pub fn west_minus_east(&self) -> f64 {
        self.phi_west_rad - self.phi_east_rad
    }
}

/// A Δt = 0 pulse pair of consecutive candidates in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub upper: CandidateRecord,
    pub lower: CandidateRecord,
    pub delta_f_hz: f64,
    pub log10_df_mhz: f64,
    pub dd_phi_abs_rad: f64,
    pub pair_mjd: f64,
    pub ra_bin: usize,
}

impl PairRecord {
    pub fn upper_rf_hz(&self) -> f64 {
        self.upper.rf_hz
    }
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let w = x - 2.0 * PI * ((x - PI) / (2.0 * PI)).ceil();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// |ΔΔΦ| of two candidates: the absolute wrapped difference of their
/// West − East phases.
pub fn dd_phi_abs(upper: &CandidateRecord, lower: &CandidateRecord) -> f64 {
    wrap_phase(upper.west_minus_east() - lower.west_minus_east()).abs()
}

/// Everything the first-level filter produced for one frame.
#[derive(Debug, Clone, Default)]
pub struct FrameDetections {
    /// Records routed to the candidate file, in bin order.
    pub candidates: Vec<CandidateRecord>,
    /// Records diverted to the RFI file, in bin order.
    pub rfi: Vec<CandidateRecord>,
    pub dropped: usize,
    /// Usable bins above threshold on each element alone.
    pub exceed_east: u64,
    pub exceed_west: u64,
    /// Usable bins above threshold on both elements (before the ledger).
    pub dual_exceed: u64,
}

/// First-level detector for a fixed band: threshold plus notch mask.
#[derive(Debug, Clone)]
pub struct Detector {
    band: BandPlan,
    threshold: DetectionThreshold,
    notches: NotchSet,
    usable: Vec<bool>,
    usable_count: usize,
}

impl Detector {
    pub fn new(band: BandPlan, notches: NotchSet, snr_threshold_db: f64) -> Self {
        let usable: Vec<bool> = (0..band.fft_len)
            .map(|b| notch_check(band.rf_of_bin(b), &notches, FilterLevel::First).is_keep())
            .collect();
        let usable_count = usable.iter().filter(|u| **u).count();
        Self {
            band,
            threshold: DetectionThreshold::for_segments(snr_threshold_db),
            notches,
            usable,
            usable_count,
        }
    }

    pub fn band(&self) -> &BandPlan {
        &self.band
    }

    pub fn threshold(&self) -> &DetectionThreshold {
        &self.threshold
    }

    pub fn notches(&self) -> &NotchSet {
        &self.notches
    }

    /// Bins that pass the first-level notches.
    pub fn usable_bins(&self) -> usize {
        self.usable_count
    }

    pub fn is_usable(&self, bin: usize) -> bool {
        self.usable[bin]
    }

    /// Apply the dual-element threshold and notches to one frame pair and
    /// route the detections through `ledger`.
    pub fn detect(
        &self,
        east: &SpectralFrame,
        west: &SpectralFrame,
        ledger: &mut SegmentLedger,
        ra_hr: f64,
        margins: MarginSnapshot,
    ) -> Result<FrameDetections> {
        check_alignment(east, west, &self.band)?;
        let ra_bin = ra_bin_of(ra_hr)?;
        let th = self.threshold.ratio();
        let mut out = FrameDetections::default();

        for seg in 0..self.band.segment_count() {
            let bins = self.band.segment_bins(seg);
            let others = (bins.len() - 1) as f64;
            let (se, sw) = (east.segment_power[seg], west.segment_power[seg]);
            for b in bins {
                if !self.usable[b] {
                    continue;
                }
                let (pe, pw) = (east.power(b), west.power(b));
                let re = pe / ((se - pe) / others);
                let rw = pw / ((sw - pw) / others);
                let hit_e = re > th;
                let hit_w = rw > th;
                out.exceed_east += hit_e as u64;
                out.exceed_west += hit_w as u64;
                if !(hit_e && hit_w) {
                    continue;
                }
                out.dual_exceed += 1;
                let mut rec = CandidateRecord {
                    mjd: east.start_mjd,
                    ra_hr,
                    ra_bin: ra_bin.index(),
                    rf_hz: self.band.rf_of_bin(b),
                    bin_index: b,
                    snr_east_db: 10.0 * re.log10(),
                    snr_west_db: 10.0 * rw.log10(),
                    phi_east_rad: east.phase(b),
                    phi_west_rad: west.phase(b),
                    p954_east: se,
                    p954_west: sw,
                    p50m_east: east.wideband_power,
                    p50m_west: west.wideband_power,
                    margin_low: 0,
                    margin_high: 0,
                };
                let route = ledger.admit(rec.mjd, seg)?;
                if margins == MarginSnapshot::AtCandidate {
                    (rec.margin_low, rec.margin_high) = ledger.rfi_margins(seg);
                }
                match route {
                    Route::CandidateFile => out.candidates.push(rec),
                    Route::RfiFile => out.rfi.push(rec),
                    Route::Dropped(_) => out.dropped += 1,
                }
            }
        }
        Ok(out)
    }
}

fn check_alignment(east: &SpectralFrame, west: &SpectralFrame, band: &BandPlan) -> Result<()> {
    if east.element != Element::East || west.element != Element::West {
        return Err(Error::Alignment("expected one East and one West frame".into()));
    }
    if east.start_mjd != west.start_mjd {
        return Err(Error::Alignment(format!(
            "frame start MJDs differ: {} vs {}",
            east.start_mjd, west.start_mjd
        )));
    }
    if east.band != *band || west.band != *band || east.bins.len() != west.bins.len() {
        return Err(Error::Alignment("frames do not share the detector's bin grid".into()));
    }
    Ok(())
}

/// First-level filter at the standard 8.5 dB threshold.
pub fn first_level_filter(
    east: &SpectralFrame,
    west: &SpectralFrame,
    notches: &NotchSet,
    ledger: &mut SegmentLedger,
    ra_hr: f64,
) -> Result<FrameDetections> {
    Detector::new(east.band, *notches, DEFAULT_SNR_THRESHOLD_DB).detect(
        east,
        west,
        ledger,
        ra_hr,
        MarginSnapshot::AtCandidate,
    )
}

/// Pair consecutive candidates of one frame, lower bin first.
pub fn form_pairs(cands: &[CandidateRecord]) -> Result<Vec<PairRecord>> {
    if let Some(first) = cands.first() {
        if cands.iter().any(|c| c.mjd != first.mjd) {
            return Err(Error::Alignment("pair candidates span more than one frame".into()));
        }
    }
    cands
        .windows(2)
        .map(|w| {
            let (lower, upper) = (&w[0], &w[1]);
            if upper.bin_index <= lower.bin_index {
                return Err(Error::Ordering(format!(
                    "candidates not bin-sorted: {} then {}",
                    lower.bin_index, upper.bin_index
                )));
            }
            let delta_f_hz = upper.rf_hz - lower.rf_hz;
            Ok(PairRecord {
                delta_f_hz,
                log10_df_mhz: (delta_f_hz / 1e6).log10(),
                dd_phi_abs_rad: dd_phi_abs(upper, lower),
                pair_mjd: upper.mjd,
                ra_bin: upper.ra_bin,
                upper: upper.clone(),
                lower: lower.clone(),
            })
        })
        .collect()
}

/// Ordering of the second-level output: ascending |ΔΔΦ|, then time, then RF.
pub fn pair_order(a: &PairRecord, b: &PairRecord) -> Ordering {
    a.dd_phi_abs_rad
        .total_cmp(&b.dd_phi_abs_rad)
        .then(a.pair_mjd.total_cmp(&b.pair_mjd))
        .then(a.upper.rf_hz.total_cmp(&b.upper.rf_hz))
}

pub fn passes_second_level(p: &PairRecord, notches: &NotchSet) -> bool {
    notch_check(p.upper.rf_hz, notches, FilterLevel::Second).is_keep()
        && notch_check(p.lower.rf_hz, notches, FilterLevel::Second).is_keep()
        && p.delta_f_hz < MAX_PAIR_DELTA_F_HZ
        && p.dd_phi_abs_rad < MAX_DD_PHI_RAD
}

pub fn second_level_filter(pairs: Vec<PairRecord>, notches: &NotchSet) -> Vec<PairRecord> {
    let mut kept: Vec<_> = pairs.into_iter().filter(|p| passes_second_level(p, notches)).collect();
    kept.sort_by(pair_order);
    kept
}

/// RA bin of a pair as a typed bin.
pub fn pair_ra_bin(p: &PairRecord) -> RaBin {
    RaBin(p.ra_bin)
}
