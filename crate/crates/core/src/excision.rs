//! RFI excision: fixed notches and the per-segment candidate ledger.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which candidate filter a notch check is made for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterLevel {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcisionReason {
    Harmonic,
    LoExclusion,
    OutOfBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotchDecision {
    Keep,
    Excised(ExcisionReason),
}

impl NotchDecision {
    pub fn is_keep(self) -> bool {
        self == NotchDecision::Keep
    }
}

/// Fixed frequency filters applied to every candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NotchSet {
    pub harmonic_base_hz: f64,
    pub harmonic_halfwidth_hz: f64,
    pub lo_exclusion_hz: [f64; 2],
    pub first_level_band_hz: [f64; 2],
    pub second_level_band_hz: [f64; 2],
}

impl Default for NotchSet {
    fn default() -> Self {
        Self {
            harmonic_base_hz: 100e3,
            harmonic_halfwidth_hz: 15e3,
            lo_exclusion_hz: [1424e6, 1426e6],
            first_level_band_hz: [1398e6, 1451e6],
            second_level_band_hz: [1405e6, 1435e6],
        }
    }
}

impl NotchSet {
    pub fn validate(&self) -> Result<()> {
        let ordered = |b: [f64; 2]| b[0] < b[1];
        if !(self.harmonic_base_hz > 0.0)
            || !(self.harmonic_halfwidth_hz >= 0.0)
            || !ordered(self.lo_exclusion_hz)
            || !ordered(self.first_level_band_hz)
            || !ordered(self.second_level_band_hz)
        {
            return Err(Error::Config("notch bands must be positive and well ordered".into()));
        }
        if self.second_level_band_hz[0] < self.first_level_band_hz[0]
            || self.second_level_band_hz[1] > self.first_level_band_hz[1]
        {
            return Err(Error::Config("second-level band must lie inside the first-level band".into()));
        }
        Ok(())
    }

    pub fn band(&self, level: FilterLevel) -> [f64; 2] {
        match level {
            FilterLevel::First => self.first_level_band_hz,
            FilterLevel::Second => self.second_level_band_hz,
        }
    }

    /// Distance from `rf_hz` to the nearest harmonic of the base frequency.
    pub fn harmonic_distance_hz(&self, rf_hz: f64) -> f64 {
        let r = rf_hz.rem_euclid(self.harmonic_base_hz);
        r.min(self.harmonic_base_hz - r)
    }
}

pub fn notch_check(rf_hz: f64, notches: &NotchSet, level: FilterLevel) -> NotchDecision {
    let [lo, hi] = notches.band(level);
    if !(rf_hz >= lo && rf_hz <= hi) {
        return NotchDecision::Excised(ExcisionReason::OutOfBand);
    }
    let [x0, x1] = notches.lo_exclusion_hz;
    if rf_hz >= x0 && rf_hz <= x1 {
        return NotchDecision::Excised(ExcisionReason::LoExclusion);
    }
    if notches.harmonic_distance_hz(rf_hz) <= notches.harmonic_halfwidth_hz {
        return NotchDecision::Excised(ExcisionReason::Harmonic);
    }
    NotchDecision::Keep
}

/// When margins written with each record are taken from the ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginSnapshot {
    #[default]
    EndOfFile,
    AtCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExcisionConfig {
    pub trip_threshold: u32,
    pub segment_rfi_cap: u32,
    pub frame_rfi_cap: u32,
    pub margin_snapshot: MarginSnapshot,
    pub notches: NotchSet,
}

impl Default for ExcisionConfig {
    fn default() -> Self {
        Self {
            trip_threshold: 10,
            segment_rfi_cap: 200,
            frame_rfi_cap: 100,
            margin_snapshot: MarginSnapshot::EndOfFile,
            notches: NotchSet::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    CandidateFile,
    RfiFile,
    Dropped(DropReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    SegmentCap,
    FrameCap,
}

/// Reason written with every RFI-file record.
pub const RFI_ROUTE_REASON: &str = "segment_tripped";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SegmentState {
    pub candidate_count: u32,
    pub rfi_records_stored: u32,
}

/// Per-file bookkeeping of candidates per 256-bin segment.
#[derive(Debug, Clone)]
pub struct SegmentLedger {
    trip_threshold: u32,
    segment_rfi_cap: u32,
    frame_rfi_cap: u32,
    segments: Vec<SegmentState>,
    frame_mjd: Option<f64>,
    rfi_this_frame: u32,
}

impl SegmentLedger {
    pub fn new(segment_count: usize, cfg: &ExcisionConfig) -> Self {
        Self {
            trip_threshold: cfg.trip_threshold,
            segment_rfi_cap: cfg.segment_rfi_cap,
            frame_rfi_cap: cfg.frame_rfi_cap,
            segments: vec![SegmentState::default(); segment_count],
            frame_mjd: None,
            rfi_this_frame: 0,
        }
    }

    /// Clear all counts, as at the start of a new capture file.
    pub fn reset(&mut self) {
        self.segments.iter_mut().for_each(|s| *s = SegmentState::default());
        self.frame_mjd = None;
        self.rfi_this_frame = 0;
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn state(&self, segment: usize) -> SegmentState {
        self.segments[segment]
    }

    pub fn is_tripped(&self, segment: usize) -> bool {
        self.segments[segment].candidate_count >= self.trip_threshold
    }

    pub fn tripped_segments(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.segments.len()).filter(|&s| self.is_tripped(s))
    }

    pub fn rfi_records_this_frame(&self) -> u32 {
        self.rfi_this_frame
    }

    /// Route one candidate detected at `mjd` in `segment`.
    ///
    /// Candidates must arrive in non-decreasing time order; a new frame
    /// (larger MJD) resets the per-frame RFI count.
    pub fn admit(&mut self, mjd: f64, segment: usize) -> Result<Route> {
        if segment >= self.segments.len() {
            return Err(Error::Range(format!("segment {segment} outside 0..{}", self.segments.len())));
        }
        match self.frame_mjd {
            Some(cur) if mjd < cur => {
                return Err(Error::Ordering(format!("candidate at MJD {mjd} after {cur}")));
            }
            Some(cur) if mjd == cur => {}
            _ => {
                self.frame_mjd = Some(mjd);
                self.rfi_this_frame = 0;
            }
        }
        let seg = &mut self.segments[segment];
        seg.candidate_count += 1;
        if seg.candidate_count <= self.trip_threshold {
            return Ok(Route::CandidateFile);
        }
        if seg.rfi_records_stored >= self.segment_rfi_cap {
            return Ok(Route::Dropped(DropReason::SegmentCap));
        }
        if self.rfi_this_frame >= self.frame_rfi_cap {
            return Ok(Route::Dropped(DropReason::FrameCap));
        }
        seg.rfi_records_stored += 1;
        self.rfi_this_frame += 1;
        Ok(Route::RfiFile)
    }

    /// Segments from `segment` to the nearest tripped segment below and
    /// above, counting the segment itself as distance 0. Sides without a
    /// tripped segment report the segment count.
    pub fn rfi_margins(&self, segment: usize) -> (usize, usize) {
        let sentinel = self.segments.len();
        let low = (0..=segment.min(sentinel.saturating_sub(1)))
            .rev()
            .find(|&s| self.is_tripped(s))
            .map_or(sentinel, |s| segment - s);
        let high = (segment..sentinel)
            .find(|&s| self.is_tripped(s))
            .map_or(sentinel, |s| s - segment);
        (low, high)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ledger(n: usize) -> SegmentLedger {
        SegmentLedger::new(n, &ExcisionConfig::default())
    }

    #[test]
    fn lo_region_is_excised() {
        let n = NotchSet::default();
        assert_eq!(
            notch_check(1424.5e6, &n, FilterLevel::First),
            NotchDecision::Excised(ExcisionReason::LoExclusion)
        );
    }

    #[test]
    fn harmonics_of_100khz_are_excised() {
        let n = NotchSet::default();
        assert_eq!(
            notch_check(1400.010e6, &n, FilterLevel::First),
            NotchDecision::Excised(ExcisionReason::Harmonic)
        );
        assert_eq!(
            notch_check(1400.0149e6, &n, FilterLevel::First),
            NotchDecision::Excised(ExcisionReason::Harmonic)
        );
        assert_eq!(notch_check(1400.0151e6, &n, FilterLevel::First), NotchDecision::Keep);
        assert_eq!(notch_check(1407.05e6, &n, FilterLevel::First), NotchDecision::Keep);
        assert_eq!(notch_check(1407.05e6, &n, FilterLevel::Second), NotchDecision::Keep);
    }

    #[test]
    fn band_edges_depend_on_level() {
        let n = NotchSet::default();
        assert_eq!(notch_check(1436.05e6, &n, FilterLevel::First), NotchDecision::Keep);
        assert_eq!(
            notch_check(1436.05e6, &n, FilterLevel::Second),
            NotchDecision::Excised(ExcisionReason::OutOfBand)
        );
        assert_eq!(
            notch_check(1397.95e6, &n, FilterLevel::First),
            NotchDecision::Excised(ExcisionReason::OutOfBand)
        );
    }

    #[test]
    fn default_notches_validate() {
        NotchSet::default().validate().unwrap();
        let bad = NotchSet {
            second_level_band_hz: [1390e6, 1435e6],
            ..NotchSet::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn tenth_candidate_kept_eleventh_diverted() {
        let mut l = ledger(4);
        for i in 0..10 {
            assert_eq!(l.admit(i as f64, 2).unwrap(), Route::CandidateFile, "{i}");
        }
        assert!(l.is_tripped(2));
        assert_eq!(l.admit(10.0, 2).unwrap(), Route::RfiFile);
    }

    #[test]
    fn segment_cap_drops_after_two_hundred() {
        let mut l = ledger(4);
        let routes: Vec<_> = (0..211).map(|i| l.admit(i as f64, 1).unwrap()).collect();
        assert_eq!(routes.iter().filter(|r| **r == Route::CandidateFile).count(), 10);
        assert_eq!(routes.iter().filter(|r| **r == Route::RfiFile).count(), 200);
        assert_eq!(routes[210], Route::Dropped(DropReason::SegmentCap));
        assert_eq!(l.state(1).rfi_records_stored, 200);
    }

    #[test]
    fn frame_cap_spans_segments() {
        let mut l = ledger(300);
        // trip 150 segments in an earlier frame
        for s in 0..150 {
            for _ in 0..10 {
                l.admit(1.0, s).unwrap();
            }
        }
        let mut routes = Vec::new();
        for s in 0..150 {
            routes.push(l.admit(2.0, s).unwrap());
        }
        assert_eq!(routes.iter().filter(|r| **r == Route::RfiFile).count(), 100);
        assert_eq!(routes[100], Route::Dropped(DropReason::FrameCap));
        // a new frame resets the per-frame count
        assert_eq!(l.admit(3.0, 0).unwrap(), Route::RfiFile);
    }

    #[test]
    fn out_of_order_is_an_error() {
        let mut l = ledger(2);
        l.admit(5.0, 0).unwrap();
        assert!(matches!(l.admit(4.0, 0), Err(Error::Ordering(_))));
        assert!(matches!(l.admit(6.0, 9), Err(Error::Range(_))));
    }

    #[test]
    fn margins_count_to_nearest_tripped() {
        let mut l = ledger(200);
        for s in [97, 104] {
            for _ in 0..10 {
                l.admit(0.0, s).unwrap();
            }
        }
        assert_eq!(l.rfi_margins(100), (3, 4));
        assert_eq!(l.rfi_margins(97), (0, 0));
        assert_eq!(l.rfi_margins(50), (200, 47));
        assert_eq!(ledger(200).rfi_margins(10), (200, 200));
    }

    #[test]
    fn reset_clears_state() {
        let mut l = ledger(2);
        for _ in 0..12 {
            l.admit(0.0, 0).unwrap();
        }
        l.reset();
        assert!(!l.is_tripped(0));
        assert_eq!(l.admit(0.0, 0).unwrap(), Route::CandidateFile);
    }

    proptest! {
        #[test]
        fn margins_symmetric_under_mirroring(
            tripped in proptest::collection::vec(0usize..64, 0..6),
            seg in 0usize..64,
        ) {
            let mut a = ledger(64);
            let mut b = ledger(64);
            for &t in &tripped {
                for _ in 0..10 {
                    a.admit(0.0, t).unwrap();
                    b.admit(0.0, 63 - t).unwrap();
                }
            }
            let (lo, hi) = a.rfi_margins(seg);
            let (mlo, mhi) = b.rfi_margins(63 - seg);
            prop_assert_eq!((lo, hi), (mhi, mlo));
        }

        #[test]
        fn routing_replays_identically(segs in proptest::collection::vec(0usize..8, 0..400)) {
            let run = |segs: &[usize]| {
                let mut l = ledger(8);
                segs.iter().enumerate().map(|(i, &s)| l.admit((i / 5) as f64, s).unwrap()).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(&segs), run(&segs));
        }

        #[test]
        fn notch_kept_frequencies_are_clear_of_notches(f in 1398e6f64..1451e6) {
            let n = NotchSet::default();
            if notch_check(f, &n, FilterLevel::First).is_keep() {
                prop_assert!(n.harmonic_distance_hz(f) > 15e3);
                prop_assert!(!(1424e6..=1426e6).contains(&f));
            }
        }
    }
}
