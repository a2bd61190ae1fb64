//! First-level capture: simulate each scheduled file window, channelize,
//! detect, and write the candidate and RFI files.

use std::path::{Path, PathBuf};

use log::{debug, info};

use crate::candidates::{CandidateRecord, Detector};
use crate::channelizer::Channelizer;
use crate::error::{Error, Result};
use crate::excision::{MarginSnapshot, SegmentLedger};
use crate::pipeline::records::{
    capture_file_name, sig9, write_candidate_file, Metadata, RecordKind,
};
use crate::pipeline::scenario::Scenario;
use crate::pipeline::schedule::{file_schedule, FileWindow};
use crate::sim::{FramePair, SkySimulator};
use crate::timebase::pointing_ra_hours;

/// Per-file detection counters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CaptureStats {
    /// Frame pairs processed.
    pub frames: u64,
    pub usable_bins: usize,
    pub exceed_east: u64,
    pub exceed_west: u64,
    pub dual_exceed: u64,
    pub candidates: usize,
    pub rfi: usize,
    pub dropped: usize,
    pub clipped_samples: u64,
    pub tripped_segments: Vec<usize>,
}

impl CaptureStats {
    fn write_into(&self, m: &mut Metadata) {
        m.insert("frames".into(), self.frames.to_string());
        m.insert("usable_bins".into(), self.usable_bins.to_string());
        m.insert("exceed_east".into(), self.exceed_east.to_string());
        m.insert("exceed_west".into(), self.exceed_west.to_string());
        m.insert("dual_exceed".into(), self.dual_exceed.to_string());
        m.insert("candidates".into(), self.candidates.to_string());
        m.insert("rfi_records".into(), self.rfi.to_string());
        m.insert("dropped".into(), self.dropped.to_string());
        m.insert("clipped_samples".into(), self.clipped_samples.to_string());
        let t: Vec<String> = self.tripped_segments.iter().map(|s| s.to_string()).collect();
        m.insert("tripped_segments".into(), t.join(" "));
    }
}

/// The records and counters of one file window, before they are written.
#[derive(Debug, Clone, Default)]
pub struct FileCapture {
    pub candidates: Vec<CandidateRecord>,
    pub rfi: Vec<CandidateRecord>,
    pub stats: CaptureStats,
}

#[derive(Debug, Clone)]
pub struct CaptureFile {
    pub window: FileWindow,
    pub cand_path: PathBuf,
    pub rfi_path: PathBuf,
    pub stats: CaptureStats,
}

/// Streaming first-level processing of frame pairs within one file: the
/// ledger lives for the file and margins are filled in at the end.
pub struct FileProcessor<'a> {
    detector: &'a Detector,
    channelizer: Channelizer,
    ledger: SegmentLedger,
    snapshot: MarginSnapshot,
    clock: crate::timebase::ObservatoryClock,
    pointing: crate::timebase::Pointing,
    out: FileCapture,
}

impl<'a> FileProcessor<'a> {
    pub fn new(detector: &'a Detector, scenario: &Scenario) -> Self {
        let band = *detector.band();
        let ledger = SegmentLedger::new(band.segment_count(), &scenario.excision);
        let out = FileCapture {
            stats: CaptureStats {
                usable_bins: detector.usable_bins(),
                ..CaptureStats::default()
            },
            ..FileCapture::default()
        };
        Self {
            detector,
            channelizer: Channelizer::new(band),
            ledger,
            snapshot: scenario.excision.margin_snapshot,
            clock: scenario.clock,
            pointing: scenario.pointing,
            out,
        }
    }

    /// Process one simultaneous East/West frame pair.
    pub fn push(&mut self, frames: &FramePair) -> Result<()> {
        let east = self.channelizer.channelize(&frames.east)?;
        let west = self.channelizer.channelize(&frames.west)?;
        let ra = pointing_ra_hours(east.start_mjd, &self.clock, &self.pointing)?;
        let d = self.detector.detect(&east, &west, &mut self.ledger, ra, self.snapshot)?;
        let s = &mut self.out.stats;
        s.frames += 1;
        s.exceed_east += d.exceed_east;
        s.exceed_west += d.exceed_west;
        s.dual_exceed += d.dual_exceed;
        s.dropped += d.dropped;
        s.clipped_samples += frames.east.clipped + frames.west.clipped;
        self.out.candidates.extend(d.candidates);
        self.out.rfi.extend(d.rfi);
        Ok(())
    }

    pub fn finish(mut self) -> FileCapture {
        if self.snapshot == MarginSnapshot::EndOfFile {
            for rec in self.out.candidates.iter_mut().chain(self.out.rfi.iter_mut()) {
                (rec.margin_low, rec.margin_high) = self.ledger.rfi_margins(rec.segment());
            }
        }
        let s = &mut self.out.stats;
        s.candidates = self.out.candidates.len();
        s.rfi = self.out.rfi.len();
        s.tripped_segments = self.ledger.tripped_segments().collect();
        self.out
    }
}

/// Simulate and process one file window in memory.
pub fn capture_window(
    sim: &SkySimulator,
    detector: &Detector,
    scenario: &Scenario,
    window: &FileWindow,
) -> Result<FileCapture> {
    let mut proc = FileProcessor::new(detector, scenario);
    for pair in sim.frames(window.start_mjd, window.n_ticks, window.index) {
        proc.push(&pair)?;
    }
    Ok(proc.finish())
}

/// Metadata written at the top of both files of a window.
pub fn window_metadata(scenario: &Scenario, window: &FileWindow, stats: &CaptureStats) -> Metadata {
    let mut m = Metadata::new();
    m.insert("mjd_start".into(), format!("{:.9}", window.start_mjd));
    m.insert("file_duration_hr".into(), sig9(window.duration_hr));
    m.insert("ra_start_hr".into(), sig9(window.ra_start_hr));
    m.insert("ra_span_hr".into(), sig9(window.ra_span_hr));
    m.insert("seed".into(), scenario.seed.to_string());
    m.insert("stream".into(), window.index.to_string());
    m.insert("snr_threshold_db".into(), sig9(scenario.analysis.snr_threshold_db));
    stats.write_into(&mut m);
    m
}

/// Write one window's candidate and RFI files into `dir`.
pub fn write_capture(
    dir: &Path,
    scenario: &Scenario,
    window: &FileWindow,
    capture: &FileCapture,
) -> Result<CaptureFile> {
    let meta = window_metadata(scenario, window, &capture.stats);
    let cand_path = dir.join(capture_file_name(RecordKind::Candidate, window.start_mjd));
    let rfi_path = dir.join(capture_file_name(RecordKind::Rfi, window.start_mjd));
    write_candidate_file(&cand_path, RecordKind::Candidate, &meta, &capture.candidates)?;
    write_candidate_file(&rfi_path, RecordKind::Rfi, &meta, &capture.rfi)?;
    Ok(CaptureFile {
        window: *window,
        cand_path,
        rfi_path,
        stats: capture.stats.clone(),
    })
}

/// Run every scheduled capture window of a scenario, writing files to `dir`.
pub fn run_capture(scenario: &Scenario, dir: &Path) -> Result<Vec<CaptureFile>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let sim = scenario.simulator()?;
    let detector = scenario.detector()?;
    let windows = file_schedule(scenario)?;
    info!("capturing {} file(s) into {}", windows.len(), dir.display());
    let mut out = Vec::with_capacity(windows.len());
    for w in &windows {
        let cap = capture_window(&sim, &detector, scenario, w)?;
        debug!(
            "file {} @ {:.6}: {} candidates, {} rfi, {} tripped segments",
            w.index,
            w.start_mjd,
            cap.stats.candidates,
            cap.stats.rfi,
            cap.stats.tripped_segments.len()
        );
        out.push(write_capture(dir, scenario, w, &cap)?);
    }
    Ok(out)
}
