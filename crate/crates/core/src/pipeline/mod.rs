//! Orchestration and file I/O: scenarios, capture files, analysis, figures.

pub mod analysis;
pub mod capture;
pub mod dump;
pub mod figures;
pub mod records;
pub mod scenario;
pub mod schedule;

use std::path::PathBuf;

use crate::error::Result;

pub use analysis::{analyze_dir, analyze_files, select_daily_files, write_analysis, Analysis, CaptureEntry};
pub use capture::{capture_window, run_capture, CaptureFile, CaptureStats, FileCapture, FileProcessor};
pub use figures::{emit_figures, figure_datasets, FigureDataset};
pub use scenario::{Anchor, AnalysisConfig, Level, RunManifest, Scenario, Schedule, SimOverrides};
pub use schedule::{file_schedule, FileWindow};

/// Outputs of a complete run.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub captures: Vec<CaptureFile>,
    pub analysis: Analysis,
    pub figures: Vec<PathBuf>,
}

/// Capture, analyze and report in one go under the manifest's directory.
pub fn run(manifest: &RunManifest) -> Result<RunOutputs> {
    let s = manifest.resolve()?;
    let captures = run_capture(&s, &manifest.capture_dir())?;
    let analysis = analyze_dir(
        &manifest.capture_dir(),
        s.analysis.level,
        s.analysis.ra_of_interest_hr,
        &s.excision.notches,
    )?;
    write_analysis(&analysis, &manifest.analysis_dir())?;
    let figures = emit_figures(&analysis.pairs, &analysis.table, &manifest.figures_dir())?;
    Ok(RunOutputs {
        captures,
        analysis,
        figures,
    })
}
