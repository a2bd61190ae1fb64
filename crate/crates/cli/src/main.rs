use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use pulsepair::correlator::{cross_correlate, LagSpectrum};
use pulsepair::pipeline::capture::{write_capture, FileProcessor};
use pulsepair::pipeline::dump::{write_iq_frame, write_lag_csv, write_spectrum, IqDumpReader};
use pulsepair::pipeline::records::Metadata;
use pulsepair::pipeline::{
    self, analyze_dir, emit_figures, file_schedule, write_analysis, FileWindow, Level, RunManifest,
};
use pulsepair::sim::{FramePair, FRAMES_PER_TICK};
use pulsepair::timebase::{pointing_ra_hours, SECONDS_PER_DAY, SIDEREAL_RATE};
use pulsepair::{Channelizer, Element, Error, ScalePreset};

/// Two-element interferometer pulse-pair search.
#[derive(Parser, Debug)]
#[command(name = "pulsepair", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Simulate frames of one capture window into a binary dump.
    Simulate {
        #[command(flatten)]
        run: RunFlags,
        /// Schedule index of the window to simulate.
        #[arg(long, default_value_t = 0)]
        window: usize,
        /// Limit the number of 3 s ticks written.
        #[arg(long)]
        ticks: Option<u64>,
    },
    /// Detect first-level candidates in a frame dump.
    Detect {
        #[command(flatten)]
        run: RunFlags,
        /// Frame dump written by `simulate`.
        #[arg(long)]
        frames: PathBuf,
        /// Also write per-frame bin powers to this file.
        #[arg(long)]
        spectra: Option<PathBuf>,
    },
    /// Pair, filter and sort candidates from a capture directory.
    Analyze {
        #[command(flatten)]
        run: RunFlags,
        /// Directory of cand_*.csv files (default: <out>/capture).
        #[arg(long)]
        capture: Option<PathBuf>,
    },
    /// Write figure datasets and plots from a capture directory.
    Report {
        #[command(flatten)]
        run: RunFlags,
        #[arg(long)]
        capture: Option<PathBuf>,
    },
    /// Cross-correlate the elements and write a lag profile.
    Correlate {
        #[command(flatten)]
        run: RunFlags,
        /// Frame dump to read instead of simulating.
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Ticks to simulate when no dump is given.
        #[arg(long, default_value_t = 1)]
        ticks: u64,
        /// Taps written on each side of zero lag.
        #[arg(long, default_value_t = 64)]
        half_width: usize,
    },
    /// Capture, analyze and report.
    Run {
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum PresetArg {
    Full,
    Desk,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum LevelArg {
    First,
    Second,
}

#[derive(Args, Debug)]
struct RunFlags {
    /// Scenario file (TOML); the preset default when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    file_duration_hr: Option<f64>,
    #[arg(long)]
    ra_of_interest: Option<f64>,
    #[arg(long, value_enum)]
    level: Option<LevelArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
}

impl RunFlags {
    fn manifest(&self) -> RunManifest {
        RunManifest {
            scenario: self.scenario.clone(),
            out_dir: self.out.clone(),
            file_duration_hr: self.file_duration_hr,
            ra_of_interest_hr: self.ra_of_interest,
            level: self.level.map(|l| match l {
                LevelArg::First => Level::First,
                LevelArg::Second => Level::Second,
            }),
            seed: self.seed,
            preset: self.preset.map(|p| match p {
                PresetArg::Full => ScalePreset::Full,
                PresetArg::Desk => ScalePreset::Desk,
            }),
        }
    }
}

fn create_dir(p: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(p).map_err(|e| Error::Io {
        path: p.into(),
        source: e,
    })
}

fn io_err(p: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: p.into(),
        source: e,
    }
}

fn simulate(m: &RunManifest, window: usize, ticks: Option<u64>) -> Result<(), Error> {
    let s = m.resolve()?;
    let windows = file_schedule(&s)?;
    let w = windows
        .get(window)
        .ok_or_else(|| Error::Range(format!("window {window} of {}", windows.len())))?;
    let sim = s.simulator()?;
    create_dir(&m.out_dir)?;
    let path = m.out_dir.join("frames.iq");
    let mut out = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    let n = ticks.unwrap_or(w.n_ticks).min(w.n_ticks);
    let mut frames = 0;
    for pair in sim.frames(w.start_mjd, n, w.index as u64) {
        write_iq_frame(&mut out, &pair.east, sim.band()).map_err(io_err(&path))?;
        write_iq_frame(&mut out, &pair.west, sim.band()).map_err(io_err(&path))?;
        frames += 1;
    }
    out.flush().map_err(io_err(&path))?;
    info!("wrote {frames} frame pairs to {}", path.display());
    Ok(())
}

/// Frame pairs from a dump, East then West.
fn read_pairs(path: &Path) -> Result<Vec<FramePair>, Error> {
    let mut r = IqDumpReader::new(BufReader::new(File::open(path).map_err(io_err(path))?), path);
    let mut out = Vec::new();
    while let Some((east, _)) = r.next_frame()? {
        let Some((west, _)) = r.next_frame()? else {
            return Err(Error::Data {
                path: path.into(),
                msg: "odd number of frames".into(),
            });
        };
        if east.element != Element::East || west.element != Element::West {
            return Err(Error::Data {
                path: path.into(),
                msg: "frames must alternate East, West".into(),
            });
        }
        out.push(FramePair {
            east,
            west,
            injected_pairs: Vec::new(),
        });
    }
    Ok(out)
}

fn detect(m: &RunManifest, frames: &Path, spectra: Option<&Path>) -> Result<(), Error> {
    let s = m.resolve()?;
    let detector = s.detector()?;
    let pairs = read_pairs(frames)?;
    let (Some(first), Some(last)) = (pairs.first(), pairs.last()) else {
        return Err(Error::Data {
            path: frames.into(),
            msg: "no frames".into(),
        });
    };
    let band = *detector.band();
    let swept_s = (last.east.start_mjd - first.east.start_mjd) * SECONDS_PER_DAY + band.frame_duration_s();
    let window = FileWindow {
        index: 0,
        start_mjd: first.east.start_mjd,
        duration_hr: swept_s / 3600.0,
        n_ticks: pairs.len().div_ceil(FRAMES_PER_TICK) as u64,
        ra_start_hr: pointing_ra_hours(first.east.start_mjd, &s.clock, &s.pointing)?,
        ra_span_hr: swept_s / 3600.0 * SIDEREAL_RATE,
    };
    let mut dump = match spectra {
        Some(p) => Some((BufWriter::new(File::create(p).map_err(io_err(p))?), Channelizer::new(band), p)),
        None => None,
    };
    let mut proc = FileProcessor::new(&detector, &s);
    for pair in &pairs {
        proc.push(pair)?;
        if let Some((w, ch, p)) = dump.as_mut() {
            for f in [&pair.east, &pair.west] {
                write_spectrum(w, &ch.channelize(f)?).map_err(io_err(p))?;
            }
        }
    }
    if let Some((mut w, _, p)) = dump {
        w.flush().map_err(io_err(p))?;
    }
    let cap = proc.finish();
    let dir = m.capture_dir();
    create_dir(&dir)?;
    let f = write_capture(&dir, &s, &window, &cap)?;
    info!(
        "{} candidates, {} rfi records -> {}",
        f.stats.candidates,
        f.stats.rfi,
        f.cand_path.display()
    );
    Ok(())
}

fn analyze(m: &RunManifest, capture: Option<&Path>, figures: bool) -> Result<(), Error> {
    let s = m.resolve()?;
    let dir = capture.map_or_else(|| m.capture_dir(), Path::to_path_buf);
    let a = analyze_dir(&dir, s.analysis.level, s.analysis.ra_of_interest_hr, &s.excision.notches)?;
    if figures {
        let files = emit_figures(&a.pairs, &a.table, &m.figures_dir())?;
        info!("wrote {} figure files", files.len());
    } else {
        write_analysis(&a, &m.analysis_dir())?;
    }
    println!(
        "files={} candidates={} pairs_all={} pairs={}",
        a.files.len(),
        a.candidates,
        a.pairs_all.len(),
        a.pairs.len()
    );
    Ok(())
}

fn correlate(m: &RunManifest, frames: Option<&Path>, ticks: u64, half_width: usize) -> Result<(), Error> {
    let s = m.resolve()?;
    let pairs = match frames {
        Some(p) => read_pairs(p)?,
        None => {
            let sim = s.simulator()?;
            let w = file_schedule(&s)?[0];
            sim.frames(w.start_mjd, ticks, w.index).collect()
        }
    };
    let band = s.sim_config().band()?;
    let mut ch = Channelizer::new(band);
    let mut acc: Option<LagSpectrum> = None;
    for p in &pairs {
        let lag = cross_correlate(&ch.channelize(&p.east)?, &ch.channelize(&p.west)?)?;
        match acc.as_mut() {
            None => acc = Some(lag),
            Some(a) => a.taps.iter_mut().zip(&lag.taps).for_each(|(x, y)| *x += y),
        }
    }
    let mut lag = acc.ok_or_else(|| Error::Degenerate("no frames to correlate".into()))?;
    let n = pairs.len() as f64;
    lag.taps.iter_mut().for_each(|t| *t /= n);
    create_dir(&m.out_dir)?;
    let path = m.out_dir.join("lag.csv");
    let mut meta = Metadata::new();
    meta.insert("frames".into(), pairs.len().to_string());
    write_lag_csv(&path, &lag, half_width, &meta)?;
    println!("zero_lag_magnitude={:.6} peak_tap={}", lag.magnitude(0), lag.peak_tap());
    Ok(())
}

fn run_all(m: &RunManifest) -> Result<(), Error> {
    let out = pipeline::run(m)?;
    // the scenario as resolved, for reproducing the run
    let p = m.out_dir.join("scenario.resolved.toml");
    std::fs::write(&p, m.resolve()?.to_toml()).map_err(io_err(&p))?;
    let cands: usize = out.captures.iter().map(|c| c.stats.candidates).sum();
    println!(
        "files={} candidates={} analyzed_files={} pairs_all={} pairs={}",
        out.captures.len(),
        cands,
        out.analysis.files.len(),
        out.analysis.pairs_all.len(),
        out.analysis.pairs.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.cmd {
        Cmd::Simulate { run, window, ticks } => simulate(&run.manifest(), *window, *ticks),
        Cmd::Detect { run, frames, spectra } => detect(&run.manifest(), frames, spectra.as_deref()),
        Cmd::Analyze { run, capture } => analyze(&run.manifest(), capture.as_deref(), false),
        Cmd::Report { run, capture } => analyze(&run.manifest(), capture.as_deref(), true),
        Cmd::Correlate { run, frames, ticks, half_width } => {
            correlate(&run.manifest(), frames.as_deref(), *ticks, *half_width)
        }
        Cmd::Run { run } => run_all(&run.manifest()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 3 } else { 2 })
        }
    }
}
