//! Run configuration: the scenario file and the command-line manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::candidates::{Detector, DEFAULT_SNR_THRESHOLD_DB};
use crate::error::{Error, Result};
use crate::excision::ExcisionConfig;
use crate::sim::{BaselineGeometry, Injections, ScalePreset, SimConfig, SkySimulator};
use crate::timebase::{ObservatoryClock, Pointing};

pub const DEFAULT_RA_OF_INTEREST_HR: f64 = 5.25;

/// Optional per-field overrides of the preset simulator configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOverrides {
    pub sample_rate_hz: Option<f64>,
    pub fft_len: Option<usize>,
    pub lo_freq_hz: Option<f64>,
    pub sigma: Option<f64>,
    pub correlated_fraction: Option<f64>,
    pub quantize_bits: Option<u32>,
    pub tones_on_bin_center: Option<bool>,
}

/// How capture files are placed within each day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Anchor {
    /// Files start at fixed solar times, so RA coverage drifts day to day.
    Utc,
    /// Files start when the beam reaches a fixed RA.
    #[default]
    Sidereal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    /// Defaults to the clock epoch.
    pub start_mjd: Option<f64>,
    pub days: u32,
    pub files_per_day: u32,
    /// Defaults to 4 h at full scale, 0.1 h at desk scale.
    pub file_duration_hr: Option<f64>,
    pub anchor: Anchor,
    /// Utc anchor: hours after `start_mjd` of the day's first file.
    pub utc_offset_hr: f64,
    /// Sidereal anchor: beam RA at the start of the day's first file.
    pub ra_start_hr: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            start_mjd: None,
            days: 1,
            files_per_day: 1,
            file_duration_hr: None,
            anchor: Anchor::Sidereal,
            utc_offset_hr: 0.0,
            ra_start_hr: 5.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub ra_of_interest_hr: f64,
    pub snr_threshold_db: f64,
    pub level: Level,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            ra_of_interest_hr: DEFAULT_RA_OF_INTEREST_HR,
            snr_threshold_db: DEFAULT_SNR_THRESHOLD_DB,
            level: Level::Second,
        }
    }
}

/// Which capture files feed the analysis: every file, or one per day
/// chosen to cover the RA of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    First,
    #[default]
    Second,
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Level::First),
            "second" => Ok(Level::Second),
            _ => Err(Error::Config(format!("unknown level '{s}'"))),
        }
    }
}

/// Everything needed to simulate, detect and analyze one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "desk")]
    pub preset: ScalePreset,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub sim: SimOverrides,
    #[serde(default)]
    pub geometry: BaselineGeometry,
    #[serde(default)]
    pub clock: ObservatoryClock,
    #[serde(default)]
    pub pointing: Pointing,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub excision: ExcisionConfig,
    #[serde(default)]
    pub injections: Injections,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn desk() -> ScalePreset {
    ScalePreset::Desk
}

fn default_seed() -> u64 {
    1
}

impl Default for Scenario {
    fn default() -> Self {
        Self::for_preset(ScalePreset::Desk)
    }
}

impl Scenario {
    pub fn for_preset(preset: ScalePreset) -> Self {
        Self {
            preset,
            seed: default_seed(),
            sim: SimOverrides::default(),
            geometry: BaselineGeometry::default(),
            clock: ObservatoryClock::default(),
            pointing: Pointing::default(),
            schedule: Schedule::default(),
            excision: ExcisionConfig::default(),
            injections: Injections::default(),
            analysis: AnalysisConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn sim_config(&self) -> SimConfig {
        let mut c = SimConfig::preset(self.preset);
        let o = &self.sim;
        c.sample_rate_hz = o.sample_rate_hz.unwrap_or(c.sample_rate_hz);
        c.fft_len = o.fft_len.unwrap_or(c.fft_len);
        c.lo_freq_hz = o.lo_freq_hz.unwrap_or(c.lo_freq_hz);
        c.sigma = o.sigma.unwrap_or(c.sigma);
        c.correlated_fraction = o.correlated_fraction.unwrap_or(c.correlated_fraction);
        c.quantize_bits = o.quantize_bits.unwrap_or(c.quantize_bits);
        c.tones_on_bin_center = o.tones_on_bin_center.unwrap_or(c.tones_on_bin_center);
        c.seed = self.seed;
        c
    }

    pub fn file_duration_hr(&self) -> f64 {
        self.schedule.file_duration_hr.unwrap_or(match self.preset {
            ScalePreset::Full => 4.0,
            ScalePreset::Desk => 0.1,
        })
    }

    pub fn start_mjd(&self) -> f64 {
        self.schedule.start_mjd.unwrap_or(self.clock.mjd_epoch)
    }

    pub fn simulator(&self) -> Result<SkySimulator> {
        SkySimulator::new(
            self.sim_config(),
            self.geometry,
            self.clock,
            self.pointing,
            self.injections.clone(),
        )
    }

    pub fn detector(&self) -> Result<Detector> {
        Ok(Detector::new(
            self.sim_config().band()?,
            self.excision.notches,
            self.analysis.snr_threshold_db,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_config().validate()?;
        self.excision.notches.validate()?;
        let d = self.file_duration_hr();
        if !(d > 0.0) || d > 24.0 {
            return Err(Error::Config(format!("file_duration_hr {d} outside (0, 24]")));
        }
        if self.schedule.files_per_day == 0 {
            return Err(Error::Config("files_per_day must be at least 1".into()));
        }
        if !(0.0..24.0).contains(&self.analysis.ra_of_interest_hr) {
            return Err(Error::Config(format!(
                "ra_of_interest_hr {} outside [0, 24)",
                self.analysis.ra_of_interest_hr
            )));
        }
        if !(0.0..24.0).contains(&self.schedule.ra_start_hr) {
            return Err(Error::Config("schedule.ra_start_hr outside [0, 24)".into()));
        }
        Ok(())
    }
}

/// Command-line view of a run: a scenario plus the overrides that the
/// CLI exposes as flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    pub scenario: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub file_duration_hr: Option<f64>,
    pub ra_of_interest_hr: Option<f64>,
    pub level: Option<Level>,
    pub seed: Option<u64>,
    pub preset: Option<ScalePreset>,
}

impl RunManifest {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            ..Self::default()
        }
    }

    /// Load the scenario (or the preset default) and apply the overrides.
    pub fn resolve(&self) -> Result<Scenario> {
        let mut s = match &self.scenario {
            Some(p) => Scenario::load(p)?,
            None => Scenario::for_preset(self.preset.unwrap_or(ScalePreset::Desk)),
        };
        if let Some(p) = self.preset {
            s.preset = p;
        }
        if let Some(d) = self.file_duration_hr {
            s.schedule.file_duration_hr = Some(d);
        }
        if let Some(ra) = self.ra_of_interest_hr {
            s.analysis.ra_of_interest_hr = ra;
        }
        if let Some(l) = self.level {
            s.analysis.level = l;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn capture_dir(&self) -> PathBuf {
        self.out_dir.join("capture")
    }

    pub fn analysis_dir(&self) -> PathBuf {
        self.out_dir.join("analysis")
    }

    pub fn figures_dir(&self) -> PathBuf {
        self.out_dir.join("figures")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scenario_is_desk_default() {
        let s = Scenario::from_toml("").unwrap();
        assert_eq!(s, Scenario::default());
        assert_eq!(s.sim_config().fft_len, 1 << 18);
        assert_eq!(s.file_duration_hr(), 0.1);
        assert_eq!(Scenario::for_preset(ScalePreset::Full).file_duration_hr(), 4.0);
    }

    #[test]
    fn overrides_apply_on_top_of_preset() {
        let s = Scenario::from_toml(
            r#"
            preset = "desk"
            seed = 9
            [sim]
            fft_len = 4096
            correlated_fraction = 0.5
            [schedule]
            days = 3
            anchor = "utc"
            [[injections.rfi]]
            freq_hz = 1415.1e6
            power = 1000.0
            "#,
        )
        .unwrap();
        let c = s.sim_config();
        assert_eq!((c.fft_len, c.seed, c.correlated_fraction), (4096, 9, 0.5));
        assert_eq!(c.sample_rate_hz, 1.024e6);
        assert_eq!(s.schedule.anchor, Anchor::Utc);
        assert_eq!(s.injections.rfi.len(), 1);
        assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        assert!(matches!(Scenario::from_toml("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(
            Scenario::from_toml("[analysis]\nra_of_interest_hr = 24.0"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Scenario::from_toml("[schedule]\nfile_duration_hr = 0.0"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn manifest_overrides_scenario() {
        let mut m = RunManifest::new("/tmp/x");
        m.seed = Some(5);
        m.file_duration_hr = Some(0.2);
        m.level = Some(Level::First);
        let s = m.resolve().unwrap();
        assert_eq!((s.seed, s.file_duration_hr(), s.analysis.level), (5, 0.2, Level::First));
        m.ra_of_interest_hr = Some(-1.0);
        assert!(m.resolve().is_err());
    }
}
