//! Time and sky bookkeeping for a meridian transit telescope.
//!
//! Timestamps are MJD (UTC, days). Local sidereal time uses the linear
//! GMST approximation referenced to J2000, which is good to well under a
//! second over decades and far finer than the 0.1 hr RA bins used here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// MJD of the J2000.0 epoch (JD 2451545.0).
const MJD_J2000: f64 = 51_544.5;
/// GMST at J2000.0, hours.
const GMST_AT_J2000_HR: f64 = 18.697_374_558;
/// Sidereal hours elapsed per solar day.
pub const SIDEREAL_HOURS_PER_DAY: f64 = 24.065_709_824_419_08;
/// Ratio of sidereal to solar time rate.
pub const SIDEREAL_RATE: f64 = SIDEREAL_HOURS_PER_DAY / 24.0;
/// Length of a sidereal day in solar days.
pub const SIDEREAL_DAY: f64 = 24.0 / SIDEREAL_HOURS_PER_DAY;

/// Width of an RA bin, hours.
pub const RA_BIN_WIDTH_HR: f64 = 0.1;
/// Number of RA bins around the sky.
pub const RA_BIN_COUNT: usize = 240;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Observatory clock: epoch, site longitude and the acquisition trigger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObservatoryClock {
    pub mjd_epoch: f64,
    /// Degrees East.
    pub site_longitude_deg: f64,
    pub tick_interval_s: f64,
}

impl Default for ObservatoryClock {
    fn default() -> Self {
        Self {
            mjd_epoch: 60_284.0,
            site_longitude_deg: 0.0,
            tick_interval_s: 3.0,
        }
    }
}

impl ObservatoryClock {
    pub fn validate(&self) -> Result<()> {
        if !self.mjd_epoch.is_finite() {
            return Err(Error::Config("mjd_epoch must be finite".into()));
        }
        if !(self.tick_interval_s > 0.0) {
            return Err(Error::Config("tick_interval_s must be positive".into()));
        }
        if !self.site_longitude_deg.is_finite() {
            return Err(Error::Config("site_longitude_deg must be finite".into()));
        }
        Ok(())
    }

    /// MJD of acquisition tick `tick`, counted from `start_mjd`.
    pub fn tick_mjd(&self, start_mjd: f64, tick: u64) -> f64 {
        start_mjd + tick as f64 * self.tick_interval_s / SECONDS_PER_DAY
    }
}

/// Antenna pointing. Only meridian transit (azimuth 180°) is supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Pointing {
    pub dec_deg: f64,
    pub azimuth_deg: f64,
}

impl Default for Pointing {
    fn default() -> Self {
        Self {
            dec_deg: -8.0,
            azimuth_deg: 180.0,
        }
    }
}

impl Pointing {
    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.dec_deg) {
            return Err(Error::Config(format!(
                "dec_deg {} outside [-90, 90]",
                self.dec_deg
            )));
        }
        Ok(())
    }
}

/// A 0.1 hr wide right-ascension bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RaBin(pub usize);

impl RaBin {
    pub fn index(self) -> usize {
        self.0
    }

    pub fn center_hr(self) -> f64 {
        (self.0 as f64 + 0.5) * RA_BIN_WIDTH_HR
    }

    pub fn lower_hr(self) -> f64 {
        self.0 as f64 * RA_BIN_WIDTH_HR
    }
}

fn wrap_hours(h: f64) -> f64 {
    let w = h.rem_euclid(24.0);
    // rem_euclid can round up to exactly 24.0 for tiny negative inputs
    if w >= 24.0 {
        0.0
    } else {
        w
    }
}

/// Local sidereal time in hours, in `[0, 24)`.
pub fn lst_hours(mjd: f64, site_longitude_deg: f64) -> f64 {
    let days = mjd - MJD_J2000;
    // Split into whole and fractional days so the large multiple of 24
    // cancels exactly before adding the fractional part.
    let whole = days.floor();
    let frac = days - whole;
    let whole_part = (whole * (SIDEREAL_HOURS_PER_DAY - 24.0)).rem_euclid(24.0);
    wrap_hours(GMST_AT_J2000_HR + whole_part + frac * SIDEREAL_HOURS_PER_DAY + site_longitude_deg / 15.0)
}

/// RA at which a meridian transit telescope points at `mjd`.
pub fn pointing_ra_hours(mjd: f64, clock: &ObservatoryClock, pointing: &Pointing) -> Result<f64> {
    if (pointing.azimuth_deg - 180.0).abs() > 1e-9 {
        return Err(Error::Unsupported(format!(
            "azimuth {}° is not meridian transit (180°)",
            pointing.azimuth_deg
        )));
    }
    Ok(lst_hours(mjd, clock.site_longitude_deg))
}

/// Hour angle of a source, hours in `[-12, 12)`.
pub fn hour_angle_hours(lst_hr: f64, ra_hr: f64) -> f64 {
    (lst_hr - ra_hr + 12.0).rem_euclid(24.0) - 12.0
}

/// Solar days needed for the pointing RA to advance by `ra_hours`.
pub fn solar_days_for_ra(ra_hours: f64) -> f64 {
    ra_hours / SIDEREAL_HOURS_PER_DAY
}

pub fn ra_bin_of(ra_hr: f64) -> Result<RaBin> {
    if !(0.0..24.0).contains(&ra_hr) {
        return Err(Error::Range(format!("RA {ra_hr} hr outside [0, 24)")));
    }
    let idx = (ra_hr * 10.0).floor() as usize;
    Ok(RaBin(idx.min(RA_BIN_COUNT - 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mod24_diff(a: f64, b: f64) -> f64 {
        (a - b).rem_euclid(24.0)
    }

    #[test]
    fn one_solar_day_gains_sidereal_excess() {
        let m = 60_284.179_902;
        let d = mod24_diff(lst_hours(m + 1.0, 0.0), lst_hours(m, 0.0));
        assert_abs_diff_eq!(d, 0.0657, epsilon = 1e-3);
    }

    #[test]
    fn fifteen_degrees_is_one_hour() {
        let m = 60_300.25;
        let d = mod24_diff(lst_hours(m, 15.0), lst_hours(m, 0.0));
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lst_increases_over_a_minute_grid() {
        let start = 60_290.0;
        let step = 1.0 / 1440.0;
        let mut prev = lst_hours(start, 0.0);
        for i in 1..=3000 {
            let cur = lst_hours(start + i as f64 * step, 0.0);
            let d = mod24_diff(cur, prev);
            assert!(d > 0.0 && d < 0.02, "step {i}: {d}");
            prev = cur;
        }
    }

    #[test]
    fn lst_matches_known_gmst() {
        // GMST at 2000-01-01 12:00 UT is 18.697374558 h by construction of the formula
        assert_abs_diff_eq!(lst_hours(MJD_J2000, 0.0), GMST_AT_J2000_HR, epsilon = 1e-9);
    }

    #[test]
    fn pointing_equals_lst_at_meridian() {
        let clock = ObservatoryClock {
            site_longitude_deg: -79.8,
            ..Default::default()
        };
        let p = Pointing::default();
        for m in [60_284.1, 60_300.77, 60_344.16] {
            assert_eq!(pointing_ra_hours(m, &clock, &p).unwrap(), lst_hours(m, -79.8));
        }
    }

    #[test]
    fn pointing_repeats_after_sidereal_day() {
        let clock = ObservatoryClock::default();
        let p = Pointing::default();
        let m = 60_310.4;
        let a = pointing_ra_hours(m, &clock, &p).unwrap();
        let b = pointing_ra_hours(m + SIDEREAL_DAY, &clock, &p).unwrap();
        let d = mod24_diff(b, a);
        assert!(d.min(24.0 - d) < 1e-4, "{d}");
        assert_abs_diff_eq!(SIDEREAL_DAY * 24.0, 23.9345, epsilon = 1e-4);
    }

    #[test]
    fn four_hour_sweep_covers_sidereal_span() {
        let clock = ObservatoryClock::default();
        let p = Pointing::default();
        let m = 60_320.0;
        let a = pointing_ra_hours(m, &clock, &p).unwrap();
        let b = pointing_ra_hours(m + 4.0 / 24.0, &clock, &p).unwrap();
        assert_abs_diff_eq!(mod24_diff(b, a), 4.011, epsilon = 1e-3);
    }

    #[test]
    fn non_meridian_pointing_is_rejected() {
        let p = Pointing {
            azimuth_deg: 170.0,
            ..Default::default()
        };
        let err = pointing_ra_hours(60_300.0, &ObservatoryClock::default(), &p).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn ra_bins_follow_floor_convention() {
        assert_eq!(ra_bin_of(5.25).unwrap(), RaBin(52));
        assert_eq!(ra_bin_of(5.15).unwrap(), RaBin(51));
        assert_eq!(ra_bin_of(0.0).unwrap(), RaBin(0));
        assert_eq!(ra_bin_of(5.19999).unwrap(), RaBin(51));
        assert_eq!(ra_bin_of(23.9999).unwrap(), RaBin(239));
        assert!(matches!(ra_bin_of(24.0), Err(Error::Range(_))));
        assert!(matches!(ra_bin_of(-0.01), Err(Error::Range(_))));
    }

    #[test]
    fn every_bin_center_maps_to_itself() {
        for i in 0..RA_BIN_COUNT {
            assert_eq!(ra_bin_of(RaBin(i).center_hr()).unwrap(), RaBin(i));
        }
    }

    #[test]
    fn sidereal_rate_of_lst() {
        // rate measured over one hour, away from the wrap
        let m = 60_284.0;
        let h = 1.0 / 24.0;
        let d = mod24_diff(lst_hours(m + h, 0.0), lst_hours(m, 0.0));
        assert!((d / 1.0 - SIDEREAL_RATE).abs() / SIDEREAL_RATE < 1e-6);
    }

    #[test]
    fn hour_angle_wraps() {
        assert_abs_diff_eq!(hour_angle_hours(1.0, 23.0), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hour_angle_hours(23.0, 1.0), -2.0, epsilon = 1e-12);
    }
}
