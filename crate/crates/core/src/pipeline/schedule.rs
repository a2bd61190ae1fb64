//! Placement of capture files in time and the RA each one sweeps.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pipeline::scenario::{Anchor, Scenario};
use crate::timebase::{pointing_ra_hours, SECONDS_PER_DAY, SIDEREAL_RATE};

/// One capture file's time window and RA coverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FileWindow {
    /// Position in the schedule; also the simulator stream number.
    pub index: u64,
    pub start_mjd: f64,
    pub duration_hr: f64,
    pub n_ticks: u64,
    pub ra_start_hr: f64,
    pub ra_span_hr: f64,
}

impl FileWindow {
    /// Whether the beam sweeps `ra_hr` during this file.
    pub fn covers(&self, ra_hr: f64) -> bool {
        covers(self.ra_start_hr, self.ra_span_hr, ra_hr)
    }
}

pub(crate) fn covers(ra_start_hr: f64, ra_span_hr: f64, ra_hr: f64) -> bool {
    (ra_hr - ra_start_hr).rem_euclid(24.0) < ra_span_hr
}

/// All capture windows of a scenario, in time order.
pub fn file_schedule(s: &Scenario) -> Result<Vec<FileWindow>> {
    let sched = &s.schedule;
    let duration_hr = s.file_duration_hr();
    let n_ticks = ((duration_hr * 3600.0) / s.clock.tick_interval_s).floor().max(1.0) as u64;
    let per_day = sched.files_per_day as u64;
    let mut out = Vec::new();
    for day in 0..sched.days as u64 {
        let base = s.start_mjd() + day as f64;
        for j in 0..per_day {
            let start_mjd = match sched.anchor {
                Anchor::Utc => base + (sched.utc_offset_hr + j as f64 * 24.0 / per_day as f64) / 24.0,
                Anchor::Sidereal => {
                    let target = sched.ra_start_hr + j as f64 * 24.0 / per_day as f64;
                    let ra0 = pointing_ra_hours(base, &s.clock, &s.pointing)?;
                    base + (target - ra0).rem_euclid(24.0) / (24.0 * SIDEREAL_RATE)
                }
            };
            let ra_start_hr = pointing_ra_hours(start_mjd, &s.clock, &s.pointing)?;
            let swept_s = n_ticks as f64 * s.clock.tick_interval_s;
            out.push(FileWindow {
                index: day * per_day + j,
                start_mjd,
                duration_hr,
                n_ticks,
                ra_start_hr,
                ra_span_hr: (swept_s / SECONDS_PER_DAY * 24.0 * SIDEREAL_RATE).min(24.0),
            });
        }
    }
    out.sort_by(|a, b| a.start_mjd.total_cmp(&b.start_mjd));
    Ok(out)
}
