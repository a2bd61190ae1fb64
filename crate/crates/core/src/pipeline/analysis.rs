//! Second-level analysis: file selection, pair formation, filtering,
//! sorting and the per-RA-bin statistics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::warn;

use crate::candidates::{form_pairs, pair_order, second_level_filter, CandidateRecord, PairRecord};
use crate::error::{Error, Result};
use crate::excision::NotchSet;
use crate::pipeline::records::{
    list_candidate_files, read_candidate_file, read_metadata, sig9, write_pair_file, write_table,
    Metadata,
};
use crate::pipeline::scenario::Level;
use crate::pipeline::schedule::covers;
use crate::stats::{binomial_tail, event_probabilities, running_d_series, Dwell, RaBinTable};
use crate::timebase::{RaBin, RA_BIN_COUNT};

/// A capture file and the coverage recorded in its preamble.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureEntry {
    pub path: PathBuf,
    pub mjd_start: f64,
    pub ra_start_hr: f64,
    pub ra_span_hr: f64,
    pub meta: Metadata,
}

impl CaptureEntry {
    pub fn from_file(path: &Path) -> Result<Self> {
        let meta = read_metadata(path)?;
        let num = |k: &str| -> Result<f64> {
            meta.get(k)
                .ok_or_else(|| Error::data(path, format!("missing '{k}'")))?
                .parse()
                .map_err(|_| Error::data(path, format!("bad '{k}'")))
        };
        Ok(Self {
            path: path.to_path_buf(),
            mjd_start: num("mjd_start")?,
            ra_start_hr: num("ra_start_hr")?,
            ra_span_hr: num("ra_span_hr")?,
            meta,
        })
    }

    pub fn covers(&self, ra_hr: f64) -> bool {
        covers(self.ra_start_hr, self.ra_span_hr, ra_hr)
    }

    pub fn day(&self) -> i64 {
        self.mjd_start.floor() as i64
    }

    pub fn dwell(&self) -> Dwell {
        Dwell {
            ra_start_hr: self.ra_start_hr,
            span_hr: self.ra_span_hr,
        }
    }

    /// A numeric counter from the preamble, if present.
    pub fn counter(&self, key: &str) -> Option<u64> {
        self.meta.get(key).and_then(|v| v.parse().ok())
    }
}

/// All capture files in `dir`, in time order.
pub fn read_capture_index(dir: &Path) -> Result<Vec<CaptureEntry>> {
    let mut v = list_candidate_files(dir)?
        .iter()
        .map(|p| CaptureEntry::from_file(p))
        .collect::<Result<Vec<_>>>()?;
    v.sort_by(|a, b| a.mjd_start.total_cmp(&b.mjd_start));
    Ok(v)
}

/// One file per MJD day whose sweep contains `ra_hr`; the earliest wins
/// when several do. Days with files but no coverage are skipped.
pub fn select_daily_files(files: &[CaptureEntry], ra_hr: f64) -> Vec<CaptureEntry> {
    let mut by_day: BTreeMap<i64, Option<&CaptureEntry>> = BTreeMap::new();
    for f in files {
        let slot = by_day.entry(f.day()).or_insert(None);
        if f.covers(ra_hr) && slot.is_none_or(|s| f.mjd_start < s.mjd_start) {
            *slot = Some(f);
        }
    }
    by_day
        .into_iter()
        .filter_map(|(day, f)| {
            if f.is_none() {
                warn!("no capture file on MJD {day} covers RA {ra_hr} h; day omitted");
            }
            f.cloned()
        })
        .collect()
}

/// Pairs of consecutive candidates within each frame of a time-ordered
/// candidate list.
pub fn pairs_by_frame(cands: &[CandidateRecord]) -> Result<Vec<PairRecord>> {
    let mut out = Vec::new();
    for frame in cands.chunk_by(|a, b| a.mjd == b.mjd) {
        out.extend(form_pairs(frame)?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub files: Vec<CaptureEntry>,
    pub candidates: usize,
    /// Every pair before the second-level cuts, in time order.
    pub pairs_all: Vec<PairRecord>,
    /// Second-level pairs, sorted by ascending |ΔΔΦ|.
    pub pairs: Vec<PairRecord>,
    pub table: RaBinTable,
}

/// Form, filter and sort pairs from `files` and accumulate the RA-bin table.
pub fn analyze_files(files: &[CaptureEntry], notches: &NotchSet) -> Result<Analysis> {
    if files.is_empty() {
        return Err(Error::Degenerate("no capture files to analyze".into()));
    }
    let mut candidates = 0;
    let mut pairs_all = Vec::new();
    for f in files {
        let (_, recs) = read_candidate_file(&f.path)?;
        candidates += recs.len();
        pairs_all.extend(pairs_by_frame(&recs)?);
    }
    let dwell: Vec<Dwell> = files.iter().map(CaptureEntry::dwell).collect();
    let mut table = RaBinTable::new(event_probabilities(&dwell)?)?;
    let pairs = second_level_filter(pairs_all.clone(), notches);
    debug_assert!(pairs.windows(2).all(|w| pair_order(&w[0], &w[1]).is_le()));
    running_d_series(&pairs, &mut table)?;
    Ok(Analysis {
        files: files.to_vec(),
        candidates,
        pairs_all,
        pairs,
        table,
    })
}

/// Analyze the capture files in `dir` at the given level.
pub fn analyze_dir(dir: &Path, level: Level, ra_of_interest_hr: f64, notches: &NotchSet) -> Result<Analysis> {
    let all = read_capture_index(dir)?;
    let files = match level {
        Level::First => all,
        Level::Second => select_daily_files(&all, ra_of_interest_hr),
    };
    analyze_files(&files, notches)
}

/// Per-RA-bin summary rows: probability, events, final d, Δf sum and the
/// binomial tail of the observed count.
pub fn ra_bin_rows(a: &Analysis) -> Vec<Vec<String>> {
    let t = &a.table;
    (0..RA_BIN_COUNT)
        .map(|b| {
            let p = t.event_probability[b];
            let k = t.events(b) as u64;
            let tail = if p > 0.0 && p < 1.0 && t.trials > 0 {
                binomial_tail(t.trials as u64, k, p).map(sig9).unwrap_or_default()
            } else {
                String::new()
            };
            vec![
                b.to_string(),
                sig9(RaBin(b).center_hr()),
                sig9(p),
                k.to_string(),
                t.final_d(b).map(sig9).unwrap_or_default(),
                sig9(t.sum_log10_df[b]),
                tail,
            ]
        })
        .collect()
}

pub const RA_BIN_COLUMNS: [&str; 7] = [
    "ra_bin",
    "ra_center_hr",
    "event_probability",
    "events",
    "cohens_d",
    "sum_log10_df_mhz",
    "binomial_tail",
];

/// Write `pairs_all.csv`, `pairs.csv`, `ra_bins.csv` and `files.csv`.
pub fn write_analysis(a: &Analysis, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut meta = Metadata::new();
    meta.insert("files".into(), a.files.len().to_string());
    meta.insert("candidates".into(), a.candidates.to_string());
    meta.insert("pairs_all".into(), a.pairs_all.len().to_string());
    meta.insert("pairs".into(), a.pairs.len().to_string());
    write_pair_file(&dir.join("pairs_all.csv"), "pulsepair unfiltered pairs", &meta, &a.pairs_all)?;
    write_pair_file(&dir.join("pairs.csv"), "pulsepair second-level pairs", &meta, &a.pairs)?;
    write_table(&dir.join("ra_bins.csv"), "pulsepair RA-bin statistics", &meta, &RA_BIN_COLUMNS, ra_bin_rows(a))?;
    let files = a.files.iter().map(|f| {
        vec![
            f.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            format!("{:.9}", f.mjd_start),
            sig9(f.ra_start_hr),
            sig9(f.ra_span_hr),
        ]
    });
    write_table(
        &dir.join("files.csv"),
        "pulsepair analyzed capture files",
        &meta,
        &["file", "mjd_start", "ra_start_hr", "ra_span_hr"],
        files,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(mjd: f64, ra: f64, span: f64) -> CaptureEntry {
        CaptureEntry {
            path: PathBuf::from(format!("cand_{mjd}.csv")),
            mjd_start: mjd,
            ra_start_hr: ra,
            ra_span_hr: span,
            meta: Metadata::new(),
        }
    }

    #[test]
    fn one_file_per_day_covering_the_ra() {
        // 61 days of six 4 h files; only the 04:00 file contains 5.25 h
        let mut files = Vec::new();
        for d in 0..61 {
            for j in 0..6 {
                files.push(entry(60284.0 + d as f64 + j as f64 / 6.0, 4.0 * j as f64, 4.0));
            }
        }
        let sel = select_daily_files(&files, 5.25);
        assert_eq!(sel.len(), 61);
        assert!(sel.iter().all(|f| f.ra_start_hr == 4.0));
    }

    #[test]
    fn uncovered_day_is_omitted_and_ties_take_the_earliest() {
        let files = vec![
            entry(60000.30, 5.0, 1.0),
            entry(60000.10, 5.1, 1.0),
            entry(60001.10, 8.0, 1.0),
        ];
        let sel = select_daily_files(&files, 5.25);
        assert_eq!(sel.len(), 1);
        assert_eq!(sel[0].mjd_start, 60000.10);
    }

    fn cand(mjd: f64, bin: usize) -> CandidateRecord {
        CandidateRecord {
            mjd,
            ra_hr: 5.25,
            ra_bin: 52,
            rf_hz: 1415e6 + bin as f64 * 4.0,
            bin_index: bin,
            snr_east_db: 9.0,
            snr_west_db: 9.0,
            phi_east_rad: 0.0,
            phi_west_rad: 0.0,
            p954_east: 0.0,
            p954_west: 0.0,
            p50m_east: 0.0,
            p50m_west: 0.0,
            margin_low: 0,
            margin_high: 0,
        }
    }

    #[test]
    fn pairs_never_span_frames() {
        let c = vec![cand(1.0, 5), cand(1.0, 9), cand(1.0, 20), cand(2.0, 1), cand(3.0, 4), cand(3.0, 6)];
        let p = pairs_by_frame(&c).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.iter().all(|p| p.upper.mjd == p.lower.mjd));
        assert_eq!(p[2].delta_f_hz, 8.0);
    }
}
