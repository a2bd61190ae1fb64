//! CSV persistence of candidate, RFI and pair records.
//!
//! Files start with `# key=value` metadata lines followed by a header row.
//! Floats carry 9 significant digits, except MJD and RF which keep enough
//! decimals to distinguish frames and bins.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::candidates::{CandidateRecord, PairRecord};
use crate::error::{Error, Result};
use crate::excision::RFI_ROUTE_REASON;

pub const SCHEMA_VERSION: u32 = 1;

pub const CANDIDATE_COLUMNS: [&str; 15] = [
    "mjd",
    "ra_hr",
    "ra_bin",
    "rf_hz",
    "bin_index",
    "snr_east_db",
    "snr_west_db",
    "phi_east_rad",
    "phi_west_rad",
    "p954_east",
    "p954_west",
    "p50m_east",
    "p50m_west",
    "margin_low",
    "margin_high",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Candidate,
    Rfi,
}

impl RecordKind {
    pub fn tag(self) -> &'static str {
        match self {
            RecordKind::Candidate => "cand",
            RecordKind::Rfi => "rfi",
        }
    }
}

/// Float with 9 significant digits in plain notation.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).clamp(0, 30) as usize;
    format!("{x:.decimals$}")
}

pub fn fmt_mjd(mjd: f64) -> String {
    format!("{mjd:.9}")
}

pub fn fmt_rf(rf_hz: f64) -> String {
    format!("{rf_hz:.3}")
}

/// File name of the capture file starting at `mjd`.
pub fn capture_file_name(kind: RecordKind, mjd: f64) -> String {
    format!("{}_{mjd:.6}.csv", kind.tag())
}

fn candidate_fields(c: &CandidateRecord) -> Vec<String> {
    vec![
        fmt_mjd(c.mjd),
        sig9(c.ra_hr),
        c.ra_bin.to_string(),
        fmt_rf(c.rf_hz),
        c.bin_index.to_string(),
        sig9(c.snr_east_db),
        sig9(c.snr_west_db),
        sig9(c.phi_east_rad),
        sig9(c.phi_west_rad),
        sig9(c.p954_east),
        sig9(c.p954_west),
        sig9(c.p50m_east),
        sig9(c.p50m_west),
        c.margin_low.to_string(),
        c.margin_high.to_string(),
    ]
}

/// Ordered `key=value` metadata written as comment lines.
pub type Metadata = BTreeMap<String, String>;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::data(path, e.to_string())
    }
}

fn write_preamble(w: &mut impl Write, title: &str, meta: &Metadata) -> std::io::Result<()> {
    writeln!(w, "# {title}")?;
    writeln!(w, "# schema_version={SCHEMA_VERSION}")?;
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

/// Write a CSV file with a metadata preamble.
pub fn write_table(
    path: &Path,
    title: &str,
    meta: &Metadata,
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    write_preamble(&mut out, title, meta).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Write a candidate or RFI file.
pub fn write_candidate_file(
    path: &Path,
    kind: RecordKind,
    meta: &Metadata,
    records: &[CandidateRecord],
) -> Result<()> {
    let mut meta = meta.clone();
    meta.insert("kind".into(), kind.tag().into());
    let title = match kind {
        RecordKind::Candidate => "pulsepair first-level candidates",
        RecordKind::Rfi => "pulsepair RFI records",
    };
    let mut columns: Vec<&str> = CANDIDATE_COLUMNS.to_vec();
    if kind == RecordKind::Rfi {
        columns.push("route_reason");
    }
    let rows = records.iter().map(|c| {
        let mut f = candidate_fields(c);
        if kind == RecordKind::Rfi {
            f.push(RFI_ROUTE_REASON.into());
        }
        f
    });
    write_table(path, title, &meta, &columns, rows)
}

/// Read the `# key=value` preamble of a file.
pub fn read_metadata(path: &Path) -> Result<Metadata> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut meta = Metadata::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = rest.trim().split_once('=') {
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    match meta.get("schema_version").map(|v| v.parse::<u32>()) {
        Some(Ok(SCHEMA_VERSION)) => Ok(meta),
        Some(_) => Err(Error::data(path, "unsupported schema_version")),
        None => Err(Error::data(path, "missing schema_version")),
    }
}

/// Read the records of a candidate or RFI file.
pub fn read_candidate_file(path: &Path) -> Result<(Metadata, Vec<CandidateRecord>)> {
    let meta = read_metadata(path)?;
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(BufReader::new(file));
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.iter().take(CANDIDATE_COLUMNS.len()).ne(CANDIDATE_COLUMNS.iter().copied()) {
        return Err(Error::data(path, "unexpected column layout"));
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let rec: CandidateRecord = rec.map_err(|e| csv_err(path, e))?;
        if out.last().is_some_and(|p: &CandidateRecord| rec.mjd < p.mjd) {
            return Err(Error::data(path, "records are not in time order"));
        }
        out.push(rec);
    }
    Ok((meta, out))
}

pub const PAIR_EXTRA_COLUMNS: [&str; 4] = ["delta_f_hz", "log10_df_mhz", "dd_phi_abs_rad", "upper_rf_hz"];

/// Pair rows: the upper component's candidate fields, the lower
/// component's RF and phases, then the pair quantities.
pub fn pair_columns() -> Vec<String> {
    let mut cols: Vec<String> = CANDIDATE_COLUMNS.iter().map(|c| c.to_string()).collect();
    for c in ["lower_rf_hz", "lower_bin_index", "lower_snr_east_db", "lower_snr_west_db", "lower_phi_east_rad", "lower_phi_west_rad"] {
        cols.push(c.into());
    }
    cols.extend(PAIR_EXTRA_COLUMNS.iter().map(|c| c.to_string()));
    cols
}

fn pair_fields(p: &PairRecord) -> Vec<String> {
    let mut f = candidate_fields(&p.upper);
    let l = &p.lower;
    f.extend([
        fmt_rf(l.rf_hz),
        l.bin_index.to_string(),
        sig9(l.snr_east_db),
        sig9(l.snr_west_db),
        sig9(l.phi_east_rad),
        sig9(l.phi_west_rad),
        sig9(p.delta_f_hz),
        sig9(p.log10_df_mhz),
        sig9(p.dd_phi_abs_rad),
        fmt_rf(p.upper_rf_hz()),
    ]);
    f
}

pub fn write_pair_file(path: &Path, title: &str, meta: &Metadata, pairs: &[PairRecord]) -> Result<()> {
    let cols = pair_columns();
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    write_table(path, title, meta, &cols, pairs.iter().map(pair_fields))
}

/// Capture files (`cand_*.csv`) in a directory, in name (= time) order.
pub fn list_candidate_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("cand_") && n.ends_with(".csv"))
        })
        .collect();
    out.sort();
    Ok(out)
}

/// The RFI file paired with a candidate file.
pub fn rfi_path_for(cand_path: &Path) -> PathBuf {
    let name = cand_path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    cand_path.with_file_name(name.replacen("cand_", "rfi_", 1))
}
