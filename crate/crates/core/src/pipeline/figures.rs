//! Figure datasets (one CSV per figure) and static SVG renders of them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;

use crate::candidates::{PairRecord, MAX_DD_PHI_RAD, MAX_PAIR_DELTA_F_HZ};
use crate::error::{Error, Result};
use crate::pipeline::records::{sig9, write_table, Metadata};
use crate::stats::{candidate_snr_log10_likelihood, RaBinTable};
use crate::timebase::{RaBin, RA_BIN_COUNT};

/// Plotted data of one figure. Column 0 is always the RA bin, the x axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureDataset {
    pub id: u8,
    pub title: &'static str,
    pub columns: Vec<&'static str>,
    /// Column plotted on the y axis.
    pub y_column: usize,
    pub rows: Vec<Vec<f64>>,
    /// Second-level pair count of the run.
    pub points: usize,
    pub mjd_range: Option<(f64, f64)>,
}

impl FigureDataset {
    pub fn file_stem(&self) -> String {
        format!("fig{:02}", self.id)
    }

    pub fn y_label(&self) -> &'static str {
        self.columns[self.y_column]
    }

    pub fn metadata(&self) -> Metadata {
        let mut m = Metadata::new();
        m.insert("figure".into(), self.id.to_string());
        m.insert("title".into(), self.title.into());
        m.insert("points".into(), self.points.to_string());
        m.insert(
            "mjd_range".into(),
            self.mjd_range
                .map_or_else(|| "none".into(), |(a, b)| format!("{a:.7} - {b:.7}")),
        );
        m.insert("log10_df_mhz_max".into(), format!("{:.3}", (MAX_PAIR_DELTA_F_HZ / 1e6).log10()));
        m.insert("dd_phi_abs_max_rad".into(), format!("{MAX_DD_PHI_RAD:.3}"));
        m
    }
}

fn per_pair(
    id: u8,
    title: &'static str,
    columns: Vec<&'static str>,
    pairs: &[PairRecord],
    values: impl Fn(&PairRecord) -> Vec<f64>,
) -> FigureDataset {
    let rows = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut r = vec![p.ra_bin as f64, (i + 1) as f64];
            r.extend(values(p));
            r
        })
        .collect();
    FigureDataset {
        id,
        title,
        columns,
        y_column: 2,
        rows,
        points: 0,
        mjd_range: None,
    }
}

fn per_bin(id: u8, title: &'static str, column: &'static str, value: impl Fn(usize) -> f64) -> FigureDataset {
    FigureDataset {
        id,
        title,
        columns: vec!["ra_bin", "ra_center_hr", column],
        y_column: 2,
        rows: (0..RA_BIN_COUNT)
            .map(|b| vec![b as f64, RaBin(b).center_hr(), value(b)])
            .collect(),
        points: 0,
        mjd_range: None,
    }
}

/// The thirteen figure datasets of a run.
pub fn figure_datasets(pairs: &[PairRecord], table: &RaBinTable) -> Vec<FigureDataset> {
    let mut figs = vec![
        per_bin(1, "count in RA bin vs RA bin", "count", |b| table.events(b) as f64),
        FigureDataset {
            id: 2,
            title: "running Cohen's d vs RA bin",
            columns: vec!["ra_bin", "trial", "events", "cohens_d"],
            y_column: 3,
            rows: table
                .event_points()
                .iter()
                .map(|p| {
                    let k = table.event_trials[p.ra_bin].partition_point(|&t| t <= p.trial);
                    vec![p.ra_bin as f64, p.trial as f64, k as f64, p.d]
                })
                .collect(),
            points: 0,
            mjd_range: None,
        },
        per_pair(3, "log10 df/MHz vs RA bin", vec!["ra_bin", "trial", "log10_df_mhz", "delta_f_hz"], pairs, |p| {
            vec![p.log10_df_mhz, p.delta_f_hz]
        }),
        per_bin(4, "sum of log10 df/MHz per RA bin", "sum_log10_df_mhz", |b| table.sum_log10_df[b]),
        per_pair(5, "954 Hz segment power vs RA bin", vec!["ra_bin", "trial", "p954_east", "p954_west"], pairs, |p| {
            vec![p.upper.p954_east, p.upper.p954_west]
        }),
        per_pair(6, "50 MHz power vs RA bin", vec!["ra_bin", "trial", "p50m_east", "p50m_west"], pairs, |p| {
            vec![p.upper.p50m_east, p.upper.p50m_west]
        }),
        per_pair(7, "MJD vs RA bin", vec!["ra_bin", "trial", "mjd"], pairs, |p| vec![p.pair_mjd]),
        per_pair(8, "upper RF vs RA bin", vec!["ra_bin", "trial", "upper_rf_hz"], pairs, |p| vec![p.upper_rf_hz()]),
        per_bin(9, "event probability vs RA bin", "event_probability", |b| table.event_probability[b]),
        per_pair(10, "log10 SNR likelihood vs RA bin", vec!["ra_bin", "trial", "log10_snr_likelihood"], pairs, |p| {
            vec![
                candidate_snr_log10_likelihood(p.upper.snr_east_db, p.upper.snr_west_db)
                    + candidate_snr_log10_likelihood(p.lower.snr_east_db, p.lower.snr_west_db),
            ]
        }),
        per_pair(11, "|ddphi| vs RA bin", vec!["ra_bin", "trial", "dd_phi_abs_rad"], pairs, |p| vec![p.dd_phi_abs_rad]),
        per_pair(12, "low-side RFI margin vs RA bin", vec!["ra_bin", "trial", "margin_low"], pairs, |p| {
            vec![p.upper.margin_low as f64]
        }),
        per_pair(13, "high-side RFI margin vs RA bin", vec!["ra_bin", "trial", "margin_high"], pairs, |p| {
            vec![p.upper.margin_high as f64]
        }),
    ];
    let mjd_range = pairs.iter().map(|p| p.pair_mjd).fold(None, |acc: Option<(f64, f64)>, m| {
        Some(acc.map_or((m, m), |(lo, hi)| (lo.min(m), hi.max(m))))
    });
    for f in &mut figs {
        f.points = pairs.len();
        f.mjd_range = mjd_range;
    }
    figs
}

/// Write each dataset as `figNN.csv` plus a best-effort `figNN.svg`.
pub fn emit_figures(pairs: &[PairRecord], table: &RaBinTable, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for fig in figure_datasets(pairs, table) {
        let csv_path = dir.join(format!("{}.csv", fig.file_stem()));
        let rows = fig.rows.iter().map(|r| r.iter().map(|v| sig9(*v)).collect());
        write_table(&csv_path, &format!("pulsepair figure {}", fig.id), &fig.metadata(), &fig.columns, rows)?;
        written.push(csv_path);
        let svg_path = dir.join(format!("{}.svg", fig.file_stem()));
        match std::fs::write(&svg_path, render_svg(&fig)) {
            Ok(()) => written.push(svg_path),
            Err(e) => warn!("could not write {}: {e}", svg_path.display()),
        }
    }
    Ok(written)
}

const W: f64 = 800.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// Scatter of the y column against RA bin.
pub fn render_svg(fig: &FigureDataset) -> String {
    let pts: Vec<(f64, f64)> = fig
        .rows
        .iter()
        .map(|r| (r[0], r[fig.y_column]))
        .filter(|(_, y)| y.is_finite())
        .collect();
    let (x0, x1) = (0.0, RA_BIN_COUNT as f64);
    let (mut y0, mut y1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if y1 - y0 < 1e-12 * y1.abs().max(1.0) {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">Fig. {}: {} ({} points)</text>"#,
        W / 2.0,
        fig.id,
        xml_escape(fig.title),
        fig.points
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for b in (0..=RA_BIN_COUNT).step_by(20) {
        let x = px(b as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="black"/><text x="{x:.1}" y="{}" text-anchor="middle">{b}</text>"#,
            H - BOTTOM,
            H - BOTTOM + 5.0,
            H - BOTTOM + 18.0
        );
    }
    for i in 0..=4 {
        let v = y0 + (y1 - y0) * i as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">RA bin (0.1 h)</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        xml_escape(fig.y_label())
    );
    for (x, y) in pts {
        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="steelblue"/>"#, px(x + 0.5), py(y));
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_run_still_has_headers() {
        let mut p = vec![0.0; RA_BIN_COUNT];
        p[52] = 1.0;
        let t = RaBinTable::new(p).unwrap();
        let figs = figure_datasets(&[], &t);
        assert_eq!(figs.len(), 13);
        assert_eq!(figs.iter().map(|f| f.id).collect::<Vec<_>>(), (1..=13).collect::<Vec<u8>>());
        let m = figs[0].metadata();
        assert_eq!(m["points"], "0");
        assert_eq!(m["log10_df_mhz_max"], "-1.000");
        assert_eq!(m["dd_phi_abs_max_rad"], "0.100");
        assert_eq!(m["mjd_range"], "none");
        assert!(render_svg(&figs[2]).ends_with("</svg>\n"));

        let dir = tempfile::tempdir().unwrap();
        let files = emit_figures(&[], &t, dir.path()).unwrap();
        assert_eq!(files.len(), 26);
        let text = std::fs::read_to_string(dir.path().join("fig11.csv")).unwrap();
        assert!(text.contains("# points=0"));
        assert!(text.lines().any(|l| l == "ra_bin,trial,dd_phi_abs_rad"));
    }
}
