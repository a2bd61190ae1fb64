//! Binary frame dumps and lag-profile CSV.
//!
//! Each dumped frame is a 64-byte little-endian header followed by the
//! payload: interleaved f32 (re, im) samples for IQ dumps, f32 bin powers
//! in RF order for spectral dumps.
//!
//! | offset | type | field |
//! |---|---|---|
//! | 0 | [u8; 4] | magic `PPIQ` or `PPSP` |
//! | 4 | u16 | version |
//! | 6 | u8 | element (0 East, 1 West) |
//! | 7 | u8 | reserved |
//! | 8 | u64 | fft_len |
//! | 16 | f64 | sample_rate_hz |
//! | 24 | f64 | start MJD |
//! | 32 | f64 | LO frequency, Hz |
//! | 40 | u64 | clipped samples |
//! | 48 | 16 bytes | reserved, zero |

use std::io::{self, Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex32;

use crate::channelizer::SpectralFrame;
use crate::correlator::LagSpectrum;
use crate::error::{Error, Result};
use crate::frame::{BandPlan, Element, IqFrame};
use crate::pipeline::records::{sig9, write_table, Metadata};

pub const IQ_MAGIC: [u8; 4] = *b"PPIQ";
pub const SPECTRUM_MAGIC: [u8; 4] = *b"PPSP";
pub const DUMP_VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub magic: [u8; 4],
    pub element: Element,
    pub band: BandPlan,
    pub start_mjd: f64,
    pub clipped: u64,
}

impl DumpHeader {
    pub fn encode(&self) -> [u8; HEADER_BYTES] {
        let mut h = [0u8; HEADER_BYTES];
        h[0..4].copy_from_slice(&self.magic);
        h[4..6].copy_from_slice(&DUMP_VERSION.to_le_bytes());
        h[6] = match self.element {
            Element::East => 0,
            Element::West => 1,
        };
        h[8..16].copy_from_slice(&(self.band.fft_len as u64).to_le_bytes());
        h[16..24].copy_from_slice(&self.band.sample_rate_hz.to_le_bytes());
        h[24..32].copy_from_slice(&self.start_mjd.to_le_bytes());
        h[32..40].copy_from_slice(&self.band.lo_freq_hz.to_le_bytes());
        h[40..48].copy_from_slice(&self.clipped.to_le_bytes());
        h
    }

    pub fn decode(h: &[u8; HEADER_BYTES]) -> std::result::Result<Self, String> {
        let u64_at = |o: usize| u64::from_le_bytes(h[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(h[o..o + 8].try_into().unwrap());
        let magic: [u8; 4] = h[0..4].try_into().unwrap();
        if magic != IQ_MAGIC && magic != SPECTRUM_MAGIC {
            return Err("bad magic".into());
        }
        let version = u16::from_le_bytes([h[4], h[5]]);
        if version != DUMP_VERSION {
            return Err(format!("unsupported dump version {version}"));
        }
        let element = match h[6] {
            0 => Element::East,
            1 => Element::West,
            e => return Err(format!("bad element code {e}")),
        };
        let band = BandPlan::new(u64_at(8) as usize, f64_at(16), f64_at(32)).map_err(|e| e.to_string())?;
        Ok(Self {
            magic,
            element,
            band,
            start_mjd: f64_at(24),
            clipped: u64_at(40),
        })
    }
}

/// Append one IQ frame to a dump.
pub fn write_iq_frame(w: &mut impl Write, frame: &IqFrame, band: &BandPlan) -> io::Result<()> {
    let h = DumpHeader {
        magic: IQ_MAGIC,
        element: frame.element,
        band: *band,
        start_mjd: frame.start_mjd,
        clipped: frame.clipped,
    };
    w.write_all(&h.encode())?;
    let mut buf = Vec::with_capacity(frame.samples.len() * 8);
    for c in &frame.samples {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)
}

/// Append one frame's bin powers to a spectral dump.
pub fn write_spectrum(w: &mut impl Write, spec: &SpectralFrame) -> io::Result<()> {
    let h = DumpHeader {
        magic: SPECTRUM_MAGIC,
        element: spec.element,
        band: spec.band,
        start_mjd: spec.start_mjd,
        clipped: 0,
    };
    w.write_all(&h.encode())?;
    let mut buf = Vec::with_capacity(spec.bins.len() * 4);
    for b in 0..spec.bins.len() {
        buf.extend_from_slice(&(spec.power(b) as f32).to_le_bytes());
    }
    w.write_all(&buf)
}

/// Sequential reader of an IQ dump.
pub struct IqDumpReader<R> {
    inner: R,
    path: std::path::PathBuf,
}

impl<R: Read> IqDumpReader<R> {
    pub fn new(inner: R, path: impl Into<std::path::PathBuf>) -> Self {
        Self {
            inner,
            path: path.into(),
        }
    }

    /// Next frame and its band, or `None` at a clean end of file.
    pub fn next_frame(&mut self) -> Result<Option<(IqFrame, BandPlan)>> {
        let mut h = [0u8; HEADER_BYTES];
        match read_full(&mut self.inner, &mut h) {
            Ok(0) => return Ok(None),
            Ok(HEADER_BYTES) => {}
            Ok(_) => return Err(Error::data(&self.path, "truncated frame header")),
            Err(e) => return Err(Error::io(&self.path, e)),
        }
        let hdr = DumpHeader::decode(&h).map_err(|m| Error::data(&self.path, m))?;
        if hdr.magic != IQ_MAGIC {
            return Err(Error::data(&self.path, "not an IQ dump"));
        }
        let n = hdr.band.fft_len;
        let mut raw = vec![0u8; n * 8];
        match read_full(&mut self.inner, &mut raw) {
            Ok(k) if k == raw.len() => {}
            Ok(_) => return Err(Error::data(&self.path, "truncated frame payload")),
            Err(e) => return Err(Error::io(&self.path, e)),
        }
        let samples = raw
            .chunks_exact(8)
            .map(|c| {
                Complex32::new(
                    f32::from_le_bytes(c[0..4].try_into().unwrap()),
                    f32::from_le_bytes(c[4..8].try_into().unwrap()),
                )
            })
            .collect();
        Ok(Some((
            IqFrame {
                element: hdr.element,
                start_mjd: hdr.start_mjd,
                samples,
                clipped: hdr.clipped,
            },
            hdr.band,
        )))
    }
}

fn read_full(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(k) => got += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}

/// Write a lag profile: taps from −half_width to +half_width samples.
pub fn write_lag_csv(path: &Path, lag: &LagSpectrum, half_width: usize, meta: &Metadata) -> Result<()> {
    let n = lag.taps.len();
    let hw = half_width.min(n / 2 - 1) as i64;
    let rows = (-hw..=hw).map(|k| {
        let idx = k.rem_euclid(n as i64) as usize;
        let c = lag.taps[idx];
        vec![
            k.to_string(),
            sig9(k as f64 * lag.tap_interval_s),
            sig9(c.norm()),
            sig9(c.arg()),
        ]
    });
    write_table(path, "pulsepair lag profile", meta, &["tap_index", "delay_s", "magnitude", "phase"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iq_dump_round_trips_bit_exactly() {
        let band = BandPlan::new(16, 1.024e6, 1415e6).unwrap();
        let frame = IqFrame {
            element: Element::West,
            start_mjd: 60284.123456789,
            samples: (0..16).map(|i| Complex32::new(i as f32 * 0.1, -(i as f32) / 3.0)).collect(),
            clipped: 3,
        };
        let mut buf = Vec::new();
        write_iq_frame(&mut buf, &frame, &band).unwrap();
        write_iq_frame(&mut buf, &frame, &band).unwrap();
        assert_eq!(buf.len(), 2 * (HEADER_BYTES + 16 * 8));
        assert_eq!(&buf[0..4], b"PPIQ");
        let mut r = IqDumpReader::new(&buf[..], "mem");
        for _ in 0..2 {
            let (f, b) = r.next_frame().unwrap().unwrap();
            assert_eq!(b, band);
            assert_eq!(f.element, Element::West);
            assert_eq!(f.start_mjd.to_bits(), frame.start_mjd.to_bits());
            assert_eq!(f.samples, frame.samples);
            assert_eq!(f.clipped, 3);
        }
        assert!(r.next_frame().unwrap().is_none());
        let mut r = IqDumpReader::new(&buf[..HEADER_BYTES + 5], "mem");
        assert!(matches!(r.next_frame(), Err(Error::Data { .. })));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(IqDumpReader::new(&bad[..], "mem").next_frame().is_err());
    }
}
