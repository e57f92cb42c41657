//! Signal CSV and PNM (PGM/PPM) reading and writing.
//!
//! Signal CSV: a `d,N` header line followed by `N` rows of `d`
//! comma-separated numbers, written with 17 significant digits so that a
//! write/read cycle is lossless.
//!
//! PNM samples are scaled to `[0, 1]` on input. Output always uses maxval
//! 255 with round-to-nearest, ties away from zero.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::colormap::RgbImage;
use crate::error::{Error, Result};
use crate::signal::Signal;

pub fn signal_to_csv(x: &Signal) -> String {
    let mut out = format!("{},{}\n", x.dim(), x.len());
    for v in x.vertices() {
        let row: Vec<String> = v.iter().map(|c| format!("{c:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn signal_from_csv(text: &str) -> Result<Signal> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty signal file".into()))?;
    let (d, n) = header
        .split_once(',')
        .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
        .ok_or_else(|| Error::Parse(format!("bad header {header:?}, expected `d,N`")))?;
    if d == 0 {
        return Err(Error::Parse("dimension must be positive".into()));
    }
    let mut values = Vec::with_capacity(d * n);
    for (i, line) in lines.enumerate() {
        if i >= n {
            return Err(Error::Parse(format!("more than {n} rows")));
        }
        let before = values.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad number {field:?}", i + 1)))?;
            values.push(v);
        }
        if values.len() - before != d {
            return Err(Error::Parse(format!("row {}: expected {d} values", i + 1)));
        }
    }
    if values.len() != d * n {
        return Err(Error::Parse(format!("expected {n} rows, found {}", values.len() / d)));
    }
    Signal::new(d, values).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_signal_csv(path: &Path) -> Result<Signal> {
    signal_from_csv(&fs::read_to_string(path)?)
}

pub fn write_signal_csv(path: &Path, x: &Signal) -> Result<()> {
    fs::write(path, signal_to_csv(x))?;
    Ok(())
}

/// Decoded PNM image with samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum PnmImage {
    Gray { rows: usize, cols: usize, values: Vec<f64> },
    Rgb(RgbImage),
}

impl PnmImage {
    pub fn rows(&self) -> usize {
        match self {
            PnmImage::Gray { rows, .. } => *rows,
            PnmImage::Rgb(img) => img.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            PnmImage::Gray { cols, .. } => *cols,
            PnmImage::Rgb(img) => img.cols(),
        }
    }
}

struct Tokens<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Tokens<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn next_uint(&mut self) -> Result<u32> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("expected an integer at byte {start}")))
    }
}

pub fn decode_pnm(data: &[u8]) -> Result<PnmImage> {
    if data.len() < 2 || data[0] != b'P' {
        return Err(Error::Parse("not a PNM file".into()));
    }
    let magic = data[1];
    let channels = match magic {
        b'2' | b'5' => 1,
        b'3' | b'6' => 3,
        _ => return Err(Error::Parse(format!("unsupported PNM type P{}", magic as char))),
    };
    let mut tok = Tokens { data, pos: 2 };
    let cols = tok.next_uint()? as usize;
    let rows = tok.next_uint()? as usize;
    let maxval = tok.next_uint()?;
    if rows == 0 || cols == 0 {
        return Err(Error::Parse("image dimensions must be positive".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse(format!("maxval {maxval} outside 1..=65535")));
    }
    let count = rows * cols * channels;
    let mut samples = Vec::with_capacity(count);
    if magic == b'2' || magic == b'3' {
        for _ in 0..count {
            samples.push(tok.next_uint()?);
        }
    } else {
        // exactly one whitespace byte separates the header from the raster
        let start = tok.pos + 1;
        let width = if maxval < 256 { 1 } else { 2 };
        let raster = data
            .get(start..start + count * width)
            .ok_or_else(|| Error::Parse("truncated raster".into()))?;
        if width == 1 {
            samples.extend(raster.iter().map(|&b| b as u32));
        } else {
            samples.extend(raster.chunks_exact(2).map(|p| u16::from_be_bytes([p[0], p[1]]) as u32));
        }
    }
    if let Some(&bad) = samples.iter().find(|&&s| s > maxval) {
        return Err(Error::Parse(format!("sample {bad} exceeds maxval {maxval}")));
    }
    let scale = maxval as f64;
    if channels == 1 {
        let values = samples.iter().map(|&s| s as f64 / scale).collect();
        Ok(PnmImage::Gray { rows, cols, values })
    } else {
        let pixels = samples
            .chunks_exact(3)
            .map(|p| [p[0] as f64 / scale, p[1] as f64 / scale, p[2] as f64 / scale])
            .collect();
        Ok(PnmImage::Rgb(RgbImage::new(rows, cols, pixels)?))
    }
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Encodes with maxval 255; `binary` selects P5/P6 over P2/P3.
pub fn encode_pnm(img: &PnmImage, binary: bool) -> Vec<u8> {
    let (magic, samples): (u8, Vec<u8>) = match img {
        PnmImage::Gray { values, .. } => (if binary { b'5' } else { b'2' }, values.iter().map(|&v| quantize(v)).collect()),
        PnmImage::Rgb(rgb) => (
            if binary { b'6' } else { b'3' },
            rgb.pixels().iter().flat_map(|p| p.map(quantize)).collect(),
        ),
    };
    let mut out = format!("P{}\n{} {}\n255\n", magic as char, img.cols(), img.rows()).into_bytes();
    if binary {
        out.extend_from_slice(&samples);
    } else {
        let per_row = img.cols() * if matches!(img, PnmImage::Gray { .. }) { 1 } else { 3 };
        for row in samples.chunks(per_row) {
            let line: Vec<String> = row.iter().map(|s| s.to_string()).collect();
            writeln!(out, "{}", line.join(" ")).expect("write to vec");
        }
    }
    out
}

pub fn read_pnm(path: &Path) -> Result<PnmImage> {
    decode_pnm(&fs::read(path)?)
}

pub fn write_pnm(path: &Path, img: &PnmImage) -> Result<()> {
    fs::write(path, encode_pnm(img, true))?;
    Ok(())
}
