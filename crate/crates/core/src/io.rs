//! Plain-text file formats: PGM (P2) images, sinogram CSV, mask/trace/metrics CSV.
//!
//! PGM samples are written row by row in grid index order, so row 0 of the
//! file is the lowest-y pixel row.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::projector::Sinogram;
use crate::solver::TraceRecord;

pub const SINOGRAM_HEADER: &str = "angle_index,det_index,value";
pub const TRACE_HEADER: &str = "iter,objective,grad_norm,lambda,tau,backtracks";
pub const MASK_HEADER: &str = "ix,iy,value";
pub const METRICS_HEADER: &str = "experiment,method,views,angle_range,jaccard,pixel_error,sinogram_rmse,iters,seconds";

/// Gray image with samples in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

pub fn encode_pgm(width: usize, height: usize, values: &[f64]) -> Result<String> {
    if values.len() != width * height {
        return Err(Error::invalid(format!(
            "image has {} samples, expected {width}x{height}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("PGM sample {v} outside [0, 1]")));
    }
    let mut out = format!("P2\n{width} {height}\n255\n");
    for row in values.chunks(width.max(1)) {
        let line: Vec<String> = row.iter().map(|v| ((255.0 * v).round() as u8).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn decode_pgm(text: &str) -> Result<PgmImage> {
    // (line number, token) with comments removed
    let mut tokens = text.lines().enumerate().flat_map(|(k, line)| {
        let content = line.split('#').next().unwrap_or("");
        content.split_whitespace().map(move |t| (k + 1, t))
    });
    let last_line = text.lines().count();

    let mut header = |what: &str| -> Result<(usize, &str)> {
        tokens
            .next()
            .ok_or_else(|| Error::parse(last_line + 1, format!("missing {what} in PGM header")))
    };
    let (line, magic) = header("magic")?;
    if magic != "P2" {
        return Err(Error::parse(line, format!("expected magic 'P2', found '{magic}'")));
    }
    let mut dim = |what: &str| -> Result<usize> {
        let (line, t) = header(what)?;
        t.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::parse(line, format!("invalid {what} '{t}'")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let (line, maxval) = header("maxval")?;
    if maxval != "255" {
        return Err(Error::parse(line, format!("maxval must be 255, found '{maxval}'")));
    }

    let expected = width * height;
    let mut values = Vec::with_capacity(expected);
    for (line, t) in tokens.by_ref() {
        if values.len() == expected {
            return Err(Error::parse(line, format!("unexpected extra sample '{t}' beyond {expected}")));
        }
        let v: u8 = t.parse().map_err(|_| Error::parse(line, format!("invalid sample '{t}'")))?;
        values.push(v as f64 / 255.0);
    }
    if values.len() < expected {
        return Err(Error::parse(
            last_line + 1,
            format!("missing sample {} of {expected}", values.len() + 1),
        ));
    }
    Ok(PgmImage { width, height, values })
}

pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(width, height, values)?).map_err(Error::file(path))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<PgmImage> {
    let path = path.as_ref();
    decode_pgm(&fs::read_to_string(path).map_err(Error::file(path))?)
}

pub fn encode_sinogram_csv(sino: &Sinogram) -> String {
    let mut out = String::with_capacity(32 * sino.len() + SINOGRAM_HEADER.len() + 1);
    out.push_str(SINOGRAM_HEADER);
    out.push('\n');
    for a in 0..sino.n_angles() {
        for d in 0..sino.n_det() {
            let _ = writeln!(out, "{a},{d},{:.16e}", sino.get(a, d));
        }
    }
    out
}

pub fn decode_sinogram_csv(text: &str) -> Result<Sinogram> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    match lines.next() {
        Some((_, h)) if h == SINOGRAM_HEADER => {}
        Some((line, h)) => {
            return Err(Error::parse(line, format!("expected header '{SINOGRAM_HEADER}', found '{h}'")));
        }
        None => return Err(Error::parse(1, "missing header")),
    }
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    let mut last = 1;
    for (line, l) in lines {
        last = line;
        if l.is_empty() {
            continue;
        }
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(line, format!("expected 3 fields, found {}", fields.len())));
        }
        let index = |t: &str, what: &str| {
            t.parse::<usize>().map_err(|_| Error::parse(line, format!("invalid {what} '{t}'")))
        };
        let a = index(fields[0], "angle_index")?;
        let d = index(fields[1], "det_index")?;
        let v: f64 = fields[2]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(line, format!("invalid value '{}'", fields[2])))?;
        if !seen.insert((a, d)) {
            return Err(Error::parse(line, format!("duplicate entry ({a}, {d})")));
        }
        entries.push((a, d, v));
    }
    let n_angles = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let n_det = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    if entries.len() != n_angles * n_det {
        return Err(Error::parse(
            last,
            format!("incomplete sinogram: {} entries for {n_angles}x{n_det}", entries.len()),
        ));
    }
    let mut values = vec![0.0; n_angles * n_det];
    for (a, d, v) in entries {
        values[a * n_det + d] = v;
    }
    Sinogram::new(n_angles, n_det, values)
}

pub fn write_sinogram_csv(path: impl AsRef<Path>, sino: &Sinogram) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_sinogram_csv(sino)).map_err(Error::file(path))
}

pub fn read_sinogram_csv(path: impl AsRef<Path>) -> Result<Sinogram> {
    let path = path.as_ref();
    decode_sinogram_csv(&fs::read_to_string(path).map_err(Error::file(path))?)
}

/// One row per pixel: `ix,iy,value` with value 0 or 1.
pub fn encode_mask_csv(width: usize, mask: &Mask) -> String {
    let mut out = format!("{MASK_HEADER}\n");
    for (p, &b) in mask.bits().iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", p % width, p / width, u8::from(b));
    }
    out
}

pub fn encode_trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for t in trace {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{},{:e},{}",
            t.iter, t.objective, t.grad_norm, t.lambda, t.tau, t.backtracks
        );
    }
    out
}

/// One line of the metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub experiment: String,
    pub method: String,
    pub views: usize,
    pub angle_range: f64,
    pub jaccard: Option<f64>,
    pub pixel_error: Option<f64>,
    pub sinogram_rmse: Option<f64>,
    pub iters: usize,
    pub seconds: f64,
}

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{:.6},{},{},{},{},{:.3}",
            self.experiment,
            self.method,
            self.views,
            self.angle_range,
            opt(self.jaccard),
            opt(self.pixel_error),
            opt(self.sinogram_rmse),
            self.iters,
            self.seconds
        )
    }
}

pub fn encode_metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}
