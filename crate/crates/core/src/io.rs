//! Binary PPM/PGM files and line-delimited JSON run logs.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::ConvergenceTrace;
use crate::error::{Error, Result};
use crate::laplacian::{EpsilonScaling, ImagePlane};
use crate::solvers::{SolverConfig, SolverKind};
use crate::sparse::GridField;
use crate::system::{ConstraintMap, SolveReport, Termination};
use crate::work::Work;

/// Decoded 8-bit netpbm payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pnm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Reads the next whitespace-delimited header token, skipping `#` comments.
fn header_token(bytes: &[u8], pos: &mut usize, path: &Path) -> Result<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(malformed(path, "unexpected end of header"));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn header_number(bytes: &[u8], pos: &mut usize, path: &Path, what: &str) -> Result<usize> {
    let token = header_token(bytes, pos, path)?;
    token
        .parse::<usize>()
        .map_err(|_| malformed(path, format!("{what} is not a number: {token:?}")))
}

/// Parses a binary P5 (gray) or P6 (color) file with maxval 255.
pub fn parse_pnm(bytes: &[u8], path: &Path) -> Result<Pnm> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos, path)?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(malformed(path, format!("unsupported magic {other:?}"))),
    };
    let width = header_number(bytes, &mut pos, path, "width")?;
    let height = header_number(bytes, &mut pos, path, "height")?;
    let maxval = header_number(bytes, &mut pos, path, "maxval")?;
    if width == 0 || height == 0 {
        return Err(malformed(path, format!("empty image {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedDepth {
            path: path.to_path_buf(),
            maxval: maxval.min(u32::MAX as usize) as u32,
        });
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(malformed(path, "missing whitespace after maxval"));
    }
    pos += 1;
    let expected = width * height * channels;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected,
            found: payload.len(),
        });
    }
    Ok(Pnm {
        width,
        height,
        channels,
        data: payload[..expected].to_vec(),
    })
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<Pnm> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pnm(&bytes, path)
}

pub fn write_pnm(path: impl AsRef<Path>, pnm: &Pnm) -> Result<()> {
    let path = path.as_ref();
    let magic = if pnm.channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", pnm.width, pnm.height).into_bytes();
    out.extend_from_slice(&pnm.data);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a P6 or P5 image scaled to `[0, 1]`.
pub fn read_image(path: impl AsRef<Path>) -> Result<ImagePlane> {
    let pnm = read_pnm(path)?;
    ImagePlane::from_u8(pnm.width, pnm.height, pnm.channels, &pnm.data)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_image(path: impl AsRef<Path>, img: &ImagePlane) -> Result<()> {
    write_pnm(
        path,
        &Pnm {
            width: img.width(),
            height: img.height(),
            channels: img.channels(),
            data: img.values().iter().map(|&v| quantize(v)).collect(),
        },
    )
}

/// Reads a P5 scribble map: 255 pins alpha to 1, 0 pins it to 0, anything
/// else leaves the pixel free.
pub fn read_scribbles(path: impl AsRef<Path>, dims: (usize, usize)) -> Result<ConstraintMap> {
    let path = path.as_ref();
    let pnm = read_pnm(path)?;
    if pnm.channels != 1 {
        return Err(malformed(path, "scribbles must be a P5 grayscale image"));
    }
    if (pnm.width, pnm.height) != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: (pnm.width, pnm.height),
        });
    }
    let mut map = ConstraintMap::new(pnm.width, pnm.height);
    for (p, &v) in pnm.data.iter().enumerate() {
        let (x, y) = (p % pnm.width, p / pnm.width);
        match v {
            255 => map.constrain(x, y, 1.0),
            0 => map.constrain(x, y, 0.0),
            _ => {}
        }
    }
    Ok(map)
}

/// Writes a scribble map in the encoding [`read_scribbles`] expects;
/// free pixels become 128 and fractional targets are rounded.
pub fn write_scribbles(path: impl AsRef<Path>, map: &ConstraintMap) -> Result<()> {
    let data = (0..map.width() * map.height())
        .map(|p| match map.target(p) {
            Some(t) if t >= 0.5 => 255,
            Some(_) => 0,
            None => 128,
        })
        .collect();
    write_pnm(
        path,
        &Pnm {
            width: map.width(),
            height: map.height(),
            channels: 1,
            data,
        },
    )
}

/// Writes `alpha` as a P5 matte, clamped to `[0, 1]` and rounded to 8 bits.
pub fn write_matte(alpha: &GridField, path: impl AsRef<Path>) -> Result<()> {
    write_pnm(
        path,
        &Pnm {
            width: alpha.width(),
            height: alpha.height(),
            channels: 1,
            data: alpha.values().iter().map(|&v| quantize(v)).collect(),
        },
    )
}

/// Reads a P5 matte back as a field in `[0, 1]`.
pub fn read_matte(path: impl AsRef<Path>) -> Result<GridField> {
    let path = path.as_ref();
    let pnm = read_pnm(path)?;
    if pnm.channels != 1 {
        return Err(malformed(path, "matte must be a P5 grayscale image"));
    }
    GridField::from_vec(
        pnm.width,
        pnm.height,
        pnm.data.iter().map(|&b| b as f64 / 255.0).collect(),
    )
}

/// Experiment description written as the first log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub solver: SolverKind,
    pub width: usize,
    pub height: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub scaling: EpsilonScaling,
    pub config: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scribbles: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Run(RunHeader),
    Iteration {
        k: usize,
        residual: f64,
        work: Work,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seconds: Option<f64>,
    },
    Summary {
        iterations: usize,
        terminated: Termination,
        final_residual: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seconds: Option<f64>,
    },
}

/// Parsed run log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: RunHeader,
    pub trace: ConvergenceTrace,
    pub iterations: usize,
    pub terminated: Termination,
    pub rho0: Option<f64>,
}

impl RunLog {
    pub fn from_report(header: RunHeader, report: &SolveReport, rho0: Option<f64>) -> Self {
        RunLog {
            header,
            trace: report.trace.clone(),
            iterations: report.iterations,
            terminated: report.terminated,
            rho0,
        }
    }

    pub fn pixels(&self) -> usize {
        self.header.width * self.header.height
    }

    /// Log records in file order. Wall-clock fields are left out when
    /// `deterministic` is set so repeated runs produce identical files.
    pub fn records(&self, deterministic: bool) -> Vec<LogRecord> {
        let time = |s: f64| (!deterministic).then_some(s);
        let mut out = vec![LogRecord::Run(self.header.clone())];
        for k in 0..self.trace.len() {
            out.push(LogRecord::Iteration {
                k,
                residual: self.trace.residuals[k],
                work: self.trace.work[k],
                seconds: time(self.trace.seconds[k]),
            });
        }
        out.push(LogRecord::Summary {
            iterations: self.iterations,
            terminated: self.terminated,
            final_residual: self.trace.last(),
            rho0: self.rho0,
            seconds: time(*self.trace.seconds.last().unwrap()),
        });
        out
    }
}

pub fn write_run_log(path: impl AsRef<Path>, log: &RunLog, deterministic: bool) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in log.records(deterministic) {
        let line = serde_json::to_string(&record).expect("log records serialize");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_run_log(path: impl AsRef<Path>) -> Result<RunLog> {
    let path = path.as_ref();
    let bad = |reason: String| Error::MalformedLog {
        path: path.to_path_buf(),
        reason,
    };
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = None;
    let mut trace: Option<ConvergenceTrace> = None;
    let mut summary = None;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LogRecord =
            serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", n + 1)))?;
        match record {
            LogRecord::Run(h) => header = Some(h),
            LogRecord::Iteration {
                k,
                residual,
                work,
                seconds,
            } => {
                let s = seconds.unwrap_or(0.0);
                match trace.as_mut() {
                    None if k == 0 => trace = Some(ConvergenceTrace::new(residual, work, s)),
                    Some(t) if t.len() == k => t.push(residual, work, s),
                    _ => return Err(bad(format!("line {}: iteration {k} out of order", n + 1))),
                }
            }
            LogRecord::Summary {
                iterations,
                terminated,
                rho0,
                ..
            } => summary = Some((iterations, terminated, rho0)),
        }
    }
    let header = header.ok_or_else(|| bad("missing run record".into()))?;
    let trace = trace.ok_or_else(|| bad("no iteration records".into()))?;
    let (iterations, terminated, rho0) = summary.ok_or_else(|| bad("missing summary".into()))?;
    Ok(RunLog {
        header,
        trace,
        iterations,
        terminated,
        rho0,
    })
}
