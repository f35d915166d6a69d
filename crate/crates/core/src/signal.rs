//! Test-signal generators and file ingestion.
//!
//! Generators are deterministic: identical parameters produce bit-identical
//! buffers. File readers accept single-column-style CSV (selectable column,
//! optional header) and 16-bit PCM WAV (stereo downmixed by averaging).

use std::path::Path;

use crate::error::{Error, Result};
use crate::oracle;

/// A finite sampled signal.
#[derive(Debug, Clone)]
pub struct SignalBuffer {
    pub samples: Vec<f64>,
    /// Sample spacing in user time units.
    pub dt: f64,
    /// Time of the first sample.
    pub origin_time: f64,
    pub label: String,
}

impl SignalBuffer {
    fn new(samples: Vec<f64>, label: String) -> Self {
        SignalBuffer {
            samples,
            dt: 1.0,
            origin_time: 0.0,
            label,
        }
    }

    /// Subtracts the mean, leaving the DC level approximately zero.
    pub fn demean(&mut self) {
        if self.samples.is_empty() {
            return;
        }
        let mean = self.samples.iter().sum::<f64>() / self.samples.len() as f64;
        for s in &mut self.samples {
            *s -= mean;
        }
    }
}

fn blob_support(sigma_ref: f64, len: usize, center: usize) -> Result<()> {
    if !(sigma_ref > 0.0) || !sigma_ref.is_finite() {
        return Err(Error::invalid("sigma_ref", format!("must be finite and > 0, got {sigma_ref}")));
    }
    let reach = (8.0 * sigma_ref).ceil() as usize;
    if center < reach || center + reach >= len {
        return Err(Error::invalid(
            "length",
            format!(
                "length {len} with center {center} does not cover +/- 8 sigma_ref \
                 (= {reach} samples) around the center"
            ),
        ));
    }
    Ok(())
}

/// Blob model: the discrete Gaussian of variance `sigma_ref^2` centered at
/// `center`. Unit mass when the support is fully covered.
pub fn gen_blob(sigma_ref: f64, len: usize, center: usize) -> Result<SignalBuffer> {
    blob_support(sigma_ref, len, center)?;
    let tau_ref = sigma_ref * sigma_ref;
    let max_offset = center.max(len - 1 - center);
    let family = oracle::discrete_gaussian_family(max_offset, tau_ref);
    let samples = (0..len)
        .map(|t| family[(t as i64 - center as i64).unsigned_abs() as usize])
        .collect();
    Ok(SignalBuffer::new(
        samples,
        format!("blob(sigma={sigma_ref},center={center})"),
    ))
}

/// Edge model: the running inclusive sum of the blob, rising monotonically
/// from 0 to 1.
pub fn gen_edge(sigma_ref: f64, len: usize, center: usize) -> Result<SignalBuffer> {
    let blob = gen_blob(sigma_ref, len, center)?;
    let mut acc = 0.0;
    let samples = blob
        .samples
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    Ok(SignalBuffer::new(
        samples,
        format!("edge(sigma={sigma_ref},center={center})"),
    ))
}

/// Chirp with exponentially varying frequency,
/// `f(t) = sin(exp((b - t)/a))`. The exponent argument is clamped at 700
/// to keep `exp` finite; a clamped buffer is flagged in its label.
pub fn gen_chirp(a: f64, b: f64, len: usize) -> Result<SignalBuffer> {
    if a == 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("a", format!("need finite a != 0 and finite b, got a={a}, b={b}")));
    }
    let mut clamped = false;
    let samples = (0..len)
        .map(|t| {
            let mut arg = (b - t as f64) / a;
            if arg > 700.0 {
                arg = 700.0;
                clamped = true;
            }
            arg.exp().sin()
        })
        .collect();
    let mut label = format!("chirp(a={a},b={b})");
    if clamped {
        label.push_str(" [clamped]");
    }
    Ok(SignalBuffer::new(samples, label))
}

/// A single spike of the given amplitude.
pub fn gen_impulse(len: usize, position: usize, amplitude: f64) -> Result<SignalBuffer> {
    if position >= len {
        return Err(Error::invalid("position", format!("{position} outside length {len}")));
    }
    let mut samples = vec![0.0; len];
    samples[position] = amplitude;
    Ok(SignalBuffer::new(samples, format!("impulse(at={position})")))
}

/// Unit step: 0 before `position`, 1 from `position` on.
pub fn gen_step(len: usize, position: usize) -> Result<SignalBuffer> {
    if position >= len {
        return Err(Error::invalid("position", format!("{position} outside length {len}")));
    }
    let samples = (0..len).map(|t| if t >= position { 1.0 } else { 0.0 }).collect();
    Ok(SignalBuffer::new(samples, format!("step(at={position})")))
}

/// Reads one numeric column from a CSV file. `column` selects by 0-based
/// index or by header name; without it the first column is used. A header
/// row is detected by the selected field failing to parse as a number.
pub fn read_csv(path: &Path, column: Option<&str>, dt: f64) -> Result<SignalBuffer> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, &e))?;
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::MalformedFile {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::DegenerateInput(format!("{}: no records", path.display())));
    }

    let by_name = column.filter(|c| c.parse::<usize>().is_err());
    let col_idx = match column {
        None => 0,
        Some(c) => match c.parse::<usize>() {
            Ok(i) => i,
            Err(_) => {
                let header = &records[0];
                match header.iter().position(|h| h == c) {
                    Some(i) => i,
                    None => {
                        let available: Vec<&str> = header.iter().collect();
                        return Err(Error::MalformedFile {
                            path: path.to_path_buf(),
                            line: 1,
                            message: format!(
                                "no column named `{c}`; available: {}",
                                available.join(", ")
                            ),
                        });
                    }
                }
            }
        },
    };

    let first_field = records[0].get(col_idx);
    let start = match (first_field, by_name) {
        (_, Some(_)) => 1,
        (Some(f), None) if f.parse::<f64>().is_ok() => 0,
        (Some(_), None) => 1,
        (None, _) => {
            return Err(Error::MalformedFile {
                path: path.to_path_buf(),
                line: 1,
                message: format!("record has no column {col_idx}"),
            })
        }
    };

    let mut samples = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate().skip(start) {
        let line = i as u64 + 1;
        let field = rec.get(col_idx).ok_or_else(|| Error::MalformedFile {
            path: path.to_path_buf(),
            line,
            message: format!("record has no column {col_idx}"),
        })?;
        let v: f64 = field.parse().map_err(|_| Error::MalformedFile {
            path: path.to_path_buf(),
            line,
            message: format!("cannot parse `{field}` as a number"),
        })?;
        if !v.is_finite() {
            return Err(Error::MalformedFile {
                path: path.to_path_buf(),
                line,
                message: format!("non-finite sample {v}"),
            });
        }
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(Error::DegenerateInput(format!(
            "{}: header only, no data rows",
            path.display()
        )));
    }
    let mut buf = SignalBuffer::new(samples, format!("csv:{}", path.display()));
    buf.dt = dt;
    Ok(buf)
}

fn csv_error(path: &Path, e: &csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(std::io::Error::new(
            std::io::ErrorKind::Other,
            format!("{}: {e}", path.display()),
        )),
        _ => Error::MalformedFile {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        },
    }
}

/// Reads a 16-bit PCM WAV file; samples are scaled to [-1, 1) by 1/32768
/// and stereo is downmixed by averaging. `dt` is taken from the sample rate.
pub fn read_wav(path: &Path) -> Result<SignalBuffer> {
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            message: format!(
                "only 16-bit PCM is supported, got {:?} at {} bits",
                spec.sample_format, spec.bits_per_sample
            ),
        });
    }
    if spec.channels == 0 || spec.channels > 2 {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            message: format!("{} channels; expected mono or stereo", spec.channels),
        });
    }
    let raw: std::result::Result<Vec<i16>, _> = reader.samples::<i16>().collect();
    let raw = raw.map_err(|e| wav_error(path, e))?;
    let samples: Vec<f64> = if spec.channels == 1 {
        raw.iter().map(|s| *s as f64 / 32768.0).collect()
    } else {
        raw.chunks_exact(2)
            .map(|lr| (lr[0] as f64 + lr[1] as f64) / 2.0 / 32768.0)
            .collect()
    };
    let mut buf = SignalBuffer::new(samples, format!("wav:{}", path.display()));
    buf.dt = 1.0 / spec.sample_rate as f64;
    Ok(buf)
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::UnsupportedFormat {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

/// Writes a buffer as 16-bit PCM mono WAV, clamping to the representable
/// range; the sample rate is `round(1/dt)`.
pub fn write_wav(path: &Path, buf: &SignalBuffer) -> Result<()> {
    let rate = (1.0 / buf.dt).round();
    if !(rate >= 1.0) || !rate.is_finite() {
        return Err(Error::invalid("dt", format!("cannot derive a sample rate from dt={}", buf.dt)));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for s in &buf.samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(|e| wav_error(path, e))?;
    }
    writer.finalize().map_err(|e| wav_error(path, e))?;
    Ok(())
}
