//! The streaming core: first-order recursive filters coupled in cascade.
//!
//! Each time step drives layer 1 with the input sample and layer k with
//! the freshly updated value of layer k-1:
//!
//! ```text
//! level[k] <- level_prev[k] + (driver - level_prev[k]) / (1 + mu[k])
//! ```
//!
//! Every layer has unit DC gain and is variation-diminishing, so channel
//! trajectories never gain zero-crossings from one layer to the next.
//! The complete memory of the past is the per-layer channel values plus a
//! two-frame history kept for the temporal difference operators.

use std::io::{Read, Write};

use crate::cascade::CascadeSpec;
use crate::error::{Error, Result};
use crate::wavelet::{Normalization, Scalogram, ScalogramMeta};

/// Default upper bound on the impulse-response mass allowed to fall
/// outside a materialized equivalent kernel.
pub const KERNEL_TAIL_TOLERANCE: f64 = 1e-8;

const STATE_MAGIC: &[u8; 4] = b"TCWS";
const STATE_VERSION: u16 = 1;

/// Metadata carried by a sampled kernel.
#[derive(Debug, Clone, Copy)]
pub struct KernelMeta {
    pub c: f64,
    /// Cumulative scale the kernel smooths to (user time^2).
    pub tau: f64,
    /// Temporal differentiation order applied to the samples.
    pub order: u8,
    /// Scale-normalization power baked into the samples (1.0 if none).
    pub gamma: f64,
}

/// A sampled convolution kernel on a uniform grid.
#[derive(Debug, Clone)]
pub struct KernelSamples {
    pub values: Vec<f64>,
    /// Time of the first sample.
    pub t0: f64,
    /// Grid spacing, > 0.
    pub dt: f64,
    pub meta: KernelMeta,
    /// Mass outside the sampled support, `1 - sum(values)`; meaningful for
    /// order-0 smoothing kernels.
    pub tail_mass: f64,
}

impl KernelSamples {
    /// Discrete lp norm `(sum |v|^p)^(1/p)` of the samples.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.values
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    /// First moment of the samples around `t0` in grid units.
    pub fn sample_mean(&self) -> f64 {
        let mass: f64 = self.values.iter().sum();
        let first: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| i as f64 * v)
            .sum();
        first / mass
    }

    /// Central second moment of the samples in grid units squared.
    pub fn sample_variance(&self) -> f64 {
        let mass: f64 = self.values.iter().sum();
        let mean = self.sample_mean();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let d = i as f64 - mean;
                d * d * v
            })
            .sum::<f64>()
            / mass
    }
}

/// Time-recursive filter state for one signal: K channels plus a
/// two-frame history. Single writer; distinct banks are independent.
#[derive(Debug, Clone)]
pub struct ChannelBank {
    spec: CascadeSpec,
    inv_one_plus_mu: Vec<f64>,
    level: Vec<f64>,
    level_prev: Vec<f64>,
    prev2: Vec<f64>,
    frame_index: u64,
}

impl ChannelBank {
    /// Zero-initialized bank: the signal is assumed zero before the stream
    /// starts.
    pub fn new(spec: CascadeSpec) -> Self {
        Self::with_initial_value(spec, 0.0)
    }

    /// Bank primed to a steady state `initial_value`, suppressing the onset
    /// transient when a signal is known to start from a non-zero baseline.
    pub fn with_initial_value(spec: CascadeSpec, initial_value: f64) -> Self {
        let mus = spec.engine_time_constants();
        let k = spec.levels;
        ChannelBank {
            spec,
            inv_one_plus_mu: mus.iter().map(|m| 1.0 / (1.0 + m)).collect(),
            level: vec![initial_value; k],
            level_prev: vec![initial_value; k],
            prev2: vec![initial_value; k],
            frame_index: 0,
        }
    }

    /// Clears all history: every channel is set to `initial_value` and the
    /// frame counter restarts, independent of prior input.
    pub fn reset(&mut self, initial_value: f64) {
        self.level.fill(initial_value);
        self.level_prev.fill(initial_value);
        self.prev2.fill(initial_value);
        self.frame_index = 0;
    }

    pub fn spec(&self) -> &CascadeSpec {
        &self.spec
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    /// Channel values after the most recent step.
    pub fn levels(&self) -> &[f64] {
        &self.level
    }

    /// Advances the bank by one sample and returns the K updated channels.
    ///
    /// A non-finite sample is rejected and the state left untouched.
    pub fn step(&mut self, sample: f64) -> Result<&[f64]> {
        if !sample.is_finite() {
            return Err(Error::NonFiniteSample {
                frame: self.frame_index,
            });
        }
        self.prev2.copy_from_slice(&self.level_prev);
        self.level_prev.copy_from_slice(&self.level);
        let mut driver = sample;
        for (k, inv) in self.inv_one_plus_mu.iter().enumerate() {
            let prev = self.level_prev[k];
            let v = prev + (driver - prev) * inv;
            self.level[k] = v;
            driver = v;
        }
        self.frame_index += 1;
        Ok(&self.level)
    }

    /// Batch wrapper over [`ChannelBank::step`]; bit-identical to stepping
    /// sample by sample. Returns the T x K matrix of smoothed channels.
    pub fn run(&mut self, samples: &[f64]) -> Result<Scalogram> {
        let k = self.spec.levels;
        let mut data = Vec::with_capacity(samples.len() * k);
        for &s in samples {
            data.extend_from_slice(self.step(s)?);
        }
        let delay_note = (1..=k).map(|i| self.spec.discrete_mean_delay(i)).collect();
        Ok(Scalogram::from_raw(
            data,
            samples.len(),
            self.spec.tau_levels.clone(),
            ScalogramMeta {
                order: 0,
                gamma: 1.0,
                c: self.spec.c,
                tau0: self.spec.tau0,
                dt: self.spec.dt,
                normalization: Normalization::GammaPower,
            },
            delay_note,
            0,
        ))
    }

    /// Backward difference `level - level_prev` per channel.
    pub fn delta_t(&self) -> Vec<f64> {
        self.level
            .iter()
            .zip(&self.level_prev)
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Second backward difference `level - 2 level_prev + prev2` per channel.
    pub fn delta_tt(&self) -> Vec<f64> {
        (0..self.level.len())
            .map(|k| self.level[k] - 2.0 * self.level_prev[k] + self.prev2[k])
            .collect()
    }

    /// Serializes the complete filter state (versioned, little-endian).
    /// Restoring it into a bank with the same cascade reproduces the
    /// uninterrupted run bit for bit.
    pub fn save_state<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(STATE_MAGIC)?;
        w.write_all(&STATE_VERSION.to_le_bytes())?;
        w.write_all(&self.spec.c.to_le_bytes())?;
        w.write_all(&self.spec.tau0.to_le_bytes())?;
        w.write_all(&self.spec.dt.to_le_bytes())?;
        w.write_all(&(self.spec.levels as u32).to_le_bytes())?;
        let mode = match self.spec.mode {
            crate::cascade::CascadeMode::Discrete => 0u8,
            crate::cascade::CascadeMode::ContinuousTruncated => 1u8,
        };
        w.write_all(&[mode])?;
        w.write_all(&self.frame_index.to_le_bytes())?;
        for arr in [&self.level, &self.level_prev, &self.prev2] {
            for v in arr.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reconstructs a bank from a serialized state, checking that the
    /// stored cascade parameters match `spec` exactly.
    pub fn restore_state<R: Read>(spec: CascadeSpec, mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != STATE_MAGIC {
            return Err(Error::StateMismatch("bad magic bytes".into()));
        }
        let version = read_u16(&mut r)?;
        if version != STATE_VERSION {
            return Err(Error::StateMismatch(format!(
                "unsupported state version {version}"
            )));
        }
        let c = read_f64(&mut r)?;
        let tau0 = read_f64(&mut r)?;
        let dt = read_f64(&mut r)?;
        let levels = read_u32(&mut r)? as usize;
        let mut mode_byte = [0u8; 1];
        r.read_exact(&mut mode_byte)?;
        let mode = match mode_byte[0] {
            0 => crate::cascade::CascadeMode::Discrete,
            1 => crate::cascade::CascadeMode::ContinuousTruncated,
            b => return Err(Error::StateMismatch(format!("unknown mode byte {b}"))),
        };
        if c.to_bits() != spec.c.to_bits()
            || tau0.to_bits() != spec.tau0.to_bits()
            || dt.to_bits() != spec.dt.to_bits()
            || levels != spec.levels
            || mode != spec.mode
        {
            return Err(Error::StateMismatch(format!(
                "stored (c={c}, tau0={tau0}, dt={dt}, levels={levels}, mode={mode:?}) \
                 differs from configured (c={}, tau0={}, dt={}, levels={}, mode={:?})",
                spec.c, spec.tau0, spec.dt, spec.levels, spec.mode
            )));
        }
        let frame_index = read_u64(&mut r)?;
        let mut bank = ChannelBank::new(spec);
        for arr in [&mut bank.level, &mut bank.level_prev, &mut bank.prev2] {
            for v in arr.iter_mut() {
                *v = read_f64(&mut r)?;
            }
        }
        bank.frame_index = frame_index;
        Ok(bank)
    }
}

fn read_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u16<R: Read>(r: &mut R) -> std::io::Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

/// Conservative sample count after which the impulse-response tail mass of
/// the first `layer` stages drops below `tol`.
fn required_kernel_len(spec: &CascadeSpec, layer: usize, tol: f64) -> usize {
    let mus = spec.engine_time_constants();
    let mean: f64 = mus[..layer].iter().sum();
    let mu_max = mus[..layer].iter().cloned().fold(0.0f64, f64::max);
    let slack = (layer as f64 + 1.0).ln() + (1.0 / tol).ln();
    ((mean + mu_max.max(1.0) * slack) * 1.5).ceil() as usize + 16
}

/// Sample count that comfortably satisfies the tail-mass tolerance for
/// the equivalent kernel of layers `1..=layer`.
pub fn suggested_kernel_len(spec: &CascadeSpec, layer: usize) -> usize {
    required_kernel_len(spec, layer.min(spec.levels).max(1), KERNEL_TAIL_TOLERANCE)
}

/// Impulse response of layers `1..=layer` of the cascade, materialized as
/// an order-0 smoothing kernel. Errors if `len` cannot capture all but
/// `KERNEL_TAIL_TOLERANCE` of the kernel mass, naming the required length.
pub fn equivalent_kernel(spec: &CascadeSpec, layer: usize, len: usize) -> Result<KernelSamples> {
    if layer < 1 || layer > spec.levels {
        return Err(Error::invalid(
            "layer",
            format!("must be in 1..={}, got {layer}", spec.levels),
        ));
    }
    if len == 0 {
        return Err(Error::KernelTooShort {
            given: 0,
            required: required_kernel_len(spec, layer, KERNEL_TAIL_TOLERANCE),
            tolerance: KERNEL_TAIL_TOLERANCE,
        });
    }
    let mus = spec.engine_time_constants();
    let inv: Vec<f64> = mus[..layer].iter().map(|m| 1.0 / (1.0 + m)).collect();
    let mut state = vec![0.0f64; layer];
    let mut values = Vec::with_capacity(len);
    for t in 0..len {
        let mut driver = if t == 0 { 1.0 } else { 0.0 };
        for (k, iv) in inv.iter().enumerate() {
            let v = state[k] + (driver - state[k]) * iv;
            state[k] = v;
            driver = v;
        }
        values.push(driver);
    }
    debug_assert!(values.iter().all(|v| *v >= 0.0));
    let tail_mass = 1.0 - values.iter().sum::<f64>();
    if tail_mass > KERNEL_TAIL_TOLERANCE {
        return Err(Error::KernelTooShort {
            given: len,
            required: required_kernel_len(spec, layer, KERNEL_TAIL_TOLERANCE),
            tolerance: KERNEL_TAIL_TOLERANCE,
        });
    }
    Ok(KernelSamples {
        values,
        t0: 0.0,
        dt: spec.dt,
        meta: KernelMeta {
            c: spec.c,
            tau: spec.tau_levels[layer - 1],
            order: 0,
            gamma: 1.0,
        },
        tail_mass,
    })
}
