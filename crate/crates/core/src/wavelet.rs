//! Wavelet-style representations derived from smoothed channels: causal
//! difference operators, scale normalization, mother-wavelet lp
//! normalization, quasi quadrature, bandpass channels, and exact
//! reconstruction by telescoping.

use crate::cascade::CascadeSpec;
use crate::engine::{KernelMeta, KernelSamples};
use crate::error::{Error, Result};

/// Default weighting parameter of the quasi quadrature measure.
pub const DEFAULT_QUADRATURE_WEIGHT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// How the response magnitudes are normalized across scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Pure power-of-scale normalization `tau^(n*gamma/2)`.
    GammaPower,
    /// Additionally divided by per-scale kernel lp norms.
    Lp(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct ScalogramMeta {
    /// Temporal differentiation order of the data (0 for raw channels).
    pub order: u8,
    /// Scale-normalization power applied to the data (1.0 before any
    /// normalization; order 0 data is unaffected by it).
    pub gamma: f64,
    pub c: f64,
    pub tau0: f64,
    pub dt: f64,
    pub normalization: Normalization,
}

/// A time x scale matrix of responses, row-major with one row per frame.
#[derive(Debug, Clone)]
pub struct Scalogram {
    data: Vec<f64>,
    rows: usize,
    /// Cumulative scales `tau_k`, strictly increasing, one per column.
    pub scales: Vec<f64>,
    pub meta: ScalogramMeta,
    /// Nominal per-scale delay in user time units.
    pub delay_note: Vec<f64>,
    /// Leading rows that are warm-up output (computed against assumed zero
    /// history, flagged rather than fabricated).
    pub warmup_rows: usize,
}

impl Scalogram {
    pub fn from_raw(
        data: Vec<f64>,
        rows: usize,
        scales: Vec<f64>,
        meta: ScalogramMeta,
        delay_note: Vec<f64>,
        warmup_rows: usize,
    ) -> Self {
        assert_eq!(data.len(), rows * scales.len());
        Scalogram {
            data,
            rows,
            scales,
            meta,
            delay_note,
            warmup_rows,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.scales.len()
    }

    pub fn get(&self, t: usize, k: usize) -> f64 {
        self.data[t * self.scales.len() + k]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let k = self.scales.len();
        &self.data[t * k..(t + 1) * k]
    }

    pub fn raw_data(&self) -> &[f64] {
        &self.data
    }

    /// Copies out the sub-scalogram consisting of columns `from..to`.
    pub fn select_columns(&self, from: usize, to: usize) -> Scalogram {
        assert!(from < to && to <= self.cols());
        let width = to - from;
        let mut data = Vec::with_capacity(self.rows * width);
        for t in 0..self.rows {
            data.extend_from_slice(&self.row(t)[from..to]);
        }
        Scalogram {
            data,
            rows: self.rows,
            scales: self.scales[from..to].to_vec(),
            meta: self.meta,
            delay_note: self.delay_note[from..to].to_vec(),
            warmup_rows: self.warmup_rows,
        }
    }

    fn same_shape(&self, other: &Scalogram) -> Result<()> {
        if self.rows != other.rows || self.scales.len() != other.scales.len() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows,
                self.cols(),
                other.rows,
                other.cols()
            )));
        }
        for (a, b) in self.scales.iter().zip(&other.scales) {
            if a != b {
                return Err(Error::ShapeMismatch("scale ladders differ".into()));
            }
        }
        Ok(())
    }
}

/// Applies the causal difference operator of the given order per column:
/// `d_t y(t) = y(t) - y(t-1)`, `d_tt y(t) = y(t) - 2 y(t-1) + y(t-2)`,
/// with zero history before the first row. The first `order` rows are
/// flagged as warm-up.
pub fn temporal_derivative(channels: &Scalogram, order: u8) -> Result<Scalogram> {
    if channels.meta.order != 0 {
        return Err(Error::invalid(
            "channels",
            format!(
                "input must be raw smoothed channels (order 0), got order {}",
                channels.meta.order
            ),
        ));
    }
    if order != 1 && order != 2 {
        return Err(Error::invalid("order", format!("must be 1 or 2, got {order}")));
    }
    let k = channels.cols();
    let t_len = channels.rows();
    let mut data = vec![0.0; t_len * k];
    for t in 0..t_len {
        for col in 0..k {
            let y0 = channels.get(t, col);
            let y1 = if t >= 1 { channels.get(t - 1, col) } else { 0.0 };
            data[t * k + col] = match order {
                1 => y0 - y1,
                _ => {
                    let y2 = if t >= 2 { channels.get(t - 2, col) } else { 0.0 };
                    y0 - 2.0 * y1 + y2
                }
            };
        }
    }
    Ok(Scalogram {
        data,
        rows: t_len,
        scales: channels.scales.clone(),
        meta: ScalogramMeta {
            order,
            ..channels.meta
        },
        delay_note: channels.delay_note.clone(),
        warmup_rows: channels.warmup_rows.max(order as usize),
    })
}

/// Multiplies column k by `tau_k^(n*gamma/2)` (identity for order 0).
pub fn scale_normalize(s: &Scalogram, gamma: f64) -> Result<Scalogram> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid("gamma", format!("must be finite and > 0, got {gamma}")));
    }
    let mut out = s.clone();
    out.meta.gamma = gamma;
    if s.meta.order == 0 {
        return Ok(out);
    }
    let n = s.meta.order as f64;
    let k = s.cols();
    let factors: Vec<f64> = s.scales.iter().map(|tau| tau.powf(n * gamma / 2.0)).collect();
    for t in 0..s.rows() {
        for col in 0..k {
            out.data[t * k + col] = s.get(t, col) * factors[col];
        }
    }
    Ok(out)
}

/// Exponent p for which constant-lp normalization over scales matches
/// gamma normalization: `p = 1 / (1 + n (1 - gamma))`.
pub fn gamma_to_p(order: u8, gamma: f64) -> Result<f64> {
    if order < 1 {
        return Err(Error::invalid("order", "must be at least 1"));
    }
    let den = 1.0 + order as f64 * (1.0 - gamma);
    if den <= 0.0 {
        return Err(Error::invalid(
            "gamma",
            format!("1 + n(1 - gamma) = {den} must be positive"),
        ));
    }
    Ok(1.0 / den)
}

/// Divides column k by the per-scale kernel lp norm `norms[k]`, turning
/// scale-normalized derivatives into mother-wavelet responses.
pub fn mother_wavelet_normalize(s: &Scalogram, p: f64, norms: &[f64]) -> Result<Scalogram> {
    if norms.len() != s.cols() {
        return Err(Error::ShapeMismatch(format!(
            "{} norms for {} scales",
            norms.len(),
            s.cols()
        )));
    }
    if let Some(bad) = norms.iter().find(|n| !(**n > 0.0)) {
        return Err(Error::invalid("norms", format!("must all be > 0, got {bad}")));
    }
    let mut out = s.clone();
    let k = s.cols();
    for t in 0..s.rows() {
        for col in 0..k {
            out.data[t * k + col] = s.get(t, col) / norms[col];
        }
    }
    out.meta.normalization = Normalization::Lp(p);
    Ok(out)
}

/// Phase-insensitive energy measure `sqrt(a^2 + C b^2)` combining matching
/// first- and second-order scale-normalized responses.
pub fn quasi_quadrature(first: &Scalogram, second: &Scalogram, weight: f64) -> Result<Scalogram> {
    first.same_shape(second)?;
    if !(weight > 0.0) || !weight.is_finite() {
        return Err(Error::invalid("weight", format!("must be finite and > 0, got {weight}")));
    }
    let k = first.cols();
    let mut out = first.clone();
    for t in 0..first.rows() {
        for col in 0..k {
            let a = first.get(t, col);
            let b = second.get(t, col);
            out.data[t * k + col] = (a * a + weight * b * b).sqrt();
        }
    }
    out.meta.order = 0;
    out.warmup_rows = first.warmup_rows.max(second.warmup_rows);
    Ok(out)
}

/// Differences between adjacent smoothed channels, `dL(t; tau_k) =
/// L(t; tau_k) - L(t; tau_(k-1))`, with the input signal itself serving as
/// the level below the finest channel.
pub fn bandpass(channels: &Scalogram, input: &[f64]) -> Result<Scalogram> {
    if channels.meta.order != 0 {
        return Err(Error::invalid("channels", "bandpass needs raw smoothed channels"));
    }
    if input.len() != channels.rows() {
        return Err(Error::ShapeMismatch(format!(
            "input length {} vs {} rows",
            input.len(),
            channels.rows()
        )));
    }
    let k = channels.cols();
    let mut out = channels.clone();
    for t in 0..channels.rows() {
        for col in 0..k {
            let below = if col == 0 {
                input[t]
            } else {
                channels.get(t, col - 1)
            };
            out.data[t * k + col] = channels.get(t, col) - below;
        }
    }
    Ok(out)
}

/// Telescoping reconstruction `L(tau_j) = L(tau_K) - sum_(k=j+1..K) dL(tau_k)`
/// for the coarse-minus-fine bandpass convention above; `target_level = 0`
/// recovers the input signal exactly up to floating-point summation.
pub fn reconstruct(
    bandpass: &Scalogram,
    coarsest: &[f64],
    target_level: usize,
) -> Result<Vec<f64>> {
    let k = bandpass.cols();
    if coarsest.len() != bandpass.rows() {
        return Err(Error::ShapeMismatch(format!(
            "coarsest length {} vs {} rows",
            coarsest.len(),
            bandpass.rows()
        )));
    }
    if target_level > k {
        return Err(Error::invalid(
            "target_level",
            format!("must be in 0..={k}, got {target_level}"),
        ));
    }
    let mut out = coarsest.to_vec();
    for t in 0..bandpass.rows() {
        for col in target_level..k {
            out[t] -= bandpass.get(t, col);
        }
    }
    Ok(out)
}

/// Verifies the algebraic relation between the temporal shift of adjacent
/// channels and the causal first difference,
/// `L(t-1; tau_k) - L(t; tau_(k-1)) = -(1 + mu_k) * d_t L(t; tau_k)`,
/// over all `t >= 1` and all layers (the input signal serves as the
/// channel below layer 1). Returns the maximum absolute residual.
pub fn bandpass_shift_relation_check(
    channels: &Scalogram,
    input: &[f64],
    spec: &CascadeSpec,
) -> Result<f64> {
    if channels.cols() != spec.levels {
        return Err(Error::ShapeMismatch(format!(
            "{} channels vs {} cascade layers",
            channels.cols(),
            spec.levels
        )));
    }
    if input.len() != channels.rows() {
        return Err(Error::ShapeMismatch(format!(
            "input length {} vs {} rows",
            input.len(),
            channels.rows()
        )));
    }
    let mus = spec.engine_time_constants();
    let mut max_residual = 0.0f64;
    for t in 1..channels.rows() {
        for k in 0..channels.cols() {
            let below = if k == 0 {
                input[t]
            } else {
                channels.get(t, k - 1)
            };
            let lhs = channels.get(t - 1, k) - below;
            let rhs = -(1.0 + mus[k]) * (channels.get(t, k) - channels.get(t - 1, k));
            max_residual = max_residual.max((lhs - rhs).abs());
        }
    }
    Ok(max_residual)
}

/// Applies the causal difference operator to a sampled kernel (zero
/// history before the support), raising its differentiation order.
pub fn differentiate_kernel(kernel: &KernelSamples, order: u8) -> KernelSamples {
    let v = &kernel.values;
    let mut out = vec![0.0; v.len()];
    match order {
        1 => {
            for t in 0..v.len() {
                let prev = if t >= 1 { v[t - 1] } else { 0.0 };
                out[t] = v[t] - prev;
            }
        }
        2 => {
            for t in 0..v.len() {
                let p1 = if t >= 1 { v[t - 1] } else { 0.0 };
                let p2 = if t >= 2 { v[t - 2] } else { 0.0 };
                out[t] = v[t] - 2.0 * p1 + p2;
            }
        }
        _ => out.copy_from_slice(v),
    }
    KernelSamples {
        values: out,
        t0: kernel.t0,
        dt: kernel.dt,
        meta: KernelMeta {
            order: kernel.meta.order + order,
            ..kernel.meta
        },
        tail_mass: kernel.tail_mass,
    }
}

/// Scale-normalized discrete lp norm of a differentiated kernel:
/// `(sum |tau^(n*gamma/2) v|^p)^(1/p)`.
pub fn scale_normalized_lp_norm(kernel: &KernelSamples, gamma: f64, p: f64) -> f64 {
    let factor = kernel.meta.tau.powf(kernel.meta.order as f64 * gamma / 2.0);
    kernel
        .values
        .iter()
        .map(|v| (factor * v).abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}
