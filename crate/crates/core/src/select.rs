//! Scale-space extremum detection and scale-selection sweeps.
//!
//! An extremum of a scale-normalized response magnitude over time and
//! scale estimates when a local structure happened and how long it lasted.
//! Estimates are refined by local parabolic interpolation, fitted in the
//! log-sigma coordinate along the scale axis to match the logarithmic
//! level spacing.

use std::io::Write;

use crate::cascade::{self, CascadeMode, LevelPlan};
use crate::engine::ChannelBank;
use crate::error::{Error, Result};
use crate::signal;
use crate::wavelet::{self, Scalogram};

/// An interpolated scale-space extremum.
#[derive(Debug, Clone, Copy)]
pub struct ScaleEstimate {
    /// Interpolated time (user time units).
    pub t_hat: f64,
    /// Interpolated sqrt(tau) (user time units).
    pub sigma_hat: f64,
    /// Interpolated response magnitude.
    pub value: f64,
    /// Detector order.
    pub order: u8,
    /// Scale-normalization power the detector ran with.
    pub gamma: f64,
    /// True when the extremum sat on the edge of the scale range, where no
    /// interpolation is possible.
    pub at_scale_boundary: bool,
}

/// Rows of the argmax search start here: past the flagged warm-up rows and
/// past twice the nominal mean delay of the coarsest channel, where onset
/// transients have died down.
fn analysis_start(s: &Scalogram) -> usize {
    let tau_coarsest = *s.scales.last().expect("scalogram has scales");
    let delay = cascade::mean_delay_continuous(s.meta.c, tau_coarsest)
        .map(|d| (2.0 * d / s.meta.dt).ceil() as usize)
        .unwrap_or(0);
    s.warmup_rows.max(delay)
}

fn interpolate(
    s: &Scalogram,
    t: usize,
    k: usize,
) -> (f64, f64, f64, bool) {
    let log_c = s.meta.c.ln();
    let v0 = s.get(t, k).abs();
    let mut value = v0;

    let (scale_offset, boundary) = if k > 0 && k + 1 < s.cols() {
        let vm = s.get(t, k - 1).abs();
        let vp = s.get(t, k + 1).abs();
        let off = cascade::parabolic_offset(vm, v0, vp);
        value -= (vm - vp) * off / 4.0;
        (off, false)
    } else {
        (0.0, true)
    };

    let time_offset = if t > 0 && t + 1 < s.rows() {
        let vm = s.get(t - 1, k).abs();
        let vp = s.get(t + 1, k).abs();
        let off = cascade::parabolic_offset(vm, v0, vp);
        value -= (vm - vp) * off / 4.0;
        off
    } else {
        0.0
    };

    let sigma_hat = s.scales[k].sqrt() * (scale_offset * log_c).exp();
    let t_hat = (t as f64 + time_offset) * s.meta.dt;
    (t_hat, sigma_hat, value, boundary)
}

/// Global argmax of |response| over time and scale, refined by parabolic
/// interpolation. Ties break toward the earliest time, then the finest
/// scale.
pub fn detect_global_extremum(s: &Scalogram) -> Result<ScaleEstimate> {
    let start = analysis_start(s);
    if start >= s.rows() {
        return Err(Error::DegenerateInput(format!(
            "scalogram has {} rows but analysis starts at {start} (warm-up)",
            s.rows()
        )));
    }
    let mut best = (start, 0usize);
    let mut best_v = -1.0f64;
    for t in start..s.rows() {
        for k in 0..s.cols() {
            let v = s.get(t, k).abs();
            if v > best_v {
                best_v = v;
                best = (t, k);
            }
        }
    }
    if best_v <= 0.0 {
        return Err(Error::DegenerateInput("all-zero scalogram".into()));
    }
    let (t_hat, sigma_hat, value, at_scale_boundary) = interpolate(s, best.0, best.1);
    Ok(ScaleEstimate {
        t_hat,
        sigma_hat,
        value,
        order: s.meta.order,
        gamma: s.meta.gamma,
        at_scale_boundary,
    })
}

/// All strict 3x3-neighborhood maxima of |response| above `threshold`,
/// interpolated and sorted by value descending.
pub fn detect_local_extrema(s: &Scalogram, threshold: f64) -> Vec<ScaleEstimate> {
    let start = analysis_start(s).max(1);
    let mut found = Vec::new();
    if s.rows() < 3 || s.cols() < 3 {
        return found;
    }
    for t in start..s.rows() - 1 {
        for k in 1..s.cols() - 1 {
            let v = s.get(t, k).abs();
            if v <= threshold {
                continue;
            }
            let mut strict_max = true;
            'n: for dt in -1i64..=1 {
                for dk in -1i64..=1 {
                    if dt == 0 && dk == 0 {
                        continue;
                    }
                    let w = s
                        .get((t as i64 + dt) as usize, (k as i64 + dk) as usize)
                        .abs();
                    if w >= v {
                        strict_max = false;
                        break 'n;
                    }
                }
            }
            if strict_max {
                let (t_hat, sigma_hat, value, at_scale_boundary) = interpolate(s, t, k);
                found.push(ScaleEstimate {
                    t_hat,
                    sigma_hat,
                    value,
                    order: s.meta.order,
                    gamma: s.meta.gamma,
                    at_scale_boundary,
                });
            }
        }
    }
    found.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap());
    found
}

/// Scale selected by a second-order detector on a Gaussian blob in the
/// non-causal continuous theory: `tau_hat = 2 gamma / (3 - 2 gamma) tau0`.
pub fn blob_scale_formula(gamma: f64, tau0: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.5) {
        return Err(Error::invalid("gamma", format!("must be in (0, 3/2), got {gamma}")));
    }
    Ok(2.0 * gamma / (3.0 - 2.0 * gamma) * tau0)
}

/// Scale selected by a first-order detector on a Gaussian edge in the
/// non-causal continuous theory: `tau_hat = gamma / (1 - gamma) tau0`.
pub fn edge_scale_formula(gamma: f64, tau0: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid("gamma", format!("must be in (0, 1), got {gamma}")));
    }
    Ok(gamma / (1.0 - gamma) * tau0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Blob,
    Edge,
}

/// Sweep configuration; `order`/`gamma` default to the blob detector
/// (n=2, gamma=3/4) or the edge detector (n=1, gamma=1/2).
#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub c: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub order: Option<u8>,
    pub gamma: Option<f64>,
}

impl SweepConfig {
    pub fn new(c: f64) -> Self {
        SweepConfig {
            c,
            sigma_min: 0.125,
            sigma_max: 64.0,
            order: None,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub sigma_ref: f64,
    pub estimate: ScaleEstimate,
}

/// Runs the full discrete pipeline on generated model signals over a range
/// of reference scales and records the selected scale per reference scale.
pub fn scale_selection_sweep(
    model: ModelKind,
    sigma_refs: &[f64],
    config: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    let (order, gamma) = match model {
        ModelKind::Blob => (config.order.unwrap_or(2), config.gamma.unwrap_or(0.75)),
        ModelKind::Edge => (config.order.unwrap_or(1), config.gamma.unwrap_or(0.5)),
    };
    let plan = LevelPlan::new(
        config.c,
        config.sigma_min * config.sigma_min,
        config.sigma_max * config.sigma_max,
        1.0,
        CascadeMode::Discrete,
        LevelPlan::DEFAULT_MIN_DEPTH,
    )?;
    let tau_top = *plan.output_scales().last().unwrap();
    let horizon = cascade::mean_delay_continuous(config.c, tau_top)?;

    let mut rows = Vec::with_capacity(sigma_refs.len());
    for &sigma_ref in sigma_refs {
        let reach = (8.0 * sigma_ref).ceil() as usize;
        let center = (2.0 * horizon).ceil() as usize + reach + 16;
        let len = center + reach + (4.0 * horizon).ceil() as usize + 64;
        let buf = match model {
            ModelKind::Blob => signal::gen_blob(sigma_ref, len, center)?,
            ModelKind::Edge => signal::gen_edge(sigma_ref, len, center)?,
        };
        let mut bank = ChannelBank::new(plan.spec.clone());
        let smoothed = bank.run(&buf.samples)?;
        let output = smoothed.select_columns(plan.output_offset, plan.spec.levels);
        let derived = wavelet::temporal_derivative(&output, order)?;
        let normalized = wavelet::scale_normalize(&derived, gamma)?;
        let estimate = detect_global_extremum(&normalized)?;
        rows.push(SweepRow { sigma_ref, estimate });
    }
    Ok(rows)
}

/// Writes sweep rows as CSV with the header
/// `sigma_ref,sigma_hat,value,c,gamma,n`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], c: f64, mut w: W) -> std::io::Result<()> {
    writeln!(w, "sigma_ref,sigma_hat,value,c,gamma,n")?;
    for row in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            row.sigma_ref,
            row.estimate.sigma_hat,
            row.estimate.value,
            c,
            row.estimate.gamma,
            row.estimate.order
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{Normalization, ScalogramMeta};

    fn synthetic_scalogram(rows: usize, scales: Vec<f64>, cells: &[(usize, usize, f64)]) -> Scalogram {
        let k = scales.len();
        let mut data = vec![0.0; rows * k];
        for &(t, col, v) in cells {
            data[t * k + col] = v;
        }
        Scalogram::from_raw(
            data,
            rows,
            scales.clone(),
            ScalogramMeta {
                order: 2,
                gamma: 0.75,
                c: 2.0f64.sqrt(),
                tau0: 1.0,
                dt: 1.0,
                normalization: Normalization::GammaPower,
            },
            vec![0.0; k],
            0,
        )
    }

    #[test]
    fn isolated_cell_detected_exactly() {
        // tau_coarsest = 4 gives a warm-up horizon of ceil(2*2.414*2) = 10
        let s = synthetic_scalogram(40, vec![1.0, 2.0, 4.0], &[(25, 1, 3.0)]);
        let e = detect_global_extremum(&s).unwrap();
        assert_eq!(e.t_hat, 25.0);
        assert!((e.sigma_hat - 2.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(e.value, 3.0);
        assert!(!e.at_scale_boundary);
        assert_eq!(e.order, 2);
    }

    #[test]
    fn all_zero_scalogram_rejected() {
        let s = synthetic_scalogram(40, vec![1.0, 2.0, 4.0], &[]);
        assert!(detect_global_extremum(&s).is_err());
    }

    #[test]
    fn warmup_rows_excluded_from_argmax() {
        // a huge value inside the warm-up horizon must lose to a smaller
        // value in the steady region
        let s = synthetic_scalogram(40, vec![1.0, 2.0, 4.0], &[(2, 1, 100.0), (25, 1, 3.0)]);
        let e = detect_global_extremum(&s).unwrap();
        assert_eq!(e.t_hat, 25.0);
    }

    #[test]
    fn interpolation_moves_at_most_one_cell() {
        let s = synthetic_scalogram(
            40,
            vec![1.0, 2.0, 4.0],
            &[(25, 1, 3.0), (25, 0, 2.9), (25, 2, 0.5), (24, 1, 2.0), (26, 1, 2.8)],
        );
        let e = detect_global_extremum(&s).unwrap();
        assert!((e.t_hat - 25.0).abs() <= 1.0);
        let log_ratio = (e.sigma_hat / 2.0f64.sqrt()).ln().abs();
        assert!(log_ratio <= 2.0f64.sqrt().ln() + 1e-12);
    }

    #[test]
    fn boundary_extremum_not_interpolated() {
        let s = synthetic_scalogram(40, vec![1.0, 2.0, 4.0], &[(25, 2, 3.0)]);
        let e = detect_global_extremum(&s).unwrap();
        assert!(e.at_scale_boundary);
        assert!((e.sigma_hat - 2.0).abs() < 1e-12);
    }

    #[test]
    fn local_extrema_threshold_and_order() {
        let s = synthetic_scalogram(
            60,
            vec![1.0, 2.0, 4.0, 8.0],
            &[(20, 1, 2.0), (45, 2, 5.0)],
        );
        let found = detect_local_extrema(&s, 0.1);
        assert_eq!(found.len(), 2);
        assert!(found[0].value >= found[1].value);
        assert!((found[0].t_hat - 45.0).abs() < 1e-9);
        let none = detect_local_extrema(&s, 10.0);
        assert!(none.is_empty());
        let constant = synthetic_scalogram(60, vec![1.0, 2.0, 4.0, 8.0], &[]);
        assert!(detect_local_extrema(&constant, 0.0).is_empty());
    }

    #[test]
    fn closed_form_scale_formulas() {
        assert!((blob_scale_formula(0.75, 16.0).unwrap() - 16.0).abs() < 1e-12);
        assert!((blob_scale_formula(0.5, 16.0).unwrap() - 8.0).abs() < 1e-12);
        assert!((blob_scale_formula(1.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(blob_scale_formula(1.5, 1.0).is_err());
        assert!((edge_scale_formula(0.5, 9.0).unwrap() - 9.0).abs() < 1e-12);
        assert!((edge_scale_formula(2.0 / 3.0, 1.0).unwrap() - 2.0).abs() < 1e-9);
        assert!((edge_scale_formula(1e-9, 5.0).unwrap()).abs() < 1e-8);
        assert!(edge_scale_formula(1.0, 1.0).is_err());
    }

    #[test]
    fn sweep_monotone_and_ordered_by_width() {
        let config = SweepConfig {
            sigma_max: 48.0,
            ..SweepConfig::new(2.0f64.sqrt())
        };
        let rows = scale_selection_sweep(ModelKind::Blob, &[4.0, 8.0, 16.0], &config).unwrap();
        assert_eq!(rows.len(), 3);
        for pair in rows.windows(2) {
            assert!(
                pair[1].estimate.sigma_hat >= pair[0].estimate.sigma_hat,
                "sigma_hat not monotone: {:?}",
                rows.iter().map(|r| r.estimate.sigma_hat).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn sweep_csv_format() {
        let rows = vec![SweepRow {
            sigma_ref: 4.0,
            estimate: ScaleEstimate {
                t_hat: 10.0,
                sigma_hat: 4.5,
                value: 1.25,
                order: 2,
                gamma: 0.75,
                at_scale_boundary: false,
            },
        }];
        let mut out = Vec::new();
        write_sweep_csv(&rows, 2.0, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "sigma_ref,sigma_hat,value,c,gamma,n");
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[5], "2");
        assert!(fields[1].parse::<f64>().unwrap() - 4.5 < 1e-12);
    }

    #[test]
    fn two_separated_blobs_give_width_ordered_estimates() {
        // synthesize a signal with a narrow and a wide blob and check the
        // two local extrema order their scale estimates like the widths
        let c = 2.0f64.sqrt();
        let plan = LevelPlan::new(c, 1.0, 256.0, 1.0, CascadeMode::Discrete, 8).unwrap();
        let horizon = cascade::mean_delay_continuous(c, 256.0).unwrap();
        let start = (2.0 * horizon).ceil() as usize;
        let len = start + 900;
        let narrow = signal::gen_blob(2.0, len, start + 150).unwrap();
        let wide = signal::gen_blob(8.0, len, start + 550).unwrap();
        let mixed: Vec<f64> = narrow
            .samples
            .iter()
            .zip(&wide.samples)
            .map(|(a, b)| a + b)
            .collect();
        let mut bank = ChannelBank::new(plan.spec.clone());
        let smoothed = bank.run(&mixed).unwrap();
        let output = smoothed.select_columns(plan.output_offset, plan.spec.levels);
        let derived = wavelet::temporal_derivative(&output, 2).unwrap();
        let normalized = wavelet::scale_normalize(&derived, 0.75).unwrap();
        let found = detect_local_extrema(&normalized, 1e-6);
        assert!(found.len() >= 2, "found {} extrema", found.len());
        // strongest extremum in each blob's time region
        let midpoint = (start + 350) as f64;
        let first = found.iter().find(|e| e.t_hat < midpoint).unwrap();
        let second = found.iter().find(|e| e.t_hat >= midpoint).unwrap();
        assert!(
            first.sigma_hat < second.sigma_hat,
            "narrow-then-wide expected: {:?} then {:?}",
            (first.t_hat, first.sigma_hat),
            (second.t_hat, second.sigma_hat)
        );
    }
}
