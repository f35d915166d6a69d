//! Cascade parameterization: temporal scale ladders, continuous and
//! discrete time constants, and closed-form delay characterizations.
//!
//! A cascade smooths to the scale ladder `tau_k = tau0 * c^(2k)` for
//! `k = 1..=K`. Each layer is one first-order smoothing stage; the layer
//! time constants are derived either from the variance-exact discrete
//! rule `mu^2 + mu = dtau` or from the truncated continuous cascade
//! `mu^2 = dtau`.

use crate::engine::KernelSamples;
use crate::error::{Error, Result};

/// Which time-constant rule drives the recursive filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeMode {
    /// Variance-exact discrete rule: `mu_k^2 + mu_k = dtau_k / dt^2`.
    Discrete,
    /// Direct discretization of the truncated continuous cascade:
    /// the engine uses `mu_cont[k] / dt`.
    ContinuousTruncated,
}

/// Full parameterization of one filter cascade.
///
/// `tau_levels` and `mu_cont` are in user time units (time^2 and time);
/// `mu_disc` is dimensionless (sample counts).
#[derive(Debug, Clone)]
pub struct CascadeSpec {
    pub c: f64,
    pub tau0: f64,
    pub levels: usize,
    pub dt: f64,
    pub mode: CascadeMode,
    /// Cumulative scales `tau_1..tau_K`, strictly increasing.
    pub tau_levels: Vec<f64>,
    /// Continuous time constants of the truncated cascade; `sum mu^2 = tau_K`.
    pub mu_cont: Vec<f64>,
    /// Discrete time constants; `sum (mu^2 + mu) = tau_K / dt^2`.
    pub mu_disc: Vec<f64>,
}

impl CascadeSpec {
    /// Time constants (in sample units) the recursive filters run with,
    /// selected by `mode`.
    pub fn engine_time_constants(&self) -> Vec<f64> {
        match self.mode {
            CascadeMode::Discrete => self.mu_disc.clone(),
            CascadeMode::ContinuousTruncated => {
                self.mu_cont.iter().map(|m| m / self.dt).collect()
            }
        }
    }

    /// Discrete mean delay (in user time units) accumulated through the
    /// first `k` layers: `dt * sum mu_disc[1..=k]`.
    pub fn discrete_mean_delay(&self, k: usize) -> f64 {
        self.mu_disc[..k].iter().sum::<f64>() * self.dt
    }

    pub fn coarsest_scale(&self) -> f64 {
        *self.tau_levels.last().expect("cascade has at least one level")
    }
}

/// One of the two delay characterizations of a smoothing kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayKind {
    ContinuousClosedForm,
    DiscreteEmpirical,
}

/// Temporal-delay summary: kernel mean and position of the kernel maximum.
#[derive(Debug, Clone, Copy)]
pub struct DelayMeasure {
    pub mean_delay: f64,
    pub tmax_delay: f64,
    pub kind: DelayKind,
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::invalid("c", format!("must be finite and > 1, got {c}")));
    }
    Ok(())
}

fn check_tau(name: &'static str, tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid(name, format!("must be finite and > 0, got {tau}")));
    }
    Ok(())
}

/// Temporal scale levels `tau0 * c^(2k)` for `k = 1..=levels`.
pub fn scale_levels(c: f64, tau0: f64, levels: usize) -> Result<Vec<f64>> {
    check_c(c)?;
    check_tau("tau0", tau0)?;
    if levels < 1 {
        return Err(Error::invalid("levels", "must be at least 1"));
    }
    let c2 = c * c;
    let mut taus = Vec::with_capacity(levels);
    let mut tau = tau0;
    for _ in 0..levels {
        tau *= c2;
        taus.push(tau);
    }
    Ok(taus)
}

/// The k-th time constant of the infinite cascade,
/// `mu_k = c^(-k) * sqrt(c^2 - 1) * sqrt(tau)`; `sum_k mu_k^2 = tau`.
pub fn mu_limit(c: f64, tau: f64, k: usize) -> Result<f64> {
    check_c(c)?;
    check_tau("tau", tau)?;
    if k < 1 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    Ok(c.powi(-(k as i32)) * (c * c - 1.0).sqrt() * tau.sqrt())
}

/// Time constants of the K-layer truncated cascade with total variance
/// exactly `tau`: the first layer absorbs the variance of all discarded
/// finer layers.
pub fn mu_truncated(c: f64, tau: f64, levels: usize) -> Result<Vec<f64>> {
    check_c(c)?;
    check_tau("tau", tau)?;
    if levels < 1 {
        return Err(Error::invalid("levels", "must be at least 1"));
    }
    let k_i32 = levels as i32;
    let sqrt_tau = tau.sqrt();
    let mut mus = Vec::with_capacity(levels);
    mus.push(c.powi(1 - k_i32) * sqrt_tau);
    for k in 2..=k_i32 {
        mus.push(c.powi(k - k_i32 - 1) * (c * c - 1.0).sqrt() * sqrt_tau);
    }
    Ok(mus)
}

/// Unique nonnegative root of `mu^2 + mu = delta_tau` (scale increment in
/// squared sample units).
pub fn mu_discrete(delta_tau: f64) -> Result<f64> {
    if !(delta_tau >= 0.0) || !delta_tau.is_finite() {
        return Err(Error::invalid(
            "delta_tau",
            format!("must be finite and >= 0, got {delta_tau}"),
        ));
    }
    Ok(((1.0 + 4.0 * delta_tau).sqrt() - 1.0) / 2.0)
}

/// Builds a fully populated [`CascadeSpec`].
///
/// Scale increments are `dtau_1 = tau0 * c^2` (the first layer emulates all
/// discarded finer smoothing) and `dtau_k = tau_k - tau_(k-1)` above it.
pub fn build_cascade(
    c: f64,
    tau0: f64,
    levels: usize,
    dt: f64,
    mode: CascadeMode,
) -> Result<CascadeSpec> {
    check_tau("dt", dt)?;
    let tau_levels = scale_levels(c, tau0, levels)?;
    let dt2 = dt * dt;
    let mut mu_disc = Vec::with_capacity(levels);
    let mut prev = 0.0;
    for &tau in &tau_levels {
        mu_disc.push(mu_discrete((tau - prev) / dt2)?);
        prev = tau;
    }
    let mu_cont = mu_truncated(c, tau_levels[levels - 1], levels)?;
    Ok(CascadeSpec {
        c,
        tau0,
        levels,
        dt,
        mode,
        tau_levels,
        mu_cont,
        mu_disc,
    })
}

/// Closed-form temporal mean of the limit kernel,
/// `sqrt((c+1)/(c-1)) * sqrt(tau)`.
pub fn mean_delay_continuous(c: f64, tau: f64) -> Result<f64> {
    check_c(c)?;
    check_tau("tau", tau)?;
    Ok(((c + 1.0) / (c - 1.0)).sqrt() * tau.sqrt())
}

/// Scale-time approximation of the kernel maximum position,
/// `(c+1)^2 sqrt(tau) / (2 sqrt(2) sqrt((c-1) c^3))`.
pub fn tmax_delay_approx(c: f64, tau: f64) -> Result<f64> {
    check_c(c)?;
    check_tau("tau", tau)?;
    let num = (c + 1.0) * (c + 1.0) * tau.sqrt();
    let den = 2.0 * 2.0f64.sqrt() * ((c - 1.0) * c * c * c).sqrt();
    Ok(num / den)
}

/// Empirical delay measures of a sampled nonnegative kernel: first moment
/// and sub-sample-interpolated argmax.
pub fn delay_measures_discrete(kernel: &KernelSamples) -> Result<DelayMeasure> {
    let v = &kernel.values;
    if v.is_empty() {
        return Err(Error::DegenerateInput("empty kernel".into()));
    }
    if v.iter().any(|x| *x < 0.0) {
        return Err(Error::DegenerateInput(
            "delay measures require a nonnegative kernel".into(),
        ));
    }
    let mass: f64 = v.iter().sum();
    if mass <= 0.0 {
        return Err(Error::DegenerateInput("all-zero kernel".into()));
    }
    let mut first = 0.0;
    let mut arg = 0usize;
    for (i, &x) in v.iter().enumerate() {
        first += i as f64 * x;
        if x > v[arg] {
            arg = i;
        }
    }
    let mean_idx = first / mass;
    // No interpolation at a boundary argmax; report the raw index there.
    let tmax_idx = if arg > 0 && arg + 1 < v.len() {
        arg as f64 + parabolic_offset(v[arg - 1], v[arg], v[arg + 1])
    } else {
        arg as f64
    };
    Ok(DelayMeasure {
        mean_delay: kernel.t0 + mean_idx * kernel.dt,
        tmax_delay: kernel.t0 + tmax_idx * kernel.dt,
        kind: DelayKind::DiscreteEmpirical,
    })
}

/// Sub-sample offset of the vertex of the parabola through three
/// equidistant samples centered on the middle one. Returns 0 when the
/// samples are collinear; the offset is clamped to one grid cell.
pub(crate) fn parabolic_offset(vm: f64, v0: f64, vp: f64) -> f64 {
    let den = vm - 2.0 * v0 + vp;
    if den == 0.0 {
        return 0.0;
    }
    (0.5 * (vm - vp) / den).clamp(-1.0, 1.0)
}

/// Ladder construction for a requested output scale range.
///
/// The finest requested level is placed `min_depth` layers up the internal
/// ladder, so there are always at least `min_depth` layers at or below it
/// to build up an accurate approximation of the limit kernel; the extra
/// sub-levels are not meant to be emitted.
#[derive(Debug, Clone)]
pub struct LevelPlan {
    pub spec: CascadeSpec,
    /// 0-based index of the first output level in `spec.tau_levels`.
    pub output_offset: usize,
}

impl LevelPlan {
    pub const DEFAULT_MIN_DEPTH: usize = 8;

    /// Plans a ladder whose output levels run from `tau_finest` up to at
    /// least `tau_coarsest` in steps of `c^2`.
    pub fn new(
        c: f64,
        tau_finest: f64,
        tau_coarsest: f64,
        dt: f64,
        mode: CascadeMode,
        min_depth: usize,
    ) -> Result<LevelPlan> {
        check_c(c)?;
        check_tau("tau_finest", tau_finest)?;
        check_tau("tau_coarsest", tau_coarsest)?;
        if tau_coarsest < tau_finest {
            return Err(Error::invalid(
                "tau_coarsest",
                "must be >= tau_finest",
            ));
        }
        if min_depth < 1 {
            return Err(Error::invalid("min_depth", "must be at least 1"));
        }
        let n_out = 1 + (((tau_coarsest / tau_finest).ln() / (2.0 * c.ln())) - 1e-9)
            .ceil()
            .max(0.0) as usize;
        let tau0 = tau_finest / (c * c).powi(min_depth as i32);
        let spec = build_cascade(c, tau0, min_depth + n_out - 1, dt, mode)?;
        Ok(LevelPlan {
            spec,
            output_offset: min_depth - 1,
        })
    }

    /// Cumulative scales of the output levels only.
    pub fn output_scales(&self) -> &[f64] {
        &self.spec.tau_levels[self.output_offset..]
    }

    pub fn output_count(&self) -> usize {
        self.spec.levels - self.output_offset
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine;

    const TOL: f64 = 1e-12;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn scale_levels_geometric() {
        let taus = scale_levels(2.0, 1.0, 3).unwrap();
        assert_eq!(taus, vec![4.0, 16.0, 64.0]);
        let taus = scale_levels(2.0f64.sqrt(), 1.0, 2).unwrap();
        assert!(rel_close(taus[0], 2.0, TOL));
        assert!(rel_close(taus[1], 4.0, TOL));
        assert_eq!(scale_levels(2.0, 1.0, 1).unwrap(), vec![4.0]);
    }

    #[test]
    fn scale_levels_rejects_bad_domain() {
        assert!(scale_levels(1.0, 1.0, 3).is_err());
        assert!(scale_levels(0.5, 1.0, 3).is_err());
        assert!(scale_levels(2.0, 0.0, 3).is_err());
        assert!(scale_levels(2.0, -1.0, 3).is_err());
        assert!(scale_levels(2.0, 1.0, 0).is_err());
        assert!(scale_levels(f64::NAN, 1.0, 3).is_err());
    }

    #[test]
    fn mu_limit_values_and_tail() {
        assert!(rel_close(mu_limit(2.0, 1.0, 1).unwrap(), 3.0f64.sqrt() / 2.0, TOL));
        assert!(rel_close(mu_limit(2.0, 1.0, 2).unwrap(), 3.0f64.sqrt() / 4.0, TOL));
        // geometric tail: partial sums of mu_k^2 converge to tau with ratio c^-2
        let tau = 1.0;
        let mut sum = 0.0;
        let mut prev_gap = tau;
        for k in 1..=40 {
            let mu = mu_limit(2.0, tau, k).unwrap();
            sum += mu * mu;
            let gap = tau - sum;
            assert!(gap >= -1e-15);
            assert!(gap <= prev_gap * 0.25 + 1e-15);
            prev_gap = gap;
        }
        assert!(rel_close(sum, tau, 1e-12));
    }

    #[test]
    fn mu_truncated_variance_identity() {
        let mus = mu_truncated(2.0, 1.0, 8).unwrap();
        assert!(rel_close(mus[0], 2.0f64.powi(-7), TOL));
        assert!(rel_close(mus[7], 3.0f64.sqrt() / 2.0, TOL));
        let var: f64 = mus.iter().map(|m| m * m).sum();
        assert!(rel_close(var, 1.0, TOL));
        // single layer carries all variance
        let mus = mu_truncated(2.0f64.sqrt(), 4.0, 1).unwrap();
        assert_eq!(mus.len(), 1);
        assert!(rel_close(mus[0], 2.0, TOL));
    }

    #[test]
    fn mu_discrete_roots() {
        assert!(rel_close(mu_discrete(2.0).unwrap(), 1.0, TOL));
        assert!(rel_close(mu_discrete(6.0).unwrap(), 2.0, TOL));
        assert_eq!(mu_discrete(0.0).unwrap(), 0.0);
        assert!(mu_discrete(-1.0).is_err());
    }

    #[test]
    fn mu_discrete_round_trip() {
        for &dtau in &[0.001, 0.1, 1.0, 7.5, 4096.0] {
            let mu = mu_discrete(dtau).unwrap();
            assert!(rel_close(mu * mu + mu, dtau, 1e-12));
        }
    }

    #[test]
    fn build_cascade_example() {
        let spec = build_cascade(2.0, 1.0, 2, 1.0, CascadeMode::Discrete).unwrap();
        assert_eq!(spec.tau_levels, vec![4.0, 16.0]);
        assert!(rel_close(spec.mu_disc[0], (17.0f64.sqrt() - 1.0) / 2.0, TOL));
        assert!(rel_close(spec.mu_disc[1], 3.0, TOL));
    }

    #[test]
    fn cascade_variance_identities() {
        for &(c, tau0, k, dt) in &[
            (2.0, 1.0, 2usize, 1.0),
            (std::f64::consts::SQRT_2, 1.0, 3, 1.0),
            (std::f64::consts::SQRT_2, 0.25, 8, 0.5),
            (1.7, 3.0, 12, 2.0),
        ] {
            let spec = build_cascade(c, tau0, k, dt, CascadeMode::Discrete).unwrap();
            let tau_k = spec.coarsest_scale();
            let cont: f64 = spec.mu_cont.iter().map(|m| m * m).sum();
            let disc: f64 = spec.mu_disc.iter().map(|m| m * m + m).sum();
            assert!(rel_close(cont, tau_k, 1e-12), "continuous variance, c={c}");
            assert!(
                rel_close(disc, tau_k / (dt * dt), 1e-12),
                "discrete variance, c={c}"
            );
            assert!(spec.tau_levels.windows(2).all(|w| w[0] < w[1]));
            assert!(spec.mu_cont.iter().all(|m| *m > 0.0));
            assert!(spec.mu_disc.iter().all(|m| *m > 0.0));
        }
    }

    #[test]
    fn mean_delay_closed_forms() {
        assert!(rel_close(mean_delay_continuous(2.0, 1.0).unwrap(), 3.0f64.sqrt(), TOL));
        let c = std::f64::consts::SQRT_2;
        assert!(rel_close(
            mean_delay_continuous(c, 1.0).unwrap(),
            1.0 + std::f64::consts::SQRT_2,
            TOL
        ));
        assert!(rel_close(
            mean_delay_continuous(2.0, 4.0).unwrap(),
            2.0 * 3.0f64.sqrt(),
            TOL
        ));
    }

    #[test]
    fn tmax_closed_forms() {
        assert!(rel_close(tmax_delay_approx(2.0, 1.0).unwrap(), 1.125, TOL));
        assert!(rel_close(tmax_delay_approx(2.0, 4.0).unwrap(), 2.25, TOL));
        // evaluate the formula independently for c = sqrt(2)
        let c = std::f64::consts::SQRT_2;
        let expect = (c + 1.0).powi(2) / (2.0 * 2.0f64.sqrt() * ((c - 1.0) * c.powi(3)).sqrt());
        assert!(rel_close(expect, 1.903801756168569, 1e-12));
        assert!(rel_close(tmax_delay_approx(c, 1.0).unwrap(), expect, TOL));
    }

    #[test]
    fn delay_scaling_in_sqrt_tau() {
        for &c in &[1.5, 2.0, 3.0] {
            let m1 = mean_delay_continuous(c, 1.0).unwrap();
            let m4 = mean_delay_continuous(c, 4.0).unwrap();
            assert!(rel_close(m4, 2.0 * m1, TOL));
            let t1 = tmax_delay_approx(c, 1.0).unwrap();
            let t4 = tmax_delay_approx(c, 4.0).unwrap();
            assert!(rel_close(t4, 2.0 * t1, TOL));
        }
    }

    #[test]
    fn delay_measures_on_unit_impulse() {
        let kernel = KernelSamples {
            values: vec![1.0, 0.0, 0.0],
            t0: 0.0,
            dt: 1.0,
            meta: crate::engine::KernelMeta {
                c: 2.0,
                tau: 1.0,
                order: 0,
                gamma: 1.0,
            },
            tail_mass: 0.0,
        };
        let d = delay_measures_discrete(&kernel).unwrap();
        assert_eq!(d.mean_delay, 0.0);
        assert_eq!(d.tmax_delay, 0.0);
    }

    #[test]
    fn delay_measures_reject_degenerate() {
        let mut kernel = KernelSamples {
            values: vec![],
            t0: 0.0,
            dt: 1.0,
            meta: crate::engine::KernelMeta {
                c: 2.0,
                tau: 1.0,
                order: 0,
                gamma: 1.0,
            },
            tail_mass: 0.0,
        };
        assert!(delay_measures_discrete(&kernel).is_err());
        kernel.values = vec![0.0, 0.0];
        assert!(delay_measures_discrete(&kernel).is_err());
    }

    #[test]
    fn discrete_mean_matches_time_constant_sum() {
        // identity for cascaded first-order recursive filters, verified by
        // direct summation of the impulse response
        let spec = build_cascade(2.0, 1.0, 8, 1.0, CascadeMode::Discrete).unwrap();
        let kernel = engine::equivalent_kernel(&spec, spec.levels, 8192).unwrap();
        let d = delay_measures_discrete(&kernel).unwrap();
        let expected: f64 = spec.mu_disc.iter().sum();
        assert!((d.mean_delay - expected).abs() < 1e-6);
    }

    #[test]
    fn discrete_mean_shorter_than_continuous() {
        for &c in &[std::f64::consts::SQRT_2, 2.0] {
            let spec = build_cascade(c, 1.0, 8, 1.0, CascadeMode::Discrete).unwrap();
            let tau_k = spec.coarsest_scale();
            let disc: f64 = spec.mu_disc.iter().sum();
            let cont = mean_delay_continuous(c, tau_k).unwrap();
            assert!(disc < cont, "c={c}: {disc} !< {cont}");
        }
    }

    #[test]
    fn level_plan_depth_and_range() {
        let c = std::f64::consts::SQRT_2;
        let plan = LevelPlan::new(c, 1.0 / 64.0, 4096.0, 1.0, CascadeMode::Discrete, 8).unwrap();
        let out = plan.output_scales();
        assert!(rel_close(out[0], 1.0 / 64.0, 1e-9));
        assert!(*out.last().unwrap() >= 4096.0 * (1.0 - 1e-9));
        // at least 8 ladder levels at or below the finest output level
        let finest = out[0];
        let below = plan
            .spec
            .tau_levels
            .iter()
            .filter(|t| **t <= finest * (1.0 + 1e-9))
            .count();
        assert!(below >= 8, "only {below} levels at or below the finest output");
    }
}
