//! High-accuracy continuous-theory reference computations: the
//! partial-fraction series form of the cascade kernel and its temporal
//! derivatives, numeric lp norms by adaptive quadrature, closed-form
//! Gaussian derivative kernels and norms, the discrete Gaussian via
//! modified Bessel functions, and frequency-domain consistency checks.
//!
//! Everything here is an independent reference path: none of it reuses
//! the recursive filter implementation it is meant to validate.

use crate::cascade::{self, CascadeSpec};
use crate::error::{Error, Result};

/// Layer count used for tabulated reference kernels.
pub const REFERENCE_LAYERS: usize = 8;

/// Requested absolute accuracy of lp-norm quadratures.
const QUAD_TARGET: f64 = 1e-10;
/// Accuracy beyond which quadrature failure is reported as an error.
const QUAD_REPORT_TOL: f64 = 1e-8;
/// Mass bound for choosing the quadrature cutoff time.
const TAIL_BOUND: f64 = 1e-13;
/// Bessel evaluation switches from the power series to the normalized
/// backward recurrence above this argument.
const BESSEL_SERIES_LIMIT: f64 = 20.0;

/// A cascade kernel in partial-fraction form:
/// `d^n/dt^n Psi(t) = sum_k (-1/mu_k)^n (A_k/mu_k) exp(-t/mu_k)` for t >= 0.
#[derive(Debug, Clone)]
pub struct SeriesKernel {
    pub mus: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub order: u8,
    /// Total variance of the represented kernel (user time^2), used for
    /// scale-normalization prefactors.
    pub tau: f64,
}

impl SeriesKernel {
    /// Builds the series for an explicit set of distinct time constants;
    /// `tau` is taken as `sum mu^2`.
    pub fn new(mus: Vec<f64>, order: u8) -> Result<Self> {
        let coefficients = series_coefficients(&mus)?;
        let tau = mus.iter().map(|m| m * m).sum();
        Ok(SeriesKernel {
            mus,
            coefficients,
            order,
            tau,
        })
    }

    /// The cascade truncated to the `levels` longest time constants of the
    /// infinite ladder, `mu_k = c^-k sqrt(c^2-1) sqrt(tau)`.
    pub fn limit_truncation(c: f64, tau: f64, levels: usize, order: u8) -> Result<Self> {
        let mus: Result<Vec<f64>> = (1..=levels).map(|k| cascade::mu_limit(c, tau, k)).collect();
        let mus = mus?;
        let coefficients = series_coefficients(&mus)?;
        Ok(SeriesKernel {
            mus,
            coefficients,
            order,
            tau,
        })
    }

    /// Pointwise value of the kernel derivative; zero for `t < 0` by
    /// time-causality.
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let n = self.order as i32;
        let mut acc = 0.0;
        for (mu, a) in self.mus.iter().zip(&self.coefficients) {
            acc += (-1.0 / mu).powi(n) * (a / mu) * (-t / mu).exp();
        }
        acc
    }

    /// Cutoff beyond which the remaining mass of every series term is
    /// below `TAIL_BOUND`.
    fn cutoff(&self) -> f64 {
        let mu_max = self.mus.iter().cloned().fold(f64::MIN, f64::max);
        let mut t = 10.0 * mu_max;
        loop {
            let bound: f64 = self
                .mus
                .iter()
                .zip(&self.coefficients)
                .map(|(mu, a)| a.abs() * mu.powi(1 - self.order as i32) * (-t / mu).exp())
                .sum();
            if bound < TAIL_BOUND || t > 1e6 * mu_max {
                return t;
            }
            t *= 1.5;
        }
    }
}

/// Partial-fraction coefficients `A_k = prod_(i != k) 1 / (1 - mu_i/mu_k)`.
///
/// They satisfy `sum A_k = 1` (unit kernel mass) and, for two or more
/// layers, `sum A_k / mu_k = 0` (kernel value 0 at t = 0+).
pub fn series_coefficients(mus: &[f64]) -> Result<Vec<f64>> {
    if mus.is_empty() {
        return Err(Error::invalid("mus", "need at least one time constant"));
    }
    if let Some(bad) = mus.iter().find(|m| !(**m > 0.0)) {
        return Err(Error::invalid("mus", format!("must all be > 0, got {bad}")));
    }
    for i in 0..mus.len() {
        for j in (i + 1)..mus.len() {
            let gap = (mus[i] - mus[j]).abs() / mus[i].max(mus[j]);
            if gap < 1e-9 {
                return Err(Error::DuplicateTimeConstant {
                    a: mus[i],
                    b: mus[j],
                    gap,
                });
            }
        }
    }
    let mut coeffs = Vec::with_capacity(mus.len());
    for (k, mu_k) in mus.iter().enumerate() {
        let mut a = 1.0;
        for (i, mu_i) in mus.iter().enumerate() {
            if i != k {
                a *= 1.0 / (1.0 - mu_i / mu_k);
            }
        }
        coeffs.push(a);
    }
    Ok(coeffs)
}

fn check_polarity_change(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `f` on `[a, b]` located by a sign scan over `n` cells plus
/// bisection refinement.
fn sign_change_points(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let step = (b - a) / n as f64;
    let mut prev_t = a;
    let mut prev_v = f(a);
    for i in 1..=n {
        let t = a + step * i as f64;
        let v = f(t);
        if prev_v * v < 0.0 {
            roots.push(check_polarity_change(f, prev_t, t));
        }
        prev_t = t;
        prev_v = v;
    }
    roots
}

struct SimpsonState {
    evaluations: usize,
    worst_error: f64,
}

fn simpson_segment(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    state: &mut SimpsonState,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    state.evaluations += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        if depth == 0 {
            state.worst_error = state.worst_error.max(delta.abs());
        }
        return left + right + delta / 15.0;
    }
    simpson_segment(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1, state)
        + simpson_segment(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1, state)
}

/// Adaptive Simpson integration of `f` over `[a, b]`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut state = SimpsonState {
        evaluations: 3,
        worst_error: 0.0,
    };
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let v = simpson_segment(f, a, fa, b, fb, fm, whole, tol, 48, &mut state);
    if state.worst_error > QUAD_REPORT_TOL {
        return Err(Error::QuadratureDidNotConverge {
            error: state.worst_error,
            tolerance: QUAD_REPORT_TOL,
        });
    }
    Ok(v)
}

/// Numeric Lp norm of the scale-normalized kernel derivative,
/// `(int |tau^(n*gamma/2) f(t)|^p dt)^(1/p)`, integrated piecewise between
/// the kernel's sign changes.
pub fn continuous_lp_norm(kernel: &SeriesKernel, p: f64, gamma: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::invalid("p", format!("must be finite and > 0, got {p}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid("gamma", format!("must be finite and > 0, got {gamma}")));
    }
    let prefactor = kernel.tau.powf(kernel.order as f64 * gamma / 2.0);
    let cut = kernel.cutoff();
    let eval = |t: f64| kernel.eval(t);
    let mut split = vec![0.0];
    split.extend(sign_change_points(&eval, 0.0, cut, 8192));
    split.push(cut);
    let integrand = move |t: f64| (prefactor * kernel.eval(t)).abs().powf(p);
    let mut total = 0.0;
    for pair in split.windows(2) {
        total += adaptive_simpson(&integrand, pair[0], pair[1], QUAD_TARGET)?;
    }
    Ok(total.powf(1.0 / p))
}

/// First moment `int t Psi(t) dt` of an order-0 series kernel by
/// quadrature; the independent route against the closed-form mean.
pub fn series_mean(kernel: &SeriesKernel) -> Result<f64> {
    if kernel.order != 0 {
        return Err(Error::invalid("kernel", "mean is defined for order-0 kernels"));
    }
    let cut = kernel.cutoff();
    let f = |t: f64| t * kernel.eval(t);
    adaptive_simpson(&f, 0.0, cut, QUAD_TARGET)
}

/// Unit mass check `int Psi(t) dt` of an order-0 series kernel.
pub fn series_mass(kernel: &SeriesKernel) -> Result<f64> {
    if kernel.order != 0 {
        return Err(Error::invalid("kernel", "mass is defined for order-0 kernels"));
    }
    let cut = kernel.cutoff();
    let f = |t: f64| kernel.eval(t);
    adaptive_simpson(&f, 0.0, cut, QUAD_TARGET)
}

/// Gaussian kernel and its first two derivatives:
/// `g = exp(-t^2/2 tau) / sqrt(2 pi tau)`, `g_t = -(t/tau) g`,
/// `g_tt = ((t^2 - tau)/tau^2) g`.
pub fn gaussian_kernel(t: f64, tau: f64, order: u8) -> f64 {
    let g = (-t * t / (2.0 * tau)).exp() / (2.0 * std::f64::consts::PI * tau).sqrt();
    match order {
        0 => g,
        1 => -(t / tau) * g,
        2 => ((t * t - tau) / (tau * tau)) * g,
        _ => panic!("gaussian_kernel supports orders 0..=2"),
    }
}

/// Closed-form Lp norms of Gaussian derivatives:
/// `||g_t||_2 = 1/(2 pi^(1/4) tau^(3/4))`, `||g_t||_1 = sqrt(2/pi)/sqrt(tau)`,
/// `||g_tt||_2 = sqrt(3/2)/(2 pi^(1/4) tau^(5/4))`, `||g_tt||_1 = sqrt(8/(e pi))/tau`.
pub fn gaussian_derivative_norms(tau: f64, order: u8, p: u8) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::invalid("tau", format!("must be > 0, got {tau}")));
    }
    use std::f64::consts::{E, PI};
    let v = match (order, p) {
        (1, 2) => 1.0 / (2.0 * PI.powf(0.25) * tau.powf(0.75)),
        (1, 1) => (2.0 / PI).sqrt() / tau.sqrt(),
        (2, 2) => (1.5f64).sqrt() / (2.0 * PI.powf(0.25) * tau.powf(1.25)),
        (2, 1) => (8.0 / (E * PI)).sqrt() / tau,
        _ => {
            return Err(Error::invalid(
                "order/p",
                format!("no closed form for order {order}, p {p}"),
            ))
        }
    };
    Ok(v)
}

/// Discrete Gaussian `T(m; tau) = exp(-tau) I_m(tau)`, evaluated by a power
/// series for small `tau` and by the normalized backward recurrence above
/// `BESSEL_SERIES_LIMIT`.
pub fn discrete_gaussian(m: i64, tau: f64) -> f64 {
    assert!(tau >= 0.0 && tau.is_finite(), "tau must be finite and >= 0");
    let m = m.unsigned_abs() as usize;
    if tau == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if tau <= BESSEL_SERIES_LIMIT {
        discrete_gaussian_series(m, tau)
    } else {
        let family = discrete_gaussian_family(m, tau);
        family[m]
    }
}

fn discrete_gaussian_series(m: usize, tau: f64) -> f64 {
    // exp(-tau) (tau/2)^m / m! * sum_j (tau^2/4)^j / (j! (j+m)!)
    let mut lead = (-tau).exp();
    for i in 1..=m {
        lead *= tau / (2.0 * i as f64);
    }
    let x = tau * tau / 4.0;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for j in 1..500 {
        term *= x / (j as f64 * (j + m) as f64);
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    lead * sum
}

/// The values `T(m; tau)` for `m = 0..=max_m`, normalized so that the full
/// two-sided family sums to one exactly.
pub fn discrete_gaussian_family(max_m: usize, tau: f64) -> Vec<f64> {
    assert!(tau >= 0.0 && tau.is_finite(), "tau must be finite and >= 0");
    if tau == 0.0 {
        let mut v = vec![0.0; max_m + 1];
        v[0] = 1.0;
        return v;
    }
    if tau <= BESSEL_SERIES_LIMIT {
        return (0..=max_m).map(|m| discrete_gaussian_series(m, tau)).collect();
    }
    // backward recurrence I_(m-1) = I_(m+1) + (2m/tau) I_m with periodic
    // rescaling; the sum identity I_0 + 2 sum I_m = e^tau fixes the scale
    let support = (12.0 * tau.sqrt()).ceil() as usize + 30;
    let reach = support.max(max_m);
    let start = reach + 2 * (reach as f64).sqrt().ceil() as usize + 40;
    let mut values = vec![0.0f64; start + 2];
    values[start + 1] = 0.0;
    values[start] = 1e-280;
    for m in (1..=start).rev() {
        let v = values[m + 1] + (2.0 * m as f64 / tau) * values[m];
        values[m - 1] = v;
        if v > 1e260 {
            let inv = 1e-260;
            for w in values[m - 1..].iter_mut() {
                *w *= inv;
            }
        }
    }
    let mut total = values[0];
    for v in &values[1..] {
        total += 2.0 * v;
    }
    (0..=max_m)
        .map(|m| if m < values.len() { values[m] / total } else { 0.0 })
        .collect()
}

/// Grid residual of the second-derivative approximation of a scale
/// difference: `max |DoG(t) - (dtau/2) g_tt(t)| / max |(dtau/2) g_tt(t)|`
/// with `DoG(t) = g(t; tau+dtau) - g(t; tau)`.
pub fn dog_vs_gtt_residual(tau: f64, dtau: f64) -> f64 {
    assert!(tau > 0.0 && dtau > 0.0);
    let half = 8.0 * (tau + dtau).sqrt();
    let n = 1601;
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for i in 0..n {
        let t = -half + 2.0 * half * i as f64 / (n - 1) as f64;
        let dog = gaussian_kernel(t, tau + dtau, 0) - gaussian_kernel(t, tau, 0);
        let reference = 0.5 * dtau * gaussian_kernel(t, tau, 2);
        worst = worst.max((dog - reference).abs());
        peak = peak.max(reference.abs());
    }
    worst / peak
}

/// Magnitude of the continuous cascade transfer function
/// `prod_k 1/(1 + i mu_k w)` at angular frequency `w`.
pub fn continuous_magnitude(spec: &CascadeSpec, omega: f64) -> f64 {
    spec.mu_cont
        .iter()
        .map(|mu| 1.0 / (1.0 + mu * mu * omega * omega).sqrt())
        .product()
}

/// Magnitude of the discrete-time frequency response of the recursive
/// cascade at angular frequency `w` (user time units).
pub fn discrete_magnitude(spec: &CascadeSpec, omega: f64) -> f64 {
    let theta = omega * spec.dt;
    let half_sin = (theta / 2.0).sin();
    spec.engine_time_constants()
        .iter()
        .map(|mu| {
            let inv = 1.0 / (1.0 + mu);
            let beta = 1.0 - inv;
            // |1 - beta e^(-i theta)|^2 = (1-beta)^2 + 4 beta sin^2(theta/2)
            inv / (inv * inv + 4.0 * beta * half_sin * half_sin).sqrt()
        })
        .product()
}

/// Maximum deviation between the continuous-product magnitude and the
/// discrete-time cascade magnitude over the given frequency grid.
pub fn fourier_magnitude_check(spec: &CascadeSpec, omega_grid: &[f64]) -> f64 {
    omega_grid
        .iter()
        .map(|w| (continuous_magnitude(spec, *w) - discrete_magnitude(spec, *w)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{build_cascade, mean_delay_continuous, mu_truncated, CascadeMode};

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn coefficients_single_pole() {
        assert_eq!(series_coefficients(&[0.7]).unwrap(), vec![1.0]);
    }

    #[test]
    fn coefficients_two_poles() {
        let a = series_coefficients(&[2.0, 1.0]).unwrap();
        assert_eq!(a, vec![2.0, -1.0]);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let sum_over_mu: f64 = a[0] / 2.0 + a[1] / 1.0;
        assert!(sum_over_mu.abs() < 1e-15);
    }

    #[test]
    fn coefficients_reject_duplicates() {
        assert!(matches!(
            series_coefficients(&[1.0, 1.0]),
            Err(Error::DuplicateTimeConstant { .. })
        ));
        // variance-preserving truncation for c = sqrt(2) collides mu_1 = mu_2
        let mus = mu_truncated(SQRT2, 1.0, 8).unwrap();
        assert!(series_coefficients(&mus).is_err());
    }

    #[test]
    fn partial_fraction_identities_across_parameters() {
        for &c in &[SQRT2, 2.0] {
            for &k in &[2usize, 4, 8] {
                let kernel = SeriesKernel::limit_truncation(c, 1.0, k, 0).unwrap();
                let sum_a: f64 = kernel.coefficients.iter().sum();
                let sum_a_over_mu: f64 = kernel
                    .coefficients
                    .iter()
                    .zip(&kernel.mus)
                    .map(|(a, mu)| a / mu)
                    .sum();
                assert!((sum_a - 1.0).abs() < 1e-9, "c={c} K={k}: sum A = {sum_a}");
                assert!(sum_a_over_mu.abs() < 1e-9, "c={c} K={k}: sum A/mu = {sum_a_over_mu}");
            }
        }
        // variance-preserving truncation has distinct constants for c = 2
        let mus = mu_truncated(2.0, 1.0, 8).unwrap();
        let a = series_coefficients(&mus).unwrap();
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn series_eval_boundary_and_decay() {
        let kernel = SeriesKernel::limit_truncation(2.0, 1.0, 8, 0).unwrap();
        assert!(kernel.eval(0.0).abs() < 1e-9);
        assert_eq!(kernel.eval(-1.0), 0.0);
        assert!(kernel.eval(200.0).abs() < 1e-80);
    }

    #[test]
    fn series_unit_mass_by_quadrature() {
        let kernel = SeriesKernel::limit_truncation(2.0, 1.0, 8, 0).unwrap();
        let mass = series_mass(&kernel).unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    }

    #[test]
    fn lp_norms_match_independent_reference() {
        // frozen from two independent numerical routes (series quadrature
        // cross-checked against FFT convolution of the factor kernels)
        let cases = [
            (2.0, 1, 2.0, 0.68482878),
            (2.0, 1, 1.0, 1.05067073),
            (2.0, 2, 2.0, 2.09269745),
            (2.0, 2, 1.0, 2.44619466),
            (SQRT2, 1, 2.0, 0.51700982),
            (SQRT2, 1, 1.0, 0.92731601),
            (SQRT2, 2, 2.0, 0.99978070),
            (SQRT2, 2, 1.0, 1.57112405),
        ];
        for &(c, n, p, expected) in &cases {
            let kernel = SeriesKernel::limit_truncation(c, 1.0, REFERENCE_LAYERS, n).unwrap();
            let v = continuous_lp_norm(&kernel, p, 1.0).unwrap();
            assert!(
                (v - expected).abs() < 2e-6,
                "c={c} n={n} p={p}: {v} vs {expected}"
            );
        }
    }

    #[test]
    fn lp_norms_converged_kernel() {
        // with 16 layers the truncation error is below the print precision
        let cases = [
            (SQRT2, 1, 2.0, 0.51332626),
            (SQRT2, 1, 1.0, 0.92452141),
            (SQRT2, 2, 2.0, 0.98167121),
            (SQRT2, 2, 1.0, 1.55524460),
            (2.0, 2, 2.0, 2.09203751),
        ];
        for &(c, n, p, expected) in &cases {
            let kernel = SeriesKernel::limit_truncation(c, 1.0, 16, n).unwrap();
            let v = continuous_lp_norm(&kernel, p, 1.0).unwrap();
            assert!(
                (v - expected).abs() < 2e-6,
                "c={c} n={n} p={p}: {v} vs {expected}"
            );
        }
    }

    #[test]
    fn gamma_one_l1_norm_is_scale_flat() {
        let at_tau_1 = continuous_lp_norm(
            &SeriesKernel::limit_truncation(SQRT2, 1.0, 8, 1).unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        let at_tau_2 = continuous_lp_norm(
            &SeriesKernel::limit_truncation(SQRT2, 2.0, 8, 1).unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        assert!((at_tau_1 - at_tau_2).abs() < 1e-6);
    }

    #[test]
    fn norm_recurrence_over_scales() {
        // ||Psi_tn(.; c^(2j), c)||_p = c^(-j(n+1)+j/p) ||Psi_tn(.; 1, c)||_p
        let c = 2.0;
        for &(n, p) in &[(1u8, 1.0f64), (1, 2.0), (2, 1.0)] {
            let base = continuous_lp_norm(
                &SeriesKernel::limit_truncation(c, 1.0, 8, n).unwrap(),
                p,
                1.0,
            )
            .unwrap();
            let gamma_factor_base = 1.0f64;
            let plain_base = base / gamma_factor_base;
            let scaled = continuous_lp_norm(
                &SeriesKernel::limit_truncation(c, c * c, 8, n).unwrap(),
                p,
                1.0,
            )
            .unwrap();
            // remove the gamma prefactor tau^(n/2) to compare plain norms
            let plain_scaled = scaled / (c * c).powf(n as f64 / 2.0);
            let j = 1.0;
            let factor = c.powf(-j * (n as f64 + 1.0) + j / p);
            assert!(
                (plain_scaled - plain_base * factor).abs() < 1e-6,
                "n={n} p={p}: {plain_scaled} vs {}",
                plain_base * factor
            );
        }
    }

    #[test]
    fn mean_by_quadrature_matches_closed_form() {
        for &(c, layers) in &[(2.0, 24usize), (SQRT2, 48)] {
            let kernel = SeriesKernel::limit_truncation(c, 1.0, layers, 0).unwrap();
            let mean = series_mean(&kernel).unwrap();
            let formula = mean_delay_continuous(c, 1.0).unwrap();
            assert!(
                (mean - formula).abs() < 1e-6 * formula,
                "c={c}: {mean} vs {formula}"
            );
        }
    }

    #[test]
    fn gaussian_kernel_values() {
        assert!((gaussian_kernel(0.0, 1.0, 0) - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert_eq!(gaussian_kernel(0.0, 3.0, 1), 0.0);
        for &tau in &[0.5f64, 1.0, 4.0] {
            let root = tau.sqrt();
            assert!(gaussian_kernel(root, tau, 2).abs() < 1e-15);
            assert!(gaussian_kernel(-root, tau, 2).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_norms_match_quadrature() {
        for &(n, p) in &[(1u8, 1u8), (1, 2), (2, 1), (2, 2)] {
            for &tau in &[1.0, 2.5] {
                let closed = gaussian_derivative_norms(tau, n, p).unwrap();
                // brute-force Riemann sum as the independent oracle
                let half = 14.0 * tau.sqrt();
                let steps = 400_000;
                let dt = 2.0 * half / steps as f64;
                let mut acc = 0.0;
                for i in 0..steps {
                    let t = -half + (i as f64 + 0.5) * dt;
                    acc += gaussian_kernel(t, tau, n).abs().powi(p as i32) * dt;
                }
                let brute = acc.powf(1.0 / p as f64);
                assert!(
                    (closed - brute).abs() < 1e-7 * closed,
                    "n={n} p={p} tau={tau}: {closed} vs {brute}"
                );
            }
        }
        assert!((gaussian_derivative_norms(1.0, 1, 1).unwrap() - 0.7978845608028654).abs() < 1e-12);
        assert!((gaussian_derivative_norms(1.0, 2, 1).unwrap() - 0.9678828980765735).abs() < 1e-9);
        assert!((gaussian_derivative_norms(1.0, 1, 2).unwrap() - 0.37556277223247125).abs() < 1e-12);
        assert!(gaussian_derivative_norms(1.0, 3, 1).is_err());
    }

    #[test]
    fn discrete_gaussian_reference_values() {
        // frozen from the power-series definition of I_m
        let cases = [
            (0i64, 1.0, 4.657596075936404e-1),
            (1, 1.0, 2.079104153497084e-1),
            (2, 1.0, 4.993877689422356e-2),
            (0, 5.0, 1.835408126093283e-1),
            (3, 5.0, 6.961074227933323e-2),
            (0, 25.0, 8.019677354743665e-2),
            (10, 25.0, 1.071175542592917e-2),
            (30, 25.0, 4.683115617243250e-9),
            (0, 100.0, 3.994437929909668e-2),
            (10, 100.0, 2.417668271825882e-2),
            (25, 100.0, 1.756199879504903e-3),
            (0, 4096.0, 6.233663387906490e-3),
            (64, 4096.0, 3.780715629371455e-3),
            (200, 4096.0, 4.724188546456525e-5),
        ];
        for &(m, tau, expected) in &cases {
            let v = discrete_gaussian(m, tau);
            assert!(
                (v - expected).abs() < 1e-12 * expected.max(1e-12),
                "T({m}; {tau}) = {v} vs {expected}"
            );
        }
    }

    #[test]
    fn discrete_gaussian_zero_scale_and_symmetry() {
        assert_eq!(discrete_gaussian(0, 0.0), 1.0);
        assert_eq!(discrete_gaussian(3, 0.0), 0.0);
        for &tau in &[0.5, 30.0] {
            assert_eq!(discrete_gaussian(-4, tau), discrete_gaussian(4, tau));
        }
    }

    #[test]
    fn discrete_gaussian_mass_and_variance() {
        for &tau in &[1.0f64, 25.0, 400.0] {
            let reach = (12.0 * tau.sqrt()).ceil() as usize + 30;
            let family = discrete_gaussian_family(reach, tau);
            let mass: f64 = family[0] + 2.0 * family[1..].iter().sum::<f64>();
            let var: f64 = 2.0
                * family
                    .iter()
                    .enumerate()
                    .map(|(m, v)| (m * m) as f64 * v)
                    .sum::<f64>();
            assert!((mass - 1.0).abs() < 1e-9, "tau={tau}: mass {mass}");
            assert!((var - tau).abs() < 1e-9 * tau.max(1.0), "tau={tau}: var {var}");
        }
    }

    #[test]
    fn dog_residual_shrinks_with_dtau() {
        let r1 = dog_vs_gtt_residual(1.0, 0.1);
        let r2 = dog_vs_gtt_residual(1.0, 0.05);
        let r3 = dog_vs_gtt_residual(1.0, 0.025);
        let r4 = dog_vs_gtt_residual(1.0, 0.01);
        assert!(r1 > r2 && r2 > r3 && r3 > r4, "{r1} {r2} {r3} {r4}");
        // difference of two unit-mass kernels integrates to zero
        let half = 40.0;
        let steps = 200_000;
        let dt = 2.0 * half / steps as f64;
        let mut acc = 0.0;
        for i in 0..steps {
            let t = -half + (i as f64 + 0.5) * dt;
            acc += (gaussian_kernel(t, 1.3, 0) - gaussian_kernel(t, 1.0, 0)) * dt;
        }
        assert!(acc.abs() < 1e-9);
    }

    #[test]
    fn frequency_response_consistency() {
        let spec = build_cascade(SQRT2, 1.0, 8, 1.0, CascadeMode::Discrete).unwrap();
        // both magnitudes are exactly 1 at DC
        assert!((continuous_magnitude(&spec, 0.0) - 1.0).abs() < 1e-15);
        assert!((discrete_magnitude(&spec, 0.0) - 1.0).abs() < 1e-15);
        // low-pass: monotonically decreasing magnitudes up to Nyquist
        let mut prev_c = 1.0;
        let mut prev_d = 1.0;
        for i in 1..=100 {
            let w = std::f64::consts::PI * i as f64 / 100.0;
            let mc = continuous_magnitude(&spec, w);
            let md = discrete_magnitude(&spec, w);
            assert!(mc <= prev_c + 1e-15);
            assert!(md <= prev_d + 1e-15);
            prev_c = mc;
            prev_d = md;
        }
        // the two responses agree where omega * dt is small
        let grid: Vec<f64> = (0..50).map(|i| 0.002 * i as f64).collect();
        let deviation = fourier_magnitude_check(&spec, &grid);
        assert!(deviation < 5e-3, "deviation {deviation}");
    }

    #[test]
    fn half_power_point_scales_inversely_with_c() {
        // |H(w; c^2 tau)| = |H(c w; tau)| for the continuous product, so the
        // half-power point moves by 1/c when tau grows by c^2
        let find_half_power = |spec: &CascadeSpec| {
            let mut lo = 0.0;
            let mut hi = 10.0;
            while continuous_magnitude(spec, hi) > std::f64::consts::FRAC_1_SQRT_2 {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if continuous_magnitude(spec, mid) > std::f64::consts::FRAC_1_SQRT_2 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let c = 2.0;
        let spec1 = build_cascade(c, 1.0, 8, 1.0, CascadeMode::Discrete).unwrap();
        let spec2 = build_cascade(c, c * c, 8, 1.0, CascadeMode::Discrete).unwrap();
        let w1 = find_half_power(&spec1);
        let w2 = find_half_power(&spec2);
        assert!((w2 - w1 / c).abs() < 1e-9 * w1, "{w2} vs {}", w1 / c);
    }
}
