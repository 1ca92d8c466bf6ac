//! Exact amplitude and the quadratic controlling the early-time derivative.
//!
//! The series solution of the delay equation is
//!
//! ```text
//! ε(t) = e^{-Γt/2} Σ_n (1/n!) [(Γ/2) e^{Γ t_d/2} e^{iφ}]^n (t - n t_d)^n Θ(t - n t_d)
//! ```
//!
//! The factor inside the bracket is `e^{Γ t_d/2}`. Printed versions of this
//! series that carry `e^{t_d/2}` are dimensionally inconsistent and disagree
//! with the closed form on `[t_d, 2 t_d]`; they are not reproduced here.
//!
//! Each term is evaluated as `e^{inφ} λⁿ e^{-λ} / n!` with `λ = Γ(t − n t_d)/2`,
//! which is the same quantity with the global `e^{-Γt/2}` folded in. The
//! weights are Poisson probabilities, so no term can overflow; for large `λ`
//! they are evaluated in the log domain.
//!
//! On `[t_d, 2 t_d]`, with `x = t − t_d`,
//!
//! ```text
//! d|ε|²/dt = -(Γ e^{-Γ(x + t_d)} / 4) p(x),   p(x) = c2 x² + c1 x + c0
//! ```
//!
//! so the sign of the derivative is the opposite of the sign of `p`.

use num_complex::Complex64;

use crate::params::{reduce_angle, validate_params};
use crate::{ComplexAmplitude, Error, Params, Result};

/// Above this Poisson mean the term weights are computed through logarithms.
const LOG_DOMAIN_LAMBDA: f64 = 300.0;

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::NonFiniteTime(t));
    }
    Ok(())
}

/// `λⁿ e^{-λ} / n!`
fn poisson_weight(lambda: f64, n: usize) -> f64 {
    if n == 0 {
        return (-lambda).exp();
    }
    if lambda == 0.0 {
        return 0.0;
    }
    if lambda <= LOG_DOMAIN_LAMBDA {
        let mut w = (-lambda).exp();
        for k in 1..=n {
            w *= lambda / k as f64;
        }
        w
    } else {
        let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
        (n as f64 * lambda.ln() - lambda - ln_fact).exp()
    }
}

/// Closed form for t_d = 0, where the delay equation collapses to
/// `dε/dt = -(Γ/2)(1 − e^{iφ}) ε`.
fn amplitude_no_delay(p: &Params, t: f64) -> ComplexAmplitude {
    let rate = (Complex64::new(1.0, 0.0) - p.phase()) * (p.gamma / 2.0);
    (-rate * t).exp()
}

/// ε(t) from the finite series (terms with `n·t_d ≤ t`).
///
/// The Heaviside convention is Θ(0) = 1; the entering term vanishes at its
/// own breakpoint, so the result is continuous.
pub fn amplitude_series(p: &Params, t: f64) -> Result<ComplexAmplitude> {
    let p = validate_params(*p)?;
    check_time(t)?;
    if p.is_trivial() || t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if p.t_delay == 0.0 {
        return Ok(amplitude_no_delay(&p, t));
    }
    let phi = reduce_angle(p.phi);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut n = 0usize;
    loop {
        let s = t - n as f64 * p.t_delay;
        if s < 0.0 {
            break;
        }
        let w = poisson_weight(0.5 * p.gamma * s, n);
        sum += Complex64::from_polar(w, n as f64 * phi);
        n += 1;
    }
    Ok(sum)
}

/// ε(t) on `[t_d, 2 t_d]` from the two-term closed form.
pub fn amplitude_window2(p: &Params, t: f64) -> Result<ComplexAmplitude> {
    let p = validate_params(*p)?;
    check_time(t)?;
    if p.t_delay == 0.0 {
        return Err(Error::DegenerateDelay);
    }
    let (lo, hi) = (p.t_delay, 2.0 * p.t_delay);
    if t < lo || t > hi {
        return Err(Error::TimeOutOfWindow { t, lo, hi });
    }
    let g = p.gamma;
    let feedback = Complex64::from_polar(0.5 * g * (0.5 * g * p.t_delay).exp(), reduce_angle(p.phi));
    Ok((Complex64::new(1.0, 0.0) + feedback * (t - p.t_delay)) * (-0.5 * g * t).exp())
}

/// d|ε|²/dt at `t`.
///
/// Before the first return (`t < t_d`) this is `-Γ e^{-Γt}`. From `t_d` on it
/// is `-Γ|ε(t)|² + Γ Re[e^{iφ} ε(t − t_d) ε*(t)]`; at the breakpoints the
/// right-hand derivative is returned.
pub fn abs2_derivative(p: &Params, t: f64) -> Result<f64> {
    let p = validate_params(*p)?;
    check_time(t)?;
    let g = p.gamma;
    if p.is_trivial() {
        return Ok(0.0);
    }
    if t < p.t_delay {
        return Ok(-g * (-g * t).exp());
    }
    let now = amplitude_series(&p, t)?;
    let delayed = amplitude_series(&p, t - p.t_delay)?;
    Ok(-g * now.norm_sqr() + g * (p.phase() * delayed * now.conj()).re)
}

/// Coefficients, discriminant and real roots of `p(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyAnalysis {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub delta: f64,
    /// `(x_minus, x_plus)`, present iff `delta ≥ 0`.
    pub roots: Option<(f64, f64)>,
}

impl PolyAnalysis {
    pub fn eval(&self, x: f64) -> f64 {
        (self.c2 * x + self.c1) * x + self.c0
    }

    /// Abscissa of the parabola's minimum.
    pub fn vertex(&self) -> f64 {
        -self.c1 / (2.0 * self.c2)
    }
}

/// Builds `p(x)` from the closed-form coefficients.
///
/// ```text
/// c2 = Γ² e^{u}
/// c1 = -2Γ e^{u/2} (e^{u/2} − 2 cos φ)
/// c0 = 4 (1 − e^{u/2} cos φ)
/// Δ  = 4Γ² e^{u} (e^{u} − 4 sin² φ)
/// x± = (e^{-u/2}/Γ) (e^{u/2} − 2 cos φ ± sqrt(e^{u} − 4 sin² φ))
/// ```
pub fn poly_analysis(p: &Params) -> Result<PolyAnalysis> {
    let p = validate_params(*p)?;
    if p.is_trivial() {
        return Err(Error::NonPositiveGamma(p.gamma));
    }
    if p.t_delay == 0.0 {
        return Err(Error::DegenerateDelay);
    }
    let g = p.gamma;
    let u = p.u();
    let half = (0.5 * u).exp();
    let full = u.exp();
    let (cos, sin) = (p.cos_phi(), p.sin_phi());
    let inner = full - 4.0 * sin * sin;

    let c2 = g * g * full;
    let c1 = -2.0 * g * half * (half - 2.0 * cos);
    let c0 = 4.0 * (1.0 - half * cos);
    let delta = 4.0 * g * g * full * inner;
    let roots = (delta >= 0.0).then(|| {
        let root = inner.max(0.0).sqrt();
        let scale = 1.0 / (half * g);
        let base = half - 2.0 * cos;
        (scale * (base - root), scale * (base + root))
    });
    Ok(PolyAnalysis { c2, c1, c0, delta, roots })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    use proptest::prelude::*;

    use super::*;

    fn params(g: f64, td: f64, phi: f64) -> Params {
        Params::new(g, td, phi).unwrap()
    }

    /// Naive transcription of the series, used as an oracle.
    fn series_oracle(p: &Params, t: f64) -> Complex64 {
        let z = Complex64::from_polar(0.5 * p.gamma * (0.5 * p.gamma * p.t_delay).exp(), p.phi);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut fact = 1.0;
        let mut n = 0;
        while n as f64 * p.t_delay <= t {
            if n > 0 {
                fact *= n as f64;
            }
            sum += z.powu(n) * (t - n as f64 * p.t_delay).powi(n as i32) / fact;
            n += 1;
        }
        sum * (-0.5 * p.gamma * t).exp()
    }

    #[test]
    fn initial_condition() {
        for p in [params(1.0, 1.0, 0.2), params(3.0, 0.0, 1.0), params(0.0, 1.0, 0.0)] {
            assert_eq!(amplitude_series(&p, 0.0).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn pure_decay_before_first_return() {
        for phi in [0.0, 1.0, 2.5, 4.0] {
            let eps = amplitude_series(&params(1.0, 1.0, phi), 0.7).unwrap();
            assert!((eps.norm() - (-0.35f64).exp()).abs() < 1e-15);
            assert!((eps.norm() - 0.70469).abs() < 1e-5);
        }
    }

    #[test]
    fn frozen_without_coupling() {
        let eps = amplitude_series(&params(0.0, 1.0, 0.0), 5.0).unwrap();
        assert_eq!(eps, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn second_window_values() {
        // e^{-1}(1 ± e^{1/2}/2), evaluated at 30 digits.
        let plus = 0.671_144_771_027_759;
        let minus = 0.064_614_111_315_125_61;
        let p0 = params(1.0, 1.0, 0.0);
        let ppi = params(1.0, 1.0, PI);
        for f in [amplitude_series, amplitude_window2] {
            let a = f(&p0, 2.0).unwrap();
            assert!((a.re - plus).abs() < 1e-14 && a.im.abs() < 1e-14);
            let b = f(&ppi, 2.0).unwrap();
            assert!((b.re - minus).abs() < 1e-14 && b.im.abs() < 1e-14);
        }
        let edge = amplitude_window2(&p0, 1.0).unwrap();
        assert!((edge.re - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn later_windows_match_naive_series() {
        // 30-digit values of the series.
        let a = amplitude_series(&params(1.0, 1.0, 0.7), 3.5).unwrap();
        assert!((a - Complex64::new(0.469_244_406_423_205_36, 0.363_385_064_860_750_6)).norm() < 1e-14);
        let b = amplitude_series(&params(2.0, 0.75, 2.0), 5.1).unwrap();
        assert!((b - Complex64::new(0.058_748_745_212_542_01, -0.052_417_873_770_307_86)).norm() < 1e-14);
        for (g, td, phi, t) in [(0.5, 0.3, 1.1, 2.9), (1.7, 1.2, 5.0, 7.0), (4.0, 1.5, 3.0, 9.0)] {
            let p = params(g, td, phi);
            let diff = amplitude_series(&p, t).unwrap() - series_oracle(&p, t);
            assert!(diff.norm() < 1e-12, "{p:?} t={t}: {diff}");
        }
    }

    #[test]
    fn large_lambda_stays_finite() {
        let p = params(10.0, 40.0, 0.5);
        for t in [0.0, 100.0, 399.0, 4000.0] {
            let eps = amplitude_series(&p, t).unwrap();
            assert!(eps.norm().is_finite() && eps.norm() <= 1.0 + 1e-9, "t={t}: {eps}");
        }
    }

    #[test]
    fn no_delay_closed_form() {
        let p = params(1.0, 0.0, 0.0);
        assert!((amplitude_series(&p, 5.0).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let p = params(2.0, 0.0, PI);
        assert!((amplitude_series(&p, 1.0).unwrap().re - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn window2_rejects_outside_times() {
        let p = params(1.0, 1.0, 0.0);
        assert!(matches!(amplitude_window2(&p, 0.5), Err(Error::TimeOutOfWindow { .. })));
        assert!(matches!(amplitude_window2(&p, 2.5), Err(Error::TimeOutOfWindow { .. })));
        assert_eq!(amplitude_window2(&params(1.0, 0.0, 0.0), 0.0), Err(Error::DegenerateDelay));
        assert!(matches!(amplitude_series(&p, f64::NAN), Err(Error::NonFiniteTime(_))));
        assert!(matches!(amplitude_series(&p, -1.0), Err(Error::NonFiniteTime(_))));
    }

    #[test]
    fn derivative_landmarks() {
        let d = abs2_derivative(&params(1.0, 1.0, FRAC_PI_2), 1.0).unwrap();
        assert!((d + (-1.0f64).exp()).abs() < 1e-15);
        let d = abs2_derivative(&params(1.0, 1.0, 0.0), 1.0).unwrap();
        assert!((d - 0.238_651_218_541_191_1).abs() < 1e-15);
        let d = abs2_derivative(&params(2.0, 1.0, 0.3), 0.4).unwrap();
        assert_eq!(d, -2.0 * (-0.8f64).exp());
    }

    #[test]
    fn poly_coefficients() {
        let a = poly_analysis(&params(1.0, 1.0, 0.0)).unwrap();
        let e = std::f64::consts::E;
        assert!((a.c2 - e).abs() < 1e-15);
        assert!((a.c1 - 1.158_321_425_882_422_2).abs() < 1e-14);
        assert!((a.c0 + 2.594_885_082_800_512_8).abs() < 1e-14);
        assert!((a.delta - 29.556_224_395_722_6).abs() < 1e-12);
        assert!((a.delta - (a.c1 * a.c1 - 4.0 * a.c0 * a.c2)).abs() < 1e-12);

        let b = poly_analysis(&params(1.0, 1.0, FRAC_PI_2)).unwrap();
        assert!((b.c0 - 4.0).abs() < 1e-15);

        let c = poly_analysis(&params(1.0, 0.1, FRAC_PI_2)).unwrap();
        assert!(c.delta < 0.0 && c.roots.is_none());

        let d = poly_analysis(&params(1.0, 1.0, PI)).unwrap();
        let (xm, _) = d.roots.unwrap();
        assert!((xm - 1.213_061_319_425_266_8).abs() < 1e-14);

        assert_eq!(poly_analysis(&params(1.0, 0.0, 0.0)), Err(Error::DegenerateDelay));
        assert!(poly_analysis(&params(0.0, 1.0, 0.0)).is_err());
    }

    fn fd_abs2(p: &Params, t: f64) -> f64 {
        let h = 1e-6 * t.max(1.0);
        let f = |s: f64| amplitude_series(p, s).unwrap().norm_sqr();
        (f(t + h) - f(t - h)) / (2.0 * h)
    }

    proptest! {
        #[test]
        fn modulus_bounded(u in 1e-3f64..6.0, g in 0.1f64..10.0, phi in 0.0f64..TAU, frac in 0.0f64..4.0) {
            let p = params(g, u / g, phi);
            let eps = amplitude_series(&p, frac * p.t_delay).unwrap();
            prop_assert!(eps.norm() <= 1.0 + 1e-9);
        }

        #[test]
        fn first_window_modulus_exact(g in 0.1f64..10.0, td in 0.01f64..3.0, phi in 0.0f64..TAU, frac in 0.0f64..=1.0) {
            let p = params(g, td, phi);
            let t = frac * td;
            let eps = amplitude_series(&p, t).unwrap();
            prop_assert!((eps.norm() - (-0.5 * g * t).exp()).abs() <= 1e-15);
        }

        #[test]
        fn continuous_at_breakpoints(g in 0.1f64..5.0, td in 0.05f64..3.0, phi in 0.0f64..TAU) {
            let p = params(g, td, phi);
            for k in [1.0, 2.0, 3.0] {
                let t = k * td;
                let left = amplitude_series(&p, t - t * 1e-15).unwrap();
                let right = amplitude_series(&p, t + t * 1e-15).unwrap();
                prop_assert!((left - right).norm() < 1e-12);
            }
        }

        #[test]
        fn window2_matches_series(g in 0.1f64..5.0, td in 0.05f64..3.0, phi in -10.0f64..10.0, frac in 0.0f64..=1.0) {
            let p = params(g, td, phi);
            let t = td * (1.0 + frac);
            let d = amplitude_window2(&p, t).unwrap() - amplitude_series(&p, t).unwrap();
            prop_assert!(d.norm() < 1e-12);
        }

        #[test]
        fn derivative_matches_finite_difference(g in 0.1f64..5.0, u in 0.01f64..6.0, phi in 0.0f64..TAU, frac in 0.01f64..0.99) {
            let p = params(g, u / g, phi);
            let t = p.t_delay * (1.0 + frac);
            let exact = abs2_derivative(&p, t).unwrap();
            prop_assert!((exact - fd_abs2(&p, t)).abs() < 1e-5);
        }

        #[test]
        fn polynomial_reconstructs_derivative(g in 0.1f64..5.0, u in 0.01f64..6.0, phi in 0.0f64..TAU, frac in 0.01f64..0.99) {
            let p = params(g, u / g, phi);
            let a = poly_analysis(&p).unwrap();
            let x = frac * p.t_delay;
            let t = p.t_delay + x;
            let rebuilt = -4.0 / (g * (-g * t).exp()) * abs2_derivative(&p, t).unwrap();
            let direct = a.eval(x);
            let scale = a.c2 * x * x + a.c1.abs() * x + a.c0.abs();
            prop_assert!((rebuilt - direct).abs() <= 1e-8 * scale.max(1e-300), "{rebuilt} vs {direct}");
        }

        #[test]
        fn poly_invariants(g in 0.1f64..5.0, u in 0.01f64..8.0, phi in 0.0f64..TAU) {
            let a = poly_analysis(&params(g, u / g, phi)).unwrap();
            prop_assert!(a.c2 > 0.0);
            let def = a.c1 * a.c1 - 4.0 * a.c0 * a.c2;
            prop_assert!((a.delta - def).abs() <= 1e-9 * (a.c1 * a.c1 + (4.0 * a.c0 * a.c2).abs()));
            if let Some((xm, xp)) = a.roots {
                prop_assert!(xm <= xp);
                prop_assert!((xm + xp + a.c1 / a.c2).abs() <= 1e-9 * (a.c1 / a.c2).abs().max(xp.abs()));
                let rp = (a.c0 / a.c2).abs().max((xm.abs() + xp.abs()).powi(2));
                prop_assert!((xm * xp - a.c0 / a.c2).abs() <= 1e-9 * rp);
                let scale = a.c2 * xm.abs().max(xp.abs()).powi(2) + a.c1.abs() * xm.abs().max(xp.abs()) + a.c0.abs();
                prop_assert!(a.eval(xm).abs() <= 1e-9 * scale.max(1.0));
                prop_assert!(a.eval(xp).abs() <= 1e-9 * scale.max(1.0));
            }
        }

        #[test]
        fn periodic_in_phase(g in 0.1f64..5.0, td in 0.05f64..3.0, phi in 0.0f64..TAU, frac in 0.0f64..4.0) {
            let p = params(g, td, phi);
            let q = params(g, td, phi + TAU);
            let t = frac * td;
            let (a, b) = (amplitude_series(&p, t).unwrap(), amplitude_series(&q, t).unwrap());
            prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-3));
            let (pa, pb) = (poly_analysis(&p).unwrap(), poly_analysis(&q).unwrap());
            prop_assert!((pa.c0 - pb.c0).abs() <= 1e-12 * pa.c0.abs().max(1.0));
            prop_assert!((pa.delta - pb.delta).abs() <= 1e-12 * pa.delta.abs().max(1.0));
        }
    }
}
