//! Fixed-step RK4 for the delay equation, advanced by the method of steps.
//!
//! The step is `h = t_d / N`, so the delayed argument of every full-step
//! stage lands on a stored node. The half-step stages need ε between nodes;
//! those come from 4-point cubic Lagrange interpolation on stored nodes. The
//! stencil never straddles a multiple of `t_d`, where the history has a kink.
//!
//! This integrator shares no code with [`crate::analytic`] and serves as its
//! oracle.

use num_complex::Complex64;

use crate::analytic;
use crate::params::validate_params;
use crate::{ComplexAmplitude, Error, Params, Result, TimeGrid};

pub const DEFAULT_STEPS_PER_DELAY: usize = 1024;
pub const MIN_STEPS_PER_DELAY: usize = 16;
/// Largest `t_max / t_d` accepted by [`max_deviation`].
pub const MAX_DEVIATION_WINDOWS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Rk4Steps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub steps_per_delay: usize,
    pub t_max: f64,
    pub method: Method,
}

impl IntegratorConfig {
    pub fn new(t_max: f64) -> Self {
        IntegratorConfig {
            steps_per_delay: DEFAULT_STEPS_PER_DELAY,
            t_max,
            method: Method::Rk4Steps,
        }
    }

    pub fn with_steps(mut self, steps_per_delay: usize) -> Self {
        self.steps_per_delay = steps_per_delay;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_delay < MIN_STEPS_PER_DELAY {
            return Err(Error::ConfigInvalid(format!(
                "steps_per_delay must be at least {MIN_STEPS_PER_DELAY} (got {})",
                self.steps_per_delay
            )));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "t_max must be finite and positive (got {})",
                self.t_max
            )));
        }
        Ok(())
    }
}

/// ε sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTrace {
    pub grid: TimeGrid,
    pub values: Vec<ComplexAmplitude>,
}

impl AmplitudeTrace {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.iter()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, ComplexAmplitude)> + '_ {
        self.grid.iter().zip(self.values.iter().copied())
    }
}

/// Grid of integrator nodes `k·h` covering `[0, t_max]`.
///
/// When `t_max` is a whole number of steps (up to rounding) the last node is
/// `t_max` itself; otherwise the grid overshoots to the next node.
fn node_grid(h: f64, t_max: f64) -> Result<(TimeGrid, usize)> {
    let ratio = t_max / h;
    let nearest = ratio.round();
    let (steps, t_end) = if nearest >= 1.0 && (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        (nearest as usize, t_max)
    } else {
        let steps = ratio.ceil().max(1.0) as usize;
        (steps, steps as f64 * h)
    };
    Ok((TimeGrid::new(0.0, t_end, steps + 1)?, steps))
}

/// Cubic Lagrange weights at fractional position `s` on nodes 0..=3.
fn lagrange4(s: f64) -> [f64; 4] {
    let mut w = [1.0; 4];
    for (i, wi) in w.iter_mut().enumerate() {
        for j in 0..4 {
            if i != j {
                *wi *= (s - j as f64) / (i as f64 - j as f64);
            }
        }
    }
    w
}

/// ε at the midpoint between stored nodes `m` and `m + 1`.
fn history_midpoint(values: &[Complex64], m: usize, steps_per_delay: usize) -> Complex64 {
    let piece_start = (m / steps_per_delay) * steps_per_delay;
    let piece_last_stencil = piece_start + steps_per_delay - 3;
    let start = m.saturating_sub(1).clamp(piece_start, piece_last_stencil);
    let w = lagrange4(m as f64 + 0.5 - start as f64);
    (0..4).map(|i| values[start + i] * w[i]).sum()
}

/// Integrates the delay equation from ε(0) = 1 up to `cfg.t_max`.
///
/// With `t_d = 0` there is nothing to delay and the closed-form solution is
/// sampled on `steps_per_delay + 1` points instead.
pub fn integrate(p: &Params, cfg: &IntegratorConfig) -> Result<AmplitudeTrace> {
    let p = validate_params(*p)?;
    cfg.validate()?;
    let n = cfg.steps_per_delay;

    if p.t_delay == 0.0 {
        let grid = TimeGrid::new(0.0, cfg.t_max, n + 1)?;
        let values = grid
            .iter()
            .map(|t| analytic::amplitude_series(&p, t))
            .collect::<Result<Vec<_>>>()?;
        return Ok(AmplitudeTrace { grid, values });
    }

    let h = p.t_delay / n as f64;
    let (grid, steps) = node_grid(h, cfg.t_max)?;
    let decay = -0.5 * p.gamma;
    let drive = p.phase() * (0.5 * p.gamma);
    let rhs = |y: Complex64, delayed: Complex64| y * decay + drive * delayed;

    let mut values = Vec::with_capacity(steps + 1);
    values.push(Complex64::new(1.0, 0.0));
    for k in 0..steps {
        let y = values[k];
        let (d0, dmid, d1) = if k < n {
            // [t_k, t_{k+1}] lies before the first return.
            let zero = Complex64::new(0.0, 0.0);
            (zero, zero, zero)
        } else {
            let m = k - n;
            (values[m], history_midpoint(&values, m, n), values[m + 1])
        };
        let k1 = rhs(y, d0);
        let k2 = rhs(y + k1 * (0.5 * h), dmid);
        let k3 = rhs(y + k2 * (0.5 * h), dmid);
        let k4 = rhs(y + k3 * h, d1);
        values.push(y + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0));
    }
    Ok(AmplitudeTrace { grid, values })
}

/// Largest `|ε_dde − ε_series|` over the integrator grid.
pub fn max_deviation(p: &Params, cfg: &IntegratorConfig) -> Result<f64> {
    let p = validate_params(*p)?;
    cfg.validate()?;
    if p.t_delay > 0.0 && cfg.t_max > MAX_DEVIATION_WINDOWS * p.t_delay {
        return Err(Error::ConfigInvalid(format!(
            "t_max must not exceed {MAX_DEVIATION_WINDOWS} delays (got {} for t_d = {})",
            cfg.t_max, p.t_delay
        )));
    }
    let trace = integrate(&p, cfg)?;
    let mut worst = 0.0f64;
    for (t, v) in trace.iter() {
        worst = worst.max((v - analytic::amplitude_series(&p, t)?).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, TAU};

    use proptest::prelude::*;

    use super::*;

    fn params(g: f64, td: f64, phi: f64) -> Params {
        Params::new(g, td, phi).unwrap()
    }

    #[test]
    fn lagrange_weights() {
        let w = lagrange4(1.5);
        let expect = [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        for s in [0.5, 1.5, 2.5] {
            assert!((lagrange4(s).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn midpoint_stencil_stays_inside_piece() {
        // Values that are a cubic in the index on the first piece and garbage
        // on the next: the stencil must not reach across.
        let n = 16;
        let mut v: Vec<Complex64> = (0..=n).map(|i| Complex64::new((i as f64).powi(3), 0.0)).collect();
        v.extend((0..8).map(|_| Complex64::new(1e6, 0.0)));
        for m in 0..n {
            let x = m as f64 + 0.5;
            assert!((history_midpoint(&v, m, n).re - x.powi(3)).abs() < 1e-9, "m={m}");
        }
    }

    #[test]
    fn exact_decay_before_first_return() {
        let p = params(1.0, 1.0, 0.3);
        let trace = integrate(&p, &IntegratorConfig::new(1.0)).unwrap();
        assert_eq!(trace.grid.t_end(), 1.0);
        for (t, v) in trace.iter() {
            assert!((v - Complex64::new((-0.5 * t).exp(), 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn second_window_value() {
        let p = params(1.0, 1.0, 0.0);
        let trace = integrate(&p, &IntegratorConfig::new(2.0)).unwrap();
        let last = *trace.values.last().unwrap();
        assert!((last - Complex64::new(0.671_144_771_027_759, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn no_delay_in_phase_is_frozen() {
        let p = params(1.0, 0.0, 0.0);
        let trace = integrate(&p, &IntegratorConfig::new(3.0)).unwrap();
        for v in &trace.values {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn uncoupled_is_frozen() {
        let trace = integrate(&params(0.0, 1.0, 0.0), &IntegratorConfig::new(3.0)).unwrap();
        assert!(trace.values.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn grid_overshoots_when_unaligned() {
        let trace = integrate(&params(1.0, 1.0, 0.0), &IntegratorConfig::new(1.0001).with_steps(16)).unwrap();
        assert_eq!(trace.grid.len(), 18);
        assert!((trace.grid.t_end() - 17.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn default_resolution_accuracy() {
        for p in [params(1.0, 1.0, 0.0), params(0.1, 1.0, PI), params(2.0, 3.0, 1.3)] {
            let cfg = IntegratorConfig::new(4.0 * p.t_delay);
            let dev = max_deviation(&p, &cfg).unwrap();
            assert!(dev < 1e-8, "{p:?}: {dev:e}");
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let p = params(1.0, 1.0, 0.0);
        let coarse = max_deviation(&p, &IntegratorConfig::new(4.0).with_steps(16)).unwrap();
        let fine = max_deviation(&p, &IntegratorConfig::new(4.0)).unwrap();
        // 64x finer step: the error drops by roughly 64^4.
        let ratio = coarse / fine;
        assert!(ratio > 64f64.powi(4) / 4.0 && ratio < 64f64.powi(4) * 4.0, "ratio {ratio:e}");
    }

    #[test]
    fn config_errors() {
        let p = params(1.0, 1.0, 0.0);
        assert!(matches!(integrate(&p, &IntegratorConfig::new(1.0).with_steps(8)), Err(Error::ConfigInvalid(_))));
        assert!(matches!(integrate(&p, &IntegratorConfig::new(0.0)), Err(Error::ConfigInvalid(_))));
        assert!(matches!(integrate(&p, &IntegratorConfig::new(f64::NAN)), Err(Error::ConfigInvalid(_))));
        assert!(matches!(max_deviation(&p, &IntegratorConfig::new(13.0)), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn deterministic() {
        let p = params(1.3, 0.7, 2.2);
        let cfg = IntegratorConfig::new(2.5).with_steps(64);
        assert_eq!(integrate(&p, &cfg).unwrap(), integrate(&p, &cfg).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn halving_step_gains_sixteen(u in 0.2f64..4.0, phi in 0.0f64..TAU) {
            let p = params(1.0, u, phi);
            let cfg = IntegratorConfig::new(4.0 * u);
            let e1 = max_deviation(&p, &cfg.with_steps(32)).unwrap();
            let e2 = max_deviation(&p, &cfg.with_steps(64)).unwrap();
            let ratio = e1 / e2;
            prop_assert!((12.0..=20.0).contains(&ratio), "ratio {}", ratio);
        }

        #[test]
        fn trace_is_bounded_and_lipschitz(g in 0.1f64..5.0, u in 0.05f64..6.0, phi in 0.0f64..TAU) {
            let p = params(g, u / g, phi);
            let trace = integrate(&p, &IntegratorConfig::new(4.0 * p.t_delay).with_steps(64)).unwrap();
            prop_assert_eq!(trace.values[0], Complex64::new(1.0, 0.0));
            let h = trace.grid.step();
            let bound = g * h * (1.0 + (0.5 * u).exp() * u);
            for w in trace.values.windows(2) {
                prop_assert!(w[1].norm() <= 1.0 + 1e-9);
                prop_assert!((w[1] - w[0]).norm() <= bound);
            }
        }
    }
}
