//! Physical parameters and time grids shared by every other module.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::{Error, Result};

/// Excited-state probability amplitude ε(t).
pub type ComplexAmplitude = Complex64;

/// The physical triple (Γ, t_d, φ).
///
/// `phi` is kept exactly as supplied; trigonometric consumers go through
/// [`Params::cos_phi`] / [`Params::sin_phi`], which reduce the angle first.
/// `gamma == 0` is accepted and marks the uncoupled, frozen dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// Spontaneous emission rate without the mirror.
    pub gamma: f64,
    /// Atom-mirror-atom round-trip time.
    pub t_delay: f64,
    /// Round-trip optical phase.
    pub phi: f64,
}

impl Params {
    pub fn new(gamma: f64, t_delay: f64, phi: f64) -> Result<Self> {
        validate_params(Params { gamma, t_delay, phi })
    }

    /// Builds the point (Γ = 1, t_d = u, φ) of the dimensionless plane.
    pub fn from_dimensionless(u: f64, phi: f64) -> Result<Self> {
        Self::new(1.0, u, phi)
    }

    /// Γ·t_d.
    pub fn u(&self) -> f64 {
        dimensionless(self)
    }

    /// True when Γ = 0: no coupling, ε(t) ≡ 1.
    pub fn is_trivial(&self) -> bool {
        self.gamma == 0.0
    }

    pub fn cos_phi(&self) -> f64 {
        reduce_angle(self.phi).cos()
    }

    pub fn sin_phi(&self) -> f64 {
        reduce_angle(self.phi).sin()
    }

    /// e^{iφ}
    pub fn phase(&self) -> Complex64 {
        Complex64::new(self.cos_phi(), self.sin_phi())
    }
}

/// Maps an angle into (-π, π] so that φ and φ + 2πn hit the same argument.
pub(crate) fn reduce_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Checks the parameter invariants and returns the triple unchanged.
pub fn validate_params(p: Params) -> Result<Params> {
    for (name, value) in [("gamma", p.gamma), ("t_delay", p.t_delay), ("phi", p.phi)] {
        if !value.is_finite() {
            return Err(Error::NonFiniteField(name));
        }
    }
    if p.gamma < 0.0 {
        return Err(Error::NonPositiveGamma(p.gamma));
    }
    if p.t_delay < 0.0 {
        return Err(Error::NegativeDelay(p.t_delay));
    }
    Ok(p)
}

/// The dimensionless delay u = Γ·t_d.
pub fn dimensionless(p: &Params) -> f64 {
    p.gamma * p.t_delay
}

/// Uniform grid with both endpoints hit exactly.
///
/// Point `k` is `t_start + k·(t_end − t_start)/(n − 1)`, computed directly
/// rather than accumulated, so there is no drift and the last point is
/// `t_end` bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::ConfigInvalid("grid bounds must be finite".into()));
        }
        if t_start < 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "grid start must be non-negative (got {t_start})"
            )));
        }
        Self::axis(t_start, t_end, n_points)
    }

    /// Same as [`TimeGrid::new`] without the non-negativity requirement on
    /// the start; used for parameter axes.
    pub fn axis(start: f64, end: f64, n_points: usize) -> Result<Self> {
        if end.partial_cmp(&start) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::ConfigInvalid(format!(
                "grid end {end} must exceed start {start}"
            )));
        }
        if n_points < 2 {
            return Err(Error::ConfigInvalid(format!(
                "grid needs at least 2 points (got {n_points})"
            )));
        }
        Ok(TimeGrid { t_start: start, t_end: end, n_points })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_points - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        assert!(k < self.n_points, "grid index {k} out of range");
        if k == self.n_points - 1 {
            return self.t_end;
        }
        self.t_start + k as f64 * (self.t_end - self.t_start) / (self.n_points - 1) as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.point(k))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().collect()
    }
}
