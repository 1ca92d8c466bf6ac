//! The qubit channel induced by the emission process, and a trace-distance
//! witness of information backflow.
//!
//! With the field starting in vacuum the atom's state maps as an amplitude
//! damping channel with complex amplitude ε(t):
//!
//! ```text
//! ρ_ee → |ε|² ρ_ee
//! ρ_gg → ρ_gg + (1 − |ε|²) ρ_ee
//! ρ_ge → ε* ρ_ge
//! ```
//!
//! The ground-state entry is the trace-preserving completion. Writing it as
//! `(1 − |ε|²) ρ_gg` only agrees for the pure states |g⟩, |e⟩ and loses trace
//! otherwise.

use num_complex::Complex64;

use crate::analytic::amplitude_series;
use crate::params::validate_params;
use crate::{ComplexAmplitude, Error, Params, Result, TimeGrid};

const STATE_TOLERANCE: f64 = 1e-12;
/// Slack on |ε| ≤ 1 for amplitudes produced numerically.
const AMPLITUDE_SLACK: f64 = 1e-9;
/// Accumulated backflow at or below this value counts as none.
pub const WITNESS_TOLERANCE: f64 = 1e-10;
pub const MIN_WITNESS_STEPS: usize = 256;

/// Single-qubit density matrix; `ρ_eg` is the conjugate of `rho_ge`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub rho_gg: f64,
    pub rho_ee: f64,
    pub rho_ge: Complex64,
}

impl QubitState {
    pub fn new(rho_gg: f64, rho_ee: f64, rho_ge: Complex64) -> Result<Self> {
        let s = QubitState { rho_gg, rho_ee, rho_ge };
        s.validate()?;
        Ok(s)
    }

    pub fn ground() -> Self {
        QubitState { rho_gg: 1.0, rho_ee: 0.0, rho_ge: Complex64::new(0.0, 0.0) }
    }

    pub fn excited() -> Self {
        QubitState { rho_gg: 0.0, rho_ee: 1.0, rho_ge: Complex64::new(0.0, 0.0) }
    }

    /// (|g⟩ + |e⟩)/√2
    pub fn plus() -> Self {
        QubitState { rho_gg: 0.5, rho_ee: 0.5, rho_ge: Complex64::new(0.5, 0.0) }
    }

    /// (|g⟩ − |e⟩)/√2
    pub fn minus() -> Self {
        QubitState { rho_gg: 0.5, rho_ee: 0.5, rho_ge: Complex64::new(-0.5, 0.0) }
    }

    pub fn trace(&self) -> f64 {
        self.rho_gg + self.rho_ee
    }

    pub fn determinant(&self) -> f64 {
        self.rho_gg * self.rho_ee - self.rho_ge.norm_sqr()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.rho_gg.is_finite()
            && self.rho_ee.is_finite()
            && self.rho_ge.re.is_finite()
            && self.rho_ge.im.is_finite();
        if !finite {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        if (self.trace() - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {} != 1", self.trace())));
        }
        if self.rho_gg < -STATE_TOLERANCE || self.rho_ee < -STATE_TOLERANCE {
            return Err(Error::InvalidState("negative population".into()));
        }
        if self.determinant() < -STATE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "not positive (determinant {})",
                self.determinant()
            )));
        }
        Ok(())
    }
}

/// Applies the channel with amplitude `eps` to `rho0`.
pub fn evolve(rho0: &QubitState, eps: ComplexAmplitude) -> Result<QubitState> {
    rho0.validate()?;
    let modulus = eps.norm();
    if !modulus.is_finite() || modulus > 1.0 + AMPLITUDE_SLACK {
        return Err(Error::AmplitudeTooLarge(modulus));
    }
    let survival = eps.norm_sqr().min(1.0);
    Ok(QubitState {
        rho_gg: rho0.rho_gg + (1.0 - survival) * rho0.rho_ee,
        rho_ee: survival * rho0.rho_ee,
        rho_ge: eps.conj() * rho0.rho_ge,
    })
}

/// Half the trace norm of `a − b`.
///
/// The difference is traceless and Hermitian, `[[-d, c], [c*, d]]`, with
/// eigenvalues `±sqrt(d² + |c|²)`.
pub fn trace_distance(a: &QubitState, b: &QubitState) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let d = a.rho_ee - b.rho_ee;
    let c = a.rho_ge - b.rho_ge;
    Ok(d.hypot(c.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    /// |+⟩ and |−⟩: trace distance equals |ε|.
    PlusMinus,
    /// |e⟩ and |g⟩: trace distance equals |ε|².
    ExcitedGround,
}

impl Probe {
    pub fn states(&self) -> (QubitState, QubitState) {
        match self {
            Probe::PlusMinus => (QubitState::plus(), QubitState::minus()),
            Probe::ExcitedGround => (QubitState::excited(), QubitState::ground()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Probe::PlusMinus => "PLUS_MINUS",
            Probe::ExcitedGround => "E_G",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessReport {
    /// Sum of the positive increments of the trace distance over `[0, 2 t_d]`.
    pub nm_measure: f64,
    pub markovian: bool,
}

/// Trace distance of the evolved probe pair at each grid time.
pub fn probe_distances(p: &Params, probe: Probe, grid: &TimeGrid) -> Result<Vec<f64>> {
    let (a, b) = probe.states();
    grid.iter()
        .map(|t| {
            let eps = amplitude_series(p, t)?;
            trace_distance(&evolve(&a, eps)?, &evolve(&b, eps)?)
        })
        .collect()
}

/// Accumulates trace-distance growth of a probe pair on `n_steps` uniform
/// steps over `[0, 2 t_d]`.
///
/// A window of zero length (t_d = 0) or frozen dynamics (Γ = 0) gives 0.
pub fn blp_witness(p: &Params, probe: Probe, n_steps: usize) -> Result<WitnessReport> {
    let p = validate_params(*p)?;
    if n_steps < MIN_WITNESS_STEPS {
        return Err(Error::ConfigInvalid(format!(
            "witness needs at least {MIN_WITNESS_STEPS} steps (got {n_steps})"
        )));
    }
    if p.t_delay == 0.0 || p.is_trivial() {
        return Ok(WitnessReport { nm_measure: 0.0, markovian: true });
    }
    let grid = TimeGrid::new(0.0, 2.0 * p.t_delay, n_steps + 1)?;
    let distances = probe_distances(&p, probe, &grid)?;
    let nm_measure: f64 = distances.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum();
    Ok(WitnessReport { nm_measure, markovian: nm_measure <= WITNESS_TOLERANCE })
}
