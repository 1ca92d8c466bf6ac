//! Markovian / non-Markovian verdicts on the window `t ∈ [0, 2 t_d]`.
//!
//! |ε| decays as `e^{-Γt/2}` up to `t_d`, so only `[t_d, 2 t_d]` can show
//! growth. There the dynamics is Markovian iff the convex quadratic `p(x)`
//! is non-negative on `[0, t_d]`, which happens iff one of
//!
//! - (i)   `e^{u/2} < 2|sin φ|` (no real roots),
//! - (ii)  `c0 ≥ 0`, `Δ ≥ 0`, `x₊ ≤ 0` (both roots left of the window),
//! - (iii) `c0 ≥ 0`, `Δ ≥ 0`, `x₋ ≥ t_d` (both roots right of the window).
//!
//! Everything depends on `u = Γ t_d` and `φ` only, so the decision is made on
//! the dimensionless point `(Γ = 1, t_d = u)`.
//!
//! Verdicts say nothing about `t > 2 t_d`. A point found non-Markovian here is
//! non-Markovian for the full evolution too, but not conversely.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::analytic::{abs2_derivative, poly_analysis, PolyAnalysis};
use crate::params::validate_params;
use crate::{Error, Params, Result, TimeGrid};

/// Label attached to every verdict the classifier emits.
pub const WINDOW_LABEL: &str = "[0,2t_d]";

/// Derivative samples above this count as growth in the brute-force scan.
pub const SCAN_GROWTH_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_THRESHOLD_TOL: f64 = 1e-10;
pub const DEFAULT_U_MAX: f64 = 3.0;
pub const THRESHOLD_SCAN_POINTS: usize = 512;
const WITNESS_SCAN_POINTS: usize = 257;
/// Depth of the search below the first scan point. Deeper probes reach u
/// where e^{u/2} rounds to 1 and c0 = 0 exactly, which is not a threshold.
const PROBE_HALVINGS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    CondI,
    CondII,
    CondIII,
    /// t_d = 0: |ε| is a plain exponential.
    NoDelay,
    /// Γ = 0: ε is frozen.
    Uncoupled,
    /// Markovian according to a dense derivative scan.
    Scan,
    None,
}

impl Condition {
    pub fn label(&self) -> &'static str {
        match self {
            Condition::CondI => "COND_I",
            Condition::CondII => "COND_II",
            Condition::CondIII => "COND_III",
            Condition::NoDelay => "NO_DELAY",
            Condition::Uncoupled => "UNCOUPLED",
            Condition::Scan => "SCAN",
            Condition::None => "NONE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub markovian: bool,
    pub condition: Condition,
    /// Some `x = t − t_d ∈ [0, t_d]` where |ε| grows; present iff non-Markovian.
    pub witness_x: Option<f64>,
}

impl Verdict {
    fn markovian(condition: Condition) -> Self {
        Verdict { markovian: true, condition, witness_x: None }
    }

    fn non_markovian(witness_x: f64) -> Self {
        Verdict { markovian: false, condition: Condition::None, witness_x: Some(witness_x) }
    }
}

fn normalized(p: &Params) -> Params {
    Params { gamma: 1.0, t_delay: p.u(), phi: p.phi }
}

/// Point of `[0, u]` where `p` is most negative.
fn growth_witness(poly: &PolyAnalysis, u: f64) -> f64 {
    let vertex = poly.vertex().clamp(0.0, u);
    if poly.eval(vertex) < 0.0 {
        return vertex;
    }
    let grid = TimeGrid::new(0.0, u, WITNESS_SCAN_POINTS).expect("u > 0");
    grid.iter()
        .map(|x| (x, poly.eval(x)))
        .fold((vertex, poly.eval(vertex)), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0
}

/// Decides Markovianity on `[0, 2 t_d]` from the closed-form conditions.
///
/// `t_d = 0` and `Γ = 0` are Markovian without further analysis.
pub fn classify(p: &Params) -> Result<Verdict> {
    let p = validate_params(*p)?;
    if p.is_trivial() {
        return Ok(Verdict::markovian(Condition::Uncoupled));
    }
    let u = p.u();
    if u == 0.0 {
        return Ok(Verdict::markovian(Condition::NoDelay));
    }
    let q = normalized(&p);
    if (0.5 * u).exp() < 2.0 * q.sin_phi().abs() {
        return Ok(Verdict::markovian(Condition::CondI));
    }
    let poly = poly_analysis(&q)?;
    if poly.c0 >= 0.0 {
        if let Some((x_minus, x_plus)) = poly.roots {
            if x_plus <= 0.0 {
                return Ok(Verdict::markovian(Condition::CondII));
            }
            if x_minus >= u {
                return Ok(Verdict::markovian(Condition::CondIII));
            }
        }
    }
    Ok(Verdict::non_markovian(growth_witness(&poly, u) / p.gamma))
}

/// Largest sampled `d|ε|²/dt` over `[0, 2 t_d]`, with the time it occurs.
///
/// `n_scan` points are taken on each of `[0, t_d]` and `[t_d, 2 t_d]`.
pub fn extremal_derivative(p: &Params, n_scan: usize) -> Result<(f64, f64)> {
    let p = validate_params(*p)?;
    if p.t_delay == 0.0 {
        return Err(Error::DegenerateDelay);
    }
    if n_scan < 64 {
        return Err(Error::ConfigInvalid(format!("n_scan must be at least 64 (got {n_scan})")));
    }
    let first = TimeGrid::new(0.0, p.t_delay, n_scan)?;
    let second = TimeGrid::new(p.t_delay, 2.0 * p.t_delay, n_scan)?;
    let mut best = (0.0, f64::NEG_INFINITY);
    for t in first.iter().take(n_scan - 1).chain(second.iter()) {
        let d = abs2_derivative(&p, t)?;
        if d > best.1 {
            best = (t, d);
        }
    }
    Ok(best)
}

/// Oracle for [`classify`]: samples the derivative densely and calls the
/// dynamics non-Markovian iff any sample exceeds [`SCAN_GROWTH_TOLERANCE`].
pub fn classify_bruteforce(p: &Params, n_scan: usize) -> Result<Verdict> {
    let (t, d) = extremal_derivative(p, n_scan)?;
    Ok(if d > SCAN_GROWTH_TOLERANCE {
        Verdict::non_markovian(t - p.t_delay)
    } else {
        Verdict::markovian(Condition::Scan)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPoint {
    pub phi: f64,
    /// Γ t_d at which the window verdict turns non-Markovian; 0 when it is
    /// non-Markovian for every u > 0, `u_max` when no transition was found.
    pub u_star: f64,
    /// Markovian → non-Markovian transitions seen while scanning u.
    pub crossings: usize,
}

fn markovian_at(u: f64, phi: f64) -> bool {
    classify(&Params { gamma: 1.0, t_delay: u, phi }).map(|v| v.markovian).unwrap_or(false)
}

/// Locates the threshold value of u at fixed φ.
///
/// u is scanned on 512 points of `(0, u_max]`. If the first scan point is
/// already non-Markovian, smaller u are probed by repeated halving (down to
/// about `u_max · 1e-12`) so that thresholds below the scan resolution (φ
/// close to 0 mod 2π) are still found. The first transition is refined by
/// bisection until the bracket is narrower than `tol` (relative to u when
/// u < 1).
pub fn threshold_at(phi: f64, tol: f64, u_max: f64) -> Result<ThresholdPoint> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::ConfigInvalid(format!("tol must be positive (got {tol})")));
    }
    if !(u_max > 0.0 && u_max.is_finite()) {
        return Err(Error::ConfigInvalid(format!("u_max must be positive (got {u_max})")));
    }
    if !phi.is_finite() {
        return Err(Error::NonFiniteField("phi"));
    }
    let grid = TimeGrid::axis(u_max / THRESHOLD_SCAN_POINTS as f64, u_max, THRESHOLD_SCAN_POINTS)?;
    let scan: Vec<(f64, bool)> = grid.iter().map(|u| (u, markovian_at(u, phi))).collect();

    let mut brackets: Vec<(f64, f64)> = Vec::new();
    if !scan[0].1 {
        let mut u = scan[0].0;
        for _ in 0..PROBE_HALVINGS {
            u *= 0.5;
            if markovian_at(u, phi) {
                brackets.push((u, 2.0 * u));
                break;
            }
        }
    }
    brackets.extend(scan.windows(2).filter(|w| w[0].1 && !w[1].1).map(|w| (w[0].0, w[1].0)));

    let crossings = brackets.len();
    let u_star = match brackets.first() {
        Some(&(mut lo, mut hi)) => {
            for _ in 0..200 {
                if hi - lo <= tol * hi.min(1.0) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if markovian_at(mid, phi) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
        None if scan.iter().any(|s| s.1) => u_max,
        None => 0.0,
    };
    Ok(ThresholdPoint { phi, u_star, crossings })
}

/// [`threshold_at`] over a grid of phases, evaluated in parallel.
pub fn threshold_curve(phi_axis: &TimeGrid, tol: f64, u_max: f64) -> Result<Vec<ThresholdPoint>> {
    phi_axis.to_vec().into_par_iter().map(|phi| threshold_at(phi, tol, u_max)).collect()
}

/// Verdicts on a `(φ, u)` grid; rows are phases, columns are values of u.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub phi_axis: TimeGrid,
    pub u_axis: TimeGrid,
    /// Row-major: `cells[i * u_axis.len() + j]` is `(φ_i, u_j)`.
    pub cells: Vec<Verdict>,
}

impl RegionMap {
    pub fn cell(&self, i: usize, j: usize) -> &Verdict {
        &self.cells[i * self.u_axis.len() + j]
    }

    pub fn column(&self, i: usize) -> &[Verdict] {
        let n = self.u_axis.len();
        &self.cells[i * n..(i + 1) * n]
    }

    /// Markovian → non-Markovian transitions along u at phase index `i`.
    pub fn crossings(&self, i: usize) -> usize {
        self.column(i).windows(2).filter(|w| w[0].markovian && !w[1].markovian).count()
    }

    /// Largest u on the grid below the first transition at phase index `i`
    /// (0 if the first cell is already non-Markovian).
    pub fn grid_threshold(&self, i: usize) -> f64 {
        self.column(i)
            .iter()
            .enumerate()
            .take_while(|(_, v)| v.markovian)
            .last()
            .map(|(j, _)| self.u_axis.point(j))
            .unwrap_or(0.0)
    }
}

/// Classifies every point of `φ ∈ [0, 2π]` × `u ∈ (0, u_max]` with Γ = 1.
pub fn region_map(phi_points: usize, u_points: usize, u_max: f64) -> Result<RegionMap> {
    if !(u_max > 0.0 && u_max.is_finite()) {
        return Err(Error::ConfigInvalid(format!("u_max must be positive (got {u_max})")));
    }
    let phi_axis = TimeGrid::axis(0.0, TAU, phi_points)?;
    let u_axis = TimeGrid::axis(u_max / u_points as f64, u_max, u_points)?;
    let cells = (0..phi_points * u_points)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / u_points, k % u_points);
            classify(&Params { gamma: 1.0, t_delay: u_axis.point(j), phi: phi_axis.point(i) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionMap { phi_axis, u_axis, cells })
}
