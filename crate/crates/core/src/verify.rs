//! Self-check suite: oracle agreement, threshold landmarks, map properties
//! and witness equivalence.
//!
//! Each check is deterministic (fixed seeds, fixed grids), so two runs of
//! the same profile produce byte-identical reports. `Full` uses the sizes the
//! acceptance tests require; `Fast` shrinks the sweeps to run in a few
//! seconds.

use std::f64::consts::{FRAC_PI_2, LN_2, PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::{abs2_derivative, amplitude_series};
use crate::channel::{blp_witness, evolve, trace_distance, Probe, QubitState};
use crate::classifier::{
    classify, classify_bruteforce, extremal_derivative, region_map, threshold_at, DEFAULT_THRESHOLD_TOL,
    DEFAULT_U_MAX,
};
use crate::dde::{max_deviation, IntegratorConfig};
use crate::{Params, Result, TimeGrid};

/// Cells whose largest sampled d|ε|²/dt is this close to zero sit on the
/// threshold and are excluded from equivalence checks.
pub const BOUNDARY_DERIVATIVE: f64 = 1e-9;
const TWO_LN_2: f64 = 2.0 * LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Fast,
    Full,
}

impl Profile {
    fn pick<T>(self, fast: T, full: T) -> T {
        match self {
            Profile::Fast => fast,
            Profile::Full => full,
        }
    }

    pub fn label(self) -> &'static str {
        self.pick("fast", "full")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u32, name: &'static str, passed: bool, detail: String) -> Self {
        CriterionResult { id, name, passed, detail }
    }

    fn failed(id: u32, name: &'static str, err: crate::Error) -> Self {
        CriterionResult::new(id, name, false, format!("error: {err}"))
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}. {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub profile: Profile,
    pub results: Vec<CriterionResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "verify profile={}", self.profile.label());
        for r in &self.results {
            let _ = writeln!(s, "{}", r.line());
        }
        let passed = self.results.iter().filter(|r| r.passed).count();
        let _ = writeln!(s, "{passed}/{} passed", self.results.len());
        s
    }
}

type Check = fn(Profile) -> CriterionResult;

/// All checks in order.
pub const CHECKS: [Check; 9] = [
    oracle_agreement,
    threshold_landmark,
    no_threshold_line,
    region_map_properties,
    bruteforce_equivalence,
    derivative_correctness,
    channel_properties,
    witness_equivalence,
    threshold_at_pi,
];

pub fn run(profile: Profile) -> Report {
    Report { profile, results: CHECKS.iter().map(|check| check(profile)).collect() }
}

fn finish(id: u32, name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> CriterionResult {
    match body() {
        Ok((passed, detail)) => CriterionResult::new(id, name, passed, detail),
        Err(e) => CriterionResult::failed(id, name, e),
    }
}

/// Random point with Γ log-uniform on [0.1, 10] and Γ t_d uniform on (0, u_max].
fn random_params(rng: &mut ChaCha8Rng, u_max: f64) -> Params {
    let gamma = 10f64.powf(rng.gen_range(-1.0..=1.0));
    let u = u_max * (1.0 - rng.gen::<f64>());
    let phi = rng.gen_range(0.0..TAU);
    Params { gamma, t_delay: u / gamma, phi }
}

/// `n` values of u on (0, u_max]: u_j = u_max · j / n.
fn open_u_axis(n: usize, u_max: f64) -> Result<TimeGrid> {
    TimeGrid::axis(u_max / n as f64, u_max, n)
}

/// Series vs. RK4 integrator over `[0, 4 t_d]` at default resolution.
pub fn oracle_agreement(profile: Profile) -> CriterionResult {
    finish(1, "oracle agreement (series vs RK4)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        let points: Vec<Params> = (0..profile.pick(10, 50)).map(|_| random_params(&mut rng, 6.0)).collect();
        let worst = points
            .par_iter()
            .map(|p| max_deviation(p, &IntegratorConfig::new(4.0 * p.t_delay)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0f64, f64::max);
        Ok((worst <= 1e-8, format!("{} points, max |Δε| = {worst:.3e} (tol 1e-8)", points.len())))
    })
}

/// u* at φ = π/2 and growth everywhere beyond 2 ln 2.
pub fn threshold_landmark(profile: Profile) -> CriterionResult {
    finish(2, "threshold landmark 2 ln 2", || {
        let t = threshold_at(FRAC_PI_2, DEFAULT_THRESHOLD_TOL, DEFAULT_U_MAX)?;
        let err = (t.u_star - TWO_LN_2).abs();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        let n = profile.pick(50, 200);
        let mut markovian = 0;
        for _ in 0..n {
            let u = rng.gen_range(TWO_LN_2 + 1e-6..10.0);
            let phi = rng.gen_range(0.0..TAU);
            if classify(&Params::from_dimensionless(u, phi)?)?.markovian {
                markovian += 1;
            }
        }
        Ok((
            err <= 1e-9 && markovian == 0,
            format!("u*(π/2) - 2ln2 = {err:.2e} (tol 1e-9); {markovian}/{n} Markovian points beyond 2ln2"),
        ))
    })
}

/// φ = 0 and φ = 2π are non-Markovian for every u.
pub fn no_threshold_line(_profile: Profile) -> CriterionResult {
    finish(3, "no threshold at φ = 0, 2π", || {
        let axis = TimeGrid::axis(1e-3, 3.0, 100)?;
        let mut markovian = 0;
        for phi in [0.0, TAU] {
            for u in axis.iter() {
                if classify(&Params::from_dimensionless(u, phi)?)?.markovian {
                    markovian += 1;
                }
            }
        }
        Ok((markovian == 0, format!("{markovian}/200 Markovian verdicts on u ∈ [1e-3, 3]")))
    })
}

/// Mirror symmetry, single crossing per phase, and the location and height
/// of the threshold maximum on the region map.
pub fn region_map_properties(profile: Profile) -> CriterionResult {
    finish(4, "region map properties", || {
        let (n_phi, n_u) = profile.pick((181, 150), (361, 300));
        let map = region_map(n_phi, n_u, 3.0)?;
        let du = map.u_axis.step();
        let mut asymmetric = 0;
        let mut multi = 0;
        for i in 0..n_phi {
            if map.crossings(i) > 1 {
                multi += 1;
            }
            for j in 0..n_u {
                if map.cell(i, j).markovian != map.cell(n_phi - 1 - i, j).markovian {
                    asymmetric += 1;
                }
            }
        }
        let thresholds: Vec<f64> = (0..n_phi).map(|i| map.grid_threshold(i)).collect();
        let best = thresholds.iter().copied().fold(0.0f64, f64::max);
        let quarter = (n_phi - 1) / 4;
        let at_peaks = thresholds[quarter] == best && thresholds[3 * quarter] == best;
        let height_ok = (best - TWO_LN_2).abs() <= du;
        let passed = asymmetric == 0 && multi == 0 && at_peaks && height_ok;
        Ok((
            passed,
            format!(
                "{n_phi}x{n_u}: {asymmetric} asymmetric cells, {multi} multi-crossing columns, \
                 max grid threshold {best:.4} at π/2 and 3π/2: {at_peaks} (2ln2 ± {du:.4}: {height_ok})"
            ),
        ))
    })
}

struct EquivalenceTally {
    compared: usize,
    excluded: usize,
    disagreements: usize,
}

impl EquivalenceTally {
    fn summary(&self) -> String {
        format!(
            "{} cells compared, {} boundary cells excluded, {} disagreements",
            self.compared, self.excluded, self.disagreements
        )
    }
}

/// Runs `agree` on every grid cell that is not on the threshold boundary.
fn grid_equivalence(
    n: usize,
    scan: usize,
    agree: impl Fn(&Params) -> Result<bool> + Sync,
) -> Result<EquivalenceTally> {
    let phis = TimeGrid::axis(0.0, TAU, n)?;
    let us = open_u_axis(n, 3.0)?;
    let outcomes = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let p = Params::from_dimensionless(us.point(k % n), phis.point(k / n))?;
            let (_, extremal) = extremal_derivative(&p, scan)?;
            if extremal.abs() < BOUNDARY_DERIVATIVE {
                return Ok(None);
            }
            agree(&p).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquivalenceTally {
        compared: outcomes.iter().filter(|o| o.is_some()).count(),
        excluded: outcomes.iter().filter(|o| o.is_none()).count(),
        disagreements: outcomes.iter().filter(|o| **o == Some(false)).count(),
    })
}

/// Closed-form conditions vs. dense derivative scan.
pub fn bruteforce_equivalence(profile: Profile) -> CriterionResult {
    finish(5, "closed-form vs brute-force classification", || {
        let (n, scan) = profile.pick((41, 1024), (101, 4096));
        let tally = grid_equivalence(n, scan, |p| {
            Ok(classify(p)?.markovian == classify_bruteforce(p, scan)?.markovian)
        })?;
        Ok((tally.disagreements == 0, format!("{n}x{n}, scan {scan}: {}", tally.summary())))
    })
}

/// Exact d|ε|²/dt vs. centered finite differences of |ε|².
pub fn derivative_correctness(profile: Profile) -> CriterionResult {
    finish(6, "derivative vs finite differences", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
        let n = profile.pick(200, 1000);
        let mut worst = 0.0f64;
        for _ in 0..n {
            let p = random_params(&mut rng, 6.0);
            let t = p.t_delay * (1.0 + rng.gen_range(1e-6..1.0 - 1e-6));
            let h = 1e-6 * t.max(1.0);
            let f = |s: f64| amplitude_series(&p, s).map(|e| e.norm_sqr());
            let fd = (f(t + h)? - f(t - h)?) / (2.0 * h);
            worst = worst.max((abs2_derivative(&p, t)? - fd).abs());
        }
        Ok((worst <= 1e-5, format!("{n} points, max |exact - fd| = {worst:.3e} (tol 1e-5)")))
    })
}

/// Trace and positivity preservation, and D(±) = |ε|.
pub fn channel_properties(profile: Profile) -> CriterionResult {
    finish(7, "channel trace/positivity/probe identity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
        let n = profile.pick(2_000, 10_000);
        let (mut trace_err, mut min_det, mut probe_err) = (0.0f64, f64::INFINITY, 0.0f64);
        for _ in 0..n {
            // Uniform direction and radius in the Bloch ball.
            let z: f64 = rng.gen_range(-1.0..=1.0);
            let az = rng.gen_range(0.0..TAU);
            let r = rng.gen::<f64>().cbrt();
            let state = QubitState::new(
                0.5 * (1.0 + r * z),
                0.5 * (1.0 - r * z),
                Complex64::from_polar(0.5 * r * (1.0 - z * z).sqrt(), az),
            )?;
            let eps = Complex64::from_polar(rng.gen::<f64>(), rng.gen_range(0.0..TAU));
            let out = evolve(&state, eps)?;
            trace_err = trace_err.max((out.trace() - 1.0).abs());
            min_det = min_det.min(out.determinant());
            let a = evolve(&QubitState::plus(), eps)?;
            let b = evolve(&QubitState::minus(), eps)?;
            probe_err = probe_err.max((trace_distance(&a, &b)? - eps.norm()).abs());
        }
        let passed = trace_err <= 1e-12 && min_det >= -1e-12 && probe_err <= 1e-12;
        Ok((
            passed,
            format!("{n} states: trace err {trace_err:.1e}, min det {min_det:.1e}, |D± - |ε|| {probe_err:.1e}"),
        ))
    })
}

/// Backflow witness on the ± probes vs. the classifier.
pub fn witness_equivalence(_profile: Profile) -> CriterionResult {
    finish(8, "trace-distance witness vs classifier", || {
        let tally = grid_equivalence(41, 4096, |p| {
            Ok(blp_witness(p, Probe::PlusMinus, 4096)?.markovian == classify(p)?.markovian)
        })?;
        Ok((tally.disagreements == 0, format!("41x41: {}", tally.summary())))
    })
}

/// Root of `u e^{u/2} = 2`, where `x₋ = t_d` at φ = π.
pub fn cond_iii_root_at_pi() -> f64 {
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid * (0.5 * mid).exp() < 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// u*(π) against the independent root.
pub fn threshold_at_pi(_profile: Profile) -> CriterionResult {
    finish(9, "threshold at φ = π", || {
        let t = threshold_at(PI, DEFAULT_THRESHOLD_TOL, DEFAULT_U_MAX)?;
        let root = cond_iii_root_at_pi();
        let err = (t.u_star - root).abs();
        Ok((err <= 1e-9, format!("u*(π) = {:.12}, root = {root:.12}, diff {err:.2e} (tol 1e-9)", t.u_star)))
    })
}
