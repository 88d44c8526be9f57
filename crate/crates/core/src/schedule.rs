//! Time-dependent protocol schedules and their closed-form analytics.
//!
//! Both adiabatic protocols keep `t1 = 1` and start and end with `t2 = 0`,
//! where the edge modes coincide with the end sites of the chain.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QstError, Result};
use crate::lattice::kappa_from_ratio;

/// Instantaneous Hamiltonian parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParameters {
    pub t1: f64,
    pub t2: f64,
    pub delta: f64,
}

impl ChainParameters {
    pub fn ratio(&self) -> f64 {
        self.t2 / self.t1
    }
}

/// Rabi flopping with an adiabatic `t2` pulse: `t2(t) = (1 - eps)/2 (1 - cos(2 pi t / T))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiParams {
    pub epsilon: f64,
    #[serde(alias = "T")]
    pub duration: f64,
}

/// Three-stage Landau-Zener sweep: delocalize at `delta = delta0`, ramp the
/// staggered field linearly to `-delta0` over `tau_z`, then relocalize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LzParams {
    pub epsilon: f64,
    pub delta0: f64,
    pub tau: f64,
    pub tau_z: f64,
}

/// Time-independent chain held for `duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticParams {
    #[serde(default = "unit")]
    pub t1: f64,
    pub t2: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(alias = "T")]
    pub duration: f64,
}

fn unit() -> f64 {
    1.0
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(QstError::invalid(
            "epsilon",
            format!("must lie in (0, 1), got {epsilon}"),
        ));
    }
    Ok(())
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(QstError::invalid(name, format!("must be positive, got {value}")));
    }
    Ok(())
}

impl RabiParams {
    pub fn new(epsilon: f64, duration: f64) -> Result<Self> {
        let p = Self { epsilon, duration };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        check_positive("T", self.duration)
    }

    pub fn t2(&self, t: f64) -> f64 {
        0.5 * (1.0 - self.epsilon) * (1.0 - (2.0 * PI * t / self.duration).cos())
    }
}

impl LzParams {
    pub fn new(epsilon: f64, delta0: f64, tau: f64, tau_z: f64) -> Result<Self> {
        let p = Self {
            epsilon,
            delta0,
            tau,
            tau_z,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        check_positive("delta0", self.delta0)?;
        check_positive("tau", self.tau)?;
        check_positive("tau_z", self.tau_z)
    }

    /// Total interaction time `2 tau + tau_z`.
    pub fn duration(&self) -> f64 {
        2.0 * self.tau + self.tau_z
    }

    /// Field sweep rate `4 delta0 / tau_z`.
    pub fn sweep_rate(&self) -> f64 {
        4.0 * self.delta0 / self.tau_z
    }

    /// Largest edge coupling along the schedule, reached on the plateau
    /// `t2 = 1 - eps`.
    pub fn kappa_max(&self, n_dimers: usize) -> Result<f64> {
        kappa_from_ratio(1.0, 1.0 - self.epsilon, n_dimers)
    }

    /// `delta0 / kappa_max`; the edge modes stay decoupled during the ramps
    /// only when this is at least of order one.
    pub fn decoupling_ratio(&self, n_dimers: usize) -> Result<f64> {
        Ok(self.delta0 / self.kappa_max(n_dimers)?)
    }

    /// Log a warning when `delta0 < kappa_max`; returns the ratio.
    pub fn check_decoupling(&self, n_dimers: usize) -> Result<f64> {
        let ratio = self.decoupling_ratio(n_dimers)?;
        if ratio < 1.0 {
            log::warn!("delta0 / kappa_max = {ratio:.3} < 1: edge modes are not decoupled during the ramps");
        }
        Ok(ratio)
    }

    fn evaluate(&self, t: f64) -> ChainParameters {
        let plateau = 1.0 - self.epsilon;
        let (t2, delta) = if t <= self.tau {
            (0.5 * plateau * (1.0 - (PI * t / self.tau).cos()), self.delta0)
        } else if t <= self.tau + self.tau_z {
            (plateau, self.delta0 - self.sweep_rate() * (t - self.tau) / 2.0)
        } else {
            (
                0.5 * plateau * (1.0 - (PI * (t - self.tau_z) / self.tau).cos()),
                -self.delta0,
            )
        };
        ChainParameters { t1: 1.0, t2, delta }
    }
}

impl StaticParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("t1", self.t1)?;
        if !(self.t2.is_finite() && self.t2 >= 0.0) {
            return Err(QstError::invalid(
                "t2",
                format!("must be non-negative, got {}", self.t2),
            ));
        }
        if !self.delta.is_finite() {
            return Err(QstError::invalid("delta", "must be finite"));
        }
        check_positive("T", self.duration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProtocolSchedule {
    Rabi(RabiParams),
    Lz(LzParams),
    Static(StaticParams),
}

impl fmt::Display for ProtocolSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl ProtocolSchedule {
    pub fn rabi(epsilon: f64, duration: f64) -> Result<Self> {
        RabiParams::new(epsilon, duration).map(Self::Rabi)
    }

    pub fn lz(epsilon: f64, delta0: f64, tau: f64, tau_z: f64) -> Result<Self> {
        LzParams::new(epsilon, delta0, tau, tau_z).map(Self::Lz)
    }

    pub fn constant(t1: f64, t2: f64, delta: f64, duration: f64) -> Result<Self> {
        let p = StaticParams {
            t1,
            t2,
            delta,
            duration,
        };
        p.validate()?;
        Ok(Self::Static(p))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rabi(_) => "rabi",
            Self::Lz(_) => "lz",
            Self::Static(_) => "static",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Rabi(p) => p.validate(),
            Self::Lz(p) => p.validate(),
            Self::Static(p) => p.validate(),
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            Self::Rabi(p) => p.duration,
            Self::Lz(p) => p.duration(),
            Self::Static(p) => p.duration,
        }
    }

    /// Parameters at time `t`, for `0 <= t <= T`.
    pub fn evaluate(&self, t: f64) -> Result<ChainParameters> {
        let duration = self.duration();
        if !(0.0..=duration).contains(&t) {
            return Err(QstError::OutsideSchedule { t, duration });
        }
        Ok(self.evaluate_unchecked(t))
    }

    pub(crate) fn evaluate_unchecked(&self, t: f64) -> ChainParameters {
        match self {
            Self::Rabi(p) => ChainParameters {
                t1: 1.0,
                t2: p.t2(t),
                delta: 0.0,
            },
            Self::Lz(p) => p.evaluate(t),
            Self::Static(p) => ChainParameters {
                t1: p.t1,
                t2: p.t2,
                delta: p.delta,
            },
        }
    }

    /// Elementwise maxima of `|t1|`, `|t2|`, `|delta|` over the schedule.
    pub fn parameter_bounds(&self) -> ChainParameters {
        match self {
            Self::Rabi(p) => ChainParameters {
                t1: 1.0,
                t2: 1.0 - p.epsilon,
                delta: 0.0,
            },
            Self::Lz(p) => ChainParameters {
                t1: 1.0,
                t2: 1.0 - p.epsilon,
                delta: p.delta0,
            },
            Self::Static(p) => ChainParameters {
                t1: p.t1,
                t2: p.t2,
                delta: p.delta.abs(),
            },
        }
    }

    /// Interior times where the schedule is only piecewise smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Lz(p) => vec![p.tau, p.tau + p.tau_z],
            _ => Vec::new(),
        }
    }

    fn max_ratio(&self) -> f64 {
        let b = self.parameter_bounds();
        match self {
            Self::Static(p) => p.t2 / p.t1,
            _ => b.t2 / b.t1,
        }
    }
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        (a, fa): (f64, f64),
        (m, fm): (f64, f64),
        (b, fb): (f64, f64),
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        recurse(f, (a, fa), (lm, flm), (m, fm), left, 0.5 * tol, depth - 1)
            + recurse(f, (m, fm), (rm, frm), (b, fb), right, 0.5 * tol, depth - 1)
    }

    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, (a, fa), (m, fm), (b, fb), whole, tol, 48)
}

/// `int_0^T kappa(t) dt` along the schedule.
pub fn area_integral(schedule: &ProtocolSchedule, n_dimers: usize) -> Result<f64> {
    schedule.validate()?;
    let max_ratio = schedule.max_ratio();
    if max_ratio >= 1.0 {
        return Err(QstError::GapClosed { ratio: max_ratio });
    }
    let kappa = |t: f64| {
        let p = schedule.evaluate_unchecked(t);
        kappa_from_ratio(p.t1, p.ratio(), n_dimers).unwrap_or(f64::NAN)
    };

    let mut edges = vec![0.0];
    edges.extend(schedule.breakpoints());
    edges.push(schedule.duration());

    // Coarse pass sets the absolute tolerance for the relative target.
    let segments: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
    let coarse: f64 = segments
        .iter()
        .map(|&(a, b)| adaptive_simpson(&kappa, a, b, 1e-6 * (b - a)))
        .sum();
    if coarse == 0.0 {
        return Ok(0.0);
    }
    let tol = 1e-10 * coarse.abs() / segments.len() as f64;
    let area: f64 = segments
        .iter()
        .map(|&(a, b)| adaptive_simpson(&kappa, a, b, tol))
        .sum();
    if !area.is_finite() {
        return Err(QstError::GapClosed { ratio: max_ratio });
    }
    Ok(area)
}

/// Duration `T*` at which the Rabi schedule accumulates edge-coupling area
/// `pi / 2`.
pub fn solve_rabi_area_time(epsilon: f64, n_dimers: usize) -> Result<f64> {
    solve_rabi_time_for_area(FRAC_PI_2, epsilon, n_dimers)
}

/// Bisection over `T in [1, 1e5]` for a given target area, to 1e-6 in area.
pub fn solve_rabi_time_for_area(target: f64, epsilon: f64, n_dimers: usize) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_positive("target", target)?;
    let area_at = |t: f64| area_integral(&ProtocolSchedule::rabi(epsilon, t)?, n_dimers);

    let (mut lo, mut hi) = (1.0, 1.0e5);
    let (a_lo, a_hi) = (area_at(lo)?, area_at(hi)?);
    if !(a_lo <= target && target <= a_hi) {
        return Err(QstError::invalid(
            "target",
            format!("area {target} is not reachable for T in [1, 1e5] (range [{a_lo}, {a_hi}])"),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let a = area_at(mid)?;
        if (a - target).abs() <= 1e-6 {
            return Ok(mid);
        }
        if a < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Landau-Zener sweep time for adiabaticity parameter one, `4 delta0 / kappa^2`.
pub fn lz_threshold_time(kappa_max: f64, delta0: f64) -> Result<f64> {
    check_positive("kappa_max", kappa_max)?;
    check_positive("delta0", delta0)?;
    Ok(4.0 * delta0 / (kappa_max * kappa_max))
}
