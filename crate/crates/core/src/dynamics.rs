//! Time propagation of the single-excitation amplitudes.
//!
//! Each step applies `exp(-i H(t_mid) dt)` with the Hamiltonian frozen at the
//! step midpoint, so every step is unitary up to how the exponential is
//! evaluated. The step is chosen so that `dt * ||H||_bound <= budget`, with the
//! bound taken over the whole run (Gershgorin on the largest parameters plus
//! the disorder).

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disorder::DisorderRealization;
use crate::error::{QstError, Result};
use crate::lattice::{fill_bands, gershgorin, kappa_from_ratio};
use crate::schedule::ProtocolSchedule;

/// Largest deviation of `||psi||^2` from one accepted for an initial state.
pub const NORM_TOLERANCE: f64 = 1e-9;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector(Vec<Complex64>);

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self(amplitudes)
    }

    /// Excitation localized on `site` (0-based) of a `len`-site chain.
    pub fn site(len: usize, site: usize) -> Self {
        let mut v = vec![C0; len];
        v[site] = C1;
        Self(v)
    }

    /// `(a_L, a_R)` for the reduced model.
    pub fn two_level(a_left: Complex64, a_right: Complex64) -> Self {
        Self(vec![a_left, a_right])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.norm_sqr()).collect()
    }

    fn check_normalized(&self) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        if norm_sqr.is_nan() || (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(QstError::NotNormalized { norm_sqr });
        }
        Ok(())
    }
}

/// How `exp(-i H dt) psi` is evaluated inside a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exponential {
    /// Taylor series on the tridiagonal bands, summed to below 1e-17 per
    /// step. Fast path; exact to rounding for `budget <= 1`.
    #[default]
    Taylor,
    /// Dense eigendecomposition of the real symmetric `H`.
    Eigen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepControl {
    /// Upper bound on `dt * ||H||`.
    pub budget: f64,
    /// Number of uniformly spaced recorded samples, endpoints included.
    pub samples: usize,
    /// Record every site population, not just the two end sites.
    pub record_sites: bool,
    pub exponential: Exponential,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            budget: 0.02,
            samples: 500,
            record_sites: false,
            exponential: Exponential::Taylor,
        }
    }
}

impl StepControl {
    pub fn with_budget(budget: f64) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.budget > 0.0 && self.budget <= 1.0) {
            return Err(QstError::invalid(
                "step_budget",
                format!("must lie in (0, 1], got {}", self.budget),
            ));
        }
        if self.samples < 2 {
            return Err(QstError::invalid("samples", "at least 2 samples are required"));
        }
        Ok(())
    }

    fn step_count(&self, duration: f64, norm_bound: f64) -> usize {
        ((duration * norm_bound / self.budget).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Full,
    TwoLevel,
}

/// Recorded populations of a run. For the reduced model `p_first` and
/// `p_last` hold `|a_L|^2` and `|a_R|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub model: Model,
    pub times: Vec<f64>,
    pub p_first: Vec<f64>,
    pub p_last: Vec<f64>,
    /// Per-sample site populations, when requested.
    pub sites: Option<Vec<Vec<f64>>>,
    pub final_state: StateVector,
    pub steps: usize,
    pub dt: f64,
}

impl Trajectory {
    /// `| ||psi(T)||^2 - 1 |`.
    pub fn norm_drift(&self) -> f64 {
        (self.final_state.norm_sqr() - 1.0).abs()
    }
}

/// Receiver population `|c_2N(T)|^2` (or `|a_R(T)|^2`).
pub fn transfer_probability(traj: &Trajectory) -> f64 {
    traj.final_state.amplitudes().last().map_or(0.0, |c| c.norm_sqr())
}

/// Input-averaged fidelity of the channel, `1/2 + |f|/3 + |f|^2/6`.
pub fn average_fidelity(transfer_amplitude_modulus: f64) -> Result<f64> {
    let f = transfer_amplitude_modulus;
    if !(0.0..=1.0 + 1e-12).contains(&f) {
        return Err(QstError::invalid("|f|", format!("must lie in [0, 1], got {f}")));
    }
    let f = f.min(1.0);
    Ok((3.0 + f * (2.0 + f)) / 6.0)
}

/// Landau-Zener estimate `1 - exp(-2 pi kappa^2 / alpha)` with sweep rate
/// `alpha = 4 delta0 / tau_z`.
pub fn lz_analytic_probability(kappa: f64, delta0: f64, tau_z: f64) -> Result<f64> {
    for (name, v) in [("kappa", kappa), ("delta0", delta0), ("tau_z", tau_z)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(QstError::invalid(name, format!("must be positive, got {v}")));
        }
    }
    let gamma = kappa * kappa * tau_z / (4.0 * delta0);
    Ok(-(-2.0 * PI * gamma).exp_m1())
}

/// Sample step indices `0 = k_0 < ... < k_last = steps`.
fn sample_indices(steps: usize, samples: usize) -> Vec<usize> {
    let samples = samples.min(steps + 1);
    let mut idx: Vec<usize> = (0..samples).map(|k| k * steps / (samples - 1)).collect();
    idx.dedup();
    idx
}

struct Recorder {
    indices: Vec<usize>,
    next: usize,
    dt: f64,
    duration: f64,
    steps: usize,
    times: Vec<f64>,
    p_first: Vec<f64>,
    p_last: Vec<f64>,
    sites: Option<Vec<Vec<f64>>>,
}

impl Recorder {
    fn new(steps: usize, dt: f64, duration: f64, control: &StepControl) -> Self {
        let indices = sample_indices(steps, control.samples);
        let cap = indices.len();
        Self {
            indices,
            next: 0,
            dt,
            duration,
            steps,
            times: Vec::with_capacity(cap),
            p_first: Vec::with_capacity(cap),
            p_last: Vec::with_capacity(cap),
            sites: control.record_sites.then(|| Vec::with_capacity(cap)),
        }
    }

    fn observe(&mut self, step: usize, psi: &[Complex64]) {
        if self.indices.get(self.next) != Some(&step) {
            return;
        }
        self.next += 1;
        let t = if step == self.steps {
            self.duration
        } else {
            step as f64 * self.dt
        };
        self.times.push(t);
        self.p_first.push(psi[0].norm_sqr());
        self.p_last.push(psi[psi.len() - 1].norm_sqr());
        if let Some(sites) = self.sites.as_mut() {
            sites.push(psi.iter().map(|c| c.norm_sqr()).collect());
        }
    }

    fn finish(self, model: Model, final_state: StateVector) -> Trajectory {
        Trajectory {
            model,
            times: self.times,
            p_first: self.p_first,
            p_last: self.p_last,
            sites: self.sites,
            final_state,
            steps: self.steps,
            dt: self.dt,
        }
    }
}

/// `psi <- exp(-i H dt) psi` for tridiagonal `H` by its Taylor series.
fn taylor_step(
    diag: &[f64],
    off: &[f64],
    dt: f64,
    psi: &mut [Complex64],
    term: &mut [Complex64],
    next: &mut [Complex64],
) {
    let n = psi.len();
    term.copy_from_slice(psi);
    for k in 1..=64 {
        let scale = dt / k as f64;
        let mut size = 0.0;
        for i in 0..n {
            let mut h = term[i] * diag[i];
            if i > 0 {
                h += term[i - 1] * off[i - 1];
            }
            if i + 1 < n {
                h += term[i + 1] * off[i];
            }
            // (-i * scale) * h
            let v = Complex64::new(h.im * scale, -h.re * scale);
            size += v.norm_sqr();
            next[i] = v;
        }
        term.copy_from_slice(next);
        for (p, t) in psi.iter_mut().zip(term.iter()) {
            *p += t;
        }
        if size < 1e-34 {
            break;
        }
    }
}

/// `psi <- U exp(-i Lambda dt) U^T psi` from a dense symmetric eigensolve.
fn eigen_step(diag: &[f64], off: &[f64], dt: f64, psi: &mut [Complex64]) {
    let n = psi.len();
    let h = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => diag[i],
        1 => off[i.min(j)],
        _ => 0.0,
    });
    let eig = SymmetricEigen::new(h);
    let u = &eig.eigenvectors;
    let coeffs: Vec<Complex64> = (0..n)
        .map(|k| {
            let proj: Complex64 = (0..n).map(|i| psi[i] * u[(i, k)]).sum();
            proj * Complex64::from_polar(1.0, -eig.eigenvalues[k] * dt)
        })
        .collect();
    for (i, p) in psi.iter_mut().enumerate() {
        *p = (0..n).map(|k| coeffs[k] * u[(i, k)]).sum();
    }
}

struct FullRun<'a> {
    schedule: &'a ProtocolSchedule,
    perturbation: Option<&'a DisorderRealization>,
    sites: usize,
    steps: usize,
    dt: f64,
    exponential: Exponential,
}

impl<'a> FullRun<'a> {
    fn prepare(
        n_dimers: usize,
        schedule: &'a ProtocolSchedule,
        perturbation: Option<&'a DisorderRealization>,
        control: &StepControl,
    ) -> Result<Self> {
        if n_dimers == 0 {
            return Err(QstError::invalid("n_dimers", "must be at least 1"));
        }
        schedule.validate()?;
        control.validate()?;
        let sites = 2 * n_dimers;
        let bounds = schedule.parameter_bounds();
        let mut diag = vec![0.0; sites];
        let mut off = vec![0.0; sites - 1];
        fill_bands(
            bounds.t1.abs(),
            bounds.t2.abs(),
            bounds.delta.abs(),
            &mut diag,
            &mut off,
        );
        let mut norm_bound = gershgorin(&diag, &off);
        if let Some(p) = perturbation {
            p.check_dimension(sites)?;
            norm_bound += p.norm_bound();
        }
        let duration = schedule.duration();
        let steps = control.step_count(duration, norm_bound);
        Ok(Self {
            schedule,
            perturbation,
            sites,
            steps,
            dt: duration / steps as f64,
            exponential: control.exponential,
        })
    }

    fn run(&self, psi: &mut [Complex64], mut observe: impl FnMut(usize, &[Complex64])) {
        let n = self.sites;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        let mut term = vec![C0; n];
        let mut next = vec![C0; n];
        observe(0, psi);
        for step in 0..self.steps {
            let t_mid = (step as f64 + 0.5) * self.dt;
            let p = self.schedule.evaluate_unchecked(t_mid);
            fill_bands(p.t1, p.t2, p.delta, &mut diag, &mut off);
            if let Some(pert) = self.perturbation {
                pert.add_to_bands(&mut diag, &mut off);
            }
            match self.exponential {
                Exponential::Taylor => taylor_step(&diag, &off, self.dt, psi, &mut term, &mut next),
                Exponential::Eigen => eigen_step(&diag, &off, self.dt, psi),
            }
            observe(step + 1, psi);
        }
    }
}

/// Integrate `i dc/dt = (H(t) + dH) c` over the schedule.
pub fn propagate_full(
    n_dimers: usize,
    schedule: &ProtocolSchedule,
    perturbation: Option<&DisorderRealization>,
    initial: &StateVector,
    control: &StepControl,
) -> Result<Trajectory> {
    let run = FullRun::prepare(n_dimers, schedule, perturbation, control)?;
    if initial.len() != run.sites {
        return Err(QstError::DimensionMismatch {
            expected: run.sites,
            found: initial.len(),
        });
    }
    initial.check_normalized()?;
    let mut psi = initial.0.clone();
    let mut rec = Recorder::new(run.steps, run.dt, schedule.duration(), control);
    run.run(&mut psi, |step, psi| rec.observe(step, psi));
    Ok(rec.finish(Model::Full, StateVector(psi)))
}

/// Final receiver population for an excitation launched on the first site,
/// without recording a trajectory.
pub fn final_transfer_probability(
    n_dimers: usize,
    schedule: &ProtocolSchedule,
    perturbation: Option<&DisorderRealization>,
    control: &StepControl,
) -> Result<f64> {
    let run = FullRun::prepare(n_dimers, schedule, perturbation, control)?;
    let mut psi = StateVector::site(run.sites, 0).0;
    run.run(&mut psi, |_, _| {});
    Ok(psi[run.sites - 1].norm_sqr())
}

/// Integrate the reduced edge-mode model
/// `i a_L' = delta a_L + kappa a_R`, `i a_R' = -delta a_R + kappa a_L`
/// with `kappa(t)` evaluated on the instantaneous hopping ratio.
pub fn propagate_two_level(
    schedule: &ProtocolSchedule,
    n_dimers: usize,
    initial: &StateVector,
    control: &StepControl,
) -> Result<Trajectory> {
    if n_dimers == 0 {
        return Err(QstError::invalid("n_dimers", "must be at least 1"));
    }
    schedule.validate()?;
    control.validate()?;
    if initial.len() != 2 {
        return Err(QstError::DimensionMismatch {
            expected: 2,
            found: initial.len(),
        });
    }
    initial.check_normalized()?;

    let bounds = schedule.parameter_bounds();
    let kappa_max = kappa_from_ratio(bounds.t1, bounds.t2 / bounds.t1, n_dimers)?;
    let duration = schedule.duration();
    let steps = control.step_count(duration, bounds.delta.abs() + kappa_max);
    let dt = duration / steps as f64;

    let mut a = [initial.0[0], initial.0[1]];
    let mut rec = Recorder::new(steps, dt, duration, control);
    rec.observe(0, &a);
    for step in 0..steps {
        let p = schedule.evaluate_unchecked((step as f64 + 0.5) * dt);
        let kappa = kappa_from_ratio(p.t1, p.ratio(), n_dimers)?;
        let omega = p.delta.hypot(kappa);
        let (c, s) = if omega > 0.0 {
            let (sin, cos) = (omega * dt).sin_cos();
            (cos, sin / omega)
        } else {
            (1.0, dt)
        };
        // exp(-i dt (delta sz + kappa sx)) = c I - i s (delta sz + kappa sx)
        let mi = Complex64::new(0.0, -s);
        let (al, ar) = (a[0], a[1]);
        a[0] = al * c + mi * (al * p.delta + ar * kappa);
        a[1] = ar * c + mi * (al * kappa - ar * p.delta);
        rec.observe(step + 1, &a);
    }
    Ok(rec.finish(Model::TwoLevel, StateVector(a.to_vec())))
}
