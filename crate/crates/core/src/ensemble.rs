//! Disorder Monte Carlo, parameter sweeps and chain-length scaling.
//!
//! Realizations and sweep cells are independent work items run on the
//! current rayon pool. Results are gathered by index, so outputs are
//! bit-identical for any thread count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{DisorderSpec, RNG_SCHEME};
use crate::dynamics::{
    final_transfer_probability, propagate_two_level, transfer_probability, Model, StateVector, StepControl,
};
use crate::error::{QstError, Result};
use crate::schedule::{LzParams, ProtocolSchedule};

/// XOR-ed into the master seed for the LZ half of an unpaired comparison.
pub const MARGINAL_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// A schedule bound to a chain length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub schedule: ProtocolSchedule,
    pub n_dimers: usize,
}

impl Protocol {
    pub fn new(schedule: ProtocolSchedule, n_dimers: usize) -> Result<Self> {
        if n_dimers == 0 {
            return Err(QstError::invalid("n_dimers", "must be at least 1"));
        }
        schedule.validate()?;
        Ok(Self { schedule, n_dimers })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` equally spaced edges on [0, 1].
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Normalized so that `sum(density * width) = 1`.
    pub density: Vec<f64>,
}

impl Histogram {
    /// Equal-width density histogram of probabilities on [0, 1]. A sample of
    /// exactly 1 falls in the last bin.
    pub fn from_samples(samples: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(QstError::invalid("bins", "must be at least 1"));
        }
        if samples.is_empty() {
            return Err(QstError::invalid("realizations", "must be at least 1"));
        }
        let mut counts = vec![0usize; bins];
        for &p in samples {
            let b = ((p.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let width = 1.0 / bins as f64;
        let total = samples.len() as f64;
        let density = counts.iter().map(|&c| c as f64 / (total * width)).collect();
        let edges = (0..=bins).map(|k| k as f64 / bins as f64).collect();
        Ok(Self {
            edges,
            counts,
            density,
        })
    }

    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
    pub fraction_above_0_9: f64,
    pub fraction_above_0_95: f64,
}

pub fn fraction_above(samples: &[f64], threshold: f64) -> f64 {
    samples.iter().filter(|&&p| p > threshold).count() as f64 / samples.len() as f64
}

fn median(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

impl Summary {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            median: median(samples),
            std_error: (var / n).sqrt(),
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            fraction_above_0_9: fraction_above(samples, 0.9),
            fraction_above_0_95: fraction_above(samples, 0.95),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleOptions {
    pub realizations: usize,
    pub seed: u64,
    pub bins: usize,
    pub control: StepControl,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            realizations: 1000,
            seed: 0,
            bins: 100,
            control: StepControl::default(),
        }
    }
}

impl EnsembleOptions {
    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(QstError::invalid("realizations", "must be at least 1"));
        }
        if self.bins == 0 {
            return Err(QstError::invalid("bins", "must be at least 1"));
        }
        self.control.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMetadata {
    pub protocol: ProtocolSchedule,
    pub n_dimers: usize,
    pub disorder: DisorderSpec,
    pub seed: u64,
    pub realizations: usize,
    pub bins: usize,
    pub step_budget: f64,
    pub rng_scheme: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    /// `p_2N(T)` for realization `k` at position `k`.
    pub samples: Vec<f64>,
    pub histogram: Histogram,
    pub summary: Summary,
    pub metadata: EnsembleMetadata,
}

/// `p_2N(T)` for realizations `0..M` of `(seed, k)` disorder.
pub fn run_ensemble(
    protocol: &Protocol,
    disorder: &DisorderSpec,
    options: &EnsembleOptions,
) -> Result<EnsembleResult> {
    disorder.validate()?;
    options.validate()?;
    if let ProtocolSchedule::Lz(p) = &protocol.schedule {
        p.check_decoupling(protocol.n_dimers)?;
    }
    let samples = (0..options.realizations)
        .into_par_iter()
        .map(|k| {
            let realization = disorder.sample(protocol.n_dimers, options.seed, k as u64)?;
            final_transfer_probability(
                protocol.n_dimers,
                &protocol.schedule,
                Some(&realization),
                &options.control,
            )
        })
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| QstError::Realization {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(EnsembleResult {
        histogram: Histogram::from_samples(&samples, options.bins)?,
        summary: Summary::from_samples(&samples),
        samples,
        metadata: EnsembleMetadata {
            protocol: protocol.schedule,
            n_dimers: protocol.n_dimers,
            disorder: *disorder,
            seed: options.seed,
            realizations: options.realizations,
            bins: options.bins,
            step_budget: options.control.budget,
            rng_scheme: RNG_SCHEME.to_string(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// Both protocols see the same disorder matrix for each realization index.
    #[default]
    Paired,
    /// The second protocol draws from an independent master seed.
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub pairing: Pairing,
    pub rabi: EnsembleResult,
    pub lz: EnsembleResult,
}

impl Comparison {
    /// Per-realization `p_lz - p_rabi`.
    pub fn differences(&self) -> Vec<f64> {
        self.lz
            .samples
            .iter()
            .zip(&self.rabi.samples)
            .map(|(l, r)| l - r)
            .collect()
    }
}

pub fn compare_protocols(
    rabi: &Protocol,
    lz: &Protocol,
    disorder: &DisorderSpec,
    options: &EnsembleOptions,
    pairing: Pairing,
) -> Result<Comparison> {
    if rabi.n_dimers != lz.n_dimers {
        return Err(QstError::DimensionMismatch {
            expected: 2 * rabi.n_dimers,
            found: 2 * lz.n_dimers,
        });
    }
    let lz_options = match pairing {
        Pairing::Paired => *options,
        Pairing::Marginal => EnsembleOptions {
            seed: options.seed ^ MARGINAL_SEED_MIX,
            ..*options
        },
    };
    Ok(Comparison {
        pairing,
        rabi: run_ensemble(rabi, disorder, options)?,
        lz: run_ensemble(lz, disorder, &lz_options)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "T")]
    Duration,
    #[serde(rename = "delta0")]
    Delta0,
    #[serde(rename = "epsilon")]
    Epsilon,
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "tau_z")]
    TauZ,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Duration => "T",
            SweepParam::Delta0 => "delta0",
            SweepParam::Epsilon => "epsilon",
            SweepParam::Tau => "tau",
            SweepParam::TauZ => "tau_z",
        })
    }
}

impl FromStr for SweepParam {
    type Err = QstError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" => Ok(SweepParam::Duration),
            "delta0" | "δ₀" | "δ0" => Ok(SweepParam::Delta0),
            "epsilon" | "eps" | "ε" => Ok(SweepParam::Epsilon),
            "tau" | "τ" => Ok(SweepParam::Tau),
            "tau_z" | "tau_Z" | "τ_Z" | "τ_z" => Ok(SweepParam::TauZ),
            other => Err(QstError::UnknownParameter(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(param: SweepParam, values: Vec<f64>) -> Result<Self> {
        let axis = Self { param, values };
        axis.validate()?;
        Ok(axis)
    }

    /// `count` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(param: SweepParam, start: f64, stop: f64, count: usize) -> Result<Self> {
        let values = match count {
            0 => Vec::new(),
            1 => vec![start],
            _ => (0..count)
                .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
                .collect(),
        };
        Self::new(param, values)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(QstError::invalid(
                "grid",
                format!("axis `{}` is empty", self.param),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) || self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(QstError::invalid(
                "grid",
                format!("axis `{}` must be finite and strictly increasing", self.param),
            ));
        }
        Ok(())
    }
}

/// Apply parameter overrides to a base schedule. `T` is applied last: for the
/// LZ protocol it fixes `tau_z = T - 2 tau` with whatever `tau` is in effect.
pub fn with_parameters(base: &ProtocolSchedule, params: &[(SweepParam, f64)]) -> Result<ProtocolSchedule> {
    let mut ordered: Vec<(SweepParam, f64)> = params.to_vec();
    ordered.sort_by_key(|(p, _)| *p == SweepParam::Duration);
    let mut schedule = *base;
    for (param, value) in ordered {
        let inapplicable = || QstError::InapplicableParameter {
            param: param.to_string(),
            protocol: base.name(),
        };
        match (&mut schedule, param) {
            (ProtocolSchedule::Rabi(p), SweepParam::Duration) => p.duration = value,
            (ProtocolSchedule::Rabi(p), SweepParam::Epsilon) => p.epsilon = value,
            (ProtocolSchedule::Static(p), SweepParam::Duration) => p.duration = value,
            (ProtocolSchedule::Lz(p), SweepParam::Duration) => {
                p.tau_z = value - 2.0 * p.tau;
                if p.tau_z <= 0.0 {
                    return Err(QstError::invalid(
                        "T",
                        format!(
                            "T = {value} leaves no sweep time after two ramps of tau = {}",
                            p.tau
                        ),
                    ));
                }
            }
            (ProtocolSchedule::Lz(p), SweepParam::Epsilon) => p.epsilon = value,
            (ProtocolSchedule::Lz(p), SweepParam::Delta0) => p.delta0 = value,
            (ProtocolSchedule::Lz(p), SweepParam::Tau) => p.tau = value,
            (ProtocolSchedule::Lz(p), SweepParam::TauZ) => p.tau_z = value,
            _ => return Err(inapplicable()),
        }
    }
    schedule.validate()?;
    Ok(schedule)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
    /// `values[i][j]` is `p_2N` at `(axis1[i], axis2[j])`.
    pub values: Vec<Vec<f64>>,
    pub base: ProtocolSchedule,
    pub n_dimers: usize,
    pub model: Model,
}

/// Disorder-free `p_2N` over a two-parameter grid.
pub fn sweep2d(
    base: &ProtocolSchedule,
    axis1: &SweepAxis,
    axis2: &SweepAxis,
    n_dimers: usize,
    model: Model,
    control: &StepControl,
) -> Result<SweepResult> {
    axis1.validate()?;
    axis2.validate()?;
    control.validate()?;
    if axis1.param == axis2.param {
        return Err(QstError::invalid(
            "grid",
            format!("both axes sweep `{}`", axis1.param),
        ));
    }
    let pair = [axis1.param, axis2.param];
    if pair.contains(&SweepParam::Duration) && pair.contains(&SweepParam::TauZ) {
        return Err(QstError::invalid(
            "grid",
            "`T` and `tau_z` cannot be swept together",
        ));
    }

    let cols = axis2.values.len();
    let mut schedules = Vec::with_capacity(axis1.values.len() * cols);
    for (row, &v1) in axis1.values.iter().enumerate() {
        for (col, &v2) in axis2.values.iter().enumerate() {
            let s = with_parameters(base, &[(axis1.param, v1), (axis2.param, v2)]).map_err(|e| {
                QstError::SweepCell {
                    row,
                    col,
                    source: Box::new(e),
                }
            })?;
            schedules.push(s);
        }
    }

    let flat = schedules
        .par_iter()
        .map(|s| cell_probability(s, n_dimers, model, control))
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| QstError::SweepCell {
                row: i / cols,
                col: i % cols,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(SweepResult {
        axis1: axis1.clone(),
        axis2: axis2.clone(),
        values: flat.chunks(cols).map(<[f64]>::to_vec).collect(),
        base: *base,
        n_dimers,
        model,
    })
}

fn cell_probability(
    schedule: &ProtocolSchedule,
    n_dimers: usize,
    model: Model,
    control: &StepControl,
) -> Result<f64> {
    match model {
        Model::Full => final_transfer_probability(n_dimers, schedule, None, control),
        Model::TwoLevel => {
            let initial = StateVector::two_level(1.0.into(), 0.0.into());
            let control = StepControl {
                samples: 2,
                record_sites: false,
                ..*control
            };
            propagate_two_level(schedule, n_dimers, &initial, &control).map(|t| transfer_probability(&t))
        }
    }
}

/// Reference LZ parameters and their size dependence:
/// `eps = a / N`, `delta0 = b / N`, `tau = tau_ref (N / N_ref)^rho`,
/// `T = T_ref (N / N_ref)^rho`, `tau_z = T - 2 tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingRule {
    pub epsilon_coeff: f64,
    pub delta0_coeff: f64,
    pub tau_ref: f64,
    pub duration_ref: f64,
    pub n_ref: f64,
}

impl Default for ScalingRule {
    fn default() -> Self {
        Self {
            epsilon_coeff: 1.0,
            delta0_coeff: 2.0,
            tau_ref: 60.0,
            duration_ref: 240.0,
            n_ref: 10.0,
        }
    }
}

impl ScalingRule {
    pub fn params(&self, rho: f64, n_dimers: usize) -> Result<LzParams> {
        if !(rho.is_finite() && rho >= 1.0) {
            return Err(QstError::invalid("rho", format!("must be >= 1, got {rho}")));
        }
        if n_dimers < 2 {
            return Err(QstError::invalid(
                "sizes",
                format!("N must be at least 2, got {n_dimers}"),
            ));
        }
        let n = n_dimers as f64;
        let factor = (n / self.n_ref).powf(rho);
        let tau = self.tau_ref * factor;
        let tau_z = self.duration_ref * factor - 2.0 * tau;
        if tau_z <= 0.0 {
            return Err(QstError::invalid(
                "tau_z",
                format!("derived sweep time {tau_z} is not positive"),
            ));
        }
        LzParams::new(self.epsilon_coeff / n, self.delta0_coeff / n, tau, tau_z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n_dimers: usize,
    pub sites: usize,
    pub params: LzParams,
    pub transfer_probability: f64,
}

/// Disorder-free LZ transfer for each chain length under the scaling rule.
pub fn scaling_study(
    rho: f64,
    sizes: &[usize],
    rule: &ScalingRule,
    control: &StepControl,
) -> Result<Vec<ScalingPoint>> {
    let params = sizes
        .iter()
        .map(|&n| rule.params(rho, n))
        .collect::<Result<Vec<_>>>()?;
    sizes
        .par_iter()
        .zip(params.par_iter())
        .map(|(&n, p)| {
            let p_2n = final_transfer_probability(n, &ProtocolSchedule::Lz(*p), None, control)?;
            Ok(ScalingPoint {
                n_dimers: n,
                sites: 2 * n,
                params: *p,
                transfer_probability: p_2n,
            })
        })
        .collect()
}
