//! Frozen random perturbations of the chain Hamiltonian.
//!
//! A realization is a pure function of `(seed, index)`: the master seed keys a
//! ChaCha8 generator and the realization index selects its stream, so any
//! realization can be regenerated on any worker without touching the others.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QstError, Result};

/// Human-readable description of the substream scheme, recorded in output
/// metadata.
pub const RNG_SCHEME: &str =
    "ChaCha8Rng::seed_from_u64(seed) with set_stream(index); values strength * (2u - 1), u ~ Open01";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisorderKind {
    /// Static fluctuations of the inter-dimer hopping `t1`.
    OffDiagonal,
    /// Static random site energies.
    OnDiagonal,
}

impl fmt::Display for DisorderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DisorderKind::OffDiagonal => "off-diagonal",
            DisorderKind::OnDiagonal => "on-diagonal",
        })
    }
}

impl FromStr for DisorderKind {
    type Err = QstError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off-diagonal" | "offdiagonal" | "off" => Ok(DisorderKind::OffDiagonal),
            "on-diagonal" | "ondiagonal" | "diagonal" | "on" => Ok(DisorderKind::OnDiagonal),
            other => Err(QstError::invalid(
                "disorder.kind",
                format!("expected `off-diagonal` or `on-diagonal`, got `{other}`"),
            )),
        }
    }
}

/// Kind and strength of a disorder ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    pub kind: DisorderKind,
    pub strength: f64,
}

impl DisorderSpec {
    pub fn new(kind: DisorderKind, strength: f64) -> Result<Self> {
        let spec = Self { kind, strength };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strength.is_finite() && self.strength >= 0.0) {
            return Err(QstError::invalid(
                "disorder.strength",
                format!("must be non-negative, got {}", self.strength),
            ));
        }
        Ok(())
    }

    pub fn sample(&self, n_dimers: usize, seed: u64, index: u64) -> Result<DisorderRealization> {
        match self.kind {
            DisorderKind::OffDiagonal => sample_offdiagonal(self.strength, n_dimers, seed, index),
            DisorderKind::OnDiagonal => sample_diagonal(self.strength, n_dimers, seed, index),
        }
    }
}

/// One frozen perturbation `dH`, applied unchanged at every time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub kind: DisorderKind,
    pub strength: f64,
    pub n_dimers: usize,
    pub seed: u64,
    pub index: u64,
    /// Off-diagonal: `N - 1` inter-dimer bond shifts. On-diagonal: `2N` site
    /// energies.
    pub values: Vec<f64>,
}

fn draws(strength: f64, count: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..count)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            strength * (2.0 * u - 1.0)
        })
        .collect()
}

fn check_strength(strength: f64) -> Result<()> {
    if !(strength.is_finite() && strength >= 0.0) {
        return Err(QstError::invalid(
            "disorder.strength",
            format!("must be non-negative, got {strength}"),
        ));
    }
    Ok(())
}

/// Uniform shifts on (-strength, strength) for each of the `N - 1` inter-dimer bonds.
pub fn sample_offdiagonal(
    strength: f64,
    n_dimers: usize,
    seed: u64,
    index: u64,
) -> Result<DisorderRealization> {
    check_strength(strength)?;
    Ok(DisorderRealization {
        kind: DisorderKind::OffDiagonal,
        strength,
        n_dimers,
        seed,
        index,
        values: draws(strength, n_dimers.saturating_sub(1), seed, index),
    })
}

/// Uniform site energies on (-strength, strength) for all `2N` sites.
pub fn sample_diagonal(strength: f64, n_dimers: usize, seed: u64, index: u64) -> Result<DisorderRealization> {
    check_strength(strength)?;
    Ok(DisorderRealization {
        kind: DisorderKind::OnDiagonal,
        strength,
        n_dimers,
        seed,
        index,
        values: draws(strength, 2 * n_dimers, seed, index),
    })
}

impl DisorderRealization {
    pub fn dimension(&self) -> usize {
        2 * self.n_dimers
    }

    pub(crate) fn check_dimension(&self, sites: usize) -> Result<()> {
        let expected_values = match self.kind {
            DisorderKind::OffDiagonal => sites / 2 - 1,
            DisorderKind::OnDiagonal => sites,
        };
        if self.dimension() != sites || self.values.len() != expected_values {
            return Err(QstError::DimensionMismatch {
                expected: sites,
                found: self.dimension(),
            });
        }
        Ok(())
    }

    /// Add `dH` to tridiagonal bands of matching dimension.
    pub(crate) fn add_to_bands(&self, diag: &mut [f64], off: &mut [f64]) {
        match self.kind {
            DisorderKind::OnDiagonal => {
                for (d, v) in diag.iter_mut().zip(&self.values) {
                    *d += v;
                }
            }
            DisorderKind::OffDiagonal => {
                // Inter-dimer bonds are the odd bonds 1, 3, ..., 2N - 3.
                for (k, v) in self.values.iter().enumerate() {
                    off[2 * k + 1] += v;
                }
            }
        }
    }

    /// Largest absolute row sum of `dH`. Inter-dimer bonds never share a
    /// site, so each row holds at most one value for either kind.
    pub(crate) fn norm_bound(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dimension();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        self.add_to_bands(&mut diag, &mut off);
        DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => diag[i],
            1 => off[i.min(j)],
            _ => 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sublattice_parity(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                if i % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            }
        })
    }

    #[test]
    fn zero_strength_is_zero_matrix() {
        for kind in [DisorderKind::OffDiagonal, DisorderKind::OnDiagonal] {
            let r = DisorderSpec::new(kind, 0.0).unwrap().sample(10, 7, 3).unwrap();
            assert!(r.to_dense().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn deterministic_in_seed_and_index() {
        let a = sample_diagonal(0.2, 10, 42, 5).unwrap();
        let b = sample_diagonal(0.2, 10, 42, 5).unwrap();
        assert_eq!(a, b);
        let c = sample_diagonal(0.2, 10, 42, 6).unwrap();
        assert_ne!(a.values, c.values);
        let d = sample_diagonal(0.2, 10, 43, 5).unwrap();
        assert_ne!(a.values, d.values);
    }

    #[test]
    fn value_counts_and_range() {
        let off = sample_offdiagonal(0.2, 10, 1, 0).unwrap();
        assert_eq!(off.values.len(), 9);
        let on = sample_diagonal(0.2, 10, 1, 0).unwrap();
        assert_eq!(on.values.len(), 20);
        assert!(on.values.iter().chain(&off.values).all(|v| v.abs() < 0.2));
    }

    #[test]
    fn offdiagonal_touches_only_interdimer_bonds() {
        let r = sample_offdiagonal(0.3, 5, 9, 1).unwrap();
        let m = r.to_dense();
        for i in 0..10usize {
            for j in 0..10 {
                let interdimer = i.abs_diff(j) == 1 && i.min(j) % 2 == 1;
                if !interdimer {
                    assert_eq!(m[(i, j)], 0.0, "({i},{j})");
                }
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
        assert_eq!(m[(1, 2)], r.values[0]);
        assert_eq!(m[(7, 8)], r.values[3]);
    }

    #[test]
    fn chiral_structure() {
        for index in 0..20 {
            let s = sublattice_parity(12);
            let off = sample_offdiagonal(0.5, 6, 11, index).unwrap().to_dense();
            let on = sample_diagonal(0.5, 6, 11, index).unwrap().to_dense();
            assert_eq!(&s * &off * &s, -&off);
            assert_eq!(&s * &on * &s, on);
        }
    }

    #[test]
    fn negative_strength_rejected() {
        assert!(sample_diagonal(-0.1, 4, 0, 0).is_err());
        assert!(DisorderSpec::new(DisorderKind::OffDiagonal, f64::NAN).is_err());
    }

    #[test]
    fn offdiagonal_moments() {
        // Uniform(-s, s): mean 0, variance s^2 / 3.
        let sigma = 0.2;
        let mut values = Vec::new();
        let mut index = 0;
        while values.len() < 100_000 {
            values.extend(sample_offdiagonal(sigma, 10, 2024, index).unwrap().values);
            index += 1;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let std_err = (var / n).sqrt();
        assert!(mean.abs() < 3.0 * std_err, "mean {mean}, se {std_err}");
        assert!((var - sigma * sigma / 3.0).abs() < 0.02 * sigma * sigma / 3.0);
    }

    #[test]
    fn substreams_uncorrelated() {
        let pairs = 10_000u64;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for k in 0..pairs {
            xs.push(sample_diagonal(1.0, 1, k, 0).unwrap().values[0]);
            ys.push(sample_diagonal(1.0, 1, k, 1).unwrap().values[0]);
        }
        let n = pairs as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let corr = cov / (vx * vy).sqrt();
        // 4 sigma for a null correlation over 1e4 pairs.
        assert!(corr.abs() < 4.0 / n.sqrt(), "corr {corr}");
    }

    #[test]
    fn json_round_trip() {
        let r = sample_offdiagonal(0.2, 4, 3, 8).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"kind\":\"off-diagonal\""));
        let back: DisorderRealization = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
