//! Rice-Mele / SSH single-excitation Hamiltonian and closed-form edge-state
//! quantities.
//!
//! Sites are 0-based here. Even indices (0, 2, ...) form sublattice A and
//! carry `+delta`; odd indices form sublattice B and carry `-delta`. Bond `b`
//! joins sites `b` and `b + 1`; even bonds are intra-dimer (`t2`), odd bonds
//! are inter-dimer (`t1`).

use nalgebra::{DMatrix, SymmetricEigen};

use crate::disorder::DisorderRealization;
use crate::error::{QstError, Result};

/// Static description of a dimerized chain with `n_dimers` dimers (2N sites).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    n_dimers: usize,
    t1: f64,
    t2: f64,
    delta: f64,
}

impl ChainSpec {
    pub fn new(n_dimers: usize, t1: f64, t2: f64, delta: f64) -> Result<Self> {
        if n_dimers == 0 {
            return Err(QstError::invalid("n_dimers", "must be at least 1"));
        }
        if !(t1.is_finite() && t1 > 0.0) {
            return Err(QstError::invalid("t1", format!("must be positive, got {t1}")));
        }
        if !(t2.is_finite() && t2 >= 0.0) {
            return Err(QstError::invalid("t2", format!("must be non-negative, got {t2}")));
        }
        if !delta.is_finite() {
            return Err(QstError::invalid("delta", "must be finite"));
        }
        Ok(Self {
            n_dimers,
            t1,
            t2,
            delta,
        })
    }

    /// SSH chain (no staggered field) with `t1 = 1`.
    pub fn ssh(n_dimers: usize, ratio: f64) -> Result<Self> {
        Self::new(n_dimers, 1.0, ratio, 0.0)
    }

    pub fn n_dimers(&self) -> usize {
        self.n_dimers
    }

    pub fn sites(&self) -> usize {
        2 * self.n_dimers
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// r = t2 / t1.
    pub fn ratio(&self) -> f64 {
        self.t2 / self.t1
    }

    /// Same chain with the staggered field replaced.
    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }

    fn topological_ratio(&self) -> Result<f64> {
        let r = self.ratio();
        if r >= 1.0 {
            return Err(QstError::GapClosed { ratio: r });
        }
        Ok(r)
    }
}

/// Real symmetric tridiagonal Hamiltonian, stored as its two bands.
///
/// Every Hamiltonian in this crate (ordered chain, and chain plus either kind
/// of disorder) is tridiagonal, so the banded form is exact; [`to_dense`]
/// gives the full matrix for eigensolvers.
///
/// [`to_dense`]: HamiltonianMatrix::to_dense
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl HamiltonianMatrix {
    pub fn from_bands(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(QstError::DimensionMismatch {
                expected: diag.len().saturating_sub(1),
                found: off.len(),
            });
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Entries `H[b][b+1]`, one per bond.
    pub fn off_diagonal(&self) -> &[f64] {
        &self.off
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// `H v` for a real vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc += self.off[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        gershgorin(&self.diag, &self.off)
    }
}

pub(crate) fn gershgorin(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { off[i].abs() } else { 0.0 };
            diag[i].abs() + left + right
        })
        .fold(0.0, f64::max)
}

/// Fill `diag` / `off` with the bands of the ordered chain. Buffers must have
/// lengths 2N and 2N - 1.
pub(crate) fn fill_bands(t1: f64, t2: f64, delta: f64, diag: &mut [f64], off: &mut [f64]) {
    for (i, d) in diag.iter_mut().enumerate() {
        *d = if i % 2 == 0 { delta } else { -delta };
    }
    for (b, o) in off.iter_mut().enumerate() {
        *o = if b % 2 == 0 { t2 } else { t1 };
    }
}

pub fn build_hamiltonian(
    spec: &ChainSpec,
    perturbation: Option<&DisorderRealization>,
) -> Result<HamiltonianMatrix> {
    let n = spec.sites();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    fill_bands(spec.t1, spec.t2, spec.delta, &mut diag, &mut off);
    if let Some(p) = perturbation {
        p.check_dimension(n)?;
        p.add_to_bands(&mut diag, &mut off);
    }
    HamiltonianMatrix::from_bands(diag, off)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeState {
    side: Side,
    amplitudes: Vec<f64>,
}

impl EdgeState {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.amplitudes.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

/// sqrt((1 - r^2) / (1 - r^{2N})); equals 1 at r = 0.
fn edge_normalization(r: f64, n_dimers: usize) -> f64 {
    let r2 = r * r;
    ((1.0 - r2) / (1.0 - r2.powi(n_dimers as i32))).sqrt()
}

/// Closed-form edge mode of the semi-infinite chain, truncated to 2N sites.
///
/// The left mode lives on sublattice A with amplitudes decaying as
/// `(-r)^k` away from site 0; the right mode mirrors it on sublattice B.
pub fn edge_state(side: Side, spec: &ChainSpec) -> Result<EdgeState> {
    let r = spec.topological_ratio()?;
    let n = spec.n_dimers;
    let norm = edge_normalization(r, n);
    let mut amplitudes = vec![0.0; spec.sites()];
    for k in 0..n {
        let amp = norm * (-r).powi(k as i32);
        match side {
            Side::Left => amplitudes[2 * k] = amp,
            Side::Right => amplitudes[2 * n - 1 - 2 * k] = amp,
        }
    }
    Ok(EdgeState { side, amplitudes })
}

/// Hybridization of the two edge modes as a function of the hopping ratio,
/// `t1 r^N (1 - r^2) / (1 - r^{2N})`.
pub fn kappa_from_ratio(t1: f64, r: f64, n_dimers: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(QstError::GapClosed { ratio: r });
    }
    let n = n_dimers as i32;
    Ok(t1 * r.powi(n) * (1.0 - r * r) / (1.0 - (r * r).powi(n)))
}

/// Edge-mode coupling kappa (always >= 0 for 0 <= r < 1).
///
/// The inner product `<L|H|R>` of the closed-form modes equals
/// `(-1)^(N-1) * kappa`; the sign is a phase convention and is dropped here.
pub fn coupling_kappa(spec: &ChainSpec) -> Result<f64> {
    kappa_from_ratio(spec.t1, spec.ratio(), spec.n_dimers)
}

/// All eigenvalues of `h`, ascending.
pub fn spectrum(h: &HamiltonianMatrix) -> Vec<f64> {
    let mut evals: Vec<f64> = SymmetricEigen::new(h.to_dense())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    evals.sort_by(f64::total_cmp);
    evals
}

/// `E+ - E-` for the two eigenvalues nearest zero, from a dense eigensolve.
pub fn midgap_splitting(h: &HamiltonianMatrix) -> f64 {
    let mut evals = spectrum(h);
    if evals.len() < 2 {
        return 0.0;
    }
    evals.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    (evals[0] - evals[1]).abs()
}

/// Localization length of the edge modes in lattice periods,
/// `1 / (2 ln(t1 / t2))`; zero in the flat-band limit `t2 = 0`.
pub fn localization_length(spec: &ChainSpec) -> Result<f64> {
    let r = spec.topological_ratio()?;
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (2.0 * (1.0 / r).ln()))
}

/// Static Rabi transfer time `pi / (2 kappa)`.
pub fn rabi_transfer_time(kappa: f64) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(QstError::invalid(
            "kappa",
            format!("must be positive, got {kappa}"),
        ));
    }
    Ok(std::f64::consts::FRAC_PI_2 / kappa)
}

/// `||(H - delta) |L>||` for the truncated left edge mode. Only the bond
/// leaking into the last site contributes; it vanishes as N grows.
pub fn edge_leakage(spec: &ChainSpec) -> Result<f64> {
    let left = edge_state(Side::Left, spec)?;
    let h = build_hamiltonian(spec, None)?;
    let hl = h.apply(left.amplitudes());
    Ok(hl
        .iter()
        .zip(left.amplitudes())
        .map(|(x, l)| (x - spec.delta * l).powi(2))
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn single_dimer_matrix() {
        let h = build_hamiltonian(&ChainSpec::new(1, 1.0, 0.3, 0.1).unwrap(), None).unwrap();
        let d = h.to_dense();
        assert_eq!(d[(0, 0)], 0.1);
        assert_eq!(d[(0, 1)], 0.3);
        assert_eq!(d[(1, 0)], 0.3);
        assert_eq!(d[(1, 1)], -0.1);
    }

    #[test]
    fn two_dimer_bands() {
        let h = build_hamiltonian(&ChainSpec::ssh(2, 0.5).unwrap(), None).unwrap();
        assert_eq!(h.off_diagonal(), &[0.5, 1.0, 0.5]);
        assert_eq!(h.diagonal(), &[0.0; 4]);
        assert_eq!(h.get(0, 2), 0.0);
    }

    #[test]
    fn invalid_specs() {
        assert!(ChainSpec::new(0, 1.0, 0.5, 0.0).is_err());
        assert!(ChainSpec::new(3, 0.0, 0.5, 0.0).is_err());
        assert!(ChainSpec::new(3, 1.0, -0.5, 0.0).is_err());
    }

    #[test]
    fn flat_band_edge_states_are_end_sites() {
        for n in [1, 4, 9] {
            let spec = ChainSpec::ssh(n, 0.0).unwrap();
            let l = edge_state(Side::Left, &spec).unwrap();
            let r = edge_state(Side::Right, &spec).unwrap();
            let mut e_first = vec![0.0; 2 * n];
            e_first[0] = 1.0;
            let mut e_last = vec![0.0; 2 * n];
            e_last[2 * n - 1] = 1.0;
            assert_eq!(l.amplitudes(), &e_first[..]);
            assert_eq!(r.amplitudes(), &e_last[..]);
        }
    }

    #[test]
    fn edge_amplitudes_two_dimers() {
        // Direct evaluation: norm = sqrt(1 / (1 + 0.25)) = sqrt(0.8).
        let spec = ChainSpec::ssh(2, 0.5).unwrap();
        let norm = (1.0f64 / (1.0 + 0.25)).sqrt();
        let l = edge_state(Side::Left, &spec).unwrap();
        let r = edge_state(Side::Right, &spec).unwrap();
        let want_l = [norm, 0.0, -0.5 * norm, 0.0];
        let want_r = [0.0, -0.5 * norm, 0.0, norm];
        for i in 0..4 {
            assert!(close(l.amplitudes()[i], want_l[i], 1e-15));
            assert!(close(r.amplitudes()[i], want_r[i], 1e-15));
        }
        assert!(close(l.amplitudes()[0], 0.894427, 1e-6));
        assert!(close(r.amplitudes()[1], -0.447214, 1e-6));
        assert_eq!(l.dot(r.amplitudes()), 0.0);
    }

    #[test]
    fn edge_state_rejects_trivial_phase() {
        assert!(matches!(
            edge_state(Side::Left, &ChainSpec::ssh(4, 1.0).unwrap()),
            Err(QstError::GapClosed { .. })
        ));
        assert!(edge_state(Side::Right, &ChainSpec::ssh(4, 1.3).unwrap()).is_err());
    }

    #[test]
    fn kappa_values() {
        let k1 = coupling_kappa(&ChainSpec::new(1, 1.0, 0.4, 0.0).unwrap()).unwrap();
        assert!(close(k1, 0.4, 1e-15));
        assert_eq!(coupling_kappa(&ChainSpec::ssh(7, 0.0).unwrap()).unwrap(), 0.0);
        // 0.5^10 * 0.75 / (1 - 0.5^20)
        let k10 = coupling_kappa(&ChainSpec::ssh(10, 0.5).unwrap()).unwrap();
        assert!(close(k10, 7.32422e-4, 1e-9));
        let k09 = coupling_kappa(&ChainSpec::ssh(10, 0.9).unwrap()).unwrap();
        // 0.9^10 * 0.19 / (1 - 0.9^20)
        assert!(close(k09, 0.0754180, 1e-7));
        assert!(matches!(
            coupling_kappa(&ChainSpec::ssh(10, 1.0).unwrap()),
            Err(QstError::GapClosed { .. })
        ));
    }

    #[test]
    fn kappa_scales_with_t1() {
        let a = coupling_kappa(&ChainSpec::new(6, 2.0, 1.0, 0.0).unwrap()).unwrap();
        let b = coupling_kappa(&ChainSpec::ssh(6, 0.5).unwrap()).unwrap();
        assert!(close(a, 2.0 * b, 1e-15));
    }

    #[test]
    fn splitting_of_two_site_chain() {
        let h = build_hamiltonian(&ChainSpec::new(1, 1.0, 0.4, 0.0).unwrap(), None).unwrap();
        assert!(close(midgap_splitting(&h), 0.8, 1e-12));
    }

    #[test]
    fn localization_lengths() {
        let spec = ChainSpec::ssh(5, (-0.5f64).exp()).unwrap();
        assert!(close(localization_length(&spec).unwrap(), 1.0, 1e-12));
        let half = localization_length(&ChainSpec::ssh(5, 0.5).unwrap()).unwrap();
        assert!(close(half, 0.72135, 1e-5));
        assert_eq!(
            localization_length(&ChainSpec::ssh(5, 0.0).unwrap()).unwrap(),
            0.0
        );
        assert!(localization_length(&ChainSpec::ssh(5, 1.0).unwrap()).is_err());
    }

    #[test]
    fn rabi_times() {
        assert!(close(
            rabi_transfer_time(std::f64::consts::FRAC_PI_2).unwrap(),
            1.0,
            1e-15
        ));
        assert!(close(rabi_transfer_time(7.32422e-4).unwrap(), 2144.7, 0.1));
        assert!(close(rabi_transfer_time(0.0754).unwrap(), 20.8, 0.05));
        assert!(rabi_transfer_time(0.0).is_err());
        assert!(rabi_transfer_time(-1.0).is_err());
    }

    #[test]
    fn leakage_decreases_with_length() {
        let leaks: Vec<f64> = (2..=12)
            .map(|n| edge_leakage(&ChainSpec::ssh(n, 0.5).unwrap()).unwrap())
            .collect();
        for w in leaks.windows(2) {
            assert!(w[1] < w[0]);
        }
        // Single boundary term: t2 * norm * r^(N-1).
        let n = 6;
        let want = 0.5 * edge_normalization(0.5, n) * 0.5f64.powi(n as i32 - 1);
        assert!(close(leaks[n - 2], want, 1e-14));
    }
}
