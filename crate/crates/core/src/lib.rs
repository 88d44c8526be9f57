//! Quantum state transfer between the topological edge modes of a dimerized
//! (SSH / Rice-Mele) chain.
//!
//! Two protocols are modelled: adiabatic Rabi flopping of the hybridized edge
//! modes, and a Landau-Zener sweep of a staggered field across their avoided
//! crossing. The crate provides the chain Hamiltonian and closed-form edge
//! quantities ([`lattice`]), protocol schedules ([`schedule`]), full and
//! reduced two-level propagation ([`dynamics`]), static disorder
//! ([`disorder`]) and the Monte Carlo, sweep and scaling drivers
//! ([`ensemble`]).

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod disorder;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod export;
pub mod lattice;
pub mod schedule;

pub use disorder::{sample_diagonal, sample_offdiagonal, DisorderKind, DisorderRealization, DisorderSpec};
pub use dynamics::{
    average_fidelity, final_transfer_probability, lz_analytic_probability, propagate_full,
    propagate_two_level, transfer_probability, Exponential, Model, StateVector, StepControl, Trajectory,
};
pub use ensemble::{
    compare_protocols, run_ensemble, scaling_study, sweep2d, Comparison, EnsembleOptions, EnsembleResult,
    Histogram, Pairing, Protocol, ScalingPoint, ScalingRule, Summary, SweepAxis, SweepParam, SweepResult,
};
pub use error::{QstError, Result};
pub use lattice::{
    build_hamiltonian, coupling_kappa, edge_state, localization_length, midgap_splitting, rabi_transfer_time,
    ChainSpec, EdgeState, HamiltonianMatrix, Side,
};
pub use schedule::{
    area_integral, lz_threshold_time, solve_rabi_area_time, ChainParameters, LzParams, ProtocolSchedule,
    RabiParams, StaticParams,
};
