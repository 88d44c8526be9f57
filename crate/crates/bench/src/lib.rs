//! Shared fixtures for the benchmarks.

use sshqst::ProtocolSchedule;

/// Rabi pulse with eps = 0.1, T = 86.
pub fn reference_rabi() -> ProtocolSchedule {
    ProtocolSchedule::rabi(0.1, 86.0).expect("valid parameters")
}

/// LZ sweep with eps = 0.1, delta0 = 0.2, tau = 60, tau_z = 120.
pub fn reference_lz() -> ProtocolSchedule {
    ProtocolSchedule::lz(0.1, 0.2, 60.0, 120.0).expect("valid parameters")
}
