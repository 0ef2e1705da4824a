//! The virtual-qubit contact protocol and the CNOT control/target model.

pub mod cnot;
pub mod protocol;

pub use cnot::{
    cnot_amplitude_cx, cnot_analytic_fluxes, cnot_analytic_state, cnot_full_pair_oracle,
    cnot_master_equation, cnot_rate_cx, CnotParams,
};
pub use protocol::{
    protocol_evolution, protocol_exact_step, protocol_first_order, protocol_scaling_study,
    ProtocolParams, ProtocolReport,
};
