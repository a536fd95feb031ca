//! Physically consistent multiport model of RIS-aided wireless links.
//!
//! * [`multiport`]: block-partitioned Z and S matrices and their conversion.
//! * [`channel`]: isotropic-radiator mutual impedances and the unilateral
//!   multiport built from link geometry.
//! * [`ris`]: RIS terminations and the end-to-end transfer matrices of the
//!   physically consistent and the conventional model.
//! * [`optimize`]: termination optimization, grid oracle, and random-phase
//!   baselines.

pub mod channel;
pub mod error;
pub mod matrix;
pub mod multiport;
pub mod optimize;
pub mod ris;

pub use channel::{
    build_unilateral_multiport, mutual_impedance, LinkConfig, LinkGeometry, Scenario,
};
pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
pub use multiport::{
    s_to_z, z_to_s, MultiportImpedance, MultiportScattering, Partition, Port, PortState,
};
pub use ris::{
    blockwise_z_to_s, normalize_transfer, transfer_conventional, transfer_impedance,
    transfer_scattering, transfer_theta_form, RisTermination, TransferModel, TransferResult,
};
