//! Achievable rates and power allocation for ACO-OFDM visible light links.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`] turns room geometry into per-subcarrier complex gains.
//! * [`constellation`] builds unit-power signalling alphabets.
//! * [`rates`] evaluates Gaussian, finite-alphabet and lower-bound rates, the
//!   MMSE function and its inverse.
//! * [`se_alloc`] and [`ee_alloc`] solve the spectral- and energy-efficiency
//!   allocation problems.
//! * [`waveform`] synthesises time-domain frames to check the clipping
//!   identities empirically.
//! * [`experiment`] drives parameter sweeps from a TOML config and writes CSV.
//!
//! Throughout, the effective SNR of a subcarrier with gain `H` and power `p`
//! is `p|H|²/(4σ²W)`. The factor 4 comes from the halved amplitude after
//! clipping.

pub mod channel;
pub mod constellation;
pub mod ee_alloc;
pub mod error;
pub mod experiment;
pub mod quadrature;
pub mod rates;
pub mod se_alloc;
pub mod solver;
pub mod waveform;

pub use channel::{ChannelState, DiffuseParams, Geometry};
pub use constellation::Constellation;
pub use error::{Error, Result};
pub use quadrature::QuadratureSpec;
pub use rates::{RateModel, SystemParams};
pub use se_alloc::{AllocationResult, PowerAllocation};
