//! Simulator for period-doubled (time-crystalline) response of a dipolar-coupled
//! spin pair under a dissipative two-pulse Floquet drive.
//!
//! The spin-lock window evolves under `-i[H, rho] - tau_c [H, [H, rho]]` with
//! `H = H_x + H_dd`; the rotation window is a unitary pulse about y. Modules:
//!
//! - [`spinops`]: operators, states and the nine symmetric observables
//! - [`liouville`]: superoperators, matrix exponential and cycle propagator
//! - [`protocol`]: stroboscopic and dense protocol runs
//! - [`analytics`]: reduced-ODE oracles, closed forms, two-period composition
//! - [`spectrum`]: DFT power spectrum and crystalline fraction

pub mod analytics;
pub mod error;
pub mod expm;
pub mod liouville;
pub mod protocol;
pub mod spectrum;
pub mod spinops;

pub use error::{Error, Result};
pub use protocol::{ProtocolConfig, SamplePoint, TimeSeries};
pub use spectrum::{spectrum, SpectrumResult};
pub use spinops::{DensityMatrix, ObservableSet};
