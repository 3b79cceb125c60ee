//! Sum-rate maximization for multi-user full-duplex wireless powered
//! communication networks.
//!
//! A hybrid access point with `M` antennas per half serves `K`
//! single-antenna users over a block split into two phases. In each phase
//! one group of users harvests energy from the access point's energy beam
//! while the other group spends previously harvested energy on uplink
//! transmission. The access point receives the uplink while it radiates,
//! so its own residual self-interference adds to the receiver noise.
//!
//! The crate covers channel sampling ([`scenario`]), the harvesting model
//! ([`ehmodel`]), the energy beamformer ([`beamform`]), the WMMSE uplink
//! block ([`wmmse`]), group assignment ([`assign`]), the time-split search
//! ([`timesearch`]), the solvers ([`engine`]) and Monte Carlo sweeps
//! ([`experiments`]).

pub mod assign;
pub mod beamform;
pub mod config;
pub mod ehmodel;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod scenario;
pub mod timesearch;
pub mod wmmse;

pub type C64 = nalgebra::Complex<f64>;
pub type CVector = nalgebra::DVector<C64>;
pub type CMatrix = nalgebra::DMatrix<C64>;

pub use error::{Error, Result};

// Runs the guide's code blocks as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/system-model.md")]
    mod system_model {}
    #[doc = include_str!("../../../book/src/energy-beam.md")]
    mod energy_beam {}
    #[doc = include_str!("../../../book/src/uplink.md")]
    mod uplink {}
    #[doc = include_str!("../../../book/src/assignment.md")]
    mod assignment {}
    #[doc = include_str!("../../../book/src/time-split.md")]
    mod time_split {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/convergence.md")]
    mod convergence {}
}
