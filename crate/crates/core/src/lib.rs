//! Seeded Monte Carlo simulator for device-to-device millimeter-wave link
//! initialization in a content-centric network.
//!
//! The model covers two coupled decisions made when direct links are set up:
//!
//! * **Peer association** — each requester picks a transmitter by weighing how
//!   long the beam alignment will hold against how much of the requested
//!   content the transmitter caches ([`association`]). Deferred-acceptance,
//!   nearest-neighbor, and random baselines are included.
//! * **Beamwidth selection** — associated pairs pick operating beamwidths in a
//!   potential game solved by synchronous log-linear learning ([`game`]),
//!   with common-beamwidth and random baselines and a brute-force optimum for
//!   small instances.
//!
//! Supporting layers model directional antennas, blockage, Nakagami fading and
//! interference ([`channel`]), beam misalignment dynamics ([`linkdyn`]), and
//! cached-segment bookkeeping ([`content`]). [`experiment`] wires everything
//! into seeded, reproducible trials; [`report`] writes CSV/JSON outputs.
//!
//! Closed-form pieces are generic over the scalar type through [`scalar::Scalar`]
//! (`f32` or `f64`); simulation state uses the [`Real`] alias.

pub mod association;
pub mod channel;
pub mod config;
pub mod content;
pub mod experiment;
pub mod game;
pub mod geometry;
pub mod linkdyn;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod scalar;

/// Scalar type used by all concrete simulation state.
pub type Real = f64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its mathematical domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Configuration failed validation; names the offending key.
    #[error("config error: {0}")]
    Config(String),
    /// An enumeration or search exceeded its configured budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    /// Learning failed to converge within the iteration budget.
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: config problems 2, non-convergence 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::BudgetExceeded(_) => 2,
            Error::NonConvergence(_) => 3,
            Error::Io(_) => 1,
        }
    }
}
