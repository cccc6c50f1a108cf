//! Downlink analysis and power control for multi-cell massive MIMO with
//! three-fold sectorized antenna arrays and coordinated multi-point service.
//!
//! The pipeline for one snapshot of the network is
//!
//! ```text
//! Scenario ─► Layout ─► UserDrop ─► CouplingTable ─► EstimationGains
//!                                        │
//!                              Association ─► Network ─► PowerAllocation ─► SinrBreakdown ─► RateReport
//! ```
//!
//! Every quantity downstream of the coupling table depends only on
//! large-scale gains, so the closed-form rate bounds, the power-control
//! strategies and the multi-drop runner never touch small-scale fading.
//! [`fadelab`] is the exception: it draws Rayleigh fading explicitly and
//! checks the closed-form term variances against Monte Carlo estimates.
//!
//! ```no_run
//! use sectorsim::{runner, scenario::Scenario};
//!
//! let scenario = Scenario::from_toml_str("num_drops = 4\nsetting = \"compsec\"").unwrap();
//! let result = runner::run_experiment(&scenario).unwrap();
//! let stats = runner::summarize(&result).unwrap();
//! println!("95%-likely rate: {:.2} Mbps", stats.p95_likely / 1e6);
//! ```

pub mod antenna;
pub mod association;
pub mod channel;
mod error;
pub mod fadelab;
pub mod geometry;
pub mod linkrate;
pub mod network;
pub mod power;
pub mod runner;
pub mod scenario;
pub mod seed;

pub use error::{Error, Result};
pub use network::Network;
pub use scenario::{PowerStrategy, Precoder, Scenario, Setting};
