//! Plug-and-play small-signal stability certificates for inverter-dominated
//! power networks.
//!
//! Every component (grid-forming inverter, RL line) is described by its 2x2
//! dq-frame admittance `Y(s)`. A single dynamic multiplier `m(s)` shared by all
//! components certifies the interconnection when `Her(m(jw) Y(jw))` is
//! positive definite for every component and every frequency. The crate
//! builds the component models, synthesizes `m(s)` by nonsmooth minimax
//! optimization over scattering transforms, evaluates the per-component
//! certificates and cross-checks them against full-network eigenvalues.

pub mod certificate;
pub mod cli;
pub mod components;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lti;
pub mod network;
pub mod optim;
pub mod synthesis;

pub use error::{Error, Result};
pub use lti::{FrequencyGrid, StateSpaceModel};
