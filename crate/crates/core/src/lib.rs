//! Simulation and capacity analysis of probabilistic dense coding over
//! non-symmetric (`p`-level sender, `q`-level receiver), non-maximally
//! entangled multipartite channels.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod oracle;
pub mod protocol;
pub mod qstate;

pub use error::{Error, Result};
