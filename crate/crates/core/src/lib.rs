//! Energy-efficient cooperative transmission for a relay-assisted downlink
//! with two relay nodes and three receivers.
//!
//! The crate enumerates coded transmission schemes (codeword graphs with
//! superposition, interference decoding and rate splitting), turns each
//! scheme into a Gaussian achievable region that is linear in the
//! per-codeword powers, minimizes the total transmit power with a small
//! dense simplex solver, and compares the best schemes against an
//! outer-bound based lower bound on the energy per bit.
//!
//! ```
//! use relaynet::{channel, oracles, optimizer};
//!
//! let (access, relay) = channel::symmetric_channel(1.2, 0.5).unwrap();
//! let target = channel::RateTarget::symmetric(0.1).unwrap();
//! let scheme = oracles::scheme_a();
//! let sol = optimizer::optimize_scheme(
//!     &scheme, &access, &relay, &target, &optimizer::EnergyWeights::default(),
//!     &optimizer::SplitSearch::default(),
//! ).unwrap();
//! assert!(sol.feasible);
//! ```

pub mod bounds;
pub mod cgras;
pub mod channel;
pub mod error;
pub mod optimizer;
pub mod oracles;
pub mod region;
pub mod sweep;

mod linalg;
mod nodeset;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use nodeset::NodeSet;

/// Number of relay nodes in the network.
pub const NUM_RELAYS: usize = 2;
/// Number of receivers (and messages) in the network.
pub const NUM_RECEIVERS: usize = 3;
