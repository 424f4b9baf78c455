//! Privacy-preserving product, sum and multivariate-polynomial aggregation
//! over an eavesdroppable channel, with a deterministic simulator.

pub mod algebra;
pub mod baseline;
pub mod bench;
pub mod cli;
pub mod error;
pub mod netsim;
pub mod poly;
pub mod product;
pub mod ring;
pub mod session;
pub mod sum;

pub use algebra::{GroupParams, OpCounts, RandomSource};
pub use error::{Error, Result};
pub use netsim::{MsgType, Role, Transcript, WireMessage};
pub use ring::{Phase, PartyId, Ring, SetupState};
pub use session::{Model, Protocol, Simulation};
pub use poly::{PolynomialSpec, Scheme};
