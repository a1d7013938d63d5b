//! AS-level simulation of sub-prefix BGP hijacks tagged NO_EXPORT, which
//! reach far into the routing system while staying invisible to route
//! collectors, and of the defenses against them.
//!
//! The pieces fit together as follows: [`topology`] loads a CAIDA
//! relationship graph, [`routing`] propagates announcements under
//! Gao-Rexford policies, [`dataplane`] resolves where traffic goes,
//! [`monitoring`] decides what collectors see, [`scenario`] builds attacks
//! and defenses and [`experiment`] runs sampled studies over them.

pub mod dataplane;
pub mod error;
pub mod experiment;
pub mod monitoring;
pub mod report;
pub mod routing;
pub mod scenario;
pub mod topology;

pub use error::Error;
pub use topology::{AsGraph, AsId};
