use std::fmt;

use thiserror::Error;

use crate::routing::Prefix;
use crate::topology::AsId;

/// A topology line that could not be parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyParseError {
    pub line: usize,
    pub reason: String,
    /// The line was well-formed but broke a graph invariant (self-loop,
    /// duplicate or conflicting edge).
    pub invariant: bool,
}

impl fmt::Display for TopologyParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ASN '{0}'")]
    InvalidAsn(String),

    #[error("topology parse error at {0}")]
    Parse(TopologyParseError),

    #[error("self-loop on AS {0}")]
    SelfLoop(AsId),

    #[error("{} edge for pair {{{a},{b}}}", if *.conflicting { "conflicting" } else { "duplicate" })]
    DuplicateEdge { a: AsId, b: AsId, conflicting: bool },

    #[error("AS {0} is not in the topology")]
    UnknownAs(AsId),

    #[error("k = {k} is out of range for a topology with {nodes} ASes")]
    InvalidK { k: usize, nodes: usize },

    #[error("invalid prefix '{0}'")]
    InvalidPrefix(String),

    #[error("invalid community '{0}'")]
    InvalidCommunity(String),

    #[error("AS {neighbor} is not adjacent to origin AS {origin}")]
    NotAdjacent { origin: AsId, neighbor: AsId },

    #[error("no route candidates to select from")]
    NoCandidates,

    #[error("prefix {0} has no longer sub-prefix")]
    NoSubPrefix(Prefix),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid monitor peers file at line {line}: {reason}")]
    Monitors { line: usize, reason: String },

    #[error("sample size {sample} exceeds topology size {nodes}")]
    SampleTooLarge { sample: usize, nodes: usize },

    #[error("{0}")]
    Io(String),
}
