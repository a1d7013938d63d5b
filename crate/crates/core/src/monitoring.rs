//! What route collectors get to see, per monitoring session type.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::experiment::count_compromised;
use crate::routing::{Prefix, Rib, RibEntry};
use crate::scenario::AttackScenario;
use crate::topology::{AsGraph, AsId};

/// How a peer AS feeds the monitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionType {
    /// Ordinary eBGP session: the monitor is outside the AS boundary.
    EbgpMultihop,
    /// iBGP session: NO_EXPORT no longer applies.
    Ibgp,
    /// BMP-style full-RIB feed.
    FullRib,
}

impl SessionType {
    pub fn exports(self, entry: &RibEntry) -> bool {
        match self {
            SessionType::EbgpMultihop => !entry.export_locked && !entry.advertise_locked,
            SessionType::Ibgp => !entry.advertise_locked,
            SessionType::FullRib => true,
        }
    }
}

impl fmt::Display for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionType::EbgpMultihop => "ebgp",
            SessionType::Ibgp => "ibgp",
            SessionType::FullRib => "fullrib",
        })
    }
}

impl FromStr for SessionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ebgp" => Ok(SessionType::EbgpMultihop),
            "ibgp" => Ok(SessionType::Ibgp),
            "fullrib" => Ok(SessionType::FullRib),
            other => Err(format!("unknown session type '{other}'")),
        }
    }
}

/// A monitoring service, identified by the ASes that peer with it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MonitorConfig {
    pub peers: BTreeMap<AsId, SessionType>,
}

impl MonitorConfig {
    pub fn new(peers: impl IntoIterator<Item = (AsId, SessionType)>) -> Self {
        MonitorConfig { peers: peers.into_iter().collect() }
    }

    pub fn uniform(peers: impl IntoIterator<Item = AsId>, session: SessionType) -> Self {
        Self::new(peers.into_iter().map(|a| (a, session)))
    }

    /// Parses a peers file: `<asn>[,<session>]` per line, `#` comments,
    /// session defaulting to `ebgp`.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut peers = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Monitors { line: n + 1, reason };
            let (asn, session) = match line.split_once(',') {
                Some((a, s)) => (a, s.parse::<SessionType>().map_err(bad)?),
                None => (line, SessionType::EbgpMultihop),
            };
            let asn: AsId = asn.parse().map_err(|e: Error| bad(e.to_string()))?;
            if peers.insert(asn, session).is_some() {
                return Err(bad(format!("AS {asn} listed twice")));
            }
        }
        Ok(MonitorConfig { peers })
    }

    pub fn validate(&self, g: &AsGraph) -> Result<(), Error> {
        for &a in self.peers.keys() {
            g.require(a)?;
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.peers.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityReport {
    pub prefix: Prefix,
    pub exporting_peers: BTreeSet<AsId>,
    pub stealthy: bool,
}

/// Monitor peers that would report their installed route for `prefix`.
pub fn visible_peers(rib: &Rib, mon: &MonitorConfig, prefix: Prefix) -> VisibilityReport {
    let exporting_peers: BTreeSet<AsId> = mon
        .peers
        .iter()
        .filter(|(&a, s)| rib.get(a, prefix).is_some_and(|e| s.exports(&e)))
        .map(|(&a, _)| a)
        .collect();
    VisibilityReport { prefix, stealthy: exporting_peers.is_empty(), exporting_peers }
}

/// Visibility of the malicious prefix together with the fraction of
/// `sources` whose traffic is hijacked. The victim and adversary are not
/// counted as sources, nor are sources without a route to the victim.
pub fn stealthy_and_effective(
    rib: &Rib,
    mon: &MonitorConfig,
    scenario: &AttackScenario,
    sources: &BTreeSet<AsId>,
) -> (bool, f64) {
    let report = visible_peers(rib, mon, scenario.malicious.prefix);
    let count = count_compromised(rib, scenario, &scenario.infected_set(rib), sources);
    (report.stealthy, count.fraction())
}
