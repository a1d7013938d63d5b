//! Longest-prefix-match forwarding over the control-plane RIB.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::routing::{LearnedFrom, Prefix, Rib, RibEntry};
use crate::topology::AsId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Victim,
    Adversary,
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeliveryOutcome {
    pub verdict: Verdict,
    pub path_taken: Vec<AsId>,
}

/// Most specific installed route at `at` covering `dest`.
pub fn lpm_route(rib: &Rib, at: AsId, dest: Ipv4Addr) -> Option<RibEntry> {
    rib.lookup(at, dest)
}

/// Walks hop by hop from `source`, re-resolving `dest` at every AS. Delivery
/// ends at the AS that originated the matched route; reaching any origin
/// other than `victim` counts as hijacked.
pub fn forward(rib: &Rib, source: AsId, dest: Ipv4Addr, victim: AsId) -> DeliveryOutcome {
    let mut path_taken = vec![source];
    let mut seen = BTreeSet::from([source]);
    let mut cur = source;
    let limit = rib.graph().len() + 1;
    let verdict = loop {
        let Some(entry) = rib.lookup(cur, dest) else {
            break Verdict::Unreachable;
        };
        if entry.learned_from == LearnedFrom::Origin {
            break if cur == victim { Verdict::Victim } else { Verdict::Adversary };
        }
        let next = entry.route.next_hop().expect("learned route has a next hop");
        if !seen.insert(next) || path_taken.len() > limit {
            break Verdict::Unreachable;
        }
        path_taken.push(next);
        cur = next;
    };
    DeliveryOutcome { verdict, path_taken }
}

/// Outcome of the path-membership test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exposure {
    Compromised,
    Clean,
    /// The source holds no route to the victim prefix.
    NoRoute,
}

impl Exposure {
    pub fn is_compromised(self) -> bool {
        self == Exposure::Compromised
    }
}

/// Whether the source's control-plane path to `victim_prefix` (itself
/// included) crosses an infected AS.
pub fn is_compromised(rib: &Rib, source: AsId, victim_prefix: Prefix, infected: &BTreeSet<AsId>) -> Exposure {
    let g = rib.graph();
    let Some(src) = g.idx(source) else {
        return Exposure::NoRoute;
    };
    if infected.is_empty() {
        return if rib.has_route(source, victim_prefix) { Exposure::Clean } else { Exposure::NoRoute };
    }
    match rib.path_any(src, victim_prefix, |i| infected.contains(&g.id_at(i))) {
        None => Exposure::NoRoute,
        Some(true) => Exposure::Compromised,
        Some(false) => Exposure::Clean,
    }
}

/// `is_compromised` with the infected set given as a per-node mask.
pub(crate) fn is_compromised_mask(rib: &Rib, src: u32, victim_prefix: Prefix, infected: &[bool]) -> Exposure {
    match rib.path_any(src, victim_prefix, |i| infected[i as usize]) {
        None => Exposure::NoRoute,
        Some(true) => Exposure::Compromised,
        Some(false) => Exposure::Clean,
    }
}
