//! Gao-Rexford route propagation with community-driven export restrictions.

mod community;
mod prefix;
mod propagate;
mod rib;

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use community::{Community, CommunityAction, CommunityRegistry, Scope};
pub use prefix::Prefix;
pub use propagate::{propagate, Policy};
pub use rib::Rib;

use crate::error::Error;
use crate::topology::{AsId, Role};

/// A route as installed at some AS: `as_path[0]` is the holder, the origin
/// is last.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RouteAnnouncement {
    pub prefix: Prefix,
    pub as_path: Vec<AsId>,
    pub communities: BTreeSet<Community>,
}

impl RouteAnnouncement {
    pub fn origin(&self) -> AsId {
        *self.as_path.last().expect("as_path is non-empty")
    }

    /// The neighbor this route was learned from, if any.
    pub fn next_hop(&self) -> Option<AsId> {
        self.as_path.get(1).copied()
    }

    pub fn is_loop_free(&self) -> bool {
        let unique: BTreeSet<_> = self.as_path.iter().collect();
        !self.as_path.is_empty() && unique.len() == self.as_path.len()
    }
}

/// Where the selected route came from, in decreasing preference order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnedFrom {
    Origin,
    Customer,
    Peer,
    Provider,
}

impl From<Role> for LearnedFrom {
    fn from(role: Role) -> Self {
        match role {
            Role::Customer => LearnedFrom::Customer,
            Role::Peer => LearnedFrom::Peer,
            Role::Provider => LearnedFrom::Provider,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RibEntry {
    pub route: RouteAnnouncement,
    pub learned_from: LearnedFrom,
    /// NO_EXPORT (or an AS-scoped equivalent) is effective here.
    pub export_locked: bool,
    /// NO_ADVERTISE is effective here.
    pub advertise_locked: bool,
    /// The ingress rewrite defense replaced NO_EXPORT with this AS's own
    /// community: the route is withheld from BGP neighbors but not from
    /// monitoring sessions.
    pub egress_filtered: bool,
}

impl RibEntry {
    fn unlocked(route: RouteAnnouncement, learned_from: LearnedFrom) -> Self {
        RibEntry {
            route,
            learned_from,
            export_locked: false,
            advertise_locked: false,
            egress_filtered: false,
        }
    }

    pub fn holder(&self) -> AsId {
        self.route.as_path[0]
    }
}

/// Valley-free export rule plus community locks.
pub fn export_allowed(entry: &RibEntry, to_role: Role) -> bool {
    if entry.export_locked || entry.advertise_locked || entry.egress_filtered {
        return false;
    }
    matches!(entry.learned_from, LearnedFrom::Origin | LearnedFrom::Customer) || to_role == Role::Customer
}

/// Ordering used for route selection: smaller is better.
pub(crate) fn preference_key(learned_from: LearnedFrom, path_len: usize, next_hop: Option<AsId>) -> (LearnedFrom, usize, Option<AsId>) {
    (learned_from, path_len, next_hop)
}

/// Picks the best route among candidates for one prefix: relationship first,
/// then AS-path length, then lowest next-hop ASN.
pub fn select_best(candidates: &[(RouteAnnouncement, LearnedFrom)]) -> Result<RibEntry, Error> {
    let best = candidates
        .iter()
        .min_by(|a, b| cmp_candidates(a, b))
        .ok_or(Error::NoCandidates)?;
    Ok(RibEntry::unlocked(best.0.clone(), best.1))
}

fn cmp_candidates(a: &(RouteAnnouncement, LearnedFrom), b: &(RouteAnnouncement, LearnedFrom)) -> Ordering {
    preference_key(a.1, a.0.as_path.len(), a.0.next_hop())
        .cmp(&preference_key(b.1, b.0.as_path.len(), b.0.next_hop()))
}

/// Which neighbors an origin announces to.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum AnnounceTo {
    #[default]
    AllNeighbors,
    Only(BTreeSet<AsId>),
}

impl AnnounceTo {
    pub fn allows(&self, neighbor: AsId) -> bool {
        match self {
            AnnounceTo::AllNeighbors => true,
            AnnounceTo::Only(set) => set.contains(&neighbor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OriginationSpec {
    pub origin: AsId,
    pub prefix: Prefix,
    pub communities: BTreeSet<Community>,
    pub announce_to: AnnounceTo,
    /// Appended after `origin` in the AS path, making the announcement look
    /// as if `spoofed_origin` originated it.
    pub spoofed_origin: Option<AsId>,
}

impl OriginationSpec {
    pub fn new(origin: AsId, prefix: Prefix) -> Self {
        OriginationSpec {
            origin,
            prefix,
            communities: BTreeSet::new(),
            announce_to: AnnounceTo::AllNeighbors,
            spoofed_origin: None,
        }
    }

    pub fn with_communities(mut self, communities: impl IntoIterator<Item = Community>) -> Self {
        self.communities = communities.into_iter().collect();
        self
    }

    pub fn announce_only_to(mut self, neighbors: impl IntoIterator<Item = AsId>) -> Self {
        self.announce_to = AnnounceTo::Only(neighbors.into_iter().collect());
        self
    }

    pub fn spoofing(mut self, victim: AsId) -> Self {
        self.spoofed_origin = Some(victim);
        self
    }

    /// The AS path as installed at the origin itself.
    pub fn origin_path(&self) -> Vec<AsId> {
        std::iter::once(self.origin).chain(self.spoofed_origin).collect()
    }

    /// The origin a validator sees: the last AS on the path.
    pub fn apparent_origin(&self) -> AsId {
        self.spoofed_origin.unwrap_or(self.origin)
    }
}
