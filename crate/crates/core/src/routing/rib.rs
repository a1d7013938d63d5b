use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use super::prefix::mask;
use super::{Community, LearnedFrom, OriginationSpec, Prefix, RibEntry, RouteAnnouncement};
use crate::topology::{AsGraph, AsId};

pub(crate) const NO_HOP: u32 = u32::MAX;

/// Compact per-AS route state. The full AS path is recovered by following
/// `next_hop` links, which is valid because every AS's route is its next
/// hop's route with itself prepended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Slot {
    pub learned_from: LearnedFrom,
    pub next_hop: u32,
    pub path_len: u32,
    pub origination: u32,
    pub rewritten: bool,
    pub export_locked: bool,
    pub advertise_locked: bool,
}

impl Slot {
    pub fn exportable(&self) -> bool {
        !(self.export_locked || self.advertise_locked || self.rewritten)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PrefixTable {
    pub originations: Vec<OriginationSpec>,
    pub slots: Vec<Option<Slot>>,
}

/// Selected routes per (AS, prefix) after propagation.
#[derive(Debug, Clone)]
pub struct Rib<'g> {
    graph: &'g AsGraph,
    tables: BTreeMap<Prefix, PrefixTable>,
    lengths: BTreeSet<u8>,
}

impl<'g> Rib<'g> {
    pub(crate) fn new(graph: &'g AsGraph) -> Self {
        Rib { graph, tables: BTreeMap::new(), lengths: BTreeSet::new() }
    }

    pub(crate) fn insert_table(&mut self, prefix: Prefix, table: PrefixTable) {
        self.lengths.insert(prefix.len());
        self.tables.insert(prefix, table);
    }

    pub fn graph(&self) -> &'g AsGraph {
        self.graph
    }

    pub fn prefixes(&self) -> impl Iterator<Item = Prefix> + '_ {
        self.tables.keys().copied()
    }

    pub fn originations(&self, prefix: Prefix) -> &[OriginationSpec] {
        self.tables.get(&prefix).map(|t| t.originations.as_slice()).unwrap_or(&[])
    }

    pub(crate) fn slot(&self, at: u32, prefix: Prefix) -> Option<&Slot> {
        self.tables.get(&prefix)?.slots.get(at as usize)?.as_ref()
    }

    pub fn has_route(&self, at: AsId, prefix: Prefix) -> bool {
        self.graph.idx(at).and_then(|i| self.slot(i, prefix)).is_some()
    }

    /// The installed route for `prefix` at `at`.
    pub fn get(&self, at: AsId, prefix: Prefix) -> Option<RibEntry> {
        let i = self.graph.idx(at)?;
        let table = self.tables.get(&prefix)?;
        let slot = table.slots[i as usize]?;
        Some(self.materialize(prefix, table, i, slot))
    }

    /// ASes holding any route for `prefix`.
    pub fn holders(&self, prefix: Prefix) -> BTreeSet<AsId> {
        match self.tables.get(&prefix) {
            None => BTreeSet::new(),
            Some(t) => t
                .slots
                .iter()
                .enumerate()
                .filter(|(_, s)| s.is_some())
                .map(|(i, _)| self.graph.id_at(i as u32))
                .collect(),
        }
    }

    /// Every installed entry for `prefix`, ascending by holder ASN.
    pub fn entries(&self, prefix: Prefix) -> Vec<RibEntry> {
        let Some(table) = self.tables.get(&prefix) else {
            return Vec::new();
        };
        table
            .slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|s| self.materialize(prefix, table, i as u32, s)))
            .collect()
    }

    /// Longest-prefix match at `at` for `dest`.
    pub fn lookup(&self, at: AsId, dest: Ipv4Addr) -> Option<RibEntry> {
        let i = self.graph.idx(at)?;
        let raw = u32::from(dest);
        for &len in self.lengths.iter().rev() {
            let key = Prefix::new(Ipv4Addr::from(raw & mask(len)), len).expect("masked prefix");
            if let Some(table) = self.tables.get(&key) {
                if let Some(slot) = table.slots[i as usize] {
                    return Some(self.materialize(key, table, i, slot));
                }
            }
        }
        None
    }

    /// Walks the holder's AS path (graph members only) until `f` returns
    /// true. Returns false if `at` holds no route.
    pub(crate) fn path_any(&self, at: u32, prefix: Prefix, mut f: impl FnMut(u32) -> bool) -> Option<bool> {
        let table = self.tables.get(&prefix)?;
        let mut cur = at;
        let mut slot = table.slots[cur as usize]?;
        loop {
            if f(cur) {
                return Some(true);
            }
            if slot.next_hop == NO_HOP {
                break;
            }
            cur = slot.next_hop;
            slot = table.slots[cur as usize].expect("next hop holds the route");
        }
        let spoofed = table.originations[slot.origination as usize].spoofed_origin;
        Some(match spoofed.and_then(|s| self.graph.idx(s)) {
            Some(s) => f(s),
            None => false,
        })
    }

    fn materialize(&self, prefix: Prefix, table: &PrefixTable, at: u32, slot: Slot) -> RibEntry {
        let mut as_path = Vec::with_capacity(slot.path_len as usize);
        let mut cur = at;
        let mut s = slot;
        loop {
            as_path.push(self.graph.id_at(cur));
            if s.next_hop == NO_HOP {
                break;
            }
            cur = s.next_hop;
            s = table.slots[cur as usize].expect("next hop holds the route");
        }
        let orig = &table.originations[slot.origination as usize];
        as_path.extend(orig.spoofed_origin);
        let holder = self.graph.id_at(at);
        let communities = if slot.rewritten {
            rewrite_communities(holder, &orig.communities)
        } else {
            orig.communities.clone()
        };
        RibEntry {
            route: RouteAnnouncement { prefix, as_path, communities },
            learned_from: slot.learned_from,
            export_locked: slot.export_locked,
            advertise_locked: slot.advertise_locked,
            egress_filtered: slot.rewritten,
        }
    }
}

/// Ingress rewrite of the well-known no-export communities into `at:123`.
pub(crate) fn rewrite_communities(at: AsId, communities: &BTreeSet<Community>) -> BTreeSet<Community> {
    let mut out: BTreeSet<Community> = communities
        .iter()
        .copied()
        .filter(|c| *c != Community::NO_EXPORT && *c != Community::NO_EXPORT_SUBCONFED)
        .collect();
    if out.len() != communities.len() {
        out.insert(Community::rewrite_for(at));
    }
    out
}
