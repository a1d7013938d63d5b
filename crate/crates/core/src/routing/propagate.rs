//! Three-stage Gao-Rexford propagation: customer routes climb to providers,
//! one exchange across peer links, then everything descends to customers.
//! Each stage is a unit-weight Dijkstra keyed by (path length, next-hop ASN),
//! so the first acceptable offer an AS pops is the one it would select.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::rib::{rewrite_communities, PrefixTable, Slot, NO_HOP};
use super::{AnnounceTo, CommunityAction, CommunityRegistry, LearnedFrom, OriginationSpec, Prefix, Rib};
use crate::error::Error;
use crate::scenario::{validate_origin, RovPolicy, RovState};
use crate::topology::{AsGraph, AsId};

/// Per-AS routing policy applied during propagation.
#[derive(Debug, Clone, Default)]
pub struct Policy {
    pub registry: CommunityRegistry,
    pub rov: Option<RovPolicy>,
    /// ASes running the ingress NO_EXPORT rewrite.
    pub rewrite_at: BTreeSet<AsId>,
}

impl Policy {
    pub fn with_registry(registry: CommunityRegistry) -> Self {
        Policy { registry, ..Default::default() }
    }
}

/// Propagates all originations to a fixed point. Prefixes are independent.
pub fn propagate<'g>(g: &'g AsGraph, originations: &[OriginationSpec], policy: &Policy) -> Result<Rib<'g>, Error> {
    let mut by_prefix: BTreeMap<Prefix, Vec<OriginationSpec>> = BTreeMap::new();
    for o in originations {
        let origin = g.require(o.origin)?;
        if let AnnounceTo::Only(targets) = &o.announce_to {
            for &t in targets {
                let ti = g.idx(t).ok_or(Error::NotAdjacent { origin: o.origin, neighbor: t })?;
                if g.role_at(origin, ti).is_none() {
                    return Err(Error::NotAdjacent { origin: o.origin, neighbor: t });
                }
            }
        }
        if o.spoofed_origin == Some(o.origin) {
            return Err(Error::Scenario(format!("AS {} cannot spoof itself", o.origin)));
        }
        let group = by_prefix.entry(o.prefix).or_default();
        if group.iter().any(|x| x.origin == o.origin) {
            return Err(Error::Scenario(format!("AS {} originates {} twice", o.origin, o.prefix)));
        }
        group.push(o.clone());
    }

    let rewrite: Vec<bool> = mark(g, &policy.rewrite_at);
    let enforcing: Vec<bool> = match &policy.rov {
        Some(rov) => g.nodes().iter().map(|&a| rov.enforcers.contains(a)).collect(),
        None => vec![false; g.len()],
    };

    let mut rib = Rib::new(g);
    for (prefix, group) in by_prefix {
        let invalid: Vec<bool> = group
            .iter()
            .map(|o| match &policy.rov {
                Some(rov) => validate_origin(&rov.roas, o.prefix, o.apparent_origin()) == RovState::Invalid,
                None => false,
            })
            .collect();
        let mut run = PrefixRun {
            g,
            registry: &policy.registry,
            rewrite: &rewrite,
            enforcing: &enforcing,
            invalid,
            originations: &group,
            slots: vec![None; g.len()],
        };
        run.solve();
        let slots = run.slots;
        rib.insert_table(prefix, PrefixTable { originations: group, slots });
    }
    Ok(rib)
}

fn mark(g: &AsGraph, set: &BTreeSet<AsId>) -> Vec<bool> {
    let mut out = vec![false; g.len()];
    for a in set {
        if let Some(i) = g.idx(*a) {
            out[i as usize] = true;
        }
    }
    out
}

struct PrefixRun<'a> {
    g: &'a AsGraph,
    registry: &'a CommunityRegistry,
    rewrite: &'a [bool],
    enforcing: &'a [bool],
    invalid: Vec<bool>,
    originations: &'a [OriginationSpec],
    slots: Vec<Option<Slot>>,
}

type Offer = Reverse<(u32, u32, u32)>;

impl PrefixRun<'_> {
    fn solve(&mut self) {
        // origins
        let mut heap: BinaryHeap<Offer> = BinaryHeap::new();
        for (k, o) in self.originations.iter().enumerate() {
            let i = self.g.idx(o.origin).expect("validated origin");
            let len = o.origin_path().len() as u32;
            self.slots[i as usize] = Some(Slot {
                learned_from: LearnedFrom::Origin,
                next_hop: NO_HOP,
                path_len: len,
                origination: k as u32,
                rewritten: false,
                export_locked: false,
                advertise_locked: false,
            });
            heap.push(Reverse((len, i, i)));
        }

        // up: customer routes towards providers
        self.dijkstra(heap, LearnedFrom::Customer);

        // across: a single peer exchange of origin/customer routes
        let mut offers: Vec<(u32, u32, u32)> = Vec::new();
        for i in 0..self.g.len() as u32 {
            let Some(slot) = self.slots[i as usize] else { continue };
            if !slot.exportable() {
                continue;
            }
            for &j in self.g.peers_of(i) {
                if self.slots[j as usize].is_none() && self.may_announce(&slot, j) {
                    offers.push((j, slot.path_len + 1, i));
                }
            }
        }
        offers.sort_unstable();
        for (j, _, i) in offers {
            if self.slots[j as usize].is_some() {
                continue;
            }
            if let Some(s) = self.accept(j, i, LearnedFrom::Peer) {
                self.slots[j as usize] = Some(s);
            }
        }

        // down: everything towards customers
        let mut heap: BinaryHeap<Offer> = BinaryHeap::new();
        for (i, s) in self.slots.iter().enumerate() {
            if let Some(s) = s {
                heap.push(Reverse((s.path_len, i as u32, i as u32)));
            }
        }
        self.dijkstra(heap, LearnedFrom::Provider);
    }

    /// Expands routes along customer->provider links (`Customer`) or
    /// provider->customer links (`Provider`).
    fn dijkstra(&mut self, mut heap: BinaryHeap<Offer>, learned: LearnedFrom) {
        while let Some(Reverse((len, from, to))) = heap.pop() {
            if from != to {
                if self.slots[to as usize].is_some() {
                    continue;
                }
                match self.accept(to, from, learned) {
                    Some(s) => self.slots[to as usize] = Some(s),
                    None => continue,
                }
            }
            let slot = self.slots[to as usize].expect("expanded node holds a route");
            if !slot.exportable() {
                continue;
            }
            let next = match learned {
                LearnedFrom::Customer => self.g.providers_of(to),
                _ => self.g.customers_of(to),
            };
            for &n in next {
                if self.slots[n as usize].is_none() && self.may_announce(&slot, n) {
                    heap.push(Reverse((len + 1, to, n)));
                }
            }
        }
    }

    fn may_announce(&self, slot: &Slot, to: u32) -> bool {
        if slot.learned_from != LearnedFrom::Origin {
            return true;
        }
        self.originations[slot.origination as usize]
            .announce_to
            .allows(self.g.id_at(to))
    }

    /// Ingress processing at `to` of the route held by `from`: loop check,
    /// origin validation, community rewrite and community actions.
    fn accept(&self, to: u32, from: u32, learned: LearnedFrom) -> Option<Slot> {
        let sender = self.slots[from as usize].expect("sender holds a route");
        let k = sender.origination as usize;
        if self.enforcing[to as usize] && self.invalid[k] {
            return None;
        }
        if self.path_contains(from, to) {
            return None;
        }
        let orig = &self.originations[k];
        let at = self.g.id_at(to);
        let mut rewritten = false;
        let action = if orig.communities.is_empty() {
            None
        } else if self.rewrite[to as usize] {
            let after = rewrite_communities(at, &orig.communities);
            rewritten = after != orig.communities;
            self.registry.effective_action(at, &after)
        } else {
            self.registry.effective_action(at, &orig.communities)
        };
        Some(Slot {
            learned_from: learned,
            next_hop: from,
            path_len: sender.path_len + 1,
            origination: sender.origination,
            rewritten,
            export_locked: matches!(action, Some(CommunityAction::NoExport | CommunityAction::NoExportSubconfed)),
            advertise_locked: action == Some(CommunityAction::NoAdvertise),
        })
    }

    fn path_contains(&self, from: u32, target: u32) -> bool {
        let mut cur = from;
        loop {
            if cur == target {
                return true;
            }
            let s = self.slots[cur as usize].expect("path member holds the route");
            if s.next_hop == NO_HOP {
                let spoofed = self.originations[s.origination as usize].spoofed_origin;
                return spoofed.and_then(|a| self.g.idx(a)) == Some(target);
            }
            cur = s.next_hop;
        }
    }
}
