//! Test-only helpers: random topologies, scenario generators and a naive
//! full-exchange propagation oracle that shares no code with the engine.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use hijacksim::routing::{AnnounceTo, Community, CommunityAction, CommunityRegistry, LearnedFrom, OriginationSpec, Prefix, Rib};
use hijacksim::scenario::{build_attack, AttackKind, AttackScenario, DefenseConfig, Enforcers, Roa};
use hijacksim::{AsGraph, AsId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn asn(v: u32) -> AsId {
    AsId::new(v).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Raw edge: (a, b, -1) means a is b's provider, (a, b, 0) peers.
pub type RawEdge = (u32, u32, i32);

/// Random acyclic relationship graph with 2..=10 ASes and scattered ASNs.
pub fn random_small_graph(r: &mut ChaCha8Rng) -> (AsGraph, Vec<RawEdge>) {
    let n = r.gen_range(2..=10);
    let mut ids: Vec<u32> = (1..=60).collect();
    ids.shuffle(r);
    ids.truncate(n);
    // position in `ids` is the hierarchy rank: providers come first
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let roll: f64 = r.gen();
            if roll < 0.35 {
                edges.push((ids[i], ids[j], -1));
            } else if roll < 0.5 {
                edges.push((ids[i], ids[j], 0));
            }
        }
    }
    let mut b = AsGraph::builder();
    for &id in &ids {
        b.add_node(asn(id));
    }
    for &(x, y, rel) in &edges {
        if rel == -1 {
            b.provider_customer(asn(x), asn(y)).unwrap();
        } else {
            b.peers(asn(x), asn(y)).unwrap();
        }
    }
    (b.build(), edges)
}

pub fn victim_prefix() -> Prefix {
    "10.0.0.0/23".parse().unwrap()
}

/// A random attack on a small graph. The adversary is either an existing AS
/// or a fresh one attached to its targets. Targets never include the victim.
pub fn random_attack(g: &AsGraph, r: &mut ChaCha8Rng, kind: AttackKind) -> Option<AttackScenario> {
    let external = r.gen_bool(0.5);
    random_attack_by(g, r, kind, external)
}

/// Like [`random_attack`], with the adversary always a fresh AS outside `g`.
pub fn random_external_attack(g: &AsGraph, r: &mut ChaCha8Rng, kind: AttackKind) -> Option<AttackScenario> {
    random_attack_by(g, r, kind, true)
}

fn random_attack_by(g: &AsGraph, r: &mut ChaCha8Rng, kind: AttackKind, external: bool) -> Option<AttackScenario> {
    let nodes = g.nodes().to_vec();
    if nodes.len() < 2 {
        return None;
    }
    let victim = *nodes.choose(r).unwrap();
    let adversary = if external {
        asn(1000)
    } else {
        let others: Vec<AsId> = nodes.iter().copied().filter(|&a| a != victim).collect();
        *others.choose(r).unwrap()
    };
    let pool: Vec<AsId> = nodes.iter().copied().filter(|&a| a != victim && a != adversary).collect();
    if pool.is_empty() {
        return None;
    }
    let k = r.gen_range(1..=pool.len().min(3));
    let mut targets: Vec<AsId> = pool.choose_multiple(r, k).copied().collect();
    targets.sort();
    Some(build_attack(g, victim, victim_prefix(), adversary, &targets, kind).unwrap())
}

/// Random defenses and registry extras for oracle comparisons.
pub fn random_policy(g: &AsGraph, r: &mut ChaCha8Rng, victim: AsId) -> (CommunityRegistry, DefenseConfig) {
    let nodes = g.nodes().to_vec();
    let mut reg = CommunityRegistry::well_known();
    if r.gen_bool(0.3) {
        let a = *nodes.choose(r).unwrap();
        reg.insert_scoped(a, Community::new(a.get() as u16, 990), CommunityAction::NoExport);
    }
    let mut defense = DefenseConfig::none();
    if r.gen_bool(0.3) {
        defense.rewrite_no_export_at = nodes.iter().copied().filter(|_| r.gen_bool(0.4)).collect();
    }
    if r.gen_bool(0.3) {
        defense.rov_enforcers = if r.gen_bool(0.5) {
            Enforcers::All
        } else {
            Enforcers::Only(nodes.iter().copied().filter(|_| r.gen_bool(0.5)).collect())
        };
        let max = r.gen_range(23..=24);
        defense.roas = vec![Roa::new(victim_prefix(), max, victim).unwrap()];
    }
    (reg, defense)
}

/// Random communities for the malicious announcement.
pub fn random_communities(r: &mut ChaCha8Rng, g: &AsGraph) -> BTreeSet<Community> {
    let mut out = BTreeSet::new();
    match r.gen_range(0..5) {
        0 => {}
        1 => {
            out.insert(Community::NO_EXPORT);
        }
        2 => {
            out.insert(Community::NO_ADVERTISE);
        }
        3 => {
            out.insert(Community::NO_EXPORT_SUBCONFED);
        }
        _ => {
            let a = *g.nodes().choose(r).unwrap();
            out.insert(Community::new(a.get() as u16, 990));
            out.insert(Community::new(1, 2));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// naive oracle

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRoute {
    pub path: Vec<u32>,
    /// 0 origin, 1 customer, 2 peer, 3 provider
    pub rank: u8,
    pub communities: BTreeSet<u32>,
    pub export_locked: bool,
    pub advertise_locked: bool,
    pub egress_filtered: bool,
}

pub struct OracleOrigination {
    pub origin: u32,
    pub path: Vec<u32>,
    pub communities: BTreeSet<u32>,
    pub announce_to: Option<BTreeSet<u32>>,
}

pub struct OracleConfig {
    /// (scope asn, community value, strictness 1..=3 with 3 = no-advertise)
    pub scoped: Vec<(u32, u32, u8)>,
    pub rewrite: BTreeSet<u32>,
    pub enforcer: Box<dyn Fn(u32) -> bool>,
    /// (prefix base, prefix len, max len, origin)
    pub roas: Vec<(u32, u8, u8, u32)>,
}

const NO_EXPORT: u32 = 0xFFFF_FF01;
const NO_ADVERTISE: u32 = 0xFFFF_FF02;
const NO_EXPORT_SUBCONFED: u32 = 0xFFFF_FF03;

fn strictness(cfg: &OracleConfig, at: u32, communities: &BTreeSet<u32>) -> u8 {
    let mut best = 0;
    for &c in communities {
        let wk = match c {
            NO_EXPORT => 2,
            NO_ADVERTISE => 3,
            NO_EXPORT_SUBCONFED => 1,
            _ => 0,
        };
        best = best.max(wk);
        for &(scope, value, s) in &cfg.scoped {
            if scope == at && value == c {
                best = best.max(s);
            }
        }
    }
    best
}

fn roa_state(cfg: &OracleConfig, base: u32, len: u8, origin: u32) -> &'static str {
    let mut covered = false;
    for &(rb, rl, rmax, ro) in &cfg.roas {
        let m = if rl == 0 { 0 } else { u32::MAX << (32 - rl) };
        if len >= rl && base & m == rb {
            covered = true;
            if ro == origin && len <= rmax {
                return "valid";
            }
        }
    }
    if covered {
        "invalid"
    } else {
        "notfound"
    }
}

/// Role of `b` relative to `a` from the raw edge list: 1 customer,
/// 2 peer, 3 provider.
fn raw_role(edges: &[RawEdge], a: u32, b: u32) -> Option<u8> {
    for &(x, y, rel) in edges {
        if x == a && y == b {
            return Some(if rel == -1 { 1 } else { 2 });
        }
        if x == b && y == a {
            return Some(if rel == -1 { 3 } else { 2 });
        }
    }
    None
}

/// Repeatedly exchanges full tables between all neighbors until nothing
/// changes. Returns the selected route per AS for one prefix.
pub fn oracle_prefix(
    nodes: &[u32],
    edges: &[RawEdge],
    prefix: (u32, u8),
    origins: &[OracleOrigination],
    cfg: &OracleConfig,
) -> BTreeMap<u32, OracleRoute> {
    let mut state: BTreeMap<u32, OracleRoute> = BTreeMap::new();
    for o in origins {
        state.insert(
            o.origin,
            OracleRoute {
                path: o.path.clone(),
                rank: 0,
                communities: o.communities.clone(),
                export_locked: false,
                advertise_locked: false,
                egress_filtered: false,
            },
        );
    }
    let origin_set: BTreeSet<u32> = origins.iter().map(|o| o.origin).collect();
    for _round in 0..500 {
        let mut next = BTreeMap::new();
        for &x in nodes {
            if origin_set.contains(&x) {
                next.insert(x, state[&x].clone());
                continue;
            }
            let mut best: Option<((u8, usize, u32), OracleRoute)> = None;
            for &y in nodes {
                let Some(role_of_x_for_y) = raw_role(edges, y, x) else { continue };
                let Some(ry) = state.get(&y) else { continue };
                if ry.export_locked || ry.advertise_locked || ry.egress_filtered {
                    continue;
                }
                // y exports customer/origin routes to everyone, others only
                // to customers
                if ry.rank >= 2 && role_of_x_for_y != 1 {
                    continue;
                }
                if ry.rank == 0 {
                    let o = origins.iter().find(|o| o.origin == y).unwrap();
                    if let Some(allowed) = &o.announce_to {
                        if !allowed.contains(&x) {
                            continue;
                        }
                    }
                }
                if ry.path.contains(&x) {
                    continue;
                }
                let origin = *ry.path.last().unwrap();
                if (cfg.enforcer)(x) && roa_state(cfg, prefix.0, prefix.1, origin) == "invalid" {
                    continue;
                }
                let mut communities = ry.communities.clone();
                let mut egress_filtered = false;
                if cfg.rewrite.contains(&x)
                    && (communities.contains(&NO_EXPORT) || communities.contains(&NO_EXPORT_SUBCONFED))
                {
                    communities.remove(&NO_EXPORT);
                    communities.remove(&NO_EXPORT_SUBCONFED);
                    communities.insert(((x & 0xFFFF) << 16) | 123);
                    egress_filtered = true;
                }
                let s = strictness(cfg, x, &communities);
                let mut path = vec![x];
                path.extend(&ry.path);
                // rank of the route at x: y's role relative to x
                let rank = match role_of_x_for_y {
                    1 => 3, // x is y's customer, so y is x's provider
                    2 => 2,
                    _ => 1,
                };
                let key = (rank, path.len(), y);
                let cand = OracleRoute {
                    path,
                    rank,
                    communities,
                    export_locked: s == 1 || s == 2,
                    advertise_locked: s == 3,
                    egress_filtered,
                };
                if best.as_ref().is_none_or(|(k, _)| key < *k) {
                    best = Some((key, cand));
                }
            }
            if let Some((_, r)) = best {
                next.insert(x, r);
            }
        }
        if next == state {
            return state;
        }
        state = next;
    }
    panic!("oracle did not converge");
}

/// Runs the oracle for every prefix in `originations`.
pub fn oracle_propagate(
    g: &AsGraph,
    originations: &[OriginationSpec],
    registry: &CommunityRegistry,
    defense: &DefenseConfig,
) -> BTreeMap<(Prefix, u32), OracleRoute> {
    let nodes: Vec<u32> = g.nodes().iter().map(|a| a.get()).collect();
    let mut edges = Vec::new();
    for &a in g.nodes() {
        for (b, role) in g.neighbors(a).unwrap() {
            if a < b {
                match role {
                    hijacksim::topology::Role::Customer => edges.push((a.get(), b.get(), -1)),
                    hijacksim::topology::Role::Provider => edges.push((b.get(), a.get(), -1)),
                    hijacksim::topology::Role::Peer => edges.push((a.get(), b.get(), 0)),
                }
            }
        }
    }
    let scoped: Vec<(u32, u32, u8)> = registry
        .entries()
        .filter_map(|(scope, c, action)| match scope {
            hijacksim::routing::Scope::As(a) => Some((
                a.get(),
                c.value(),
                match action {
                    CommunityAction::NoExportSubconfed => 1,
                    CommunityAction::NoExport => 2,
                    CommunityAction::NoAdvertise => 3,
                },
            )),
            _ => None,
        })
        .collect();
    let enforcers = defense.rov_enforcers.clone();
    let cfg = OracleConfig {
        scoped,
        rewrite: defense.rewrite_no_export_at.iter().map(|a| a.get()).collect(),
        enforcer: Box::new(move |x| enforcers.contains(AsId::new(x).unwrap())),
        roas: defense
            .roas
            .iter()
            .map(|r| (u32::from(r.prefix.base()), r.prefix.len(), r.max_length, r.origin.get()))
            .collect(),
    };
    let prefixes: BTreeSet<Prefix> = originations.iter().map(|o| o.prefix).collect();
    let mut out = BTreeMap::new();
    for p in prefixes {
        let origins: Vec<OracleOrigination> = originations
            .iter()
            .filter(|o| o.prefix == p)
            .map(|o| OracleOrigination {
                origin: o.origin.get(),
                path: std::iter::once(o.origin.get()).chain(o.spoofed_origin.map(|a| a.get())).collect(),
                communities: o.communities.iter().map(|c| c.value()).collect(),
                announce_to: match &o.announce_to {
                    AnnounceTo::AllNeighbors => None,
                    AnnounceTo::Only(s) => Some(s.iter().map(|a| a.get()).collect()),
                },
            })
            .collect();
        for (x, r) in oracle_prefix(&nodes, &edges, (u32::from(p.base()), p.len()), &origins, &cfg) {
            out.insert((p, x), r);
        }
    }
    out
}

/// The engine's RIB in oracle form.
pub fn rib_as_oracle(rib: &Rib) -> BTreeMap<(Prefix, u32), OracleRoute> {
    let mut out = BTreeMap::new();
    for p in rib.prefixes() {
        for e in rib.entries(p) {
            out.insert(
                (p, e.holder().get()),
                OracleRoute {
                    path: e.route.as_path.iter().map(|a| a.get()).collect(),
                    rank: match e.learned_from {
                        LearnedFrom::Origin => 0,
                        LearnedFrom::Customer => 1,
                        LearnedFrom::Peer => 2,
                        LearnedFrom::Provider => 3,
                    },
                    communities: e.route.communities.iter().map(|c| c.value()).collect(),
                    export_locked: e.export_locked,
                    advertise_locked: e.advertise_locked,
                    egress_filtered: e.egress_filtered,
                },
            );
        }
    }
    out
}

/// Hierarchical Internet-like topology: a peered tier-1 clique, a transit
/// layer and multi-homed stubs.
pub fn synthetic_internet(seed: u64, tier1: usize, transit: usize, stubs: usize) -> AsGraph {
    let mut r = rng(seed);
    let mut b = AsGraph::builder();
    let t1: Vec<u32> = (1..=tier1 as u32).collect();
    for i in 0..t1.len() {
        for j in (i + 1)..t1.len() {
            b.peers(asn(t1[i]), asn(t1[j])).unwrap();
        }
    }
    let mut upstream: Vec<u32> = t1.clone();
    let mut transits = Vec::new();
    for k in 0..transit {
        let id = 1000 + k as u32;
        let nprov = r.gen_range(1..=3).min(upstream.len());
        for &p in upstream.choose_multiple(&mut r, nprov) {
            b.provider_customer(asn(p), asn(id)).unwrap();
        }
        for &q in transits.iter() {
            if r.gen_bool(0.02) && !b.contains_edge(asn(q), asn(id)) {
                b.peers(asn(q), asn(id)).unwrap();
            }
        }
        transits.push(id);
        upstream.push(id);
    }
    for k in 0..stubs {
        let id = 100_000 + k as u32;
        let nprov = r.gen_range(1..=3);
        // stubs prefer transit providers, sometimes buy from a tier-1
        let mut provs: BTreeSet<u32> = BTreeSet::new();
        for _ in 0..nprov {
            let p = if r.gen_bool(0.2) { *t1.choose(&mut r).unwrap() } else { *transits.choose(&mut r).unwrap() };
            provs.insert(p);
        }
        for p in provs {
            b.provider_customer(asn(p), asn(id)).unwrap();
        }
    }
    b.build()
}
