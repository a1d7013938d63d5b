//! AS-level topology: CAIDA serial-1 ingestion, relationship lookups and
//! customer-cone ranking.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, TopologyParseError};

/// An autonomous-system number. Zero is reserved and rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct AsId(u32);

impl AsId {
    pub fn new(value: u32) -> Result<Self, Error> {
        if value == 0 {
            return Err(Error::InvalidAsn(value.to_string()));
        }
        Ok(AsId(value))
    }

    /// Compile-time constructor; panics on zero.
    pub const fn from_const(value: u32) -> Self {
        assert!(value != 0, "ASN 0 is reserved");
        AsId(value)
    }

    pub const fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for AsId {
    type Error = Error;

    fn try_from(value: u32) -> Result<Self, Error> {
        AsId::new(value)
    }
}

impl From<AsId> for u32 {
    fn from(a: AsId) -> u32 {
        a.0
    }
}

impl fmt::Display for AsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for AsId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let s = s
            .strip_prefix("AS")
            .or_else(|| s.strip_prefix("as"))
            .unwrap_or(s);
        let v: u32 = s.parse().map_err(|_| Error::InvalidAsn(s.to_string()))?;
        AsId::new(v)
    }
}

/// Relationship kind as written in the serial-1 format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relationship {
    ProviderToCustomer,
    PeerToPeer,
}

/// Role of a neighbor relative to a given AS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Customer,
    Peer,
    Provider,
}

impl Role {
    pub fn inverse(self) -> Role {
        match self {
            Role::Customer => Role::Provider,
            Role::Provider => Role::Customer,
            Role::Peer => Role::Peer,
        }
    }
}

/// Immutable, annotated AS graph.
///
/// Nodes are stored densely, indexed in ascending ASN order, so comparing
/// indices is the same as comparing ASNs. Adjacency lists are sorted.
#[derive(Debug, Clone, Default)]
pub struct AsGraph {
    ids: Vec<AsId>,
    index: HashMap<AsId, u32>,
    customers: Vec<Vec<u32>>,
    providers: Vec<Vec<u32>>,
    peers: Vec<Vec<u32>>,
}

/// Accumulates edges while enforcing one relationship per unordered pair.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    nodes: BTreeSet<AsId>,
    // keyed by (min, max); value is the role of max relative to min
    edges: BTreeMap<(AsId, AsId), Role>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, a: AsId) -> &mut Self {
        self.nodes.insert(a);
        self
    }

    /// Adds `customer` as a customer of `provider`.
    pub fn provider_customer(&mut self, provider: AsId, customer: AsId) -> Result<&mut Self, Error> {
        self.insert(provider, customer, Role::Customer)
    }

    pub fn peers(&mut self, a: AsId, b: AsId) -> Result<&mut Self, Error> {
        self.insert(a, b, Role::Peer)
    }

    /// Inserts an edge where `role` is the role of `b` relative to `a`.
    pub fn insert(&mut self, a: AsId, b: AsId, role: Role) -> Result<&mut Self, Error> {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        let (key, role) = if a < b { ((a, b), role) } else { ((b, a), role.inverse()) };
        if let Some(existing) = self.edges.get(&key) {
            return Err(Error::DuplicateEdge {
                a: key.0,
                b: key.1,
                conflicting: *existing != role,
            });
        }
        self.edges.insert(key, role);
        self.nodes.insert(a);
        self.nodes.insert(b);
        Ok(self)
    }

    pub fn contains_edge(&self, a: AsId, b: AsId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.contains_key(&key)
    }

    pub fn build(&self) -> AsGraph {
        let ids: Vec<AsId> = self.nodes.iter().copied().collect();
        let index: HashMap<AsId, u32> = ids.iter().enumerate().map(|(i, a)| (*a, i as u32)).collect();
        let n = ids.len();
        let mut customers = vec![Vec::new(); n];
        let mut providers = vec![Vec::new(); n];
        let mut peers = vec![Vec::new(); n];
        for (&(a, b), &role) in &self.edges {
            let (ia, ib) = (index[&a], index[&b]);
            match role {
                Role::Customer => {
                    customers[ia as usize].push(ib);
                    providers[ib as usize].push(ia);
                }
                Role::Provider => {
                    providers[ia as usize].push(ib);
                    customers[ib as usize].push(ia);
                }
                Role::Peer => {
                    peers[ia as usize].push(ib);
                    peers[ib as usize].push(ia);
                }
            }
        }
        for list in customers.iter_mut().chain(providers.iter_mut()).chain(peers.iter_mut()) {
            list.sort_unstable();
        }
        AsGraph { ids, index, customers, providers, peers }
    }
}

impl AsGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::new()
    }

    /// Parses CAIDA serial-1 AS relationships. Gzip input is detected by its
    /// magic bytes.
    pub fn parse_as_rel(bytes: &[u8]) -> Result<AsGraph, Error> {
        if bytes.starts_with(&[0x1f, 0x8b]) {
            let mut text = String::new();
            GzDecoder::new(bytes)
                .read_to_string(&mut text)
                .map_err(|e| Error::Io(format!("gzip: {e}")))?;
            return Self::parse_as_rel_str(&text);
        }
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Io(format!("utf-8: {e}")))?;
        Self::parse_as_rel_str(text)
    }

    pub fn parse_as_rel_str(text: &str) -> Result<AsGraph, Error> {
        let mut builder = GraphBuilder::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| {
                Error::Parse(TopologyParseError { line: lineno + 1, reason, invariant: false })
            };
            let fields: Vec<&str> = line.split('|').collect();
            if fields.len() != 3 {
                return Err(bad(format!("expected 3 '|'-separated fields, found {}", fields.len())));
            }
            let a = parse_asn_field(fields[0]).map_err(&bad)?;
            let b = parse_asn_field(fields[1]).map_err(&bad)?;
            let rel = match fields[2].trim() {
                "-1" => Relationship::ProviderToCustomer,
                "0" => Relationship::PeerToPeer,
                other => return Err(bad(format!("unknown relationship code '{other}'"))),
            };
            let res = match rel {
                Relationship::ProviderToCustomer => builder.provider_customer(a, b),
                Relationship::PeerToPeer => builder.peers(a, b),
            };
            res.map_err(|e| {
                Error::Parse(TopologyParseError { line: lineno + 1, reason: e.to_string(), invariant: true })
            })?;
        }
        Ok(builder.build())
    }

    /// Serializes back to serial-1, edges sorted by (first, second).
    pub fn to_serial1(&self) -> String {
        let mut out = String::new();
        for (i, &a) in self.ids.iter().enumerate() {
            for &c in &self.customers[i] {
                out.push_str(&format!("{}|{}|-1\n", a, self.ids[c as usize]));
            }
            for &p in &self.peers[i] {
                if (p as usize) > i {
                    out.push_str(&format!("{}|{}|0\n", a, self.ids[p as usize]));
                }
            }
        }
        out
    }

    /// Returns a builder pre-loaded with this graph's nodes and edges.
    pub fn to_builder(&self) -> GraphBuilder {
        let mut b = GraphBuilder::new();
        for (i, &a) in self.ids.iter().enumerate() {
            b.add_node(a);
            for &c in &self.customers[i] {
                b.insert(a, self.ids[c as usize], Role::Customer)
                    .expect("graph edges are unique");
            }
            for &p in &self.peers[i] {
                if (p as usize) > i {
                    b.insert(a, self.ids[p as usize], Role::Peer)
                        .expect("graph edges are unique");
                }
            }
        }
        b
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.customers.iter().map(Vec::len).sum::<usize>()
            + self.peers.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn provider_customer_count(&self) -> usize {
        self.customers.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, a: AsId) -> bool {
        self.index.contains_key(&a)
    }

    pub fn nodes(&self) -> &[AsId] {
        &self.ids
    }

    pub(crate) fn idx(&self, a: AsId) -> Option<u32> {
        self.index.get(&a).copied()
    }

    pub(crate) fn id_at(&self, i: u32) -> AsId {
        self.ids[i as usize]
    }

    pub(crate) fn customers_of(&self, i: u32) -> &[u32] {
        &self.customers[i as usize]
    }

    pub(crate) fn providers_of(&self, i: u32) -> &[u32] {
        &self.providers[i as usize]
    }

    pub(crate) fn peers_of(&self, i: u32) -> &[u32] {
        &self.peers[i as usize]
    }

    /// Role of `b` relative to `a`, if they are adjacent.
    pub fn role_of(&self, a: AsId, b: AsId) -> Option<Role> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        self.role_at(ia, ib)
    }

    pub(crate) fn role_at(&self, ia: u32, ib: u32) -> Option<Role> {
        if self.customers_of(ia).binary_search(&ib).is_ok() {
            Some(Role::Customer)
        } else if self.providers_of(ia).binary_search(&ib).is_ok() {
            Some(Role::Provider)
        } else if self.peers_of(ia).binary_search(&ib).is_ok() {
            Some(Role::Peer)
        } else {
            None
        }
    }

    fn ids_of<'a>(&'a self, list: &'a [u32]) -> impl Iterator<Item = AsId> + 'a {
        list.iter().map(move |&i| self.ids[i as usize])
    }

    pub fn customers(&self, a: AsId) -> Result<Vec<AsId>, Error> {
        let i = self.require(a)?;
        Ok(self.ids_of(self.customers_of(i)).collect())
    }

    pub fn providers(&self, a: AsId) -> Result<Vec<AsId>, Error> {
        let i = self.require(a)?;
        Ok(self.ids_of(self.providers_of(i)).collect())
    }

    pub fn peer_list(&self, a: AsId) -> Result<Vec<AsId>, Error> {
        let i = self.require(a)?;
        Ok(self.ids_of(self.peers_of(i)).collect())
    }

    /// All neighbors of `a` with their role relative to `a`, ascending by ASN.
    pub fn neighbors(&self, a: AsId) -> Result<Vec<(AsId, Role)>, Error> {
        let i = self.require(a)?;
        let mut out: Vec<(AsId, Role)> = self
            .ids_of(self.customers_of(i))
            .map(|x| (x, Role::Customer))
            .chain(self.ids_of(self.peers_of(i)).map(|x| (x, Role::Peer)))
            .chain(self.ids_of(self.providers_of(i)).map(|x| (x, Role::Provider)))
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    pub(crate) fn require(&self, a: AsId) -> Result<u32, Error> {
        self.idx(a).ok_or(Error::UnknownAs(a))
    }

    /// `a` together with every AS reachable by following provider-to-customer
    /// edges.
    pub fn customer_cone(&self, a: AsId) -> Result<BTreeSet<AsId>, Error> {
        let start = self.require(a)?;
        let mut seen = vec![false; self.len()];
        let mut stack = vec![start];
        seen[start as usize] = true;
        let mut cone = BTreeSet::new();
        while let Some(i) = stack.pop() {
            cone.insert(self.ids[i as usize]);
            for &c in self.customers_of(i) {
                if !seen[c as usize] {
                    seen[c as usize] = true;
                    stack.push(c);
                }
            }
        }
        Ok(cone)
    }

    /// Customer-cone size of every node, in node order.
    pub fn cone_sizes(&self) -> Vec<usize> {
        use rayon::prelude::*;
        let n = self.len();
        (0..n as u32)
            .into_par_iter()
            .map_init(
                || (vec![0u32; n], 0u32, Vec::new()),
                |(stamp, epoch, stack), start| {
                    *epoch += 1;
                    let mark = *epoch;
                    stack.clear();
                    stack.push(start);
                    stamp[start as usize] = mark;
                    let mut size = 0usize;
                    while let Some(i) = stack.pop() {
                        size += 1;
                        for &c in self.customers_of(i) {
                            if stamp[c as usize] != mark {
                                stamp[c as usize] = mark;
                                stack.push(c);
                            }
                        }
                    }
                    size
                },
            )
            .collect()
    }

    /// The `k` largest customer cones as `(asn, cone_size)`, descending by
    /// size with ties broken by ascending ASN.
    pub fn top_by_cone_with_sizes(&self, k: usize) -> Result<Vec<(AsId, usize)>, Error> {
        if k == 0 || k > self.len() {
            return Err(Error::InvalidK { k, nodes: self.len() });
        }
        let sizes = self.cone_sizes();
        let mut ranked: Vec<(AsId, usize)> = self.ids.iter().copied().zip(sizes).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        Ok(ranked)
    }

    pub fn top_by_cone(&self, k: usize) -> Result<Vec<AsId>, Error> {
        Ok(self.top_by_cone_with_sizes(k)?.into_iter().map(|(a, _)| a).collect())
    }

    /// Finds provider-to-customer cycles. Returns one representative AS per
    /// strongly connected component of size > 1.
    pub fn provider_cycles(&self) -> Vec<Vec<AsId>> {
        // iterative Tarjan over the customer edges
        let n = self.len();
        let mut index = vec![u32::MAX; n];
        let mut low = vec![0u32; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<u32> = Vec::new();
        let mut counter = 0u32;
        let mut out = Vec::new();
        for root in 0..n as u32 {
            if index[root as usize] != u32::MAX {
                continue;
            }
            let mut work: Vec<(u32, usize)> = vec![(root, 0)];
            while let Some(&mut (v, ref mut next)) = work.last_mut() {
                let vi = v as usize;
                if *next == 0 && index[vi] == u32::MAX {
                    index[vi] = counter;
                    low[vi] = counter;
                    counter += 1;
                    stack.push(v);
                    on_stack[vi] = true;
                }
                let succ = self.customers_of(v);
                if *next < succ.len() {
                    let w = succ[*next];
                    *next += 1;
                    let wi = w as usize;
                    if index[wi] == u32::MAX {
                        work.push((w, 0));
                    } else if on_stack[wi] {
                        low[vi] = low[vi].min(index[wi]);
                    }
                    continue;
                }
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    let pi = parent as usize;
                    low[pi] = low[pi].min(low[vi]);
                }
                if low[vi] == index[vi] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w as usize] = false;
                        component.push(self.ids[w as usize]);
                        if w == v {
                            break;
                        }
                    }
                    if component.len() > 1 {
                        component.sort_unstable();
                        out.push(component);
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// ASes with no edges at all.
    pub fn isolated(&self) -> Vec<AsId> {
        (0..self.len())
            .filter(|&i| self.customers[i].is_empty() && self.providers[i].is_empty() && self.peers[i].is_empty())
            .map(|i| self.ids[i])
            .collect()
    }
}

fn parse_asn_field(s: &str) -> Result<AsId, String> {
    let v: u32 = s.trim().parse().map_err(|_| format!("invalid ASN '{}'", s.trim()))?;
    AsId::new(v).map_err(|_| "ASN 0 is reserved".to_string())
}
