//! BGP communities and the registry of action communities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::topology::AsId;

/// A 32-bit community value, written `high:low`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Community(u32);

impl Community {
    pub const NO_EXPORT: Community = Community(0xFFFF_FF01);
    pub const NO_ADVERTISE: Community = Community(0xFFFF_FF02);
    pub const NO_EXPORT_SUBCONFED: Community = Community(0xFFFF_FF03);

    /// Low half used by the ingress rewrite defense.
    pub const REWRITE_TAG: u16 = 123;

    pub const fn from_u32(v: u32) -> Self {
        Community(v)
    }

    pub const fn new(high: u16, low: u16) -> Self {
        Community(((high as u32) << 16) | low as u32)
    }

    pub const fn value(self) -> u32 {
        self.0
    }

    pub const fn high(self) -> u16 {
        (self.0 >> 16) as u16
    }

    pub const fn low(self) -> u16 {
        self.0 as u16
    }

    /// The AS-specific community `asn:123` that replaces NO_EXPORT when the
    /// rewrite defense runs at `asn`. Four-byte ASNs keep their low 16 bits;
    /// the value is only ever interpreted by the rewriting AS itself.
    pub fn rewrite_for(asn: AsId) -> Self {
        Community::new(asn.get() as u16, Self::REWRITE_TAG)
    }
}

impl fmt::Display for Community {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.high(), self.low())
    }
}

impl FromStr for Community {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidCommunity(s.to_string());
        let (hi, lo) = s.trim().split_once(':').ok_or_else(bad)?;
        let hi: u16 = hi.parse().map_err(|_| bad())?;
        let lo: u16 = lo.parse().map_err(|_| bad())?;
        Ok(Community::new(hi, lo))
    }
}

impl TryFrom<String> for Community {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<Community> for String {
    fn from(c: Community) -> String {
        c.to_string()
    }
}

/// Export restriction carried by an action community. Ordered from least to
/// most strict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommunityAction {
    NoExportSubconfed,
    NoExport,
    NoAdvertise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    WellKnown,
    As(AsId),
}

/// Maps (scope, community) to the action it triggers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityRegistry {
    entries: BTreeMap<(Scope, Community), CommunityAction>,
}

impl Default for CommunityRegistry {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert((Scope::WellKnown, Community::NO_EXPORT), CommunityAction::NoExport);
        entries.insert((Scope::WellKnown, Community::NO_ADVERTISE), CommunityAction::NoAdvertise);
        entries.insert(
            (Scope::WellKnown, Community::NO_EXPORT_SUBCONFED),
            CommunityAction::NoExportSubconfed,
        );
        CommunityRegistry { entries }
    }
}

impl CommunityRegistry {
    /// Registry holding only the RFC 1997 well-known communities.
    pub fn well_known() -> Self {
        Self::default()
    }

    /// Registers a community that only `scope_as` interprets.
    pub fn insert_scoped(&mut self, scope_as: AsId, community: Community, action: CommunityAction) {
        self.entries.insert((Scope::As(scope_as), community), action);
    }

    pub fn with_scoped(mut self, scope_as: AsId, community: Community, action: CommunityAction) -> Self {
        self.insert_scoped(scope_as, community, action);
        self
    }

    pub fn entries(&self) -> impl Iterator<Item = (Scope, Community, CommunityAction)> + '_ {
        self.entries.iter().map(|(&(s, c), &a)| (s, c, a))
    }

    /// Strictest action triggered at `at` by `communities`. AS-scoped entries
    /// held by other ASes are transparent.
    pub fn effective_action(&self, at: AsId, communities: &BTreeSet<Community>) -> Option<CommunityAction> {
        communities
            .iter()
            .filter_map(|&c| {
                let wk = self.entries.get(&(Scope::WellKnown, c)).copied();
                let scoped = self.entries.get(&(Scope::As(at), c)).copied();
                wk.max(scoped)
            })
            .max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn asn(v: u32) -> AsId {
        AsId::new(v).unwrap()
    }

    fn comms(v: &[&str]) -> BTreeSet<Community> {
        v.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn well_known_values_are_bit_exact() {
        assert_eq!("65535:65281".parse::<Community>().unwrap().value(), 0xFFFF_FF01);
        assert_eq!("65535:65282".parse::<Community>().unwrap().value(), 0xFFFF_FF02);
        assert_eq!("65535:65283".parse::<Community>().unwrap().value(), 0xFFFF_FF03);
        assert_eq!(Community::NO_EXPORT.to_string(), "65535:65281");
    }

    #[test]
    fn provider_scoped_no_export() {
        let reg = CommunityRegistry::well_known().with_scoped(
            asn(174),
            Community::new(174, 990),
            CommunityAction::NoExport,
        );
        assert_eq!(reg.effective_action(asn(174), &comms(&["174:990"])), Some(CommunityAction::NoExport));
        assert_eq!(reg.effective_action(asn(20473), &comms(&["174:990"])), None);
        assert_eq!(reg.effective_action(asn(42), &comms(&["65535:65281"])), Some(CommunityAction::NoExport));
        assert_eq!(reg.effective_action(asn(42), &comms(&["1:2", "3:4"])), None);
    }

    #[test]
    fn strictest_action_wins() {
        let reg = CommunityRegistry::well_known();
        let all = comms(&["65535:65283", "65535:65281", "65535:65282"]);
        assert_eq!(reg.effective_action(asn(1), &all), Some(CommunityAction::NoAdvertise));
        let two = comms(&["65535:65283", "65535:65281"]);
        assert_eq!(reg.effective_action(asn(1), &two), Some(CommunityAction::NoExport));
        let one = comms(&["65535:65283"]);
        assert_eq!(reg.effective_action(asn(1), &one), Some(CommunityAction::NoExportSubconfed));
    }

    #[test]
    fn rewrite_community() {
        assert_eq!(Community::rewrite_for(asn(174)).to_string(), "174:123");
        assert_eq!(Community::rewrite_for(asn(65536 + 7)).to_string(), "7:123");
    }

    #[test]
    fn rejects_bad_text() {
        for s in ["65536:1", "1", "a:b", "1:2:3", ""] {
            assert!(s.parse::<Community>().is_err(), "{s}");
        }
    }

    proptest! {
        #[test]
        fn text_round_trip(v in any::<u32>()) {
            let c = Community::from_u32(v);
            prop_assert_eq!(c.to_string().parse::<Community>().unwrap(), c);
        }
    }
}
