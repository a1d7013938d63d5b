//! Route origin validation against ROAs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::routing::{Prefix, RouteAnnouncement};
use crate::topology::AsId;

/// Route origin authorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roa {
    pub prefix: Prefix,
    pub max_length: u8,
    pub origin: AsId,
}

impl Roa {
    pub fn new(prefix: Prefix, max_length: u8, origin: AsId) -> Result<Self, Error> {
        if max_length < prefix.len() || max_length > 32 {
            return Err(Error::Scenario(format!(
                "ROA max_length {max_length} out of range for {prefix}"
            )));
        }
        Ok(Roa { prefix, max_length, origin })
    }

    /// A ROA whose max length equals the prefix length.
    pub fn exact(prefix: Prefix, origin: AsId) -> Self {
        Roa { prefix, max_length: prefix.len(), origin }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RovState {
    Valid,
    Invalid,
    NotFound,
}

/// Which ASes drop invalid announcements.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Enforcers {
    #[default]
    None,
    All,
    Only(BTreeSet<AsId>),
}

impl Enforcers {
    pub fn contains(&self, a: AsId) -> bool {
        match self {
            Enforcers::None => false,
            Enforcers::All => true,
            Enforcers::Only(set) => set.contains(&a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RovPolicy {
    pub roas: Vec<Roa>,
    pub enforcers: Enforcers,
}

/// Validates an announcement by its prefix and the last AS on its path.
pub fn rov_validate(roas: &[Roa], ann: &RouteAnnouncement) -> RovState {
    validate_origin(roas, ann.prefix, ann.origin())
}

pub(crate) fn validate_origin(roas: &[Roa], prefix: Prefix, origin: AsId) -> RovState {
    let mut covered = false;
    for roa in roas.iter().filter(|r| r.prefix.contains(&prefix)) {
        covered = true;
        if roa.origin == origin && prefix.len() <= roa.max_length {
            return RovState::Valid;
        }
    }
    if covered {
        RovState::Invalid
    } else {
        RovState::NotFound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asn(v: u32) -> AsId {
        AsId::new(v).unwrap()
    }

    fn ann(prefix: &str, path: &[u32]) -> RouteAnnouncement {
        RouteAnnouncement {
            prefix: prefix.parse().unwrap(),
            as_path: path.iter().map(|&v| asn(v)).collect(),
            communities: BTreeSet::new(),
        }
    }

    #[test]
    fn origin_and_length_violations() {
        let p23 = "10.0.0.0/23".parse().unwrap();
        let exact = [Roa::new(p23, 23, asn(5)).unwrap()];
        assert_eq!(rov_validate(&exact, &ann("10.0.0.0/24", &[6])), RovState::Invalid);
        // origin spoofed, length still too long
        assert_eq!(rov_validate(&exact, &ann("10.0.0.0/24", &[6, 5])), RovState::Invalid);
        assert_eq!(rov_validate(&exact, &ann("10.0.0.0/23", &[5])), RovState::Valid);

        let slack = [Roa::new(p23, 24, asn(5)).unwrap()];
        assert_eq!(rov_validate(&slack, &ann("10.0.0.0/24", &[6, 5])), RovState::Valid);
        assert_eq!(rov_validate(&slack, &ann("10.0.0.0/24", &[6])), RovState::Invalid);
    }

    #[test]
    fn uncovered_is_not_found() {
        let roas = [Roa::exact("10.0.0.0/23".parse().unwrap(), asn(5))];
        assert_eq!(rov_validate(&roas, &ann("10.0.2.0/24", &[6])), RovState::NotFound);
        assert_eq!(rov_validate(&[], &ann("10.0.0.0/24", &[6])), RovState::NotFound);
        // a shorter announcement is not covered by a longer ROA
        assert_eq!(rov_validate(&roas, &ann("10.0.0.0/22", &[6])), RovState::NotFound);
    }

    #[test]
    fn any_matching_roa_validates() {
        let p = "10.0.0.0/23".parse().unwrap();
        let roas = [Roa::exact(p, asn(5)), Roa::new(p, 24, asn(9)).unwrap()];
        assert_eq!(rov_validate(&roas, &ann("10.0.0.0/24", &[9])), RovState::Valid);
    }

    #[test]
    fn roa_bounds() {
        let p = "10.0.0.0/23".parse().unwrap();
        assert!(Roa::new(p, 22, asn(5)).is_err());
        assert!(Roa::new(p, 33, asn(5)).is_err());
    }
}
