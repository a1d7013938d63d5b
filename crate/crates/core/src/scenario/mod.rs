//! Attack scenarios and the defenses applied to them.

mod descriptor;
mod rov;

use std::borrow::Cow;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use descriptor::{RovDescriptor, ScenarioDescriptor, StrategyDescriptor, DefenseDescriptor, ScopedCommunity};
pub use rov::{rov_validate, Enforcers, Roa, RovPolicy, RovState};
pub(crate) use rov::validate_origin;

use crate::error::Error;
use crate::routing::{Community, CommunityAction, CommunityRegistry, OriginationSpec, Policy, Prefix, Rib};
use crate::topology::{AsGraph, AsId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// More-specific prefix tagged NO_EXPORT.
    SubPrefixStealthy,
    /// More-specific prefix without communities.
    SubPrefixLoud,
    /// Same prefix as the victim.
    EquallySpecific,
}

impl AttackKind {
    pub fn is_sub_prefix(self) -> bool {
        !matches!(self, AttackKind::EquallySpecific)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackScenario {
    pub victim: OriginationSpec,
    pub adversary_as: AsId,
    pub malicious: OriginationSpec,
    pub kind: AttackKind,
    pub spoof_victim_origin: bool,
    /// (provider, customer) edges added so the adversary can reach its
    /// targets.
    pub synthetic_edges: Vec<(AsId, AsId)>,
}

/// Builds an attack by `adversary_as` against `victim_prefix` originated by
/// `victim_as`, announced only to `targets`. Targets not already adjacent to
/// the adversary become its providers.
pub fn build_attack(
    g: &AsGraph,
    victim_as: AsId,
    victim_prefix: Prefix,
    adversary_as: AsId,
    targets: &[AsId],
    kind: AttackKind,
) -> Result<AttackScenario, Error> {
    g.require(victim_as)?;
    if adversary_as == victim_as {
        return Err(Error::Scenario(format!("adversary and victim are both AS {victim_as}")));
    }
    if targets.is_empty() {
        return Err(Error::Scenario("attack needs at least one target".into()));
    }
    let mut synthetic_edges = Vec::new();
    for &t in targets {
        g.require(t)?;
        if t == adversary_as {
            return Err(Error::Scenario(format!("AS {t} cannot target itself")));
        }
        if g.role_of(adversary_as, t).is_none() && !synthetic_edges.contains(&(t, adversary_as)) {
            synthetic_edges.push((t, adversary_as));
        }
    }
    let (prefix, communities) = match kind {
        AttackKind::SubPrefixStealthy => (victim_prefix.lower_half()?, BTreeSet::from([Community::NO_EXPORT])),
        AttackKind::SubPrefixLoud => (victim_prefix.lower_half()?, BTreeSet::new()),
        AttackKind::EquallySpecific => (victim_prefix, BTreeSet::new()),
    };
    let malicious = OriginationSpec::new(adversary_as, prefix)
        .with_communities(communities)
        .announce_only_to(targets.iter().copied());
    Ok(AttackScenario {
        victim: OriginationSpec::new(victim_as, victim_prefix),
        adversary_as,
        malicious,
        kind,
        spoof_victim_origin: false,
        synthetic_edges,
    })
}

impl AttackScenario {
    /// Makes the malicious announcement carry the victim as its origin.
    pub fn with_spoofed_origin(mut self) -> Self {
        self.spoof_victim_origin = true;
        self.malicious.spoofed_origin = Some(self.victim.origin);
        self
    }

    /// Replaces the malicious communities, e.g. to use NO_ADVERTISE or a
    /// provider-scoped no-export value.
    pub fn with_malicious_communities(mut self, communities: impl IntoIterator<Item = Community>) -> Self {
        self.malicious.communities = communities.into_iter().collect();
        self
    }

    /// Checks the kind-specific invariants.
    pub fn validate(&self, registry: &CommunityRegistry) -> Result<(), Error> {
        let (vp, mp) = (self.victim.prefix, self.malicious.prefix);
        match self.kind {
            AttackKind::EquallySpecific if vp != mp => {
                return Err(Error::Scenario(format!("equally-specific attack announces {mp}, victim has {vp}")));
            }
            AttackKind::SubPrefixStealthy | AttackKind::SubPrefixLoud if !(vp.contains(&mp) && mp.len() > vp.len()) => {
                return Err(Error::Scenario(format!("{mp} is not a sub-prefix of {vp}")));
            }
            _ => {}
        }
        if self.kind == AttackKind::SubPrefixStealthy {
            let targets: Vec<AsId> = match &self.malicious.announce_to {
                crate::routing::AnnounceTo::Only(t) => t.iter().copied().collect(),
                crate::routing::AnnounceTo::AllNeighbors => Vec::new(),
            };
            for t in targets {
                if registry.effective_action(t, &self.malicious.communities).is_none() {
                    return Err(Error::Scenario(format!(
                        "stealthy attack carries no export restriction effective at AS {t}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The topology with the adversary's synthetic transit sessions added.
    pub fn topology<'a>(&self, g: &'a AsGraph) -> Result<Cow<'a, AsGraph>, Error> {
        if self.synthetic_edges.is_empty() {
            return Ok(Cow::Borrowed(g));
        }
        let mut b = g.to_builder();
        for &(provider, customer) in &self.synthetic_edges {
            b.provider_customer(provider, customer)?;
        }
        Ok(Cow::Owned(b.build()))
    }

    pub fn originations(&self) -> [OriginationSpec; 2] {
        [self.victim.clone(), self.malicious.clone()]
    }

    pub fn targets(&self) -> BTreeSet<AsId> {
        match &self.malicious.announce_to {
            crate::routing::AnnounceTo::Only(t) => t.clone(),
            crate::routing::AnnounceTo::AllNeighbors => BTreeSet::new(),
        }
    }

    /// ASes whose selected route for the malicious prefix leads to the
    /// adversary.
    pub fn infected_set(&self, rib: &Rib) -> BTreeSet<AsId> {
        rib.entries(self.malicious.prefix)
            .into_iter()
            .filter(|e| e.route.as_path.contains(&self.adversary_as))
            .map(|e| e.holder())
            .collect()
    }

    /// An address inside the malicious prefix.
    pub fn probe_addr(&self) -> std::net::Ipv4Addr {
        self.malicious.prefix.first_addr()
    }
}

/// Mitigations deployed for a run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DefenseConfig {
    pub rewrite_no_export_at: BTreeSet<AsId>,
    pub rov_enforcers: Enforcers,
    pub roas: Vec<Roa>,
}

impl DefenseConfig {
    pub fn none() -> Self {
        Self::default()
    }

    /// Checks that every named AS exists.
    pub fn validate(&self, g: &AsGraph) -> Result<(), Error> {
        for &a in &self.rewrite_no_export_at {
            g.require(a)?;
        }
        if let Enforcers::Only(set) = &self.rov_enforcers {
            for &a in set {
                g.require(a)?;
            }
        }
        Ok(())
    }

    pub fn policy(&self, registry: &CommunityRegistry) -> Policy {
        let rov = match self.rov_enforcers {
            Enforcers::None => None,
            _ => Some(RovPolicy { roas: self.roas.clone(), enforcers: self.rov_enforcers.clone() }),
        };
        Policy { registry: registry.clone(), rov, rewrite_at: self.rewrite_no_export_at.clone() }
    }
}

/// True when a no-export style action (not NO_ADVERTISE) applies at `at`.
pub fn is_no_export(registry: &CommunityRegistry, at: AsId, communities: &BTreeSet<Community>) -> bool {
    matches!(
        registry.effective_action(at, communities),
        Some(CommunityAction::NoExport | CommunityAction::NoExportSubconfed)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::{propagate, AnnounceTo};
    use crate::topology::tests::{asn, T5};

    fn t5() -> AsGraph {
        AsGraph::parse_as_rel_str(T5).unwrap()
    }

    fn p(s: &str) -> Prefix {
        s.parse().unwrap()
    }

    #[test]
    fn stealthy_construction() {
        let g = t5();
        let s = build_attack(&g, asn(5), p("10.0.0.0/23"), asn(6), &[asn(1)], AttackKind::SubPrefixStealthy).unwrap();
        assert_eq!(s.malicious.prefix, p("10.0.0.0/24"));
        assert_eq!(s.malicious.communities, [Community::NO_EXPORT].into());
        assert_eq!(s.malicious.announce_to, AnnounceTo::Only([asn(1)].into()));
        assert!(s.synthetic_edges.is_empty());
        s.validate(&CommunityRegistry::well_known()).unwrap();
    }

    #[test]
    fn loud_attack_reaches_everyone() {
        let g = t5();
        let s = build_attack(&g, asn(5), p("10.0.0.0/23"), asn(6), &[asn(1)], AttackKind::SubPrefixLoud).unwrap();
        assert!(s.malicious.communities.is_empty());
        let rib = propagate(&g, &s.originations(), &Policy::default()).unwrap();
        assert_eq!(rib.holders(s.malicious.prefix).len(), 6);
        assert_eq!(s.infected_set(&rib).len(), 6);
    }

    #[test]
    fn host_prefix_has_no_sub_prefix() {
        let g = t5();
        let r = build_attack(&g, asn(5), p("10.0.0.1/32"), asn(6), &[asn(1)], AttackKind::SubPrefixStealthy);
        assert!(matches!(r, Err(Error::NoSubPrefix(_))));
        let eq = build_attack(&g, asn(5), p("10.0.0.1/32"), asn(6), &[asn(1)], AttackKind::EquallySpecific);
        assert!(eq.is_ok());
    }

    #[test]
    fn synthesizes_adversary_sessions() {
        let g = t5();
        let s = build_attack(&g, asn(5), p("10.0.0.0/23"), asn(64512), &[asn(1), asn(2)], AttackKind::SubPrefixStealthy).unwrap();
        assert_eq!(s.synthetic_edges, vec![(asn(1), asn(64512)), (asn(2), asn(64512))]);
        let topo = s.topology(&g).unwrap();
        assert_eq!(topo.providers(asn(64512)).unwrap(), vec![asn(1), asn(2)]);
        let rib = propagate(&topo, &s.originations(), &Policy::default()).unwrap();
        assert_eq!(s.infected_set(&rib), [asn(1), asn(2), asn(64512)].into());
    }

    #[test]
    fn stealthy_needs_effective_restriction() {
        let g = t5();
        let s = build_attack(&g, asn(5), p("10.0.0.0/23"), asn(6), &[asn(1)], AttackKind::SubPrefixStealthy)
            .unwrap()
            .with_malicious_communities([Community::new(174, 990)]);
        assert!(s.validate(&CommunityRegistry::well_known()).is_err());
    }

    #[test]
    fn rejects_bad_targets() {
        let g = t5();
        assert!(build_attack(&g, asn(5), p("10.0.0.0/23"), asn(6), &[], AttackKind::SubPrefixStealthy).is_err());
        assert!(build_attack(&g, asn(5), p("10.0.0.0/23"), asn(6), &[asn(99)], AttackKind::SubPrefixStealthy).is_err());
        assert!(build_attack(&g, asn(5), p("10.0.0.0/23"), asn(5), &[asn(1)], AttackKind::SubPrefixStealthy).is_err());
    }

    #[test]
    fn rov_blocks_unless_max_length_slack_and_spoofed() {
        let g = t5();
        let base = build_attack(&g, asn(5), p("10.0.0.0/23"), asn(6), &[asn(1)], AttackKind::SubPrefixLoud).unwrap();
        let exact = DefenseConfig {
            rov_enforcers: Enforcers::All,
            roas: vec![Roa::exact(p("10.0.0.0/23"), asn(5))],
            ..Default::default()
        };
        let reg = CommunityRegistry::well_known();
        let rib = propagate(&g, &base.originations(), &exact.policy(&reg)).unwrap();
        assert_eq!(base.infected_set(&rib), [asn(6)].into());

        let spoofed = base.clone().with_spoofed_origin();
        let rib = propagate(&g, &spoofed.originations(), &exact.policy(&reg)).unwrap();
        assert_eq!(spoofed.infected_set(&rib), [asn(6)].into());

        let slack = DefenseConfig { roas: vec![Roa::new(p("10.0.0.0/23"), 24, asn(5)).unwrap()], ..exact };
        let rib = propagate(&g, &spoofed.originations(), &slack.policy(&reg)).unwrap();
        // the victim itself drops the looped path; everyone else installs it
        assert_eq!(spoofed.infected_set(&rib), [asn(1), asn(2), asn(3), asn(4), asn(6)].into());
    }
}
