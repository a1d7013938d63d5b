//! JSON scenario descriptor consumed by the `simulate` command.
//!
//! ```json
//! {
//!   "victim_prefix": "10.0.0.0/23",
//!   "adversary_asn": 4200000000,
//!   "strategy": { "top_cone_k": 5 },
//!   "kind": "sub_prefix_stealthy",
//!   "infected_injection": true,
//!   "sample_size": 150,
//!   "defenses": {
//!     "rewrite_at": [174],
//!     "rov": { "enforcers": "all", "victim_roa_max_length": 23, "roas": [] }
//!   }
//! }
//! ```
//!
//! `targets` is shorthand for `{"strategy": {"fixed_list": [...]}}`; giving
//! both is an error. Unknown keys are rejected.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AttackKind, DefenseConfig, Enforcers, Roa};
use crate::error::Error;
use crate::experiment::{ExperimentSpec, Strategy, DEFAULT_ADVERSARY, DEFAULT_SAMPLE_SIZE};
use crate::routing::{Community, CommunityAction, CommunityRegistry, Prefix};
use crate::topology::AsId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyDescriptor {
    TopConeK(usize),
    FixedList(Vec<AsId>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AllKeyword {
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum EnforcerList {
    All(AllKeyword),
    Only(Vec<AsId>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RovDescriptor {
    enforcers: EnforcerList,
    #[serde(default)]
    pub roas: Vec<Roa>,
    /// Registers a ROA for each victim's prefix with this max length.
    #[serde(default)]
    pub victim_roa_max_length: Option<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenseDescriptor {
    #[serde(default)]
    pub rewrite_at: Vec<AsId>,
    #[serde(default)]
    pub rov: Option<RovDescriptor>,
}

/// Registry entry for a community interpreted by one AS only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScopedCommunity {
    pub asn: AsId,
    pub community: Community,
    pub action: CommunityAction,
}

fn default_prefix() -> Prefix {
    "10.0.0.0/23".parse().expect("valid default prefix")
}

fn default_sample() -> usize {
    DEFAULT_SAMPLE_SIZE
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDescriptor {
    /// Restricts the run to this single victim; otherwise every sampled AS
    /// is a victim in turn.
    #[serde(default)]
    pub victim_asn: Option<AsId>,
    #[serde(default = "default_prefix")]
    pub victim_prefix: Prefix,
    #[serde(default)]
    pub adversary_asn: Option<AsId>,
    #[serde(default)]
    pub targets: Option<Vec<AsId>>,
    #[serde(default)]
    pub strategy: Option<StrategyDescriptor>,
    pub kind: AttackKind,
    /// Overrides the communities the kind would attach.
    #[serde(default)]
    pub communities: Option<Vec<Community>>,
    #[serde(default)]
    pub spoof_victim_origin: bool,
    #[serde(default = "yes")]
    pub infected_injection: bool,
    #[serde(default = "default_sample")]
    pub sample_size: usize,
    #[serde(default)]
    pub scoped_communities: Vec<ScopedCommunity>,
    #[serde(default)]
    pub defenses: DefenseDescriptor,
}

impl ScenarioDescriptor {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn strategy(&self) -> Result<Strategy, Error> {
        match (&self.targets, &self.strategy) {
            (Some(_), Some(_)) => Err(Error::Scenario("give either `targets` or `strategy`, not both".into())),
            (None, None) => Err(Error::Scenario("missing `targets` or `strategy`".into())),
            (Some(t), None) | (None, Some(StrategyDescriptor::FixedList(t))) => {
                Ok(Strategy::FixedSet(t.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()))
            }
            (None, Some(StrategyDescriptor::TopConeK(k))) => {
                if *k == 0 {
                    return Err(Error::Scenario("top_cone_k must be at least 1".into()));
                }
                Ok(Strategy::TopConeK(*k))
            }
        }
    }

    pub fn registry(&self) -> CommunityRegistry {
        let mut reg = CommunityRegistry::well_known();
        for s in &self.scoped_communities {
            reg.insert_scoped(s.asn, s.community, s.action);
        }
        reg
    }

    pub fn defense(&self) -> DefenseConfig {
        let (rov_enforcers, roas) = match &self.defenses.rov {
            None => (Enforcers::None, Vec::new()),
            Some(r) => (
                match &r.enforcers {
                    EnforcerList::All(_) => Enforcers::All,
                    EnforcerList::Only(v) => Enforcers::Only(v.iter().copied().collect()),
                },
                r.roas.clone(),
            ),
        };
        DefenseConfig {
            rewrite_no_export_at: self.defenses.rewrite_at.iter().copied().collect(),
            rov_enforcers,
            roas,
        }
    }

    /// Builds the experiment specification for `seed`.
    pub fn experiment_spec(&self, seed: u64) -> Result<ExperimentSpec, Error> {
        let victim_roa_max_length = self.defenses.rov.as_ref().and_then(|r| r.victim_roa_max_length);
        if let Some(m) = victim_roa_max_length {
            if m < self.victim_prefix.len() || m > 32 {
                return Err(Error::Scenario(format!(
                    "victim_roa_max_length {m} out of range for {}",
                    self.victim_prefix
                )));
            }
        }
        Ok(ExperimentSpec {
            sample_size: self.sample_size,
            rng_seed: seed,
            strategy: self.strategy()?,
            infected_injection: self.infected_injection,
            defense: self.defense(),
            kind: self.kind,
            victim_prefix: self.victim_prefix,
            adversary_asn: self.adversary_asn.unwrap_or(DEFAULT_ADVERSARY),
            malicious_communities: self.communities.as_ref().map(|c| c.iter().copied().collect()),
            spoof_victim_origin: self.spoof_victim_origin,
            victim_roa_max_length,
            registry: self.registry(),
            victim: self.victim_asn,
        })
    }
}
