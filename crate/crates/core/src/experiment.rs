//! Sampled hijack experiments: for each sampled victim, the fraction of the
//! other sampled ASes whose traffic to it would be hijacked.

use std::collections::BTreeSet;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataplane::{is_compromised_mask, Exposure};
use crate::error::Error;
use crate::monitoring::{visible_peers, MonitorConfig};
use crate::routing::{propagate, Community, CommunityRegistry, OriginationSpec, Prefix, Rib};
use crate::scenario::{build_attack, AttackKind, AttackScenario, DefenseConfig, Roa};
use crate::topology::{AsGraph, AsId};

pub const DEFAULT_SAMPLE_SIZE: usize = 150;

/// Private-use 32-bit ASN given to the synthetic adversary.
pub const DEFAULT_ADVERSARY: AsId = AsId::from_const(4_200_000_000);

/// Name recorded in output metadata for the sampling procedure.
pub const RNG_ALGORITHM: &str = "chacha8 seed_from_u64, partial fisher-yates over ascending ASNs";

/// How the adversary chooses where to install its route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    FixedSet(Vec<AsId>),
    TopConeK(usize),
}

impl Strategy {
    pub fn resolve(&self, g: &AsGraph) -> Result<Vec<AsId>, Error> {
        match self {
            Strategy::FixedSet(v) => {
                for &a in v {
                    g.require(a)?;
                }
                Ok(v.clone())
            }
            Strategy::TopConeK(k) => g.top_by_cone(*k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub sample_size: usize,
    pub rng_seed: u64,
    pub strategy: Strategy,
    /// Treat the strategy's ASes as compromised outright, instead of
    /// deriving the infected set from propagation.
    pub infected_injection: bool,
    pub defense: DefenseConfig,
    pub kind: AttackKind,
    pub victim_prefix: Prefix,
    pub adversary_asn: AsId,
    pub malicious_communities: Option<BTreeSet<Community>>,
    pub spoof_victim_origin: bool,
    /// Adds a ROA for each victim's prefix with this max length.
    pub victim_roa_max_length: Option<u8>,
    pub registry: CommunityRegistry,
    /// Single fixed victim; `None` makes every sampled AS a victim.
    pub victim: Option<AsId>,
}

impl ExperimentSpec {
    /// Stealthy sub-prefix attack with direct infected-set injection.
    pub fn new(strategy: Strategy, rng_seed: u64) -> Self {
        ExperimentSpec {
            sample_size: DEFAULT_SAMPLE_SIZE,
            rng_seed,
            strategy,
            infected_injection: true,
            defense: DefenseConfig::none(),
            kind: AttackKind::SubPrefixStealthy,
            victim_prefix: "10.0.0.0/23".parse().expect("valid prefix"),
            adversary_asn: DEFAULT_ADVERSARY,
            malicious_communities: None,
            spoof_victim_origin: false,
            victim_roa_max_length: None,
            registry: CommunityRegistry::well_known(),
            victim: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HijackCount {
    pub compromised: usize,
    pub denominator: usize,
    /// Sources dropped because they hold no route to the victim.
    pub no_route: usize,
}

impl HijackCount {
    pub fn fraction(&self) -> f64 {
        if self.denominator == 0 {
            0.0
        } else {
            self.compromised as f64 / self.denominator as f64
        }
    }
}

/// Counts sources whose path to the victim crosses `infected`. The victim
/// and adversary never count as sources.
pub fn count_compromised(
    rib: &Rib,
    scenario: &AttackScenario,
    infected: &BTreeSet<AsId>,
    sources: &BTreeSet<AsId>,
) -> HijackCount {
    count_for_victim(rib, &scenario.victim, &[scenario.adversary_as], infected, sources)
}

fn count_for_victim(
    rib: &Rib,
    victim: &OriginationSpec,
    excluded: &[AsId],
    infected: &BTreeSet<AsId>,
    sources: &BTreeSet<AsId>,
) -> HijackCount {
    let g = rib.graph();
    let mut mask = vec![false; g.len()];
    for a in infected {
        if let Some(i) = g.idx(*a) {
            mask[i as usize] = true;
        }
    }
    let srcs: Vec<u32> = sources
        .iter()
        .filter(|&&s| s != victim.origin && !excluded.contains(&s))
        .filter_map(|&s| g.idx(s))
        .collect();
    count_mask(rib, victim.prefix, &mask, &srcs)
}

fn count_mask(rib: &Rib, victim_prefix: Prefix, infected: &[bool], sources: &[u32]) -> HijackCount {
    let mut out = HijackCount::default();
    for &s in sources {
        match is_compromised_mask(rib, s, victim_prefix, infected) {
            Exposure::Compromised => {
                out.compromised += 1;
                out.denominator += 1;
            }
            Exposure::Clean => out.denominator += 1,
            Exposure::NoRoute => out.no_route += 1,
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HijackResult {
    pub victim: AsId,
    pub fraction: f64,
    pub compromised: usize,
    pub denominator: usize,
    pub stealthy: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Ascending by victim ASN.
    pub results: Vec<HijackResult>,
    pub mean: f64,
    pub stddev: f64,
    pub stealthy_all: bool,
    pub seed: u64,
    pub sample: Vec<AsId>,
    /// ASes the adversary installed its route at.
    pub strategy_ases: Vec<AsId>,
    pub dropped_pairs: usize,
    pub dropped_victims: Vec<AsId>,
}

impl ExperimentReport {
    pub fn n(&self) -> usize {
        self.results.len()
    }
}

/// Uniform sample without replacement, determined by `seed`.
pub fn sample_ases(g: &AsGraph, size: usize, seed: u64) -> Result<Vec<AsId>, Error> {
    let n = g.len();
    if size > n {
        return Err(Error::SampleTooLarge { sample: size, nodes: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<AsId> = g.nodes().to_vec();
    for i in 0..size {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(size);
    pool.sort_unstable();
    Ok(pool)
}

struct VictimRun {
    result: Option<HijackResult>,
    no_route: usize,
}

/// Runs the scenario against every sampled victim. Victims are evaluated in
/// parallel on the current rayon pool; output order does not depend on it.
pub fn run_experiment(g: &AsGraph, spec: &ExperimentSpec, mon: &MonitorConfig) -> Result<ExperimentReport, Error> {
    spec.defense.validate(g)?;
    mon.validate(g)?;
    let sample = sample_ases(g, spec.sample_size, spec.rng_seed)?;
    let targets = spec.strategy.resolve(g)?;
    if let Some(v) = spec.victim {
        g.require(v)?;
    }
    let victims: Vec<AsId> = match spec.victim {
        Some(v) => vec![v],
        None => sample.clone(),
    };
    info!(
        "experiment: {} victims, sample {}, seed {}, strategy ASes {:?}",
        victims.len(),
        sample.len(),
        spec.rng_seed,
        targets
    );

    // attach the adversary once; per-victim builds then need no new edges
    let topo = match g.nodes().iter().copied().find(|&a| a != spec.adversary_asn) {
        Some(v) if !targets.is_empty() => {
            build_attack(g, v, spec.victim_prefix, spec.adversary_asn, &targets, spec.kind)?.topology(g)?
        }
        _ => std::borrow::Cow::Borrowed(g),
    };
    let topo: &AsGraph = &topo;

    let sample_set: BTreeSet<AsId> = sample.iter().copied().collect();
    let injected: BTreeSet<AsId> = targets.iter().copied().collect();

    let runs: Vec<VictimRun> = victims
        .par_iter()
        .map(|&victim| run_victim(topo, spec, mon, &targets, &injected, &sample_set, victim))
        .collect::<Result<_, Error>>()?;

    let mut results = Vec::new();
    let mut dropped_pairs = 0;
    let mut dropped_victims = Vec::new();
    for (run, &victim) in runs.into_iter().zip(&victims) {
        dropped_pairs += run.no_route;
        match run.result {
            Some(r) => results.push(r),
            None => dropped_victims.push(victim),
        }
    }
    if dropped_pairs > 0 {
        info!("dropped {dropped_pairs} source-victim pairs without a route");
    }
    if !dropped_victims.is_empty() {
        info!("dropped {} victims with no reachable sources", dropped_victims.len());
    }
    let n = results.len();
    let mean = if n == 0 { 0.0 } else { results.iter().map(|r| r.fraction).sum::<f64>() / n as f64 };
    let stddev = if n < 2 {
        0.0
    } else {
        (results.iter().map(|r| (r.fraction - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(ExperimentReport {
        stealthy_all: results.iter().all(|r| r.stealthy),
        results,
        mean,
        stddev,
        seed: spec.rng_seed,
        sample,
        strategy_ases: targets,
        dropped_pairs,
        dropped_victims,
    })
}

fn run_victim(
    topo: &AsGraph,
    spec: &ExperimentSpec,
    mon: &MonitorConfig,
    targets: &[AsId],
    injected: &BTreeSet<AsId>,
    sample: &BTreeSet<AsId>,
    victim: AsId,
) -> Result<VictimRun, Error> {
    if victim == spec.adversary_asn {
        return Ok(VictimRun { result: None, no_route: 0 });
    }
    if targets.is_empty() {
        // nothing installed anywhere: benign routing only
        let benign = OriginationSpec::new(victim, spec.victim_prefix);
        let rib = propagate(topo, std::slice::from_ref(&benign), &spec.defense.policy(&spec.registry))?;
        let count = count_for_victim(&rib, &benign, &[spec.adversary_asn], &BTreeSet::new(), sample);
        return Ok(finish(victim, count, true));
    }
    let mut scenario = build_attack(topo, victim, spec.victim_prefix, spec.adversary_asn, targets, spec.kind)?;
    if let Some(c) = &spec.malicious_communities {
        scenario = scenario.with_malicious_communities(c.iter().copied());
    }
    if spec.spoof_victim_origin {
        scenario = scenario.with_spoofed_origin();
    }
    scenario.validate(&spec.registry)?;
    let mut defense = spec.defense.clone();
    if let Some(m) = spec.victim_roa_max_length {
        defense.roas.push(Roa::new(spec.victim_prefix, m, victim)?);
    }
    let rib = propagate(topo, &scenario.originations(), &defense.policy(&spec.registry))?;
    let infected = if spec.infected_injection { injected.clone() } else { scenario.infected_set(&rib) };
    let count = count_compromised(&rib, &scenario, &infected, sample);
    let stealthy = visible_peers(&rib, mon, scenario.malicious.prefix).stealthy;
    debug!("victim {victim}: {}/{} compromised", count.compromised, count.denominator);
    Ok(finish(victim, count, stealthy))
}

fn finish(victim: AsId, count: HijackCount, stealthy: bool) -> VictimRun {
    let result = (count.denominator > 0).then(|| HijackResult {
        victim,
        fraction: count.fraction(),
        compromised: count.compromised,
        denominator: count.denominator,
        stealthy,
    });
    VictimRun { result, no_route: count.no_route }
}

/// Empirical CDF: one point per distinct fraction, ascending, with the share
/// of results at or below it.
pub fn cdf_points(results: &[HijackResult]) -> Result<Vec<(f64, f64)>, Error> {
    if results.is_empty() {
        return Err(Error::Scenario("no results to build a CDF from".into()));
    }
    let mut fractions: Vec<f64> = results.iter().map(|r| r.fraction).collect();
    fractions.sort_by(f64::total_cmp);
    let n = fractions.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &f) in fractions.iter().enumerate() {
        let share = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == f => last.1 = share,
            _ => out.push((f, share)),
        }
    }
    Ok(out)
}
