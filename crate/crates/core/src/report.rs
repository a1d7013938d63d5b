//! Result files: per-victim CSV, aggregate JSON and CDF CSV.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::experiment::{cdf_points, ExperimentReport, RNG_ALGORITHM};

pub const RESULTS_HEADER: &str = "victim_asn,fraction,compromised,denominator,stealthy";
pub const CDF_HEADER: &str = "fraction,cumulative_share";

/// Hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn results_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in &report.results {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.victim, r.fraction, r.compromised, r.denominator, r.stealthy
        ));
    }
    out
}

pub fn cdf_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(CDF_HEADER);
    out.push('\n');
    if let Ok(points) = cdf_points(&report.results) {
        for (f, share) in points {
            out.push_str(&format!("{f},{share}\n"));
        }
    }
    out
}

#[derive(Debug, Serialize)]
pub struct Aggregate<'a> {
    pub mean: f64,
    pub stddev: f64,
    pub n: usize,
    pub stealthy_all: bool,
    pub seed: u64,
    pub topology_digest: &'a str,
    pub rng: &'static str,
    pub strategy_ases: Vec<u32>,
    pub dropped_pairs: usize,
    pub dropped_victims: Vec<u32>,
}

pub fn aggregate_json(report: &ExperimentReport, topology_digest: &str) -> String {
    let agg = Aggregate {
        mean: report.mean,
        stddev: report.stddev,
        n: report.n(),
        stealthy_all: report.stealthy_all,
        seed: report.seed,
        topology_digest,
        rng: RNG_ALGORITHM,
        strategy_ases: report.strategy_ases.iter().map(|a| a.get()).collect(),
        dropped_pairs: report.dropped_pairs,
        dropped_victims: report.dropped_victims.iter().map(|a| a.get()).collect(),
    };
    let mut s = serde_json::to_string_pretty(&agg).expect("aggregate serializes");
    s.push('\n');
    s
}
