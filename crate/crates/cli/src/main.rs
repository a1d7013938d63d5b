//! `hijacksim` command-line driver.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use hijacksim::experiment::{run_experiment, RNG_ALGORITHM};
use hijacksim::monitoring::MonitorConfig;
use hijacksim::report::{aggregate_json, cdf_csv, digest, results_csv};
use hijacksim::scenario::ScenarioDescriptor;
use hijacksim::{AsGraph, Error};
use log::info;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "hijacksim", version, about = "Simulate stealthy NO_EXPORT sub-prefix hijacks on AS topologies")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario over sampled victims and write result files.
    Simulate(SimulateArgs),
    /// Print the ASes with the largest customer cones.
    ConeRank(ConeRankArgs),
    /// Validate a topology file and report anomalies.
    Check(CheckArgs),
}

#[derive(Args)]
struct TopologyArg {
    /// CAIDA serial-1 AS relationships file, plain or gzip.
    #[arg(long, env = "HIJACKSIM_TOPOLOGY")]
    topology: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    topology: TopologyArg,
    /// Scenario descriptor (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Monitor peers file: one `<asn>[,ebgp|ibgp|fullrib]` per line.
    #[arg(long)]
    monitors: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; without it results.csv goes to stdout and the
    /// aggregate JSON to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ConeRankArgs {
    #[command(flatten)]
    topology: TopologyArg,
    #[arg(long, default_value_t = 10)]
    k: usize,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    topology: TopologyArg,
}

/// Exit code 2: bad input or configuration. Exit code 1: internal failure
/// or violated topology invariant.
enum Failure {
    Config(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Internal(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Internal(m) => m,
        }
    }
}

fn config(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| config(path, e))
}

fn load_topology(path: &Path) -> Result<(AsGraph, String), Failure> {
    let bytes = read(path)?;
    let g = AsGraph::parse_as_rel(&bytes).map_err(|e| config(path, e))?;
    info!("{}: {} ASes, {} links", path.display(), g.len(), g.edge_count());
    Ok((g, digest(&bytes)))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Serialize)]
struct InputFile {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: Vec<String>,
    topology: InputFile,
    scenario: InputFile,
    monitors: Option<InputFile>,
    seed: u64,
    rng: &'static str,
    threads: usize,
    started_unix: u64,
    finished_unix: u64,
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let started = unix_now();
    let topo_path = &args.topology.topology;
    let (g, topo_digest) = load_topology(topo_path)?;

    let scenario_bytes = read(&args.scenario)?;
    let text = String::from_utf8(scenario_bytes.clone()).map_err(|e| config(&args.scenario, e))?;
    let descriptor = ScenarioDescriptor::from_json(&text).map_err(|e| config(&args.scenario, e))?;
    let spec = descriptor.experiment_spec(args.seed).map_err(|e| config(&args.scenario, e))?;

    let (mon, monitors) = match &args.monitors {
        Some(p) => {
            let bytes = read(p)?;
            let text = String::from_utf8(bytes.clone()).map_err(|e| config(p, e))?;
            let mon = MonitorConfig::parse(&text).map_err(|e| config(p, e))?;
            mon.validate(&g).map_err(|e| config(p, e))?;
            (mon, Some(InputFile { path: p.display().to_string(), sha256: digest(&bytes) }))
        }
        None => (MonitorConfig::default(), None),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Internal(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads();
    let report = pool.install(|| run_experiment(&g, &spec, &mon)).map_err(|e| match e {
        Error::NoCandidates => Failure::Internal(e.to_string()),
        other => config(&args.scenario, other),
    })?;
    info!("mean {:.4} over {} victims", report.mean, report.n());

    let results = results_csv(&report);
    let aggregate = aggregate_json(&report, &topo_digest);
    let Some(out) = &args.out else {
        print!("{results}");
        eprint!("{aggregate}");
        return Ok(());
    };

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: std::env::args().collect(),
        topology: InputFile { path: topo_path.display().to_string(), sha256: topo_digest.clone() },
        scenario: InputFile { path: args.scenario.display().to_string(), sha256: digest(&scenario_bytes) },
        monitors,
        seed: args.seed,
        rng: RNG_ALGORITHM,
        threads,
        started_unix: started,
        finished_unix: unix_now(),
    };
    let mut manifest_json = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Internal(e.to_string()))?;
    manifest_json.push('\n');

    let write_err = |p: &Path, e: std::io::Error| Failure::Internal(format!("{}: {e}", p.display()));
    fs::create_dir_all(out).map_err(|e| write_err(out, e))?;
    for (name, body) in [
        ("results.csv", results),
        ("aggregate.json", aggregate),
        ("cdf.csv", cdf_csv(&report)),
        ("manifest.json", manifest_json),
    ] {
        let p = out.join(name);
        fs::write(&p, body).map_err(|e| write_err(&p, e))?;
    }
    info!("wrote results to {}", out.display());
    Ok(())
}

fn cone_rank(args: ConeRankArgs) -> Result<(), Failure> {
    let path = &args.topology.topology;
    let (g, _) = load_topology(path)?;
    let top = g.top_by_cone_with_sizes(args.k).map_err(|e| Failure::Config(e.to_string()))?;
    let mut out = String::from("rank,asn,cone_size\n");
    for (rank, (a, size)) in top.iter().enumerate() {
        out.push_str(&format!("{},{a},{size}\n", rank + 1));
    }
    print!("{out}");
    Ok(())
}

fn check(args: CheckArgs) -> Result<(), Failure> {
    let path = &args.topology.topology;
    let bytes = read(path)?;
    let g = match AsGraph::parse_as_rel(&bytes) {
        Ok(g) => g,
        Err(Error::Parse(p)) if p.invariant => return Err(Failure::Internal(format!("{}: {p}", path.display()))),
        Err(e) => return Err(config(path, e)),
    };
    let cycles = g.provider_cycles();
    let isolated = g.isolated();
    let mut out = String::from("ok\n");
    out.push_str(&format!("nodes {}\n", g.len()));
    out.push_str(&format!(
        "edges {} (provider-customer {}, peer {})\n",
        g.edge_count(),
        g.provider_customer_count(),
        g.edge_count() - g.provider_customer_count()
    ));
    out.push_str(&format!("provider cycles {}\n", cycles.len()));
    for c in &cycles {
        let names: Vec<String> = c.iter().map(|a| a.to_string()).collect();
        out.push_str(&format!("  cycle {}\n", names.join(" ")));
    }
    out.push_str(&format!("isolated {}\n", isolated.len()));
    print!("{out}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::ConeRank(a) => cone_rank(a),
        Command::Check(a) => check(a),
    };
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
