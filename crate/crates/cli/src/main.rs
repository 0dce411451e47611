//! `swapsim` command-line front end.

// `!(x >= 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use swapsim::adversary::{default_target_count, measure_attack_impact, AttackPlan, ImpactConfig};
use swapsim::experiment::{self, Scenario};
use swapsim::scheduler::{FairShareQueue, Job, SchedulerConfig};
use swapsim::sentinel::{self, extract_all, synthetic, JobLog};
use swapsim::{initial_layout, route, Circuit, Device, QualityWeights, RankDirection};

/// Worker threads for experiment sweeps; unset means all cores.
const WORKERS_ENV: &str = "SWAPSIM_WORKERS";

#[derive(Parser)]
#[command(name = "swapsim", version, about = "Multi-tenant quantum cloud SWAP-injection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DeviceArgs {
    /// Preset (line5, grid20) or coupling-map JSON file.
    #[arg(long)]
    coupling: String,
    /// Seed for synthesized calibration data.
    #[arg(long, default_value_t = 0)]
    calibration_seed: u64,
}

impl DeviceArgs {
    fn load(&self) -> Result<Device> {
        Device::load(&self.coupling, self.calibration_seed)
            .with_context(|| format!("loading coupling {:?}", self.coupling))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Route one circuit on an allocation and print the result as JSON.
    Route {
        #[arg(long)]
        circuit: PathBuf,
        #[command(flatten)]
        device: DeviceArgs,
        /// Comma-separated physical qubits.
        #[arg(long, value_delimiter = ',')]
        allocation: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Select the next batch from a job queue and print it as JSON.
    Schedule {
        #[arg(long)]
        queue: PathBuf,
        #[command(flatten)]
        device: DeviceArgs,
        #[arg(long, default_value_t = swapsim::scheduler::DEFAULT_DEPTH_TOLERANCE)]
        tol: f64,
        /// Drain the queue and print every batch.
        #[arg(long)]
        all: bool,
    },
    /// Measure a kitchen-sink attack on a victim circuit and write CSV.
    Attack {
        #[command(flatten)]
        device: DeviceArgs,
        #[arg(long)]
        victim: PathBuf,
        /// Target qubits (default: a tenth of the device).
        #[arg(long)]
        k: Option<usize>,
        /// Seeds as `a..b` (inclusive), `a..=b`, `a` or a comma list.
        #[arg(long, default_value = "0..9")]
        seeds: String,
        #[arg(long, default_value_t = 3)]
        tiers: usize,
        /// Flood depths (default: the victim's depth).
        #[arg(long, value_delimiter = ',')]
        depth_menu: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        flood_seed: u64,
        #[arg(long, value_enum, default_value_t = Direction::Ascending)]
        direction: Direction,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train or apply the anomaly detector.
    Defend {
        #[command(subcommand)]
        action: DefendAction,
    },
    /// Run a scenario file and write CSV reports into a directory.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a seeded random circuit as JSON.
    Circuit {
        #[arg(long)]
        qubits: usize,
        #[arg(long)]
        gates: usize,
        #[arg(long, default_value_t = 0.5)]
        two_qubit_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a seeded synthetic job log with honest users and attackers.
    SyntheticLog {
        #[arg(long, default_value = "grid20")]
        coupling: String,
        #[arg(long, default_value_t = 100)]
        normal: usize,
        #[arg(long, default_value_t = 10)]
        attackers: usize,
        #[arg(long, default_value_t = 7.0)]
        days: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DefendAction {
    Train {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = sentinel::DEFAULT_NU)]
        nu: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print `user,score,flagged` for every user in the log.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        log: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    Fig4,
    Fig5,
    Fig6,
    E2e,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Ascending,
    Descending,
}

impl From<Direction> for RankDirection {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Ascending => RankDirection::Ascending,
            Direction::Descending => RankDirection::Descending,
        }
    }
}

/// Queue file entry; the circuit is inline or a path relative to the queue file.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueueEntry {
    id: String,
    user: String,
    #[serde(default)]
    circuit: Option<Circuit>,
    #[serde(default)]
    circuit_path: Option<PathBuf>,
    usage_score: f64,
    #[serde(default)]
    arrival_index: Option<u64>,
    #[serde(default)]
    requested_qubits: Option<Vec<usize>>,
    #[serde(default)]
    solo: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueueFile {
    jobs: Vec<QueueEntry>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_circuit(path: &Path) -> Result<Circuit> {
    serde_json::from_str(&read(path)?).with_context(|| format!("parsing circuit {}", path.display()))
}

fn load_queue(path: &Path) -> Result<FairShareQueue> {
    let file: QueueFile =
        serde_json::from_str(&read(path)?).with_context(|| format!("parsing queue {}", path.display()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut jobs = Vec::with_capacity(file.jobs.len());
    for (i, e) in file.jobs.into_iter().enumerate() {
        let circuit = match (e.circuit, e.circuit_path) {
            (Some(c), None) => c,
            (None, Some(p)) => read_circuit(&dir.join(p))?,
            _ => bail!("job {}: give exactly one of circuit or circuit_path", e.id),
        };
        let mut job = Job::new(e.id, e.user, circuit, e.usage_score, e.arrival_index.unwrap_or(i as u64))?;
        if let Some(r) = e.requested_qubits {
            job = job.with_request(r)?;
        }
        job.solo = e.solo;
        jobs.push(job);
    }
    Ok(FairShareQueue::new(jobs)?)
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let range = |a: &str, b: &str| -> Result<Vec<u64>> {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("empty seed range {s:?}");
        }
        Ok((a..=b).collect())
    };
    if let Some((a, b)) = s.split_once("..=") {
        return range(a, b);
    }
    if let Some((a, b)) = s.split_once("..") {
        return range(a, b);
    }
    let seeds = s
        .split(',')
        .map(|x| x.trim().parse::<u64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("bad seed list {s:?}"))?;
    if seeds.is_empty() {
        bail!("no seeds");
    }
    Ok(seeds)
}

fn workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| format!("{WORKERS_ENV}={v:?}"))?)),
        Err(_) => Ok(None),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => emit(text),
    }
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn json_line<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(&text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Route {
            circuit,
            device,
            allocation,
            seed,
        } => {
            let c = read_circuit(&circuit)?;
            let d = device.load()?;
            let layout = initial_layout(&c, &d.graph, &allocation)?;
            let r = route(&c, &d.graph, &allocation, &layout, seed)?;
            json_line(&r)?;
        }
        Command::Schedule {
            queue,
            device,
            tol,
            all,
        } => {
            if !(tol >= 0.0) {
                bail!("--tol must be non-negative");
            }
            let mut q = load_queue(&queue)?;
            let d = device.load()?;
            let config = SchedulerConfig {
                depth_tolerance: tol,
                ..SchedulerConfig::default()
            };
            if all {
                let mut batches = Vec::new();
                while !q.is_empty() {
                    let b = q.select_batch(&d.graph, Some(&d.calibration), &config);
                    if b.is_empty() {
                        break;
                    }
                    q.update_usage(&b, swapsim::scheduler::gate_count_cost);
                    batches.push(b);
                }
                json_line(&batches)?;
            } else {
                let b = q.select_batch(&d.graph, Some(&d.calibration), &config);
                json_line(&b)?;
            }
        }
        Command::Attack {
            device,
            victim,
            k,
            seeds,
            tiers,
            depth_menu,
            flood_seed,
            direction,
            out,
        } => {
            let d = device.load()?;
            let v = read_circuit(&victim)?;
            let seeds = parse_seeds(&seeds)?;
            let k = k.unwrap_or_else(|| default_target_count(d.graph.num_qubits()));
            let menu = if depth_menu.is_empty() { vec![v.depth().max(1)] } else { depth_menu };
            let plan = AttackPlan::build(
                &d.graph,
                &d.calibration,
                QualityWeights::default(),
                direction.into(),
                k,
                tiers,
                &menu,
                flood_seed,
            )?;
            let report = measure_attack_impact(&v, &d.graph, &d.calibration, &plan, &ImpactConfig::default(), &seeds)?;
            write_or_print(out.as_deref(), &report.to_csv()?)?;
        }
        Command::Defend { action } => match action {
            DefendAction::Train { log, nu, seed, out } => {
                let log: JobLog = serde_json::from_str(&read(&log)?).context("parsing job log")?;
                let features: Vec<_> = extract_all::<f64>(&log, log.span()).into_values().collect();
                let model = sentinel::train(&features, nu, seed)?;
                std::fs::write(&out, serde_json::to_string_pretty(&model)?)
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            DefendAction::Score { model, log } => {
                let model: swapsim::AnomalyModel =
                    serde_json::from_str(&read(&model)?).context("parsing model")?;
                let log: JobLog = serde_json::from_str(&read(&log)?).context("parsing job log")?;
                let mut csv = String::from("user,score,flagged\n");
                for (user, f) in extract_all::<f64>(&log, log.span()) {
                    let s = model.score(&f);
                    csv.push_str(&format!("{user},{s},{}\n", s < sentinel::THRESHOLD));
                }
                emit(&csv)?;
            }
        },
        Command::Experiment { kind, scenario, out } => {
            let (s, d) = Scenario::load(&scenario)?;
            let workers = workers()?;
            experiment::with_workers(workers, || -> Result<()> {
                match kind {
                    ExperimentKind::Fig4 => experiment::run_allocation_sweep(&s, &d)?.write(&out, "fig4")?,
                    ExperimentKind::Fig5 => experiment::run_complexity_sweep(&s, &d)?.write(&out, "fig5")?,
                    ExperimentKind::Fig6 => experiment::run_size_sweep(&s, &d)?.write(&out, "fig6")?,
                    ExperimentKind::E2e => experiment::run_end_to_end(&s, &d)?.write(&out, "e2e")?,
                }
                Ok(())
            })??;
        }
        Command::Circuit {
            qubits,
            gates,
            two_qubit_fraction,
            seed,
        } => {
            let c = Circuit::random(qubits, gates, two_qubit_fraction, seed)?;
            json_line(&c)?;
        }
        Command::SyntheticLog {
            coupling,
            normal,
            attackers,
            days,
            seed,
            out,
        } => {
            let d = Device::load(&coupling, 0)?;
            let corpus = synthetic::generate(&d.graph, normal, attackers, days, seed)?;
            std::fs::write(&out, serde_json::to_string_pretty(&corpus.log)?)
                .with_context(|| format!("writing {}", out.display()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let scenario = e
                .downcast_ref::<swapsim::Error>()
                .is_some_and(|e| matches!(e, swapsim::Error::Scenario(_)));
            ExitCode::from(if scenario { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::parse_seeds;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("0..3").unwrap(), [0, 1, 2, 3]);
        assert_eq!(parse_seeds("2..=4").unwrap(), [2, 3, 4]);
        assert_eq!(parse_seeds("7").unwrap(), [7]);
        assert_eq!(parse_seeds("5, 1,3").unwrap(), [5, 1, 3]);
        assert!(parse_seeds("4..2").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
