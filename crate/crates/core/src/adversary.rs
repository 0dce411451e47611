//! SWAP-injection attack: pick high-quality target qubits, then flood the
//! fair-share queue with jobs that occupy them so a victim is pushed onto a
//! sparser region of the chip.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::hardware::{rank_qubits_by_quality, Calibration, CouplingGraph, QualityWeights, RankDirection};
use crate::router::{initial_layout, route, swap_overhead_or_zero};
use crate::scalar::Real;
use crate::scheduler::{FairShareQueue, Job, Priority, SchedulerConfig};
use crate::stats;

pub const ADVERSARY_USER: &str = "adversary";
pub const VICTIM_USER: &str = "victim";
pub const VICTIM_JOB: &str = "victim";

/// Two-qubit share of flood circuits; keeps their priority metric high.
pub const FLOOD_TWO_QUBIT_FRACTION: f64 = 0.9;

/// Default number of targets: a tenth of the device, rounded up.
pub fn default_target_count(num_qubits: usize) -> usize {
    num_qubits.div_ceil(10)
}

/// First `k` qubits of the quality ranking.
pub fn select_target_qubits<T: Real>(
    g: &CouplingGraph,
    cal: &Calibration<T>,
    w: &QualityWeights<T>,
    k: usize,
    direction: RankDirection,
) -> Result<Vec<usize>> {
    if k == 0 || k >= g.num_qubits() {
        return Err(Error::Argument(format!(
            "target count {k} must be in 1..{}",
            g.num_qubits()
        )));
    }
    let mut t: Vec<usize> = rank_qubits_by_quality(g, cal, w, direction)?
        .into_iter()
        .take(k)
        .collect();
    t.sort_unstable();
    Ok(t)
}

/// Connected components of the subgraph induced by `qubits`, each sorted,
/// ordered by their smallest member.
pub fn induced_components(g: &CouplingGraph, qubits: &[usize]) -> Vec<Vec<usize>> {
    let set: BTreeSet<usize> = qubits.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in &set {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(q) = stack.pop() {
            for &n in g.neighbors(q) {
                if set.contains(&n) && seen.insert(n) {
                    comp.push(n);
                    stack.push(n);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Usage score given to flood job `index` aimed at `tier`. All stay below
/// typical honest usage so the flood sorts first; tiers are spaced apart.
fn flood_usage(tier: Priority, index: usize) -> f64 {
    let base = match tier {
        Priority::High => 0.0,
        Priority::Medium => 0.1,
        Priority::Low => 0.2,
    };
    base + 0.001 * index as f64
}

/// `tiers` jobs per priority level. Job `i` of a level has depth
/// `depth_menu[i % len]`, spans one connected component of `targets` (cycling)
/// and requests exactly that component.
pub fn generate_kitchen_sink_jobs(
    g: &CouplingGraph,
    targets: &[usize],
    tiers: usize,
    depth_menu: &[usize],
    seed: u64,
) -> Result<Vec<Job>> {
    if tiers == 0 {
        return Err(Error::Argument("tiers must be at least 1".into()));
    }
    if depth_menu.is_empty() || depth_menu.contains(&0) {
        return Err(Error::Argument("depth menu must be non-empty and positive".into()));
    }
    let components = induced_components(g, targets);
    if components.is_empty() {
        return Err(Error::Argument("no target qubits".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(3 * tiers);
    for tier in Priority::ALL {
        for i in 0..tiers {
            let comp = &components[(jobs.len()) % components.len()];
            let frac = if comp.len() >= 2 { FLOOD_TWO_QUBIT_FRACTION } else { 0.0 };
            let depth = depth_menu[i % depth_menu.len()];
            let circuit = Circuit::random_with_depth(comp.len(), depth, frac, rng.gen())?;
            let arrival = jobs.len() as u64;
            let id = format!("adv-{}-{i}", tier_name(tier));
            let job = Job::new(id, ADVERSARY_USER, circuit, flood_usage(tier, i), arrival)?
                .with_request(comp.clone())?;
            jobs.push(job);
        }
    }
    Ok(jobs)
}

fn tier_name(p: Priority) -> &'static str {
    match p {
        Priority::High => "high",
        Priority::Medium => "medium",
        Priority::Low => "low",
    }
}

/// Targets plus the flood that occupies them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackPlan {
    pub target_qubits: Vec<usize>,
    pub flood_jobs: Vec<Job>,
    pub weights: QualityWeights<f64>,
    pub direction: RankDirection,
}

impl AttackPlan {
    /// Ranks qubits, takes `k` targets and builds the kitchen-sink flood.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        g: &CouplingGraph,
        cal: &Calibration<f64>,
        weights: QualityWeights<f64>,
        direction: RankDirection,
        k: usize,
        tiers: usize,
        depth_menu: &[usize],
        seed: u64,
    ) -> Result<Self> {
        let target_qubits = select_target_qubits(g, cal, &weights, k, direction)?;
        let flood_jobs = generate_kitchen_sink_jobs(g, &target_qubits, tiers, depth_menu, seed)?;
        Self::from_parts(g, target_qubits, flood_jobs, weights, direction)
    }

    pub fn from_parts(
        g: &CouplingGraph,
        target_qubits: Vec<usize>,
        flood_jobs: Vec<Job>,
        weights: QualityWeights<f64>,
        direction: RankDirection,
    ) -> Result<Self> {
        if target_qubits.is_empty() {
            return Err(Error::Argument("attack plan needs at least one target".into()));
        }
        if target_qubits.iter().any(|&q| q >= g.num_qubits()) {
            return Err(Error::Argument("target outside the device".into()));
        }
        if let Some(j) = flood_jobs.iter().find(|j| j.circuit.num_qubits() > g.num_qubits()) {
            return Err(Error::Capacity {
                required: j.circuit.num_qubits(),
                available: g.num_qubits(),
            });
        }
        Ok(AttackPlan {
            target_qubits,
            flood_jobs,
            weights,
            direction,
        })
    }

    /// A plan with no flood: both arms of an impact run are then identical.
    pub fn inert(target_qubits: Vec<usize>) -> Self {
        AttackPlan {
            target_qubits,
            flood_jobs: Vec::new(),
            weights: QualityWeights::default(),
            direction: RankDirection::Ascending,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactConfig {
    pub scheduler: SchedulerConfig,
    /// Victim's usage score; floods sort ahead of it.
    pub victim_usage: f64,
}

impl Default for ImpactConfig {
    fn default() -> Self {
        ImpactConfig {
            scheduler: SchedulerConfig::default(),
            victim_usage: 0.5,
        }
    }
}

/// Victim placement and routing cost in one arm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmOutcome {
    pub allocation: Vec<usize>,
    pub swaps: usize,
    pub cnots: usize,
    /// Batches run before the victim was admitted (1 = first batch).
    pub batch_index: usize,
    pub shared_with_adversary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedImpact {
    pub seed: u64,
    pub baseline: ArmOutcome,
    /// `None` when the victim was never admitted under attack.
    pub attack: Option<ArmOutcome>,
    pub overhead_pct: Option<f64>,
}

impl SeedImpact {
    pub fn denied(&self) -> bool {
        self.attack.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub per_seed: Vec<SeedImpact>,
    pub median_overhead_pct: Option<f64>,
    pub mean_overhead_pct: Option<f64>,
    pub max_overhead_pct: Option<f64>,
    pub denied: usize,
}

impl ImpactReport {
    pub fn from_rows(per_seed: Vec<SeedImpact>) -> Self {
        let o: Vec<f64> = per_seed.iter().filter_map(|r| r.overhead_pct).collect();
        ImpactReport {
            median_overhead_pct: stats::median(&o),
            mean_overhead_pct: stats::mean(&o),
            max_overhead_pct: stats::max(&o),
            denied: per_seed.iter().filter(|r| r.denied()).count(),
            per_seed,
        }
    }

    /// CSV with the columns `seed,swaps_baseline,swaps_attack,cnot_baseline,cnot_attack,overhead_pct,denied`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.per_seed {
            w.serialize(AttackCsvRow {
                seed: r.seed,
                swaps_baseline: r.baseline.swaps,
                swaps_attack: r.attack.as_ref().map(|a| a.swaps),
                cnot_baseline: r.baseline.cnots,
                cnot_attack: r.attack.as_ref().map(|a| a.cnots),
                overhead_pct: r.overhead_pct,
                denied: r.denied(),
            })?;
        }
        if self.per_seed.is_empty() {
            w.write_record(ATTACK_CSV_HEADER)?;
        }
        csv_string(w)
    }
}

pub const ATTACK_CSV_HEADER: [&str; 7] = [
    "seed",
    "swaps_baseline",
    "swaps_attack",
    "cnot_baseline",
    "cnot_attack",
    "overhead_pct",
    "denied",
];

#[derive(Serialize)]
struct AttackCsvRow {
    seed: u64,
    swaps_baseline: usize,
    swaps_attack: Option<usize>,
    cnot_baseline: usize,
    cnot_attack: Option<usize>,
    overhead_pct: Option<f64>,
    denied: bool,
}

pub(crate) fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
}

/// Schedules `queue` batch by batch until the victim runs, then routes it.
fn run_arm(
    mut queue: FairShareQueue,
    victim: &Circuit,
    g: &CouplingGraph,
    cal: &Calibration<f64>,
    config: &SchedulerConfig,
    seed: u64,
) -> Result<Option<ArmOutcome>> {
    let mut batches = 0;
    while !queue.is_empty() {
        let batch = queue.select_batch(g, Some(cal), config);
        if batch.is_empty() {
            break;
        }
        batches += 1;
        if let Some(entry) = batch.entry(VICTIM_JOB) {
            let layout = initial_layout(victim, g, &entry.allocation)?;
            let r = route(victim, g, &entry.allocation, &layout, seed)?;
            let shared = batch.entries.iter().any(|e| e.job.user == ADVERSARY_USER);
            return Ok(Some(ArmOutcome {
                allocation: entry.allocation.clone(),
                swaps: r.swaps_inserted,
                cnots: r.cnot_after_decomposition,
                batch_index: batches,
                shared_with_adversary: shared,
            }));
        }
    }
    Ok(None)
}

/// Victim job as submitted to the queue.
pub fn victim_job(victim: &Circuit, usage: f64, arrival: u64) -> Result<Job> {
    Job::new(VICTIM_JOB, VICTIM_USER, victim.clone(), usage, arrival)
}

/// Baseline: the victim alone in the queue. Attack: victim plus the flood.
pub fn measure_attack_impact(
    victim: &Circuit,
    g: &CouplingGraph,
    cal: &Calibration<f64>,
    plan: &AttackPlan,
    config: &ImpactConfig,
    seeds: &[u64],
) -> Result<ImpactReport> {
    measure_attack_impact_with(victim, g, cal, plan, config, seeds, |_| Ok(()))
}

/// As [`measure_attack_impact`], with `prepare` applied to the attack-arm
/// queue before scheduling (used to install a defense response).
pub fn measure_attack_impact_with<F>(
    victim: &Circuit,
    g: &CouplingGraph,
    cal: &Calibration<f64>,
    plan: &AttackPlan,
    config: &ImpactConfig,
    seeds: &[u64],
    prepare: F,
) -> Result<ImpactReport>
where
    F: Fn(&mut FairShareQueue) -> Result<()> + Sync,
{
    let arrival = plan.flood_jobs.len() as u64;
    let vjob = victim_job(victim, config.victim_usage, arrival)?;
    let baseline_queue = FairShareQueue::new(vec![vjob.clone()])?;
    let mut attack_jobs = plan.flood_jobs.clone();
    attack_jobs.push(vjob);
    let mut attack_queue = FairShareQueue::new(attack_jobs)?;
    prepare(&mut attack_queue)?;

    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let baseline = run_arm(baseline_queue.clone(), victim, g, cal, &config.scheduler, seed)?
                .ok_or_else(|| Error::Capacity {
                    required: victim.num_qubits(),
                    available: g.num_qubits(),
                })?;
            let attack = run_arm(attack_queue.clone(), victim, g, cal, &config.scheduler, seed)?;
            let overhead_pct = match &attack {
                Some(a) => Some(swap_overhead_or_zero(a.cnots, baseline.cnots)?),
                None => None,
            };
            Ok(SeedImpact {
                seed,
                baseline,
                attack,
                overhead_pct,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImpactReport::from_rows(rows))
}
