//! Declarative experiment runner.
//!
//! A [`Scenario`] fixes the device, the victim circuit family and a seed range;
//! every random choice in a run is derived from those seeds, so re-running a
//! scenario reproduces its CSV byte for byte. Seeds execute in parallel but
//! rows are always emitted in (cell, seed) order.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{
    csv_string, default_target_count, measure_attack_impact_with, AttackPlan, ImpactConfig,
    ImpactReport, ADVERSARY_USER,
};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::hardware::{Calibration, CouplingGraph, Device, QualityWeights, RankDirection};
use crate::router::{initial_layout, route, swap_overhead_or_zero};
use crate::scheduler::{allocate_qubits, Priority, SchedulerConfig, DEFAULT_ALLOCATION_CAP};
use crate::sentinel::{self, extract_all, respond, synthetic, ResponsePolicy};
use crate::stats;

pub const DEFAULT_GATE_MENU: [usize; 4] = [50, 100, 200, 300];
pub const DEFAULT_QUBIT_RANGE: (usize, usize) = (4, 10);

fn default_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VictimSpec {
    pub qubits: usize,
    pub gates: usize,
    #[serde(default = "default_fraction")]
    pub two_qubit_fraction: f64,
}

impl VictimSpec {
    pub fn circuit(&self, seed: u64) -> Result<Circuit> {
        Circuit::random(self.qubits, self.gates, self.two_qubit_fraction, seed)
    }
}

/// Half-open seed range `[start, start + count)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    pub start: u64,
    pub count: u64,
}

impl SeedRange {
    pub fn seeds(&self) -> Vec<u64> {
        (self.start..self.start + self.count).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationConfig {
    pub label: String,
    pub qubits: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum AllocationSpec {
    /// Densest (baseline) against least-dense connected allocation of the
    /// victim's size, chosen by the scheduler's placement policy.
    #[default]
    Extremes,
    Explicit {
        configs: Vec<AllocationConfig>,
        #[serde(default)]
        baseline: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    #[default]
    None,
    Gates {
        menu: Vec<usize>,
    },
    Qubits {
        min: usize,
        max: usize,
    },
}

fn default_true() -> bool {
    true
}

fn default_tiers() -> usize {
    3
}

fn default_victim_usage() -> f64 {
    0.5
}

fn default_nu() -> f64 {
    0.02
}

fn default_training_users() -> usize {
    1000
}

fn default_detection_users() -> usize {
    100
}

fn default_days() -> f64 {
    7.0
}

fn default_weights() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenseSpec {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_nu")]
    pub nu: f64,
    /// Honest users in the training log.
    #[serde(default = "default_training_users")]
    pub training_users: usize,
    /// Honest users observed alongside the adversary at detection time.
    #[serde(default = "default_detection_users")]
    pub detection_users: usize,
    #[serde(default = "default_days")]
    pub days: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for DefenseSpec {
    fn default() -> Self {
        DefenseSpec {
            enabled: true,
            nu: default_nu(),
            training_users: default_training_users(),
            detection_users: default_detection_users(),
            days: default_days(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    #[serde(default = "default_true")]
    pub enabled: bool,
    /// Number of target qubits; defaults to a tenth of the device.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_tiers")]
    pub tiers: usize,
    /// Flood depths; defaults to the depth of the first seed's victim.
    #[serde(default)]
    pub depth_menu: Option<Vec<usize>>,
    #[serde(default = "default_weights")]
    pub weights: [f64; 3],
    #[serde(default)]
    pub direction: RankDirection,
    #[serde(default)]
    pub flood_seed: u64,
    #[serde(default = "default_victim_usage")]
    pub victim_usage: f64,
    #[serde(default)]
    pub defense: DefenseSpec,
}

impl Default for AttackSpec {
    fn default() -> Self {
        AttackSpec {
            enabled: true,
            k: None,
            tiers: default_tiers(),
            depth_menu: None,
            weights: default_weights(),
            direction: RankDirection::Ascending,
            flood_seed: 0,
            victim_usage: default_victim_usage(),
            defense: DefenseSpec::default(),
        }
    }
}

fn default_tolerance() -> f64 {
    crate::scheduler::DEFAULT_DEPTH_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Preset name or coupling-map file path.
    pub coupling: String,
    #[serde(default)]
    pub calibration_seed: u64,
    pub victim: VictimSpec,
    pub seeds: SeedRange,
    #[serde(default)]
    pub allocations: AllocationSpec,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub attack: Option<AttackSpec>,
    #[serde(default = "default_tolerance")]
    pub depth_tolerance: f64,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

impl Scenario {
    /// Parses and validates against the referenced device.
    pub fn from_json(text: &str) -> Result<(Self, Device<f64>)> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let device = s.device()?;
        s.validate(&device.graph)?;
        Ok((s, device))
    }

    pub fn load(path: &Path) -> Result<(Self, Device<f64>)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn device(&self) -> Result<Device<f64>> {
        Device::load(&self.coupling, self.calibration_seed).map_err(|e| bad(e.to_string()))
    }

    pub fn validate(&self, g: &CouplingGraph) -> Result<()> {
        let n = g.num_qubits();
        if self.seeds.count == 0 {
            return Err(bad("seed range is empty"));
        }
        if self.seeds.start.checked_add(self.seeds.count).is_none() {
            return Err(bad("seed range overflows"));
        }
        let v = &self.victim;
        if v.qubits == 0 || v.qubits > n {
            return Err(bad(format!("victim needs {} qubits, device has {n}", v.qubits)));
        }
        if !(0.0..=1.0).contains(&v.two_qubit_fraction) {
            return Err(bad("two_qubit_fraction outside [0, 1]"));
        }
        if v.two_qubit_fraction > 0.0 && v.qubits < 2 {
            return Err(bad("two-qubit gates need a victim of at least 2 qubits"));
        }
        if !(self.depth_tolerance >= 0.0) {
            return Err(bad("depth_tolerance must be non-negative"));
        }
        if let AllocationSpec::Explicit { configs, baseline } = &self.allocations {
            if configs.is_empty() {
                return Err(bad("explicit allocation list is empty"));
            }
            if *baseline >= configs.len() {
                return Err(bad(format!("baseline index {baseline} out of range")));
            }
            for c in configs {
                if c.qubits.iter().any(|&q| q >= n) {
                    return Err(bad(format!("allocation {:?} outside the device", c.label)));
                }
                let mut uniq = c.qubits.clone();
                uniq.sort_unstable();
                uniq.dedup();
                if uniq.len() != c.qubits.len() {
                    return Err(bad(format!("allocation {:?} repeats a qubit", c.label)));
                }
                if c.qubits.is_empty() || !g.is_connected_subset(&c.qubits)? {
                    return Err(bad(format!("allocation {:?} is not connected", c.label)));
                }
                if c.qubits.len() < v.qubits {
                    return Err(bad(format!(
                        "allocation {:?} has {} qubits, victim needs {}",
                        c.label,
                        c.qubits.len(),
                        v.qubits
                    )));
                }
            }
        }
        match &self.sweep {
            Sweep::None => {}
            Sweep::Gates { menu } => {
                if menu.is_empty() {
                    return Err(bad("gate menu is empty"));
                }
                if menu.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(bad("gate menu must be strictly ascending"));
                }
            }
            Sweep::Qubits { min, max } => {
                if *min == 0 || min > max || *max > n {
                    return Err(bad(format!("qubit range {min}..={max} not within 1..={n}")));
                }
                if matches!(self.allocations, AllocationSpec::Explicit { .. }) {
                    return Err(bad("a qubit sweep needs extreme allocations"));
                }
                if self.victim.two_qubit_fraction > 0.0 && *min < 2 {
                    return Err(bad("two-qubit gates need at least 2 qubits"));
                }
            }
        }
        if let Some(a) = &self.attack {
            let k = a.k.unwrap_or_else(|| default_target_count(n));
            if a.enabled && (k == 0 || k >= n) {
                return Err(bad(format!("attack k={k} must be in 1..{n}")));
            }
            if a.tiers == 0 {
                return Err(bad("attack tiers must be at least 1"));
            }
            if let Some(m) = &a.depth_menu {
                if m.is_empty() || m.contains(&0) {
                    return Err(bad("flood depth menu must be non-empty and positive"));
                }
            }
            QualityWeights::new(a.weights[0], a.weights[1], a.weights[2])
                .map_err(|e| bad(e.to_string()))?;
            if !(a.victim_usage >= 0.0) {
                return Err(bad("victim_usage must be non-negative"));
            }
            let d = &a.defense;
            if !(d.nu > 0.0 && d.nu < 1.0) {
                return Err(bad("defense nu must lie in (0, 1)"));
            }
            if d.training_users < sentinel_min_samples() {
                return Err(bad("defense needs at least 10 training users"));
            }
            if !(d.days > 0.0) {
                return Err(bad("defense window must be positive"));
            }
        }
        Ok(())
    }
}

fn sentinel_min_samples() -> usize {
    10
}

/// One victim routed on one configuration against the baseline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: String,
    pub config: String,
    pub seed: u64,
    pub cnot_baseline: usize,
    pub cnot_test: usize,
    pub swaps_baseline: usize,
    pub swaps_test: usize,
    pub swaps_added: i64,
    pub overhead_pct: f64,
}

/// Aggregates of one (cell, config) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: String,
    pub config: String,
    pub samples: usize,
    pub mean_overhead_pct: f64,
    pub median_overhead_pct: f64,
    pub max_overhead_pct: f64,
    pub mean_swaps_added: f64,
    pub median_swaps_added: f64,
    pub max_swaps_added: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<CellSummary>,
}

impl SweepReport {
    /// Aggregates rows per (cell, config) in order of first appearance.
    pub fn from_rows(rows: Vec<SweepRow>) -> Self {
        let mut summary: Vec<CellSummary> = Vec::new();
        let mut groups: Vec<((String, String), Vec<&SweepRow>)> = Vec::new();
        for r in &rows {
            let key = (r.cell.clone(), r.config.clone());
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(r),
                None => groups.push((key, vec![r])),
            }
        }
        for ((cell, config), g) in groups {
            let o: Vec<f64> = g.iter().map(|r| r.overhead_pct).collect();
            let s: Vec<f64> = g.iter().map(|r| r.swaps_added as f64).collect();
            summary.push(CellSummary {
                cell,
                config,
                samples: g.len(),
                mean_overhead_pct: stats::mean(&o).unwrap_or(0.0),
                median_overhead_pct: stats::median(&o).unwrap_or(0.0),
                max_overhead_pct: stats::max(&o).unwrap_or(0.0),
                mean_swaps_added: stats::mean(&s).unwrap_or(0.0),
                median_swaps_added: stats::median(&s).unwrap_or(0.0),
                max_swaps_added: stats::max(&s).unwrap_or(0.0),
            });
        }
        SweepReport { rows, summary }
    }

    /// Summary of `cell`/`config`, if present.
    pub fn cell(&self, cell: &str, config: &str) -> Option<&CellSummary> {
        self.summary.iter().find(|c| c.cell == cell && c.config == config)
    }

    /// Checks that aggregates match the rows and each row's overhead matches
    /// its CNOT counts.
    pub fn check_consistency(&self) -> Result<()> {
        for r in &self.rows {
            let expected = swap_overhead_or_zero::<f64>(r.cnot_test, r.cnot_baseline)?;
            if expected != r.overhead_pct {
                return Err(bad(format!("row {}/{}/{} overhead mismatch", r.cell, r.config, r.seed)));
            }
        }
        if SweepReport::from_rows(self.rows.clone()).summary != self.summary {
            return Err(bad("summary does not match rows"));
        }
        Ok(())
    }

    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        csv_string(w)
    }

    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.summary {
            w.serialize(r)?;
        }
        csv_string(w)
    }

    /// Rebuilds a report from its two CSV files and verifies consistency.
    pub fn from_csv(rows_csv: &str, summary_csv: &str) -> Result<Self> {
        let rows = csv::Reader::from_reader(rows_csv.as_bytes())
            .deserialize()
            .collect::<std::result::Result<Vec<SweepRow>, _>>()?;
        let summary = csv::Reader::from_reader(summary_csv.as_bytes())
            .deserialize()
            .collect::<std::result::Result<Vec<CellSummary>, _>>()?;
        let report = SweepReport { rows, summary };
        report.check_consistency()?;
        Ok(report)
    }

    /// Writes `<name>_rows.csv` and `<name>_summary.csv` into `dir`.
    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{name}_rows.csv")), self.rows_csv()?)?;
        std::fs::write(dir.join(format!("{name}_summary.csv")), self.summary_csv()?)?;
        Ok(())
    }
}

/// Densest and least-dense connected `k`-subsets under the scheduler's
/// high- and low-priority placement policies.
pub fn extreme_allocations(
    g: &CouplingGraph,
    cal: &Calibration<f64>,
    k: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let all: Vec<usize> = (0..g.num_qubits()).collect();
    let probe = Circuit::empty(k);
    let dense = allocate_qubits(&probe, g, Some(cal), &all, Priority::High, DEFAULT_ALLOCATION_CAP);
    let sparse = allocate_qubits(&probe, g, Some(cal), &all, Priority::Low, DEFAULT_ALLOCATION_CAP);
    match (dense, sparse) {
        (Some(d), Some(s)) => Ok((d, s)),
        _ => Err(bad(format!("no connected {k}-qubit allocation"))),
    }
}

struct Cell {
    label: String,
    victim: VictimSpec,
    configs: Vec<AllocationConfig>,
    baseline: usize,
}

fn configs_for(
    s: &Scenario,
    device: &Device<f64>,
    qubits: usize,
) -> Result<(Vec<AllocationConfig>, usize)> {
    Ok(match &s.allocations {
        AllocationSpec::Extremes => {
            let (dense, sparse) = extreme_allocations(&device.graph, &device.calibration, qubits)?;
            (
                vec![
                    AllocationConfig {
                        label: "densest".into(),
                        qubits: dense,
                    },
                    AllocationConfig {
                        label: "least_dense".into(),
                        qubits: sparse,
                    },
                ],
                0,
            )
        }
        AllocationSpec::Explicit { configs, baseline } => (configs.clone(), *baseline),
    })
}

fn run_cells(cells: &[Cell], g: &CouplingGraph, seeds: &[u64]) -> Result<SweepReport> {
    let jobs: Vec<(&Cell, u64)> = cells
        .iter()
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let rows: Vec<Vec<SweepRow>> = jobs
        .par_iter()
        .map(|&(cell, seed)| {
            let circuit = cell.victim.circuit(seed)?;
            let routed = cell
                .configs
                .iter()
                .map(|cfg| {
                    let layout = initial_layout(&circuit, g, &cfg.qubits)?;
                    route(&circuit, g, &cfg.qubits, &layout, seed)
                })
                .collect::<Result<Vec<_>>>()?;
            let base = &routed[cell.baseline];
            cell.configs
                .iter()
                .zip(&routed)
                .map(|(cfg, r)| {
                    Ok(SweepRow {
                        cell: cell.label.clone(),
                        config: cfg.label.clone(),
                        seed,
                        cnot_baseline: base.cnot_after_decomposition,
                        cnot_test: r.cnot_after_decomposition,
                        swaps_baseline: base.swaps_inserted,
                        swaps_test: r.swaps_inserted,
                        swaps_added: r.swaps_inserted as i64 - base.swaps_inserted as i64,
                        overhead_pct: swap_overhead_or_zero(
                            r.cnot_after_decomposition,
                            base.cnot_after_decomposition,
                        )?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport::from_rows(rows.into_iter().flatten().collect()))
}

/// Each seed's victim routed on every allocation configuration.
pub fn run_allocation_sweep(s: &Scenario, device: &Device<f64>) -> Result<SweepReport> {
    let (configs, baseline) = configs_for(s, device, s.victim.qubits)?;
    let cell = Cell {
        label: format!("qubits={}", s.victim.qubits),
        victim: s.victim,
        configs,
        baseline,
    };
    run_cells(&[cell], &device.graph, &s.seeds.seeds())
}

/// One cell per gate count of the menu.
pub fn run_complexity_sweep(s: &Scenario, device: &Device<f64>) -> Result<SweepReport> {
    let menu = match &s.sweep {
        Sweep::Gates { menu } => menu.clone(),
        Sweep::None => DEFAULT_GATE_MENU.to_vec(),
        Sweep::Qubits { .. } => return Err(bad("complexity sweep needs a gate menu")),
    };
    let (configs, baseline) = configs_for(s, device, s.victim.qubits)?;
    let cells: Vec<Cell> = menu
        .iter()
        .map(|&gates| Cell {
            label: format!("gates={gates}"),
            victim: VictimSpec { gates, ..s.victim },
            configs: configs.clone(),
            baseline,
        })
        .collect();
    run_cells(&cells, &device.graph, &s.seeds.seeds())
}

/// One cell per victim size, densest against least-dense.
pub fn run_size_sweep(s: &Scenario, device: &Device<f64>) -> Result<SweepReport> {
    let (min, max) = match &s.sweep {
        Sweep::Qubits { min, max } => (*min, *max),
        Sweep::None => DEFAULT_QUBIT_RANGE,
        Sweep::Gates { .. } => return Err(bad("size sweep needs a qubit range")),
    };
    if max > device.graph.num_qubits() {
        return Err(bad("qubit range exceeds the device"));
    }
    let cells = (min..=max)
        .map(|q| {
            let (configs, baseline) = configs_for(s, device, q)?;
            Ok(Cell {
                label: format!("qubits={q}"),
                victim: VictimSpec { qubits: q, ..s.victim },
                configs,
                baseline,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    run_cells(&cells, &device.graph, &s.seeds.seeds())
}

/// Per-seed outcome of the attack, before and after the defense responds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndRow {
    pub seed: u64,
    pub swaps_baseline: usize,
    pub cnot_baseline: usize,
    pub swaps_attack: Option<usize>,
    pub cnot_attack: Option<usize>,
    pub overhead_pct: Option<f64>,
    pub denied: bool,
    pub swaps_defended: Option<usize>,
    pub cnot_defended: Option<usize>,
    pub overhead_post_pct: Option<f64>,
    pub denied_post: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub adversary_score: Option<f64>,
    pub adversary_flagged: bool,
    pub honest_users: usize,
    pub honest_flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndSummary {
    pub targets: Vec<usize>,
    pub flood_jobs: usize,
    pub median_overhead_pct: Option<f64>,
    pub max_overhead_pct: Option<f64>,
    pub median_overhead_post_pct: Option<f64>,
    pub max_overhead_post_pct: Option<f64>,
    pub denied: usize,
    pub denied_post: usize,
    pub defense_applied: bool,
    pub detection: Option<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndReport {
    pub rows: Vec<EndToEndRow>,
    pub summary: EndToEndSummary,
}

impl EndToEndReport {
    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        csv_string(w)
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{name}_rows.csv")), self.rows_csv()?)?;
        let mut json = serde_json::to_string_pretty(&self.summary)?;
        json.push('\n');
        std::fs::write(dir.join(format!("{name}_summary.json")), json)?;
        Ok(())
    }
}

/// Trains on an honest population, then scores a fresh population plus the
/// adversary, whose log replays its flood once a day.
fn detect(plan: &AttackPlan, g: &CouplingGraph, d: &DefenseSpec) -> Result<Detection> {
    let training = synthetic::generate(g, d.training_users, 0, d.days, d.seed)?;
    let features: Vec<_> = extract_all::<f64>(&training.log, training.window)
        .into_values()
        .collect();
    let model = sentinel::train(&features, d.nu, d.seed)?;

    let mut observed = synthetic::generate(g, d.detection_users, 0, d.days, d.seed.wrapping_add(1))?;
    let mut rng = ChaCha8Rng::seed_from_u64(d.seed.wrapping_add(2));
    if !plan.flood_jobs.is_empty() {
        let bursts: Vec<f64> = (0..d.days.ceil() as usize)
            .map(|day| (day as f64 * 24.0 + rng.gen_range(0.0..23.0)).min(observed.window.hours - 1.0))
            .collect();
        let recs = synthetic::flood_records(ADVERSARY_USER, &plan.flood_jobs, &bursts, &mut rng);
        observed.log.records.extend(recs);
    }
    let scores: Vec<(String, f64)> = extract_all::<f64>(&observed.log, observed.window)
        .into_iter()
        .map(|(u, f)| {
            let s = model.score(&f);
            (u, s)
        })
        .collect();
    let adversary_score = scores.iter().find(|(u, _)| u == ADVERSARY_USER).map(|(_, s)| *s);
    let honest: Vec<f64> = scores
        .iter()
        .filter(|(u, _)| u != ADVERSARY_USER)
        .map(|(_, s)| *s)
        .collect();
    Ok(Detection {
        adversary_score,
        adversary_flagged: adversary_score.is_some_and(|s| s < sentinel::THRESHOLD),
        honest_users: honest.len(),
        honest_flagged: honest.iter().filter(|&&s| s < sentinel::THRESHOLD).count(),
    })
}

/// Flood → schedule → route, then detect, isolate the flagged adversary and
/// run the attack arm again.
pub fn run_end_to_end(s: &Scenario, device: &Device<f64>) -> Result<EndToEndReport> {
    let a = s.attack.clone().unwrap_or_default();
    let g = &device.graph;
    let cal = &device.calibration;
    let seeds = s.seeds.seeds();
    let plan = if a.enabled {
        let k = a.k.unwrap_or_else(|| default_target_count(g.num_qubits()));
        let depth_menu = match &a.depth_menu {
            Some(m) => m.clone(),
            None => vec![s.victim.circuit(seeds[0])?.depth().max(1)],
        };
        let w = QualityWeights::new(a.weights[0], a.weights[1], a.weights[2])?;
        AttackPlan::build(g, cal, w, a.direction, k, a.tiers, &depth_menu, a.flood_seed)?
    } else {
        AttackPlan::inert(Vec::new())
    };
    let config = ImpactConfig {
        scheduler: SchedulerConfig {
            depth_tolerance: s.depth_tolerance,
            ..SchedulerConfig::default()
        },
        victim_usage: a.victim_usage,
    };

    let detection = if a.defense.enabled {
        Some(detect(&plan, g, &a.defense)?)
    } else {
        None
    };
    let isolate = detection.as_ref().is_some_and(|d| d.adversary_flagged);

    let measure = |isolated: bool| -> Result<Vec<ImpactReport>> {
        seeds
            .par_iter()
            .map(|&seed| {
                let victim = s.victim.circuit(seed)?;
                measure_attack_impact_with(&victim, g, cal, &plan, &config, &[seed], |q| {
                    if isolated && q.jobs.iter().any(|j| j.user == ADVERSARY_USER) {
                        respond(q, ADVERSARY_USER, ResponsePolicy::Isolate)?;
                    }
                    Ok(())
                })
            })
            .collect()
    };
    let pre = measure(false)?;
    let post = if isolate { measure(true)? } else { pre.clone() };

    let rows: Vec<EndToEndRow> = pre
        .iter()
        .zip(&post)
        .map(|(p, q)| {
            let (p, q) = (&p.per_seed[0], &q.per_seed[0]);
            EndToEndRow {
                seed: p.seed,
                swaps_baseline: p.baseline.swaps,
                cnot_baseline: p.baseline.cnots,
                swaps_attack: p.attack.as_ref().map(|x| x.swaps),
                cnot_attack: p.attack.as_ref().map(|x| x.cnots),
                overhead_pct: p.overhead_pct,
                denied: p.denied(),
                swaps_defended: q.attack.as_ref().map(|x| x.swaps),
                cnot_defended: q.attack.as_ref().map(|x| x.cnots),
                overhead_post_pct: q.overhead_pct,
                denied_post: q.denied(),
            }
        })
        .collect();
    let pre_o: Vec<f64> = rows.iter().filter_map(|r| r.overhead_pct).collect();
    let post_o: Vec<f64> = rows.iter().filter_map(|r| r.overhead_post_pct).collect();
    let summary = EndToEndSummary {
        targets: plan.target_qubits.clone(),
        flood_jobs: plan.flood_jobs.len(),
        median_overhead_pct: stats::median(&pre_o),
        max_overhead_pct: stats::max(&pre_o),
        median_overhead_post_pct: stats::median(&post_o),
        max_overhead_post_pct: stats::max(&post_o),
        denied: rows.iter().filter(|r| r.denied).count(),
        denied_post: rows.iter().filter(|r| r.denied_post).count(),
        defense_applied: isolate,
        detection,
    };
    Ok(EndToEndReport { rows, summary })
}

/// Runs `f` on a dedicated pool of `workers` threads (all cores if `None`).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::Argument("worker count must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| Error::Argument(e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(json: &str) -> Result<(Scenario, Device<f64>)> {
        Scenario::from_json(json)
    }

    const BASE: &str = r#"{"coupling":"grid20","victim":{"qubits":4,"gates":30},"seeds":{"start":0,"count":4}"#;

    #[test]
    fn validation_errors_are_scenario_errors() {
        let cases = [
            r#"{"coupling":"grid20","victim":{"qubits":4,"gates":30},"seeds":{"start":0,"count":0}}"#,
            r#"{"coupling":"grid20","victim":{"qubits":40,"gates":30},"seeds":{"start":0,"count":1}}"#,
            r#"{"coupling":"nowhere","victim":{"qubits":4,"gates":30},"seeds":{"start":0,"count":1}}"#,
            r#"{"coupling":"grid20","victim":{"qubits":4,"gates":30},"seeds":{"start":0,"count":1},"sweep":{"kind":"gates","menu":[]}}"#,
            r#"{"coupling":"grid20","victim":{"qubits":4,"gates":30},"seeds":{"start":0,"count":1},"allocations":{"mode":"explicit","configs":[{"label":"x","qubits":[0,1,2,19]}]}}"#,
            r#"{"coupling":"grid20","victim":{"qubits":4,"gates":30},"seeds":{"start":0,"count":1},"bogus":1}"#,
        ];
        for c in cases {
            assert!(matches!(scenario(c), Err(Error::Scenario(_))), "{c}");
        }
    }

    #[test]
    fn identical_configs_have_zero_overhead() {
        let json = format!(
            r#"{BASE},"allocations":{{"mode":"explicit","configs":[{{"label":"a","qubits":[0,1,2,3]}},{{"label":"b","qubits":[0,1,2,3]}}]}}}}"#
        );
        let (s, d) = scenario(&json).unwrap();
        let r = run_allocation_sweep(&s, &d).unwrap();
        assert_eq!(r.rows.len(), 8);
        assert!(r.rows.iter().all(|x| x.overhead_pct == 0.0));
        r.check_consistency().unwrap();
    }

    #[test]
    fn single_seed_aggregates_equal_row() {
        let json = r#"{"coupling":"grid20","victim":{"qubits":6,"gates":60},"seeds":{"start":3,"count":1}}"#;
        let (s, d) = scenario(json).unwrap();
        let r = run_allocation_sweep(&s, &d).unwrap();
        let row = r.rows.iter().find(|x| x.config == "least_dense").unwrap();
        let c = r.cell("qubits=6", "least_dense").unwrap();
        assert_eq!(c.samples, 1);
        assert_eq!(c.mean_overhead_pct, row.overhead_pct);
        assert_eq!(c.median_overhead_pct, row.overhead_pct);
        assert_eq!(c.max_overhead_pct, row.overhead_pct);
    }

    #[test]
    fn gate_sweep_cells_and_zero_fraction() {
        let json = r#"{"coupling":"grid20","victim":{"qubits":5,"gates":10,"two_qubit_fraction":0.0},"seeds":{"start":0,"count":3},"sweep":{"kind":"gates","menu":[20,40]}}"#;
        let (s, d) = scenario(json).unwrap();
        let r = run_complexity_sweep(&s, &d).unwrap();
        assert_eq!(r.summary.len(), 4);
        assert!(r.rows.iter().all(|x| x.overhead_pct == 0.0));
        let single = r#"{"coupling":"grid20","victim":{"qubits":5,"gates":10},"seeds":{"start":0,"count":2},"sweep":{"kind":"gates","menu":[50]}}"#;
        let (s, d) = scenario(single).unwrap();
        let cells: std::collections::BTreeSet<String> =
            run_complexity_sweep(&s, &d).unwrap().rows.into_iter().map(|r| r.cell).collect();
        assert_eq!(cells.len(), 1);
    }

    #[test]
    fn full_device_size_has_no_gap() {
        let json = r#"{"coupling":"line5","victim":{"qubits":5,"gates":40},"seeds":{"start":0,"count":3},"sweep":{"kind":"qubits","min":5,"max":5}}"#;
        let (s, d) = scenario(json).unwrap();
        let r = run_size_sweep(&s, &d).unwrap();
        assert!(r.rows.iter().all(|x| x.overhead_pct == 0.0));
        assert_eq!(r.summary.len(), 2);
    }

    #[test]
    fn csv_round_trip_and_tamper_detection() {
        let (s, d) = scenario(&format!("{BASE}}}")).unwrap();
        let r = run_allocation_sweep(&s, &d).unwrap();
        let rows = r.rows_csv().unwrap();
        let summary = r.summary_csv().unwrap();
        assert!(rows.starts_with(
            "cell,config,seed,cnot_baseline,cnot_test,swaps_baseline,swaps_test,swaps_added,overhead_pct\n"
        ));
        assert_eq!(SweepReport::from_csv(&rows, &summary).unwrap(), r);
        let mut tampered = r.clone();
        tampered.summary[0].samples += 1;
        assert!(tampered.check_consistency().is_err());
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let (s, d) = scenario(&format!("{BASE}}}")).unwrap();
        let one = with_workers(Some(1), || run_allocation_sweep(&s, &d)).unwrap().unwrap();
        let four = with_workers(Some(4), || run_allocation_sweep(&s, &d)).unwrap().unwrap();
        assert_eq!(one.rows_csv().unwrap(), four.rows_csv().unwrap());
        assert!(with_workers(Some(0), || ()).is_err());
    }

    #[test]
    fn end_to_end_without_adversary() {
        let json = r#"{"coupling":"grid20","victim":{"qubits":4,"gates":30},"seeds":{"start":0,"count":3},
            "attack":{"enabled":false,"defense":{"training_users":30,"detection_users":10,"days":2}}}"#;
        let (s, d) = scenario(json).unwrap();
        let r = run_end_to_end(&s, &d).unwrap();
        for row in &r.rows {
            assert_eq!(row.overhead_pct, Some(0.0));
            assert_eq!(row.overhead_post_pct, Some(0.0));
        }
        assert!(!r.summary.defense_applied);
    }

    #[test]
    fn end_to_end_defense_disabled_keeps_pre() {
        let json = r#"{"coupling":"grid20","victim":{"qubits":4,"gates":30},"seeds":{"start":0,"count":3},
            "attack":{"defense":{"enabled":false}}}"#;
        let (s, d) = scenario(json).unwrap();
        let r = run_end_to_end(&s, &d).unwrap();
        for row in &r.rows {
            assert_eq!(row.overhead_pct, row.overhead_post_pct);
        }
        assert!(r.summary.detection.is_none());
    }
}
