//! Fair-share batch scheduler for multi-tenant execution.
//!
//! Jobs are ordered by ascending usage (FIFO within ties), cut into three
//! priority groups, and then walked group by group with the priority metric
//! (two-qubit gate share) breaking order inside a group. The first job seeds a
//! batch; later jobs join when their depth is comparable to the seed and a
//! connected, disjoint allocation is still available.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::hardware::{Calibration, CouplingGraph};

pub const DEFAULT_DEPTH_TOLERANCE: f64 = 0.2;
pub const DEFAULT_ALLOCATION_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    High,
    Medium,
    Low,
}

impl Priority {
    pub const ALL: [Priority; 3] = [Priority::High, Priority::Medium, Priority::Low];
}

/// A circuit submitted by a user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub user: String,
    pub circuit: Circuit,
    /// Normalized historical usage; lower runs sooner.
    pub usage_score: f64,
    pub arrival_index: u64,
    /// Assigned by grouping on every scheduling pass.
    #[serde(default, skip_deserializing)]
    pub priority: Option<Priority>,
    /// Explicit initial-layout request; honored only when all of it is free.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested_qubits: Option<Vec<usize>>,
    /// Solo jobs never share a batch.
    #[serde(default)]
    pub solo: bool,
}

impl Job {
    pub fn new(
        id: impl Into<String>,
        user: impl Into<String>,
        circuit: Circuit,
        usage_score: f64,
        arrival_index: u64,
    ) -> Result<Self> {
        let job = Job {
            id: id.into(),
            user: user.into(),
            circuit,
            usage_score,
            arrival_index,
            priority: None,
            requested_qubits: None,
            solo: false,
        };
        job.validate()?;
        Ok(job)
    }

    pub fn with_request(mut self, qubits: Vec<usize>) -> Result<Self> {
        let mut q = qubits;
        q.sort_unstable();
        q.dedup();
        self.requested_qubits = Some(q);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.circuit.is_empty() {
            return Err(Error::EmptyProgram);
        }
        if !(self.usage_score >= 0.0) || !self.usage_score.is_finite() {
            return Err(Error::Argument(format!(
                "job {}: usage score must be finite and non-negative",
                self.id
            )));
        }
        if let Some(r) = &self.requested_qubits {
            if r.len() != self.circuit.num_qubits() {
                return Err(Error::Argument(format!(
                    "job {} requests {} qubits for a {}-qubit circuit",
                    self.id,
                    r.len(),
                    self.circuit.num_qubits()
                )));
            }
        }
        Ok(())
    }

    pub fn priority_metric(&self) -> f64 {
        self.circuit.priority_metric().unwrap_or(0.0)
    }
}

/// Stable ascending sort by usage, oldest first within equal usage.
pub fn fair_share_order(mut jobs: Vec<Job>) -> Vec<Job> {
    jobs.sort_by(|a, b| {
        a.usage_score
            .total_cmp(&b.usage_score)
            .then(a.arrival_index.cmp(&b.arrival_index))
    });
    jobs
}

/// Sizes of the high, medium and low groups for `n` jobs (front-loaded rounding).
pub fn group_sizes(n: usize) -> (usize, usize, usize) {
    let high = n.div_ceil(3);
    let medium = (n - high).div_ceil(2);
    (high, medium, n - high - medium)
}

/// Splits a fair-share ordered queue into contiguous (high, medium, low) groups.
pub fn partition_priority_groups(ordered: &[Job]) -> (&[Job], &[Job], &[Job]) {
    let (h, m, _) = group_sizes(ordered.len());
    let (high, rest) = ordered.split_at(h);
    let (medium, low) = rest.split_at(m);
    (high, medium, low)
}

/// `|depth(a) − depth(b)| ≤ tol · max(depth(a), depth(b))`.
pub fn depth_comparable(a: &Circuit, b: &Circuit, tol: f64) -> bool {
    depths_comparable(a.depth(), b.depth(), tol)
}

pub fn depths_comparable(a: usize, b: usize, tol: f64) -> bool {
    (a.abs_diff(b) as f64) <= tol * a.max(b) as f64
}

/// Orders candidate allocations densest first: more induced edges, then lower
/// mean connection error, then lexicographically smaller.
fn densest_first(
    g: &CouplingGraph,
    cal: Option<&Calibration<f64>>,
    candidates: &mut [Vec<usize>],
) {
    let mut keyed: Vec<(usize, f64, Vec<usize>)> = candidates
        .iter()
        .map(|s| {
            let ce = cal.map_or(0.0, |c| c.mean_induced_error(g, s));
            (g.allocation_density(s), ce, s.clone())
        })
        .collect();
    keyed.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    for (slot, (_, _, s)) in candidates.iter_mut().zip(keyed) {
        *slot = s;
    }
}

/// Picks a connected `k`-subset of `available` for a circuit at `priority`.
///
/// High and medium take the front of the densest-first order (medium after
/// high has already claimed its qubits); low takes the back, i.e. the sparsest
/// feasible subset. When more than `cap` candidates exist, a greedy
/// breadth-first growth stands in for the enumeration.
pub fn allocate_qubits(
    c: &Circuit,
    g: &CouplingGraph,
    cal: Option<&Calibration<f64>>,
    available: &[usize],
    priority: Priority,
    cap: usize,
) -> Option<Vec<usize>> {
    let k = c.num_qubits();
    if k == 0 || k > available.len() {
        return None;
    }
    match g.enumerate_connected_allocations_capped(k, available, cap) {
        Some(mut candidates) => {
            if candidates.is_empty() {
                return None;
            }
            densest_first(g, cal, &mut candidates);
            match priority {
                Priority::High | Priority::Medium => candidates.into_iter().next(),
                Priority::Low => candidates.pop(),
            }
        }
        None => greedy_allocation(g, k, available, priority != Priority::Low),
    }
}

/// Breadth-first growth inside `available`: dense growth starts at the
/// highest-induced-degree qubit and adds the frontier qubit with the most
/// links into the set; sparse growth mirrors it with the fewest.
pub fn greedy_allocation(
    g: &CouplingGraph,
    k: usize,
    available: &[usize],
    dense: bool,
) -> Option<Vec<usize>> {
    let avail: BTreeSet<usize> = available.iter().copied().collect();
    let avail_vec: Vec<usize> = avail.iter().copied().collect();
    let mut starts = avail_vec.clone();
    starts.sort_by_key(|&q| {
        let d = g.induced_degree(q, &avail_vec);
        (if dense { usize::MAX - d } else { d }, q)
    });
    for start in starts {
        let mut set = vec![start];
        while set.len() < k {
            let frontier: BTreeSet<usize> = set
                .iter()
                .flat_map(|&q| g.neighbors(q).iter().copied())
                .filter(|q| avail.contains(q) && !set.contains(q))
                .collect();
            let pick = frontier.into_iter().min_by_key(|&q| {
                let links = g.induced_degree(q, &set);
                (if dense { usize::MAX - links } else { links }, q)
            });
            match pick {
                Some(q) => set.push(q),
                None => break,
            }
        }
        if set.len() == k {
            set.sort_unstable();
            return Some(set);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub depth_tolerance: f64,
    pub allocation_cap: usize,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            depth_tolerance: DEFAULT_DEPTH_TOLERANCE,
            allocation_cap: DEFAULT_ALLOCATION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEntry {
    pub job: Job,
    pub allocation: Vec<usize>,
}

/// Jobs selected to run together, each on its own connected allocation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub entries: Vec<BatchEntry>,
    pub hardware_qubits: usize,
}

impl Batch {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, job_id: &str) -> Option<&BatchEntry> {
        self.entries.iter().find(|e| e.job.id == job_id)
    }

    /// Checks disjointness, connectivity, exact sizing and depth comparability
    /// against the first (seed) entry.
    pub fn validate(&self, g: &CouplingGraph, depth_tolerance: f64) -> Result<()> {
        let mut used = BTreeSet::new();
        let Some(seed) = self.entries.first() else {
            return Ok(());
        };
        for e in &self.entries {
            let a = &e.allocation;
            if a.len() != e.job.circuit.num_qubits() {
                return Err(Error::Argument(format!("job {} allocation size mismatch", e.job.id)));
            }
            if !g.is_connected_subset(a)? {
                return Err(Error::Argument(format!("job {} allocation disconnected", e.job.id)));
            }
            for &q in a {
                if !used.insert(q) {
                    return Err(Error::Argument(format!("qubit {q} shared within batch")));
                }
            }
            if !depth_comparable(&seed.job.circuit, &e.job.circuit, depth_tolerance) {
                return Err(Error::Argument(format!(
                    "job {} depth not comparable to seed",
                    e.job.id
                )));
            }
        }
        if self.entries.len() > 1 && self.entries.iter().any(|e| e.job.solo) {
            return Err(Error::Argument("solo job co-scheduled".into()));
        }
        Ok(())
    }
}

/// Pending jobs awaiting batch selection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FairShareQueue {
    pub jobs: Vec<Job>,
}

impl FairShareQueue {
    pub fn new(jobs: Vec<Job>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for j in &jobs {
            j.validate()?;
            if !seen.insert(j.arrival_index) {
                return Err(Error::Argument(format!(
                    "duplicate arrival index {}",
                    j.arrival_index
                )));
            }
        }
        Ok(FairShareQueue { jobs })
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn users(&self) -> BTreeSet<String> {
        self.jobs.iter().map(|j| j.user.clone()).collect()
    }

    /// Fair-share order with priority groups assigned, then within each group
    /// by descending priority metric (stable, so fair-share order breaks ties).
    pub fn scheduling_order(&self) -> Vec<Job> {
        let mut ordered = fair_share_order(self.jobs.clone());
        let (h, m, _) = group_sizes(ordered.len());
        for (i, job) in ordered.iter_mut().enumerate() {
            job.priority = Some(if i < h {
                Priority::High
            } else if i < h + m {
                Priority::Medium
            } else {
                Priority::Low
            });
        }
        ordered.sort_by(|a, b| {
            a.priority
                .cmp(&b.priority)
                .then(b.priority_metric().total_cmp(&a.priority_metric()))
        });
        ordered
    }

    /// Selects the next batch and removes its jobs from the queue.
    pub fn select_batch(
        &mut self,
        g: &CouplingGraph,
        cal: Option<&Calibration<f64>>,
        config: &SchedulerConfig,
    ) -> Batch {
        let order = self.scheduling_order();
        let mut batch = Batch {
            entries: Vec::new(),
            hardware_qubits: g.num_qubits(),
        };
        let all: Vec<usize> = (0..g.num_qubits()).collect();

        let place = |job: &Job, free: &[usize]| -> Option<Vec<usize>> {
            let priority = job.priority.unwrap_or(Priority::Low);
            match &job.requested_qubits {
                Some(req) => {
                    let ok = req.iter().all(|q| free.contains(q))
                        && g.is_connected_subset(req).unwrap_or(false);
                    ok.then(|| req.clone())
                }
                None => allocate_qubits(&job.circuit, g, cal, free, priority, config.allocation_cap),
            }
        };

        let Some((seed_pos, seed_alloc)) = order
            .iter()
            .enumerate()
            .find_map(|(i, j)| place(j, &all).map(|a| (i, a)))
        else {
            return batch;
        };
        let seed = order[seed_pos].clone();
        let seed_depth = seed.circuit.depth();
        let mut free: Vec<usize> = all.iter().copied().filter(|q| !seed_alloc.contains(q)).collect();
        let solo_seed = seed.solo;
        batch.entries.push(BatchEntry {
            job: seed,
            allocation: seed_alloc,
        });

        if !solo_seed {
            for (i, job) in order.iter().enumerate() {
                if free.is_empty() {
                    break;
                }
                if i == seed_pos || job.solo {
                    continue;
                }
                if !depths_comparable(seed_depth, job.circuit.depth(), config.depth_tolerance) {
                    continue;
                }
                if let Some(alloc) = place(job, &free) {
                    free.retain(|q| !alloc.contains(q));
                    batch.entries.push(BatchEntry {
                        job: job.clone(),
                        allocation: alloc,
                    });
                }
            }
        }

        let taken: BTreeSet<&str> = batch.entries.iter().map(|e| e.job.id.as_str()).collect();
        self.jobs.retain(|j| !taken.contains(j.id.as_str()));
        batch
    }

    /// Charges each user in `batch` its share of the batch cost, then rescales
    /// scores so per-user usage sums to 1 over users with pending jobs.
    pub fn update_usage(&mut self, batch: &Batch, cost: impl Fn(&BatchEntry) -> f64) {
        if batch.is_empty() {
            return;
        }
        let mut per_user: BTreeMap<&str, f64> = BTreeMap::new();
        let mut total = 0.0;
        for e in &batch.entries {
            let c = cost(e).max(0.0);
            *per_user.entry(e.job.user.as_str()).or_default() += c;
            total += c;
        }
        if total > 0.0 {
            for job in &mut self.jobs {
                if let Some(c) = per_user.get(job.user.as_str()) {
                    job.usage_score += c / total;
                }
            }
        }
        let usage = self.user_usage();
        let sum: f64 = usage.values().sum();
        if sum > 0.0 {
            for job in &mut self.jobs {
                job.usage_score /= sum;
            }
        }
    }

    /// Mean usage score of each user's pending jobs.
    pub fn user_usage(&self) -> BTreeMap<String, f64> {
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for j in &self.jobs {
            let e = acc.entry(j.user.clone()).or_default();
            e.0 += j.usage_score;
            e.1 += 1;
        }
        acc.into_iter().map(|(u, (s, n))| (u, s / n as f64)).collect()
    }
}

/// Default usage cost of a batch entry: its total gate count.
pub fn gate_count_cost(e: &BatchEntry) -> f64 {
    e.job.circuit.len() as f64
}
