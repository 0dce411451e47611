//! Seeded job logs with honest users and kitchen-sink attackers.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::{JobLog, JobRecord, Window};
use crate::adversary::generate_kitchen_sink_jobs;
use crate::error::{Error, Result};
use crate::hardware::CouplingGraph;
use crate::scheduler::{Job, Priority};

/// Hours of execution per unit of circuit depth.
const HOURS_PER_LAYER: f64 = 0.002;
const ATTACK_DEPTHS: [usize; 3] = [50, 100, 200];

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub log: JobLog,
    pub window: Window,
    /// `true` for attackers.
    pub labels: BTreeMap<String, bool>,
}

impl Corpus {
    pub fn attackers(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().filter(|(_, &a)| a).map(|(u, _)| u.as_str())
    }
}

pub fn normal_user_name(i: usize) -> String {
    format!("user-{i:03}")
}

pub fn attacker_name(i: usize) -> String {
    format!("attacker-{i:02}")
}

/// Queueing delay in hours by priority level.
fn wait(rng: &mut ChaCha8Rng, p: Priority) -> f64 {
    match p {
        Priority::High => rng.gen_range(0.0..0.5),
        Priority::Medium => rng.gen_range(0.25..1.5),
        Priority::Low => rng.gen_range(1.0..3.0),
    }
}

/// Connected set grown from a random qubit by random frontier picks.
fn random_region(g: &CouplingGraph, size: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut set = vec![rng.gen_range(0..g.num_qubits())];
    while set.len() < size {
        let mut frontier: Vec<usize> = set
            .iter()
            .flat_map(|&q| g.neighbors(q).iter().copied())
            .filter(|q| !set.contains(q))
            .collect();
        frontier.sort_unstable();
        frontier.dedup();
        match frontier.choose(rng) {
            Some(&q) => set.push(q),
            None => break,
        }
    }
    set.sort_unstable();
    set
}

/// Steady submitter: a few jobs a day on a jittered regular cadence, uniform
/// priorities, occasional explicit qubit requests.
fn normal_records(
    g: &CouplingGraph,
    user: &str,
    window: Window,
    rng: &mut ChaCha8Rng,
) -> Vec<JobRecord> {
    let rate = rng.gen_range(2.0..8.0);
    let spacing = 24.0 / rate;
    let phase = rng.gen_range(0.0..spacing);
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let t = window.start + phase + (k as f64 + rng.gen_range(-0.3..0.3)) * spacing;
        if t >= window.start + window.hours {
            break;
        }
        k += 1;
        if t < window.start {
            continue;
        }
        let priority = *Priority::ALL.choose(rng).expect("priorities");
        let runtime = rng.gen_range(0.1..1.0);
        let finish = t + wait(rng, priority) + runtime;
        let granted = random_region(g, rng.gen_range(2..=6), rng);
        let requested = rng.gen_bool(0.05).then(|| granted.clone());
        out.push(JobRecord {
            user: user.to_string(),
            job_id: format!("{user}-{}", out.len()),
            submit: t,
            finish,
            priority,
            requested,
            granted,
        });
    }
    out
}

/// Priority tier of flood job `index` out of `total` (emitted high, medium, low).
pub fn flood_tier(index: usize, total: usize) -> Priority {
    let per = total.div_ceil(3).max(1);
    Priority::ALL[(index / per).min(2)]
}

/// Log records for `jobs` resubmitted as a burst at each of `bursts` (hours).
pub fn flood_records(user: &str, jobs: &[Job], bursts: &[f64], rng: &mut ChaCha8Rng) -> Vec<JobRecord> {
    let mut out = Vec::new();
    for &b in bursts {
        for (i, job) in jobs.iter().enumerate() {
            let t = b + rng.gen_range(0.0..0.05);
            let priority = flood_tier(i, jobs.len());
            let runtime = job.circuit.depth() as f64 * HOURS_PER_LAYER;
            let qubits = job.requested_qubits.clone().unwrap_or_default();
            out.push(JobRecord {
                user: user.to_string(),
                job_id: format!("{user}-{}", out.len()),
                submit: t,
                finish: t + rng.gen_range(0.0..0.2) + runtime,
                priority,
                requested: Some(qubits.clone()),
                granted: qubits,
            });
        }
    }
    out
}

/// Kitchen-sink attacker: one to three floods a day, each a fresh set of
/// tiered jobs requesting a random adjacent pair.
fn attacker_records(
    g: &CouplingGraph,
    user: &str,
    window: Window,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<JobRecord>> {
    let days = (window.hours / 24.0).ceil().max(1.0) as usize;
    let &(a, b) = g
        .edges()
        .choose(rng)
        .ok_or_else(|| Error::Argument("coupling graph has no edges".into()))?;
    let mut out = Vec::new();
    for d in 0..days {
        for _ in 0..rng.gen_range(1..=3) {
            let tiers = rng.gen_range(2..=4);
            let jobs = generate_kitchen_sink_jobs(g, &[a, b], tiers, &ATTACK_DEPTHS, rng.gen())?;
            let t = window.start + (d as f64 * 24.0 + rng.gen_range(0.0..23.0)).min(window.hours - 1.0);
            let mut recs = flood_records(user, &jobs, &[t], rng);
            for r in &mut recs {
                r.job_id = format!("{user}-{}", out.len());
                out.push(r.clone());
            }
        }
    }
    out.sort_by(|x, y| x.submit.total_cmp(&y.submit));
    Ok(out)
}

/// `normal` honest users and `attackers` flooders over `days` days.
pub fn generate(
    g: &CouplingGraph,
    normal: usize,
    attackers: usize,
    days: f64,
    seed: u64,
) -> Result<Corpus> {
    if !(days > 0.0) {
        return Err(Error::Argument("window must be positive".into()));
    }
    let window = Window::days(0.0, days);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut labels = BTreeMap::new();
    for i in 0..normal {
        let u = normal_user_name(i);
        records.extend(normal_records(g, &u, window, &mut rng));
        labels.insert(u, false);
    }
    for i in 0..attackers {
        let u = attacker_name(i);
        records.extend(attacker_records(g, &u, window, &mut rng)?);
        labels.insert(u, true);
    }
    records.sort_by(|a, b| a.submit.total_cmp(&b.submit).then(a.user.cmp(&b.user)));
    Ok(Corpus {
        log: JobLog { records },
        window,
        labels,
    })
}
