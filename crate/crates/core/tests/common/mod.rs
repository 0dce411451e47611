//! Brute-force state-vector simulation and shared corpus builders.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swapsim::{Circuit, CouplingGraph, Gate, RoutingResult};

fn one_qubit_matrix(label: &str) -> [[C; 2]; 2] {
    let z = C::new(0.0, 0.0);
    let o = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match label {
        "h" => [[C::new(r, 0.0), C::new(r, 0.0)], [C::new(r, 0.0), C::new(-r, 0.0)]],
        "x" => [[z, o], [o, z]],
        "y" => [[z, -i], [i, z]],
        "z" => [[o, z], [z, -o]],
        "s" => [[o, z], [z, i]],
        "t" => [[o, z], [z, C::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
        other => panic!("no matrix for {other}"),
    }
}

/// Applies `c` to a `2^n` amplitude vector; qubit `q` is bit `q` of the index.
pub fn apply(c: &Circuit, state: &mut [C]) {
    for g in c.gates() {
        match g {
            Gate::OneQubit { label, qubit } => {
                let m = one_qubit_matrix(label);
                let bit = 1 << qubit;
                for idx in 0..state.len() {
                    if idx & bit == 0 {
                        let (a, b) = (state[idx], state[idx | bit]);
                        state[idx] = m[0][0] * a + m[0][1] * b;
                        state[idx | bit] = m[1][0] * a + m[1][1] * b;
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let (cb, tb) = (1 << control, 1 << target);
                for idx in 0..state.len() {
                    if idx & cb != 0 && idx & tb == 0 {
                        state.swap(idx, idx | tb);
                    }
                }
            }
            Gate::Swap(a, b) => {
                let (ab, bb) = (1 << a, 1 << b);
                for idx in 0..state.len() {
                    if idx & ab != 0 && idx & bb == 0 {
                        state.swap(idx, (idx & !ab) | bb);
                    }
                }
            }
        }
    }
}

fn embed(logical: &[C], layout: &[usize], physical_qubits: usize) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); 1 << physical_qubits];
    for (idx, &amp) in logical.iter().enumerate() {
        let mut p = 0;
        for (l, &phys) in layout.iter().enumerate() {
            if idx >> l & 1 == 1 {
                p |= 1 << phys;
            }
        }
        out[p] = amp;
    }
    out
}

/// True if the routed circuit maps every logical basis state exactly as the
/// original does, read out through the final layout; ancillas start in |0⟩.
pub fn equivalent(original: &Circuit, r: &RoutingResult, physical_qubits: usize) -> bool {
    let n = original.num_qubits();
    for basis in 0..1usize << n {
        let mut logical = vec![C::new(0.0, 0.0); 1 << n];
        logical[basis] = C::new(1.0, 0.0);
        let mut phys = embed(&logical, r.initial_layout.as_slice(), physical_qubits);
        apply(original, &mut logical);
        apply(&r.routed, &mut phys);
        let expected = embed(&logical, r.final_layout.as_slice(), physical_qubits);
        if phys.iter().zip(&expected).any(|(a, b)| (a - b).norm() > 1e-9) {
            return false;
        }
    }
    true
}

/// Every two-qubit gate of `routed` sits on a coupling edge.
pub fn legal(routed: &Circuit, g: &CouplingGraph) -> bool {
    routed.gates().iter().filter_map(|x| x.pair()).all(|(a, b)| g.has_edge(a, b))
}

/// One instance of the small routing corpus.
pub struct Instance {
    pub circuit: Circuit,
    pub allocation: Vec<usize>,
    pub seed: u64,
}

/// Seeded circuits of at most 4 qubits and 20 gates on line5, alternating
/// between the whole chip and each connected 4-qubit subgraph.
pub fn small_corpus(count: usize) -> Vec<Instance> {
    let g = CouplingGraph::line5();
    let mut allocations = vec![(0..5).collect::<Vec<usize>>()];
    allocations.extend(g.enumerate_connected_allocations(4, &(0..5).collect::<Vec<_>>()));
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(1..=4);
            let gates = rng.gen_range(0..=20);
            let frac = if n < 2 { 0.0 } else { rng.gen_range(0.3..=1.0) };
            Instance {
                circuit: Circuit::random(n, gates, frac, i as u64).unwrap(),
                allocation: allocations[i % allocations.len()].clone(),
                seed: i as u64,
            }
        })
        .collect()
}

/// Random queue of 1..=12 jobs sized to fit `g`: mixed users, usage scores,
/// occasional explicit requests and solo jobs.
pub fn random_queue(g: &CouplingGraph, seed: u64) -> swapsim::FairShareQueue {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.num_qubits();
    let all: Vec<usize> = (0..n).collect();
    let jobs = (0..rng.gen_range(1..=12))
        .map(|i| {
            let k = rng.gen_range(1..=n.min(6));
            let frac = if k < 2 { 0.0 } else { 0.5 };
            let c = Circuit::random(k, rng.gen_range(1..=60), frac, rng.gen()).unwrap();
            let user = format!("u{}", rng.gen_range(0..4));
            let usage = (rng.gen_range(0..5) as f64) / 4.0;
            let mut job = swapsim::Job::new(format!("j{i}"), user, c, usage, i as u64).unwrap();
            if rng.gen_bool(0.2) {
                let options = g.enumerate_connected_allocations(k, &all);
                if let Some(r) = options.choose(&mut rng) {
                    job = job.with_request(r.clone()).unwrap();
                }
            }
            job.solo = rng.gen_bool(0.05);
            job
        })
        .collect();
    swapsim::FairShareQueue::new(jobs).unwrap()
}

/// Runs the queue dry, returning every batch; panics if it stalls.
pub fn drain(
    q: &mut swapsim::FairShareQueue,
    g: &CouplingGraph,
    cal: Option<&swapsim::Calibration>,
) -> Vec<swapsim::Batch> {
    let mut out = Vec::new();
    while !q.is_empty() {
        let b = q.select_batch(g, cal, &swapsim::SchedulerConfig::default());
        assert!(!b.is_empty(), "queue stalled with {} jobs", q.len());
        out.push(b);
    }
    out
}
