use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Layout, RoutingResult};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::hardware::CouplingGraph;

/// Tunables of the front-layer heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouterConfig {
    /// Two-qubit gates beyond the front layer that contribute to a swap's score.
    pub lookahead: usize,
    /// Consecutive swaps without executing a gate before the router falls back to
    /// walking the oldest blocked gate along a shortest path.
    pub stall_limit: usize,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            lookahead: 20,
            stall_limit: 30,
        }
    }
}

/// Routes `c` on `allocation` starting from `layout` with the default configuration.
pub fn route(
    c: &Circuit,
    g: &CouplingGraph,
    allocation: &[usize],
    layout: &Layout,
    seed: u64,
) -> Result<RoutingResult> {
    route_with(c, g, allocation, layout, seed, RouterConfig::default())
}

pub fn route_with(
    c: &Circuit,
    g: &CouplingGraph,
    allocation: &[usize],
    layout: &Layout,
    seed: u64,
    config: RouterConfig,
) -> Result<RoutingResult> {
    if layout.len() != c.num_qubits() {
        return Err(Error::Argument(format!(
            "layout covers {} qubits, circuit has {}",
            layout.len(),
            c.num_qubits()
        )));
    }
    let layout = Layout::new(layout.as_slice().to_vec(), allocation)?;
    if allocation.iter().any(|&p| p >= g.num_qubits()) {
        return Err(Error::Argument("allocation outside the coupling graph".into()));
    }
    if !allocation.is_empty() && !g.is_connected_subset(allocation)? {
        return Err(Error::RoutingInfeasible(format!(
            "allocation {allocation:?} is not connected"
        )));
    }
    let mut state = Router::new(c, g, allocation, &layout, seed, config);
    state.run();
    let routed = Circuit::new(g.num_qubits(), state.out)?;
    let cnot_after_decomposition = routed.decompose_swaps().stats().cnot;
    let depth_after = routed.depth();
    Ok(RoutingResult {
        routed,
        initial_layout: layout,
        final_layout: Layout::new(state.l2p, allocation)?,
        swaps_inserted: state.swaps,
        cnot_after_decomposition,
        depth_after,
    })
}

struct Router<'a> {
    gates: &'a [Gate],
    graph: &'a CouplingGraph,
    dist: Vec<Vec<usize>>,
    alloc_edges: Vec<(usize, usize)>,
    successors: Vec<Vec<usize>>,
    pending_preds: Vec<usize>,
    executed: Vec<bool>,
    front: Vec<usize>,
    l2p: Vec<usize>,
    p2l: Vec<Option<usize>>,
    out: Vec<Gate>,
    swaps: usize,
    last_swap: Option<(usize, usize)>,
    rng: ChaCha8Rng,
    config: RouterConfig,
    /// First gate index that may still be unexecuted.
    cursor: usize,
}

impl<'a> Router<'a> {
    fn new(
        c: &'a Circuit,
        g: &'a CouplingGraph,
        allocation: &[usize],
        layout: &Layout,
        seed: u64,
        config: RouterConfig,
    ) -> Self {
        let gates = c.gates();
        let mut successors = vec![Vec::new(); gates.len()];
        let mut pending_preds = vec![0; gates.len()];
        let mut last_on = vec![None::<usize>; c.num_qubits()];
        for (i, gate) in gates.iter().enumerate() {
            let mut preds: Vec<usize> = gate.operands().iter().filter_map(|&q| last_on[q]).collect();
            preds.dedup();
            for p in preds {
                successors[p].push(i);
                pending_preds[i] += 1;
            }
            for q in gate.operands() {
                last_on[q] = Some(i);
            }
        }
        let front = (0..gates.len()).filter(|&i| pending_preds[i] == 0).collect();
        let dist = g
            .induced_distances(allocation)
            .into_iter()
            .map(|row| row.into_iter().map(|d| d.unwrap_or(usize::MAX / 4)).collect())
            .collect();
        let mut p2l = vec![None; g.num_qubits()];
        for (l, &p) in layout.as_slice().iter().enumerate() {
            p2l[p] = Some(l);
        }
        Router {
            gates,
            graph: g,
            dist,
            alloc_edges: g.induced_edges(allocation),
            successors,
            pending_preds,
            executed: vec![false; gates.len()],
            front,
            l2p: layout.as_slice().to_vec(),
            p2l,
            out: Vec::with_capacity(gates.len()),
            swaps: 0,
            last_swap: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
            cursor: 0,
        }
    }

    fn run(&mut self) {
        let mut stalled = 0;
        loop {
            if self.execute_ready() {
                stalled = 0;
            }
            if self.front.is_empty() {
                return;
            }
            if stalled >= self.config.stall_limit {
                self.walk_oldest_blocked();
                stalled = 0;
                continue;
            }
            match self.choose_swap() {
                Some((a, b)) => {
                    self.apply_swap(a, b);
                    stalled += 1;
                }
                None => {
                    self.walk_oldest_blocked();
                    stalled = 0;
                }
            }
        }
    }

    fn physical_pair(&self, gate: usize) -> Option<(usize, usize)> {
        self.gates[gate]
            .pair()
            .map(|(a, b)| (self.l2p[a], self.l2p[b]))
    }

    fn executable(&self, gate: usize) -> bool {
        match self.physical_pair(gate) {
            None => true,
            Some((a, b)) => self.graph.has_edge(a, b),
        }
    }

    /// Executes every runnable front gate; returns whether anything ran.
    fn execute_ready(&mut self) -> bool {
        let mut progressed = false;
        loop {
            let Some(pos) = self.front.iter().position(|&i| self.executable(i)) else {
                return progressed;
            };
            let i = self.front.remove(pos);
            let l2p = &self.l2p;
            self.out.push(self.gates[i].remap(|q| l2p[q]));
            self.executed[i] = true;
            for k in 0..self.successors[i].len() {
                let s = self.successors[i][k];
                self.pending_preds[s] -= 1;
                if self.pending_preds[s] == 0 {
                    let at = self.front.partition_point(|&f| f < s);
                    self.front.insert(at, s);
                }
            }
            self.last_swap = None;
            progressed = true;
        }
    }

    fn lookahead_gates(&mut self) -> Vec<usize> {
        while self.cursor < self.executed.len() && self.executed[self.cursor] {
            self.cursor += 1;
        }
        (self.cursor..self.gates.len())
            .filter(|&i| {
                !self.executed[i] && self.gates[i].is_two_qubit() && !self.front.contains(&i)
            })
            .take(self.config.lookahead)
            .collect()
    }

    /// Score is the mean front-layer distance plus half the mean lookahead
    /// distance, scaled by `2·|front|·|lookahead|` so ties compare exactly.
    fn choose_swap(&mut self) -> Option<(usize, usize)> {
        let front_pairs: Vec<(usize, usize)> = self
            .front
            .iter()
            .filter_map(|&i| self.gates[i].pair())
            .collect();
        let ahead: Vec<(usize, usize)> = self
            .lookahead_gates()
            .into_iter()
            .filter_map(|i| self.gates[i].pair())
            .collect();
        let active: Vec<usize> = front_pairs
            .iter()
            .flat_map(|&(a, b)| [self.l2p[a], self.l2p[b]])
            .collect();
        let (nf, ne) = (front_pairs.len().max(1), ahead.len().max(1));
        let mut best = usize::MAX;
        let mut ties = Vec::new();
        for &(a, b) in &self.alloc_edges {
            if !active.contains(&a) && !active.contains(&b) {
                continue;
            }
            if self.last_swap == Some((a, b)) {
                continue;
            }
            let moved = |p: usize| {
                if p == a {
                    b
                } else if p == b {
                    a
                } else {
                    p
                }
            };
            let cost = |pairs: &[(usize, usize)]| -> usize {
                pairs
                    .iter()
                    .map(|&(x, y)| self.dist[moved(self.l2p[x])][moved(self.l2p[y])])
                    .sum()
            };
            let score = 2 * ne * cost(&front_pairs) + nf * cost(&ahead);
            if score < best {
                best = score;
                ties.clear();
            }
            if score == best {
                ties.push((a, b));
            }
        }
        ties.choose(&mut self.rng).copied()
    }

    fn apply_swap(&mut self, a: usize, b: usize) {
        self.out.push(Gate::swap(a, b));
        let (la, lb) = (self.p2l[a], self.p2l[b]);
        self.p2l[a] = lb;
        self.p2l[b] = la;
        if let Some(l) = la {
            self.l2p[l] = b;
        }
        if let Some(l) = lb {
            self.l2p[l] = a;
        }
        self.swaps += 1;
        self.last_swap = Some((a.min(b), a.max(b)));
    }

    /// Moves the first operand of the oldest blocked front gate along a shortest
    /// path until it is adjacent to the second.
    fn walk_oldest_blocked(&mut self) {
        let Some(&gate) = self.front.iter().find(|&&i| !self.executable(i)) else {
            return;
        };
        let (mut from, to) = self.physical_pair(gate).expect("blocked gates are two-qubit");
        while self.dist[from][to] > 1 {
            let next = *self
                .graph
                .neighbors(from)
                .iter()
                .filter(|&&n| self.dist[n][to] + 1 == self.dist[from][to])
                .min()
                .expect("connected allocation has a shortest path");
            self.apply_swap(from, next);
            from = next;
        }
    }
}
