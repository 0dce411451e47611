//! Coupling graphs, calibration data, the qubit quality metric and
//! connected-allocation analysis.
//!
//! Qubit subsets (allocations) are plain sorted `Vec<usize>`; their natural
//! `Ord` is the lexicographic order used for every tie-break below.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Undirected physical-qubit adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingGraph {
    num_qubits: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl CouplingGraph {
    pub fn new(num_qubits: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut norm = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Argument(format!("self-loop on qubit {a}")));
            }
            if a >= num_qubits || b >= num_qubits {
                return Err(Error::Argument(format!(
                    "edge ({a}, {b}) out of range for {num_qubits} qubits"
                )));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        let mut adjacency = vec![Vec::new(); num_qubits];
        for &(a, b) in &norm {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for n in &mut adjacency {
            n.sort_unstable();
        }
        Ok(CouplingGraph {
            num_qubits,
            edges: norm,
            adjacency,
        })
    }

    /// 5-qubit T topology: 0–1, 1–2, 1–3, 3–4.
    pub fn line5() -> Self {
        CouplingGraph::new(5, [(0, 1), (1, 2), (1, 3), (3, 4)]).expect("preset")
    }

    /// `rows` × `cols` grid, qubit `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let q = r * cols + c;
                if c + 1 < cols {
                    edges.push((q, q + 1));
                }
                if r + 1 < rows {
                    edges.push((q, q + cols));
                }
            }
        }
        CouplingGraph::new(rows * cols, edges).expect("grid")
    }

    /// 4 × 5 grid standing in for a 20-qubit device.
    pub fn grid20() -> Self {
        Self::grid(4, 5)
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "line5" => Some(Self::line5()),
            "grid20" => Some(Self::grid20()),
            _ => None,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.num_qubits && self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn degree(&self, q: usize) -> Result<usize> {
        self.check_qubit(q)?;
        Ok(self.adjacency[q].len())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::Argument(format!(
                "qubit {q} out of range for {} qubits",
                self.num_qubits
            )));
        }
        Ok(())
    }

    fn check_subset(&self, subset: &[usize]) -> Result<()> {
        if subset.is_empty() {
            return Err(Error::Argument("empty qubit subset".into()));
        }
        subset.iter().try_for_each(|&q| self.check_qubit(q))
    }

    /// Number of neighbors of `q` that lie inside `subset`.
    pub fn induced_degree(&self, q: usize, subset: &[usize]) -> usize {
        self.adjacency[q].iter().filter(|n| subset.contains(n)).count()
    }

    /// True iff the subgraph induced by `subset` is connected.
    pub fn is_connected_subset(&self, subset: &[usize]) -> Result<bool> {
        self.check_subset(subset)?;
        let mut member = vec![false; self.num_qubits];
        for &q in subset {
            member[q] = true;
        }
        let mut seen = vec![false; self.num_qubits];
        let mut queue = VecDeque::from([subset[0]]);
        seen[subset[0]] = true;
        let mut reached = 1;
        while let Some(q) = queue.pop_front() {
            for &n in &self.adjacency[q] {
                if member[n] && !seen[n] {
                    seen[n] = true;
                    reached += 1;
                    queue.push_back(n);
                }
            }
        }
        let distinct = {
            let mut s = subset.to_vec();
            s.sort_unstable();
            s.dedup();
            s.len()
        };
        Ok(reached == distinct)
    }

    /// Edge count of the induced subgraph.
    pub fn allocation_density(&self, subset: &[usize]) -> usize {
        self.edges
            .iter()
            .filter(|(a, b)| subset.contains(a) && subset.contains(b))
            .count()
    }

    /// Induced edges of `subset`.
    pub fn induced_edges(&self, subset: &[usize]) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .filter(|(a, b)| subset.contains(a) && subset.contains(b))
            .collect()
    }

    /// All-pairs hop distances inside the subgraph induced by `subset`,
    /// indexed by physical qubit; `None` where unreachable.
    pub fn induced_distances(&self, subset: &[usize]) -> Vec<Vec<Option<usize>>> {
        let n = self.num_qubits;
        let mut member = vec![false; n];
        for &q in subset {
            member[q] = true;
        }
        let mut dist = vec![vec![None; n]; n];
        for &s in subset {
            dist[s][s] = Some(0);
            let mut queue = VecDeque::from([s]);
            while let Some(q) = queue.pop_front() {
                let d = dist[s][q].expect("visited");
                for &nb in &self.adjacency[q] {
                    if member[nb] && dist[s][nb].is_none() {
                        dist[s][nb] = Some(d + 1);
                        queue.push_back(nb);
                    }
                }
            }
        }
        dist
    }

    /// Every size-`k` subset of `available` whose induced subgraph is connected,
    /// in lexicographic order.
    pub fn enumerate_connected_allocations(&self, k: usize, available: &[usize]) -> Vec<Vec<usize>> {
        self.enumerate_connected_allocations_capped(k, available, usize::MAX)
            .unwrap_or_default()
    }

    /// As [`Self::enumerate_connected_allocations`], but gives up with `None`
    /// once more than `cap` subsets have been found.
    pub fn enumerate_connected_allocations_capped(
        &self,
        k: usize,
        available: &[usize],
        cap: usize,
    ) -> Option<Vec<Vec<usize>>> {
        let mut avail = available.to_vec();
        avail.sort_unstable();
        avail.dedup();
        if k == 0 || k > avail.len() {
            return Some(Vec::new());
        }
        let mut member = vec![false; self.num_qubits];
        for &q in &avail {
            member[q] = true;
        }
        let mut out = Vec::new();
        let mut esu = Esu {
            graph: self,
            member: &member,
            k,
            cap,
            out: &mut out,
            overflow: false,
        };
        for &root in &avail {
            let ext: Vec<usize> = self.adjacency[root]
                .iter()
                .copied()
                .filter(|&u| member[u] && u > root)
                .collect();
            esu.extend(&mut vec![root], ext, root);
            if esu.overflow {
                return None;
            }
        }
        for s in &mut out {
            s.sort_unstable();
        }
        out.sort();
        Some(out)
    }
}

/// Wernicke's ESU: visits each connected induced subgraph exactly once, rooted
/// at its smallest vertex.
struct Esu<'a> {
    graph: &'a CouplingGraph,
    member: &'a [bool],
    k: usize,
    cap: usize,
    out: &'a mut Vec<Vec<usize>>,
    overflow: bool,
}

impl Esu<'_> {
    fn extend(&mut self, sub: &mut Vec<usize>, mut ext: Vec<usize>, root: usize) {
        if self.overflow {
            return;
        }
        if sub.len() == self.k {
            if self.out.len() >= self.cap {
                self.overflow = true;
                return;
            }
            self.out.push(sub.clone());
            return;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in self.graph.neighbors(w) {
                if !self.member[u] || u <= root || sub.contains(&u) || next.contains(&u) {
                    continue;
                }
                // exclusive neighbourhood: not adjacent to anything already in `sub`
                if sub.iter().any(|&s| self.graph.has_edge(s, u)) {
                    continue;
                }
                next.push(u);
            }
            sub.push(w);
            self.extend(sub, next, root);
            sub.pop();
            if self.overflow {
                return;
            }
        }
    }
}

/// Per-edge connection error and per-qubit readout error.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration<T: Real> {
    connection_error: BTreeMap<(usize, usize), T>,
    readout_error: Vec<T>,
}

impl<T: Real> Calibration<T> {
    pub fn new(
        graph: &CouplingGraph,
        connection_error: BTreeMap<(usize, usize), T>,
        readout_error: Vec<T>,
    ) -> Result<Self> {
        let unit = |x: T| x >= T::zero() && x <= T::one();
        if readout_error.len() != graph.num_qubits() {
            return Err(Error::Argument(format!(
                "readout_error has {} entries for {} qubits",
                readout_error.len(),
                graph.num_qubits()
            )));
        }
        if let Some((q, _)) = readout_error.iter().enumerate().find(|(_, &x)| !unit(x)) {
            return Err(Error::Argument(format!("readout_error[{q}] outside [0, 1]")));
        }
        let mut ce = BTreeMap::new();
        for ((a, b), x) in connection_error {
            if !unit(x) {
                return Err(Error::Argument(format!("connection_error {a}-{b} outside [0, 1]")));
            }
            ce.insert((a.min(b), a.max(b)), x);
        }
        if let Some(e) = graph.edges().iter().find(|e| !ce.contains_key(e)) {
            return Err(Error::Argument(format!(
                "edge {}-{} has no connection_error",
                e.0, e.1
            )));
        }
        Ok(Calibration {
            connection_error: ce,
            readout_error,
        })
    }

    /// Same error on every edge and every qubit.
    pub fn uniform(graph: &CouplingGraph, ce: T, re: T) -> Self {
        Calibration {
            connection_error: graph.edges().iter().map(|&e| (e, ce)).collect(),
            readout_error: vec![re; graph.num_qubits()],
        }
    }

    /// Seeded synthetic calibration: CE ~ U[0.005, 0.05], RE ~ U[0.01, 0.05].
    pub fn synthetic(graph: &CouplingGraph, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let connection_error = graph
            .edges()
            .iter()
            .map(|&e| (e, T::of(rng.gen_range(0.005..0.05))))
            .collect();
        let readout_error = (0..graph.num_qubits())
            .map(|_| T::of(rng.gen_range(0.01..0.05)))
            .collect();
        Calibration {
            connection_error,
            readout_error,
        }
    }

    pub fn connection_error(&self, a: usize, b: usize) -> Option<T> {
        self.connection_error.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn readout_error(&self, q: usize) -> Option<T> {
        self.readout_error.get(q).copied()
    }

    /// Per-qubit connection error aggregated over incident edges (0 when isolated).
    pub fn qubit_connection_error(&self, graph: &CouplingGraph, q: usize, agg: CeAggregation) -> T {
        let errs: Vec<T> = graph
            .neighbors(q)
            .iter()
            .filter_map(|&n| self.connection_error(q, n))
            .collect();
        if errs.is_empty() {
            return T::zero();
        }
        match agg {
            CeAggregation::Mean => errs.iter().copied().sum::<T>() / T::of_usize(errs.len()),
            CeAggregation::Max => errs.iter().copied().fold(T::zero(), T::max),
        }
    }

    /// Mean connection error over the edges induced by `subset` (0 if none).
    pub fn mean_induced_error(&self, graph: &CouplingGraph, subset: &[usize]) -> T {
        let errs: Vec<T> = graph
            .induced_edges(subset)
            .into_iter()
            .filter_map(|(a, b)| self.connection_error(a, b))
            .collect();
        if errs.is_empty() {
            T::zero()
        } else {
            errs.iter().copied().sum::<T>() / T::of_usize(errs.len())
        }
    }
}

/// How an edge property (CE) is reduced to a per-qubit value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CeAggregation {
    #[default]
    Mean,
    Max,
}

/// Weights of the quality metric `Q = w1/DC + w2·CE + w3·RE`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct QualityWeights<T: Real> {
    pub w1: T,
    pub w2: T,
    pub w3: T,
    #[serde(default)]
    pub ce_aggregation: CeAggregation,
}

impl<T: Real> QualityWeights<T> {
    pub fn new(w1: T, w2: T, w3: T) -> Result<Self> {
        if [w1, w2, w3].iter().any(|w| !(*w >= T::zero())) {
            return Err(Error::Argument("quality weights must be non-negative".into()));
        }
        Ok(QualityWeights {
            w1,
            w2,
            w3,
            ce_aggregation: CeAggregation::Mean,
        })
    }
}

impl<T: Real> Default for QualityWeights<T> {
    fn default() -> Self {
        QualityWeights {
            w1: T::one(),
            w2: T::one(),
            w3: T::one(),
            ce_aggregation: CeAggregation::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankDirection {
    #[default]
    Ascending,
    Descending,
}

pub fn qubit_quality<T: Real>(
    graph: &CouplingGraph,
    cal: &Calibration<T>,
    q: usize,
    w: &QualityWeights<T>,
) -> Result<T> {
    let dc = graph.degree(q)?;
    let inverse_degree = if w.w1 > T::zero() {
        if dc == 0 {
            return Err(Error::UndefinedInverseDegree(q));
        }
        w.w1 / T::of_usize(dc)
    } else {
        T::zero()
    };
    let ce = cal.qubit_connection_error(graph, q, w.ce_aggregation);
    let re = cal
        .readout_error(q)
        .ok_or_else(|| Error::Argument(format!("no readout error for qubit {q}")))?;
    Ok(inverse_degree + ce * w.w2 + re * w.w3)
}

/// Qubits sorted by Q in `direction`, ties broken by the smaller index.
pub fn rank_qubits_by_quality<T: Real>(
    graph: &CouplingGraph,
    cal: &Calibration<T>,
    w: &QualityWeights<T>,
    direction: RankDirection,
) -> Result<Vec<usize>> {
    let mut scored = (0..graph.num_qubits())
        .map(|q| qubit_quality(graph, cal, q, w).map(|s| (q, s)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|(qa, a), (qb, b)| {
        let ord = a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal);
        let ord = match direction {
            RankDirection::Ascending => ord,
            RankDirection::Descending => ord.reverse(),
        };
        ord.then(qa.cmp(qb))
    });
    Ok(scored.into_iter().map(|(q, _)| q).collect())
}

/// A coupling graph with its calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct Device<T: Real> {
    pub graph: CouplingGraph,
    pub calibration: Calibration<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct DeviceFile<T: Real> {
    num_qubits: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    connection_error: Option<BTreeMap<String, T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    readout_error: Option<Vec<T>>,
}

impl<T: Real> Device<T> {
    /// Preset graph with seeded synthetic calibration.
    pub fn preset(name: &str, calibration_seed: u64) -> Option<Self> {
        let graph = CouplingGraph::preset(name)?;
        let calibration = Calibration::synthetic(&graph, calibration_seed);
        Some(Device { graph, calibration })
    }

    /// Parses the coupling-map JSON; missing calibration fields are synthesized
    /// from `calibration_seed`.
    pub fn from_json(text: &str, calibration_seed: u64) -> Result<Self> {
        let file: DeviceFile<T> = serde_json::from_str(text)?;
        let graph = CouplingGraph::new(file.num_qubits, file.edges.iter().map(|e| (e[0], e[1])))?;
        let synthetic = Calibration::<T>::synthetic(&graph, calibration_seed);
        let connection_error = match file.connection_error {
            Some(map) => {
                let mut parsed = BTreeMap::new();
                for (key, x) in map {
                    let (a, b) = key
                        .split_once('-')
                        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                        .ok_or_else(|| Error::Argument(format!("bad edge key {key:?}")))?;
                    parsed.insert((a, b), x);
                }
                parsed
            }
            None => synthetic.connection_error.clone(),
        };
        let readout_error = file.readout_error.unwrap_or(synthetic.readout_error);
        let calibration = Calibration::new(&graph, connection_error, readout_error)?;
        Ok(Device { graph, calibration })
    }

    pub fn to_json(&self) -> Result<String> {
        let file = DeviceFile {
            num_qubits: self.graph.num_qubits(),
            edges: self.graph.edges().iter().map(|&(a, b)| [a, b]).collect(),
            connection_error: Some(
                self.calibration
                    .connection_error
                    .iter()
                    .map(|(&(a, b), &x)| (format!("{a}-{b}"), x))
                    .collect(),
            ),
            readout_error: Some(self.calibration.readout_error.clone()),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Resolves a preset name or a path to a coupling-map file.
    pub fn load(spec: &str, calibration_seed: u64) -> Result<Self> {
        if let Some(d) = Self::preset(spec, calibration_seed) {
            return Ok(d);
        }
        let path = Path::new(spec);
        if !path.exists() {
            return Err(Error::Argument(format!(
                "{spec:?} is neither a preset (line5, grid20) nor a file"
            )));
        }
        Self::from_json(&std::fs::read_to_string(path)?, calibration_seed)
    }
}
