//! Logical circuits: gates, accounting, seeded random benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Labels drawn for one-qubit gates in random benchmarks.
pub const ONE_QUBIT_LABELS: [&str; 6] = ["h", "x", "y", "z", "s", "t"];

/// A gate over logical (or, after routing, physical) qubit indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GateRepr", into = "GateRepr")]
pub enum Gate {
    OneQubit { label: String, qubit: usize },
    Cnot { control: usize, target: usize },
    Swap(usize, usize),
}

impl Gate {
    pub fn one(label: impl Into<String>, qubit: usize) -> Self {
        Gate::OneQubit {
            label: label.into(),
            qubit,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Gate::Swap(a, b)
    }

    pub fn operands(&self) -> Vec<usize> {
        match *self {
            Gate::OneQubit { qubit, .. } => vec![qubit],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Swap(a, b) => vec![a, b],
        }
    }

    /// Operand pair of a two-qubit gate.
    pub fn pair(&self) -> Option<(usize, usize)> {
        match *self {
            Gate::OneQubit { .. } => None,
            Gate::Cnot { control, target } => Some((control, target)),
            Gate::Swap(a, b) => Some((a, b)),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.pair().is_some()
    }

    /// Same gate with every operand passed through `f`.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        match self {
            Gate::OneQubit { label, qubit } => Gate::OneQubit {
                label: label.clone(),
                qubit: f(*qubit),
            },
            Gate::Cnot { control, target } => Gate::Cnot {
                control: f(*control),
                target: f(*target),
            },
            Gate::Swap(a, b) => Gate::Swap(f(*a), f(*b)),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GateRepr {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    operands: Vec<usize>,
}

impl TryFrom<GateRepr> for Gate {
    type Error = String;

    fn try_from(r: GateRepr) -> std::result::Result<Self, String> {
        let distinct_pair = |ops: &[usize]| match ops {
            [a, b] if a != b => Ok((*a, *b)),
            _ => Err(format!(
                "{} needs exactly two distinct operands, got {:?}",
                r.kind, ops
            )),
        };
        match r.kind.as_str() {
            "one_qubit" => match r.operands.as_slice() {
                [q] => Ok(Gate::OneQubit {
                    label: r.label.clone().unwrap_or_else(|| "u".to_string()),
                    qubit: *q,
                }),
                ops => Err(format!("one_qubit needs one operand, got {ops:?}")),
            },
            "cnot" => distinct_pair(&r.operands).map(|(a, b)| Gate::cnot(a, b)),
            "swap" => distinct_pair(&r.operands).map(|(a, b)| Gate::swap(a, b)),
            other => Err(format!("unknown gate kind {other:?}")),
        }
    }
}

impl From<Gate> for GateRepr {
    fn from(g: Gate) -> Self {
        let operands = g.operands();
        match g {
            Gate::OneQubit { label, .. } => GateRepr {
                kind: "one_qubit".into(),
                label: Some(label),
                operands,
            },
            Gate::Cnot { .. } => GateRepr {
                kind: "cnot".into(),
                label: None,
                operands,
            },
            Gate::Swap(..) => GateRepr {
                kind: "swap".into(),
                label: None,
                operands,
            },
        }
    }
}

/// Ordered gate list over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "CircuitRepr")]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

#[derive(Deserialize)]
struct CircuitRepr {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl TryFrom<CircuitRepr> for Circuit {
    type Error = Error;

    fn try_from(r: CircuitRepr) -> Result<Self> {
        Circuit::new(r.num_qubits, r.gates)
    }
}

/// Gate counts and ASAP depth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateStats {
    pub total: usize,
    pub two_qubit: usize,
    pub cnot: usize,
    pub swap: usize,
    pub depth: usize,
}

impl Circuit {
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            if let Some((a, b)) = g.pair() {
                if a == b {
                    return Err(Error::Argument(format!(
                        "two-qubit gate on repeated operand {a}"
                    )));
                }
            }
            if let Some(&q) = g.operands().iter().find(|&&q| q >= num_qubits) {
                return Err(Error::Argument(format!(
                    "operand {q} out of range for {num_qubits} qubits"
                )));
            }
        }
        Ok(Circuit { num_qubits, gates })
    }

    pub fn empty(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let probe = Circuit::new(self.num_qubits, vec![gate])?;
        self.gates.extend(probe.gates);
        Ok(())
    }

    /// Greedy ASAP layering: each gate lands one layer past the busiest of its operands.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.num_qubits];
        let mut depth = 0;
        for g in &self.gates {
            let ops = g.operands();
            let layer = ops.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
            for q in ops {
                level[q] = layer;
            }
            depth = depth.max(layer);
        }
        depth
    }

    pub fn stats(&self) -> GateStats {
        let mut s = GateStats {
            total: self.gates.len(),
            depth: self.depth(),
            ..GateStats::default()
        };
        for g in &self.gates {
            match g {
                Gate::Cnot { .. } => s.cnot += 1,
                Gate::Swap(..) => s.swap += 1,
                Gate::OneQubit { .. } => {}
            }
        }
        s.two_qubit = s.cnot + s.swap;
        s
    }

    /// Ratio of two-qubit gates to total gates.
    pub fn priority_metric(&self) -> Result<f64> {
        if self.gates.is_empty() {
            return Err(Error::EmptyProgram);
        }
        let s = self.stats();
        Ok(s.two_qubit as f64 / s.total as f64)
    }

    /// Every SWAP becomes CNOT(a,b) CNOT(b,a) CNOT(a,b).
    pub fn decompose_swaps(&self) -> Circuit {
        let mut gates = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            match *g {
                Gate::Swap(a, b) => {
                    gates.push(Gate::cnot(a, b));
                    gates.push(Gate::cnot(b, a));
                    gates.push(Gate::cnot(a, b));
                }
                _ => gates.push(g.clone()),
            }
        }
        Circuit {
            num_qubits: self.num_qubits,
            gates,
        }
    }

    /// Number of two-qubit gates touching each qubit.
    pub fn interaction_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_qubits];
        for (a, b) in self.gates.iter().filter_map(Gate::pair) {
            counts[a] += 1;
            counts[b] += 1;
        }
        counts
    }

    /// Seeded random benchmark: each gate is a CNOT on a uniform distinct pair
    /// with probability `two_qubit_fraction`, else a one-qubit gate on a uniform qubit.
    pub fn random(
        num_qubits: usize,
        num_gates: usize,
        two_qubit_fraction: f64,
        seed: u64,
    ) -> Result<Circuit> {
        if num_qubits == 0 {
            return Err(Error::Argument("num_qubits must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&two_qubit_fraction) {
            return Err(Error::Argument(format!(
                "two_qubit_fraction {two_qubit_fraction} outside [0, 1]"
            )));
        }
        if two_qubit_fraction > 0.0 && num_qubits < 2 {
            return Err(Error::Argument(
                "two-qubit gates need at least 2 qubits".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gates = Vec::with_capacity(num_gates);
        for _ in 0..num_gates {
            if two_qubit_fraction > 0.0 && rng.gen_bool(two_qubit_fraction) {
                let a = rng.gen_range(0..num_qubits);
                let mut b = rng.gen_range(0..num_qubits - 1);
                if b >= a {
                    b += 1;
                }
                gates.push(Gate::cnot(a, b));
            } else {
                let label = ONE_QUBIT_LABELS.choose(&mut rng).expect("labels");
                gates.push(Gate::one(*label, rng.gen_range(0..num_qubits)));
            }
        }
        Ok(Circuit { num_qubits, gates })
    }

    /// Random circuit grown until its ASAP depth reaches `target_depth`.
    pub fn random_with_depth(
        num_qubits: usize,
        target_depth: usize,
        two_qubit_fraction: f64,
        seed: u64,
    ) -> Result<Circuit> {
        // Over-generate then cut at the first prefix that reaches the target depth.
        let budget = (target_depth.max(1)) * num_qubits.max(1) * 2 + 8;
        let full = Circuit::random(num_qubits, budget, two_qubit_fraction, seed)?;
        let mut level = vec![0usize; num_qubits];
        let mut gates = Vec::new();
        for g in full.gates {
            if level.iter().copied().max().unwrap_or(0) >= target_depth {
                break;
            }
            let ops = g.operands();
            let layer = ops.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
            for q in ops {
                level[q] = layer;
            }
            gates.push(g);
        }
        Ok(Circuit { num_qubits, gates })
    }
}
