//! Mapping logical circuits onto an allocated set of physical qubits.
//!
//! [`route`] is a SABRE-style front-layer heuristic; [`optimal_route`] is an
//! exhaustive breadth-first oracle for small instances. Both only ever swap
//! along edges internal to the allocation, so a routed circuit never touches
//! another tenant's qubits.

mod optimal;
mod sabre;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::hardware::CouplingGraph;
use crate::scalar::Real;

pub use optimal::{optimal_route, ORACLE_MAX_ALLOCATION, ORACLE_MAX_LOGICAL};
pub use sabre::{route, route_with, RouterConfig};

/// Injective logical → physical assignment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    logical_to_physical: Vec<usize>,
}

impl Layout {
    /// Validates injectivity and that every image lies in `allocation`.
    pub fn new(logical_to_physical: Vec<usize>, allocation: &[usize]) -> Result<Self> {
        for (l, p) in logical_to_physical.iter().enumerate() {
            if !allocation.contains(p) {
                return Err(Error::Argument(format!(
                    "logical {l} mapped to {p}, outside the allocation"
                )));
            }
            if logical_to_physical[..l].contains(p) {
                return Err(Error::Argument(format!("physical qubit {p} used twice")));
            }
        }
        Ok(Layout {
            logical_to_physical,
        })
    }

    pub fn physical(&self, logical: usize) -> usize {
        self.logical_to_physical[logical]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.logical_to_physical
    }

    pub fn len(&self) -> usize {
        self.logical_to_physical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logical_to_physical.is_empty()
    }

    /// Logical qubit sitting on `physical`, if any.
    pub fn logical(&self, physical: usize) -> Option<usize> {
        self.logical_to_physical.iter().position(|&p| p == physical)
    }
}

/// Outcome of routing one circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingResult {
    /// Circuit over physical indices with explicit SWAPs.
    pub routed: Circuit,
    pub initial_layout: Layout,
    pub final_layout: Layout,
    pub swaps_inserted: usize,
    pub cnot_after_decomposition: usize,
    pub depth_after: usize,
}

/// Greedy placement: logical qubits by descending interaction count onto
/// allocation qubits by descending induced degree, ties by index.
pub fn initial_layout(c: &Circuit, g: &CouplingGraph, allocation: &[usize]) -> Result<Layout> {
    if allocation.len() < c.num_qubits() {
        return Err(Error::Capacity {
            required: c.num_qubits(),
            available: allocation.len(),
        });
    }
    let counts = c.interaction_counts();
    let mut logical: Vec<usize> = (0..c.num_qubits()).collect();
    logical.sort_by_key(|&l| (std::cmp::Reverse(counts[l]), l));
    let mut physical = allocation.to_vec();
    physical.sort_unstable();
    physical.dedup();
    physical.sort_by_key(|&p| (std::cmp::Reverse(g.induced_degree(p, allocation)), p));
    let mut mapping = vec![0; c.num_qubits()];
    for (&l, &p) in logical.iter().zip(&physical) {
        mapping[l] = p;
    }
    Layout::new(mapping, allocation)
}

/// Percentage increase of `test_cnots` over `baseline_cnots`.
pub fn swap_overhead<T: Real>(test_cnots: usize, baseline_cnots: usize) -> Result<T> {
    if baseline_cnots == 0 {
        return Err(Error::UndefinedOverhead);
    }
    let test = T::of_usize(test_cnots);
    let base = T::of_usize(baseline_cnots);
    Ok(T::of(100.0) * (test - base) / base)
}

/// [`swap_overhead`], except that two CNOT-free circuits compare as 0%.
pub fn swap_overhead_or_zero<T: Real>(test_cnots: usize, baseline_cnots: usize) -> Result<T> {
    if test_cnots == 0 && baseline_cnots == 0 {
        return Ok(T::zero());
    }
    swap_overhead(test_cnots, baseline_cnots)
}
