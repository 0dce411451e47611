use std::collections::{HashSet, VecDeque};

use super::Layout;
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::hardware::CouplingGraph;

pub const ORACLE_MAX_LOGICAL: usize = 5;
pub const ORACLE_MAX_ALLOCATION: usize = 6;

/// Minimum number of SWAPs any router confined to `allocation` needs.
///
/// Breadth-first search over (placement, executed two-qubit gates) where
/// executing every runnable gate is free and each edge of the search is one
/// SWAP on an allocation edge. Gates may run in any order consistent with
/// their qubit dependencies; one-qubit gates never block and are ignored.
pub fn optimal_route(
    c: &Circuit,
    g: &CouplingGraph,
    allocation: &[usize],
    layout: &Layout,
) -> Result<usize> {
    if c.num_qubits() > ORACLE_MAX_LOGICAL || allocation.len() > ORACLE_MAX_ALLOCATION {
        return Err(Error::OracleSize(format!(
            "{} logical qubits on {} physical (limits {ORACLE_MAX_LOGICAL}/{ORACLE_MAX_ALLOCATION})",
            c.num_qubits(),
            allocation.len()
        )));
    }
    let pairs: Vec<(usize, usize)> = c.gates().iter().filter_map(|g| g.pair()).collect();
    if pairs.len() > 64 {
        return Err(Error::OracleSize(format!("{} two-qubit gates (limit 64)", pairs.len())));
    }
    let layout = Layout::new(layout.as_slice().to_vec(), allocation)?;
    if !allocation.is_empty() && !g.is_connected_subset(allocation)? {
        return Err(Error::RoutingInfeasible(format!(
            "allocation {allocation:?} is not connected"
        )));
    }

    // Immediate two-qubit predecessors of each two-qubit gate.
    let mut preds = vec![0u64; pairs.len()];
    let mut last_on = vec![None::<usize>; c.num_qubits()];
    for (i, &(a, b)) in pairs.iter().enumerate() {
        for q in [a, b] {
            if let Some(p) = last_on[q] {
                preds[i] |= 1 << p;
            }
            last_on[q] = Some(i);
        }
    }
    let done = if pairs.len() == 64 { u64::MAX } else { (1u64 << pairs.len()) - 1 };

    // Slots index into `allocation`; each holds a logical qubit or EMPTY.
    const EMPTY: u8 = u8::MAX;
    let slot_of = |p: usize| allocation.iter().position(|&x| x == p).expect("in allocation");
    let mut start = vec![EMPTY; allocation.len()];
    for (l, &p) in layout.as_slice().iter().enumerate() {
        start[slot_of(p)] = l as u8;
    }
    let adjacent: Vec<Vec<bool>> = allocation
        .iter()
        .map(|&a| allocation.iter().map(|&b| g.has_edge(a, b)).collect())
        .collect();
    let slot_edges: Vec<(usize, usize)> = (0..allocation.len())
        .flat_map(|i| (i + 1..allocation.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| adjacent[i][j])
        .collect();

    let closure = |slots: &[u8], mut mask: u64| -> u64 {
        let mut pos = [usize::MAX; ORACLE_MAX_LOGICAL];
        for (s, &l) in slots.iter().enumerate() {
            if l != EMPTY {
                pos[l as usize] = s;
            }
        }
        loop {
            let before = mask;
            for (i, &(a, b)) in pairs.iter().enumerate() {
                if mask & (1 << i) == 0 && preds[i] & !mask == 0 && adjacent[pos[a]][pos[b]] {
                    mask |= 1 << i;
                }
            }
            if mask == before {
                return mask;
            }
        }
    };

    let first = closure(&start, 0);
    if first == done {
        return Ok(0);
    }
    let mut seen: HashSet<(Vec<u8>, u64)> = HashSet::from([(start.clone(), first)]);
    let mut queue = VecDeque::from([(start, first, 0usize)]);
    while let Some((slots, mask, depth)) = queue.pop_front() {
        for &(i, j) in &slot_edges {
            if slots[i] == EMPTY && slots[j] == EMPTY {
                continue;
            }
            let mut next = slots.clone();
            next.swap(i, j);
            let m = closure(&next, mask);
            if m == done {
                return Ok(depth + 1);
            }
            if seen.insert((next.clone(), m)) {
                queue.push_back((next, m, depth + 1));
            }
        }
    }
    Err(Error::RoutingInfeasible("no routing schedule exists".into()))
}
