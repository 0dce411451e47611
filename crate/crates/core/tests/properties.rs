mod common;

use proptest::prelude::*;
use swapsim::scheduler::{fair_share_order, DEFAULT_DEPTH_TOLERANCE};
use swapsim::{initial_layout, optimal_route, Circuit, CouplingGraph, Gate, Job};

fn arb_circuit(max_qubits: usize, max_gates: usize) -> impl Strategy<Value = Circuit> {
    (2..=max_qubits).prop_flat_map(move |n| {
        let gate = prop_oneof![
            (0..n, prop::sample::select(vec!["h", "x", "y", "z", "s", "t"]))
                .prop_map(|(q, l)| Gate::one(l, q)),
            (0..n, 1..n).prop_map(move |(a, d)| Gate::cnot(a, (a + d) % n)),
            (0..n, 1..n).prop_map(move |(a, d)| Gate::swap(a, (a + d) % n)),
        ];
        prop::collection::vec(gate, 0..=max_gates).prop_map(move |gs| Circuit::new(n, gs).unwrap())
    })
}

proptest! {
    #[test]
    fn swap_decomposition_adds_three_cnots_each(c in arb_circuit(5, 30)) {
        let s = c.stats();
        let d = c.decompose_swaps().stats();
        prop_assert_eq!(d.cnot, s.cnot + 3 * s.swap);
        prop_assert_eq!(d.swap, 0);
    }

    #[test]
    fn priority_metric_is_a_fraction(c in arb_circuit(5, 30)) {
        match c.priority_metric() {
            Ok(pm) => prop_assert!((0.0..=1.0).contains(&pm)),
            Err(_) => prop_assert!(c.is_empty()),
        }
    }

    #[test]
    fn appending_never_lowers_depth(c in arb_circuit(4, 20), q in 0usize..4) {
        let mut longer = c.clone();
        longer.push(Gate::one("h", q % c.num_qubits())).unwrap();
        prop_assert!(longer.depth() >= c.depth());
        prop_assert!(longer.depth() <= c.depth() + 1);
    }

    #[test]
    fn enumeration_matches_brute_force(k in 1usize..=5, mask in 0u32..(1 << 9)) {
        let g = CouplingGraph::grid(3, 3);
        let available: Vec<usize> = (0..9).filter(|q| mask >> q & 1 == 1).collect();
        let got = g.enumerate_connected_allocations(k, &available);
        let mut want = Vec::new();
        for m in 0u32..(1 << 9) {
            let s: Vec<usize> = (0..9).filter(|q| m >> q & 1 == 1).collect();
            if s.len() == k && s.iter().all(|q| available.contains(q)) && g.is_connected_subset(&s).unwrap() {
                want.push(s);
            }
        }
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn extra_coupling_never_hurts_the_oracle(seed in 0u64..500, extra in 0usize..3) {
        let base = CouplingGraph::line5();
        let added = [(0, 2), (2, 3), (0, 4)][extra];
        let mut edges = base.edges().to_vec();
        edges.push(added);
        let richer = CouplingGraph::new(5, edges).unwrap();
        let c = Circuit::random(4, 12, 0.8, seed).unwrap();
        let all: Vec<usize> = (0..5).collect();
        let layout = initial_layout(&c, &base, &all).unwrap();
        let a = optimal_route(&c, &base, &all, &layout).unwrap();
        let b = optimal_route(&c, &richer, &all, &layout).unwrap();
        prop_assert!(b <= a);
    }

    #[test]
    fn fair_share_is_a_sorted_permutation(usages in prop::collection::vec(0u8..4, 1..15)) {
        let jobs: Vec<Job> = usages
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let c = Circuit::random(2, 3, 0.5, i as u64).unwrap();
                Job::new(format!("j{i}"), "u", c, u as f64, (usages.len() - i) as u64).unwrap()
            })
            .collect();
        let ordered = fair_share_order(jobs.clone());
        let mut ids: Vec<&str> = ordered.iter().map(|j| j.id.as_str()).collect();
        ids.sort();
        let mut orig: Vec<&str> = jobs.iter().map(|j| j.id.as_str()).collect();
        orig.sort();
        prop_assert_eq!(ids, orig);
        for w in ordered.windows(2) {
            prop_assert!(
                (w[0].usage_score, w[0].arrival_index) <= (w[1].usage_score, w[1].arrival_index)
            );
        }
    }

    #[test]
    fn drained_batches_are_valid(seed in 0u64..10_000, grid in any::<bool>()) {
        let g = if grid { CouplingGraph::grid20() } else { CouplingGraph::line5() };
        let mut q = common::random_queue(&g, seed);
        let total = q.len();
        let batches = common::drain(&mut q, &g, None);
        prop_assert_eq!(batches.iter().map(|b| b.len()).sum::<usize>(), total);
        for b in &batches {
            prop_assert!(b.validate(&g, DEFAULT_DEPTH_TOLERANCE).is_ok(), "{:?}", b.validate(&g, DEFAULT_DEPTH_TOLERANCE));
        }
    }
}
