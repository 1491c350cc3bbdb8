//! Randomized invariants over generated designs and vectors.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;

use blockdesign::colour::{
    exact_chromatic, find_blocking_system, greedy_colouring, SolverConfig,
};
use blockdesign::design::{canonicalize, is_admissible, scale_index};
use blockdesign::lattice::{mu_of, tau_of, FVector};
use blockdesign::verify::{
    blocking_system_to_colouring, leave_graph, pair_counts, verify_bibd, verify_blocking_system,
    verify_colouring, verify_partial_bibd,
};
use blockdesign::Design;

/// A partial triple system on `v` points built greedily from a shuffled
/// triple order: every pair covered at most once by construction.
fn partial_triples(v: usize, order: Vec<usize>, keep: Vec<bool>) -> Design {
    let points: Vec<String> = (0..v).map(|i| format!("p{}", i)).collect();
    let mut all = Vec::new();
    for a in 0..v {
        for b in a + 1..v {
            for c in b + 1..v {
                all.push([a, b, c]);
            }
        }
    }
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut blocks = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        let t = all[i % all.len()];
        if !keep[rank % keep.len()] {
            continue;
        }
        let pairs = [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])];
        if pairs.iter().all(|p| !used.contains(p)) {
            used.extend(pairs);
            blocks.push(t.iter().map(|&x| points[x].clone()).collect());
        }
    }
    Design::new(points, blocks, 1)
}

fn arb_partial_triples() -> impl Strategy<Value = Design> {
    (4usize..=9)
        .prop_flat_map(|v| {
            (
                Just(v),
                proptest::collection::vec(0usize..200, 1..40),
                proptest::collection::vec(any::<bool>(), 8),
            )
        })
        .prop_map(|(v, order, keep)| partial_triples(v, order, keep))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn admissibility_is_periodic(v in 3u64..200, k in 3u64..=6, lambda in 1u64..=6) {
        prop_assume!(v >= k);
        prop_assert_eq!(
            is_admissible(v, k, lambda),
            is_admissible(v + k * (k - 1), k, lambda)
        );
    }

    #[test]
    fn scaling_composes(d in arb_partial_triples(), a in 1u64..=3, b in 1u64..=3) {
        let two_step = canonicalize(&scale_index(&scale_index(&d, a).unwrap(), b).unwrap());
        let one_step = canonicalize(&scale_index(&d, a * b).unwrap());
        prop_assert_eq!(two_step.blocks, one_step.blocks);
        prop_assert_eq!(two_step.lambda, one_step.lambda);
    }

    #[test]
    fn canonicalize_is_idempotent(d in arb_partial_triples()) {
        let once = canonicalize(&d);
        let twice = canonicalize(&once);
        prop_assert_eq!(once.blocks, twice.blocks);
        prop_assert_eq!(once.points, twice.points);
    }

    #[test]
    fn generated_partials_verify(d in arb_partial_triples()) {
        prop_assert!(verify_partial_bibd(&d).unwrap().ok);
        // a full design is in particular a partial one
        if verify_bibd(&d).unwrap().ok {
            prop_assert!(verify_partial_bibd(&d).unwrap().ok);
        }
    }

    #[test]
    fn leave_counts_uncovered_pairs(d in arb_partial_triples()) {
        let v = d.v();
        let covered: usize = d.blocks.iter().map(|b| b.len() * (b.len() - 1) / 2).sum();
        let leave = leave_graph(&d).unwrap();
        prop_assert_eq!(leave.edges.len(), v * (v - 1) / 2 - covered);
        // every leave edge really is uncovered
        let counts = pair_counts(&d);
        for e in &leave.edges {
            prop_assert!(!counts.contains_key(e));
        }
    }

    #[test]
    fn blocking_system_bounds_chi(d in arb_partial_triples()) {
        prop_assume!(!d.blocks.is_empty());
        let cfg = SolverConfig::default();
        if let Some(bs) = find_blocking_system(&d, &[2, 2], &cfg).unwrap() {
            prop_assert!(verify_blocking_system(&d, &bs).unwrap().ok);
            let col = blocking_system_to_colouring(&d, &bs).unwrap();
            prop_assert!(verify_colouring(&d, &col).unwrap().ok);
            let chi = exact_chromatic(&d, &cfg).unwrap().chi;
            prop_assert!(chi <= 2, "a 2-set system certifies chi <= 2, got {}", chi);
        }
    }

    #[test]
    fn greedy_results_verify(d in arb_partial_triples(), c in 2u32..=4) {
        prop_assume!(!d.blocks.is_empty());
        if let Some(col) = greedy_colouring(&d, c) {
            prop_assert!(verify_colouring(&d, &col).unwrap().ok);
            prop_assert!(col.c <= c);
        }
    }

    #[test]
    fn adding_a_block_bumps_chi_by_at_most_one(
        d in arb_partial_triples(),
        pick in proptest::collection::vec(0usize..100, 3),
    ) {
        let cfg = SolverConfig::default();
        let before = exact_chromatic(&d, &cfg).unwrap().chi;
        let pts: Vec<String> = d.points.iter().cloned().collect();
        let mut extra: Vec<String> = pick.iter().map(|&i| pts[i % pts.len()].clone()).collect();
        extra.sort();
        extra.dedup();
        prop_assume!(extra.len() == 3);
        let mut blocks = d.blocks.clone();
        blocks.push(extra);
        let bigger = Design::new(d.points.iter().cloned(), blocks, d.lambda);
        let after = exact_chromatic(&bigger, &cfg).unwrap().chi;
        prop_assert!(after <= before + 1, "chi went {} -> {}", before, after);
        prop_assert!(after + 1 >= before, "chi went {} -> {}", before, after);
    }

    #[test]
    fn mu_row_sums_and_symmetry(parts in proptest::collection::vec(0u64..=4, 3..=8)) {
        let f = FVector { f: parts };
        let k = f.k();
        prop_assume!(k >= 2);
        let g = f.g();
        let m = mu_of(&f);
        let total: BigInt = m.entries.iter().sum();
        prop_assert_eq!(total, BigInt::from(k * (k - 1)));
        for i in 0..g {
            for j in 0..g {
                prop_assert_eq!(&m.entries[i * g + j] == &m.entries[j * g + i], true);
            }
        }
    }

    #[test]
    fn tau_sums_reproduce_mu(parts in proptest::collection::vec(0u64..=4, 3..=8)) {
        let f = FVector { f: parts };
        prop_assume!(f.k() >= 2);
        let g = f.g();
        let m = mu_of(&f);
        let mut in_sum = vec![BigInt::zero(); g * g];
        let mut out_sum = vec![BigInt::zero(); g * g];
        for l in 0..g {
            if f.f[l] == 0 {
                continue;
            }
            let t = tau_of(&f, l).unwrap();
            for c in 0..g * g {
                in_sum[c] += BigInt::from(f.f[l]) * &t.entries[2 * c];
                out_sum[c] += BigInt::from(f.f[l]) * &t.entries[2 * c + 1];
            }
        }
        prop_assert_eq!(&in_sum, &m.entries);
        prop_assert_eq!(&out_sum, &m.entries);
    }
}
