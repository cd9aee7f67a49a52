mod common;

use num_bigint::BigUint;
use num_traits::Zero;
use proptest::prelude::*;
use qsteiner::designs::*;
use qsteiner::equations::*;
use qsteiner::io::{parse_design, write_design};
use qsteiner::{enumerate_subspaces, gaussian, rref, Field, Subspace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field() -> impl Strategy<Value = Field> {
    prop::sample::select(vec![2u32, 3, 4, 5, 7, 8, 9]).prop_map(|q| Field::new(q).unwrap())
}

/// A random subspace of `F_q^m` spanned by up to `m` random vectors.
fn subspace() -> impl Strategy<Value = Subspace> {
    (field(), 1usize..=6).prop_flat_map(|(f, m)| {
        let q = f.order() as u8;
        prop::collection::vec(prop::collection::vec(0..q, m), 0..=m)
            .prop_map(move |vs| Subspace::span(f, m, &vs).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rref_is_canonical(s in subspace(), seed in any::<u64>()) {
        let f = s.field();
        let m = s.ambient();
        // random invertible recombination of the basis
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows: Vec<u64> = s.rows().to_vec();
        for _ in 0..8 {
            if rows.len() < 2 { break; }
            let i = rand::Rng::gen_range(&mut rng, 0..rows.len());
            let j = (i + 1) % rows.len();
            let c = rand::Rng::gen_range(&mut rng, 0..f.order()) as u8;
            rows[i] = f.axpy(rows[i], c, rows[j], m);
        }
        rows.reverse();
        prop_assert_eq!(rref(f, m, &rows).unwrap(), s.clone());
        prop_assert_eq!(rref(f, m, s.rows()).unwrap(), s);
    }

    #[test]
    fn extensions_puncture_back(s in subspace()) {
        let same = s.extensions_same_dim().unwrap();
        let q = s.field().order() as usize;
        prop_assert_eq!(same.len(), q.pow(s.dim() as u32));
        for e in &same {
            prop_assert_eq!(e.dim(), s.dim());
            prop_assert_eq!(&e.puncture(1).unwrap(), &s);
        }
        let up = s.extension_raise_dim().unwrap();
        prop_assert_eq!(up.dim(), s.dim() + 1);
        prop_assert_eq!(up.puncture(1).unwrap(), s);
    }

    #[test]
    fn subspace_counts_match_gaussian(s in subspace()) {
        prop_assume!(s.field().order().pow(s.dim() as u32) <= 1000);
        let q = s.field().order();
        for d in 0..=s.dim() {
            let n = s.subspaces(d).unwrap().count();
            prop_assert_eq!(BigUint::from(n), gaussian(s.dim() as u32, d as u32, q));
        }
    }

    #[test]
    fn gaussian_symmetry_and_pascal(n in 1u32..14, k in 0u32..14, qi in 0usize..6) {
        let q = [2u32, 3, 4, 5, 7, 9][qi];
        prop_assume!(k <= n);
        prop_assert_eq!(gaussian(n, k, q), gaussian(n, n - k, q));
        if k >= 1 {
            let pascal = gaussian(n - 1, k - 1, q) + BigUint::from(q).pow(k) * gaussian(n - 1, k, q);
            prop_assert_eq!(gaussian(n, k, q), pascal);
        }
    }
}

fn pins(params: DesignParams) -> Vec<(String, Rational)> {
    if params.r_range().contains(&0) { vec![null_pin(params)] } else { Vec::new() }
}

/// Small legal parameter sets for the uniform system.
fn small_params() -> impl Strategy<Value = DesignParams> {
    (prop::sample::select(vec![2u32, 3]), 1u32..=3, 2u32..=4, 3u32..=7)
        .prop_filter("t < k <= n", |&(_, t, k, n)| t < k && k <= n)
        .prop_flat_map(|(q, t, k, n)| (1..n).prop_map(move |m| DesignParams::new(q, t, k, n, m)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 60, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn uniform_solutions_solve_the_full_system(params in small_params()) {
        prop_assume!(params.r_range().map(|r| gaussian(params.m, r, params.q)).sum::<BigUint>() < BigUint::from(400u32));
        let uni = build_uniform(params).unwrap();
        let out = solve(&uni, &pins(params)).unwrap();
        prop_assume!(out.status != SolveStatus::Inconsistent);
        prop_assert!(residuals(&uni, &out.values).iter().all(Zero::is_zero));
        let full = build_full(params).unwrap();
        let values: Vec<Rational> = full
            .variables
            .iter()
            .map(|y| out.value(&UniformSystem::variable_name(y.dim() as u32)).unwrap().clone())
            .collect();
        prop_assert!(residuals(&full, &values).iter().all(Zero::is_zero));
    }

    #[test]
    fn mass_identity(params in small_params()) {
        prop_assume!(params.r_range().map(|r| gaussian(params.m, r, params.q)).sum::<BigUint>() < BigUint::from(400u32));
        let out = solve(&build_uniform(params).unwrap(), &pins(params)).unwrap();
        prop_assume!(out.nonneg_integer);
        let d = construct_uniform_design(params, &out.values).unwrap();
        let rep = verify(&d).unwrap();
        prop_assert!(rep.passed, "{}", rep);
        prop_assert_eq!(Some(rep.total_multiplicity), params.mass());
        for b in d.blocks().keys() {
            prop_assert!(params.r_range().contains(&(b.dim() as u32)));
        }
    }

    #[test]
    fn design_files_round_trip(q in prop::sample::select(vec![2u32, 3, 11]), picks in prop::collection::vec((0usize..200, 1u64..1000), 0..30)) {
        let f = Field::new(q).unwrap();
        let params = DesignParams::new(q, 2, 3, 7, 3);
        let all: Vec<Subspace> = (0..=3).flat_map(|r| enumerate_subspaces(f, 3, r).unwrap()).collect();
        let mut d = DesignMultiset::new(params).unwrap();
        for (i, mult) in picks {
            d.add(all[i % all.len()].clone(), mult).unwrap();
        }
        let text = write_design(&d);
        let back = parse_design(&text).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(write_design(&back), text);
    }

    #[test]
    fn transforms_preserve_verification(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = construct_fano_m4(2).unwrap();
        let ops = common::random_ops(&mut rng, d.field(), 4);
        let e = apply_transform(&d, &ops).unwrap();
        prop_assert!(verify(&e).unwrap().passed);
        prop_assert_eq!(e.total_multiplicity(), d.total_multiplicity());
        let s = build_spread(3, 4).unwrap().as_steiner().unwrap();
        let ops = common::random_ops(&mut rng, s.field(), 4);
        prop_assert!(apply_transform(&s, &ops).unwrap().check().is_ok());
    }

    #[test]
    fn puncture_commutes_with_tail_free_transforms(seed in any::<u64>()) {
        // ops touching only the first m-1 columns commute with deleting the last one
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = construct_fano_m5(2, &search_parallelism(2, 4, DEFAULT_NODE_BUDGET).unwrap()).unwrap();
        let mut ops = common::random_ops(&mut rng, d.field(), 4);
        for op in &mut ops {
            op.coeffs.push(0);
        }
        let left = puncture_design(&apply_transform(&d, &ops).unwrap()).unwrap();
        let short: Vec<ColumnOp> = ops
            .iter()
            .map(|op| ColumnOp::new(op.column, op.coeffs[..4].to_vec()))
            .collect();
        let right = apply_transform(&puncture_design(&d).unwrap(), &short).unwrap();
        prop_assert_eq!(left, right);
    }
}
