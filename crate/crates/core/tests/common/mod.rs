//! Brute-force oracles and helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use qsteiner::designs::{ColumnOp, DesignMultiset};
use qsteiner::subspace::Subspace;
use qsteiner::{enumerate_subspaces, Field};
use rand::Rng;

/// For every subspace of `F_q^m`, how many `t`-subspaces of `F_q^n` puncture onto it.
/// One pass over the Grassmannian serves every `m < n`.
pub fn puncture_histograms(q: u32, t: usize, n: usize) -> HashMap<usize, HashMap<Subspace, u64>> {
    let f = Field::new(q).unwrap();
    let mut out: HashMap<usize, HashMap<Subspace, u64>> = HashMap::new();
    for y in enumerate_subspaces(f, n, t).unwrap() {
        let mut img = y;
        for m in (1..n).rev() {
            img = img.puncture(1).unwrap();
            *out.entry(m).or_default().entry(img.clone()).or_insert(0) += 1;
        }
    }
    out
}

/// Number of `t`-subspaces of a `k`-subspace `w` that puncture onto `x`.
pub fn covered_within(w: &Subspace, x: &Subspace, t: usize) -> u64 {
    let p = w.ambient() - x.ambient();
    w.subspaces(t).unwrap().filter(|s| &s.puncture(p).unwrap() == x).count() as u64
}

/// Nonzero vectors of `F_q^n` by direct enumeration of all `q^n` coordinate tuples.
pub fn all_nonzero_vectors(f: Field, n: usize) -> Vec<u64> {
    let q = f.order() as u64;
    (1..q.pow(n as u32))
        .map(|mut code| {
            let coords: Vec<u8> = (0..n)
                .map(|_| {
                    let d = (code % q) as u8;
                    code /= q;
                    d
                })
                .collect();
            f.pack(&coords)
        })
        .collect()
}

/// Whether the lines partition the nonzero vectors, checked by membership tests.
pub fn is_partition(f: Field, n: usize, lines: &[Subspace]) -> bool {
    all_nonzero_vectors(f, n)
        .into_iter()
        .all(|v| lines.iter().filter(|l| l.contains_vector(v)).count() == 1)
}

pub fn random_op(rng: &mut impl Rng, f: Field, m: usize) -> ColumnOp {
    let q = f.order() as u8;
    let column = rng.gen_range(0..m);
    let mut coeffs: Vec<u8> = (0..m).map(|_| rng.gen_range(0..q)).collect();
    coeffs[column] = rng.gen_range(1..q);
    ColumnOp::new(column, coeffs)
}

pub fn random_ops(rng: &mut impl Rng, f: Field, m: usize) -> Vec<ColumnOp> {
    let len = rng.gen_range(1..=4);
    (0..len).map(|_| random_op(rng, f, m)).collect()
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Multiplicity totals by block dimension, as plain integers.
pub fn totals(d: &DesignMultiset) -> Vec<(usize, u64)> {
    d.dimension_totals()
        .into_iter()
        .map(|(r, v)| (r, u64::try_from(&v).unwrap()))
        .collect()
}

pub fn distinct_vectors(lines: &[Subspace]) -> usize {
    lines.iter().flat_map(|l| l.nonzero_vectors()).collect::<HashSet<_>>().len()
}
