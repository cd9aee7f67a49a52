//! Canonical subspaces of `F_q^m` and the puncture / extension / expansion calculus.
//!
//! A [`Subspace`] stores its generator matrix in reduced row echelon form, so
//! two subspaces are equal as sets of vectors exactly when their stored rows are
//! equal. Puncturing always deletes the last coordinate(s).

use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

use crate::field::Field;

pub type Rows = SmallVec<[u64; 4]>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubspaceError {
    #[error("ambient dimension {ambient} exceeds the packed-vector limit {max} for {field}")]
    AmbientTooLarge { field: Field, ambient: usize, max: usize },
    #[error("vector of length {got} where length {expected} was expected")]
    LengthMismatch { expected: usize, got: usize },
    #[error("coordinate value {0} is not a field element")]
    BadElement(u8),
    #[error("packed vector {0:#x} has more than {1} coordinates")]
    VectorOutOfRange(u64, usize),
    #[error("rows are not a reduced row echelon basis")]
    NotReduced,
    #[error("subspaces live in different spaces ({0:?}^{1} vs {2:?}^{3})")]
    AmbientMismatch(Field, usize, Field, usize),
    #[error("dimension {dim} out of range 0..={max}")]
    DimensionOutOfRange { dim: usize, max: usize },
    #[error("cannot puncture {p} coordinates of a subspace of ambient dimension {ambient}")]
    PunctureOutOfRange { p: usize, ambient: usize },
    #[error("cannot extend a {dim}-subspace of F^{m} to a {target_dim}-subspace of F^{target_ambient}")]
    BadExtension {
        dim: usize,
        m: usize,
        target_dim: usize,
        target_ambient: usize,
    },
    #[error("column operation on column {0} has zero coefficient on that column")]
    SingularColumnOp(usize),
}

/// A subspace of `F_q^m`, stored as its RREF generator matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    field: Field,
    ambient: usize,
    rows: Rows,
}

fn check_ambient(field: Field, m: usize) -> Result<(), SubspaceError> {
    if m > field.max_ambient() {
        return Err(SubspaceError::AmbientTooLarge {
            field,
            ambient: m,
            max: field.max_ambient(),
        });
    }
    Ok(())
}

/// Reduce `rows` in place to RREF over `F_q^m`, dropping zero rows.
fn reduce(field: Field, m: usize, rows: &mut Rows) {
    let mut rank = 0;
    for col in 0..m {
        let Some(pivot) = (rank..rows.len()).find(|&i| field.coord(rows[i], m, col) != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let lead = field.coord(rows[rank], m, col);
        if lead != 1 {
            rows[rank] = field.scale_vec(field.inv(lead), rows[rank], m);
        }
        let pivot_row = rows[rank];
        for i in 0..rows.len() {
            if i != rank {
                let c = field.coord(rows[i], m, col);
                if c != 0 {
                    rows[i] = field.axpy(rows[i], field.neg(c), pivot_row, m);
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.truncate(rank);
}

/// Canonical subspace spanned by packed vectors of length `m`.
pub fn rref(field: Field, m: usize, vectors: &[u64]) -> Result<Subspace, SubspaceError> {
    check_ambient(field, m)?;
    let limit = if m == 0 { 0 } else { u64::MAX >> (64 - field.bits() as usize * m) };
    let mut rows: Rows = SmallVec::with_capacity(vectors.len());
    for &v in vectors {
        if v & !limit != 0 {
            return Err(SubspaceError::VectorOutOfRange(v, m));
        }
        for j in 0..m {
            let x = field.coord(v, m, j);
            if x as u32 >= field.order() {
                return Err(SubspaceError::BadElement(x));
            }
        }
        rows.push(v);
    }
    reduce(field, m, &mut rows);
    Ok(Subspace { field, ambient: m, rows })
}

impl Subspace {
    /// The 0-dimensional subspace of `F_q^m`.
    pub fn null(field: Field, m: usize) -> Result<Self, SubspaceError> {
        check_ambient(field, m)?;
        Ok(Subspace { field, ambient: m, rows: SmallVec::new() })
    }

    /// `F_q^m` itself.
    pub fn whole(field: Field, m: usize) -> Result<Self, SubspaceError> {
        check_ambient(field, m)?;
        let rows = (0..m).map(|j| field.with_coord(0, m, j, 1)).collect();
        Ok(Subspace { field, ambient: m, rows })
    }

    /// Span of coordinate vectors; every vector must have length `m`.
    pub fn span(field: Field, m: usize, vectors: &[Vec<u8>]) -> Result<Self, SubspaceError> {
        let mut packed = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.len() != m {
                return Err(SubspaceError::LengthMismatch { expected: m, got: v.len() });
            }
            if let Some(&x) = v.iter().find(|&&x| x as u32 >= field.order()) {
                return Err(SubspaceError::BadElement(x));
            }
            packed.push(field.pack(v));
        }
        rref(field, m, &packed)
    }

    /// Builds a subspace from rows that must already be in RREF with full rank.
    pub fn from_rref_rows(field: Field, m: usize, rows: &[u64]) -> Result<Self, SubspaceError> {
        let s = rref(field, m, rows)?;
        if s.rows.as_slice() != rows {
            return Err(SubspaceError::NotReduced);
        }
        Ok(s)
    }

    // Rows known to be RREF by construction.
    pub(crate) fn from_rref_unchecked(field: Field, m: usize, rows: Rows) -> Self {
        debug_assert_eq!(rref(field, m, &rows).unwrap().rows, rows);
        Subspace { field, ambient: m, rows }
    }

    #[inline]
    pub fn field(&self) -> Field {
        self.field
    }

    #[inline]
    pub fn ambient(&self) -> usize {
        self.ambient
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Packed RREF basis rows.
    #[inline]
    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn basis(&self) -> Vec<Vec<u8>> {
        self.rows.iter().map(|&r| self.field.unpack(r, self.ambient)).collect()
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows
            .iter()
            .map(|&r| self.field.leading(r, self.ambient).expect("rref rows are nonzero"))
            .collect()
    }

    fn same_space(&self, other: &Subspace) -> Result<(), SubspaceError> {
        if self.field != other.field || self.ambient != other.ambient {
            return Err(SubspaceError::AmbientMismatch(
                self.field,
                self.ambient,
                other.field,
                other.ambient,
            ));
        }
        Ok(())
    }

    /// Whether the packed vector `v` lies in this subspace.
    pub fn contains_vector(&self, v: u64) -> bool {
        let (f, m) = (self.field, self.ambient);
        let mut v = v;
        for &row in &self.rows {
            let col = f.leading(row, m).expect("nonzero row");
            let c = f.coord(v, m, col);
            if c != 0 {
                v = f.axpy(v, f.neg(c), row, m);
            }
        }
        v == 0
    }

    /// `true` iff `other` is a subspace of `self`.
    pub fn contains(&self, other: &Subspace) -> Result<bool, SubspaceError> {
        self.same_space(other)?;
        Ok(other.dim() <= self.dim() && other.rows.iter().all(|&v| self.contains_vector(v)))
    }

    /// Every linear combination of the basis rows, indexed by coefficient vector.
    fn combinations(&self) -> Vec<u64> {
        let (f, m) = (self.field, self.ambient);
        let mut out = vec![0u64];
        for &row in self.rows.iter().rev() {
            let prev = std::mem::take(&mut out);
            for c in f.elements() {
                let scaled = f.scale_vec(c, row, m);
                out.extend(prev.iter().map(|&v| f.add_vec(v, scaled, m)));
            }
        }
        out
    }

    /// All `q^d` vectors, zero included, sorted by [`vector_index`].
    pub fn vectors(&self) -> Vec<u64> {
        let mut vs = self.combinations();
        vs.sort_by_key(|&v| vector_index(self.field, v, self.ambient));
        vs
    }

    /// The `q^d - 1` nonzero vectors sorted by [`vector_index`].
    pub fn nonzero_vectors(&self) -> Vec<u64> {
        let mut vs = self.vectors();
        vs.remove(0);
        vs
    }

    /// Delete the last `p` coordinates of every vector.
    pub fn puncture(&self, p: usize) -> Result<Subspace, SubspaceError> {
        if p > self.ambient {
            return Err(SubspaceError::PunctureOutOfRange { p, ambient: self.ambient });
        }
        let m = self.ambient - p;
        let mut rows: Rows = self.rows.iter().map(|&r| self.field.truncate(r, p)).collect();
        reduce(self.field, m, &mut rows);
        Ok(Subspace { field: self.field, ambient: m, rows })
    }

    /// The `q^t` subspaces of `F_q^{m+1}` of the same dimension that puncture to `self`.
    ///
    /// The appended column takes every value on the basis rows, i.e. every linear
    /// combination of the columns of the vector list.
    pub fn extensions_same_dim(&self) -> Result<Vec<Subspace>, SubspaceError> {
        let f = self.field;
        check_ambient(f, self.ambient + 1)?;
        let d = self.dim();
        let q = f.order() as usize;
        let total = q.pow(d as u32);
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            let mut code = idx;
            let rows: Rows = self
                .rows
                .iter()
                .map(|&r| {
                    let x = (code % q) as u8;
                    code /= q;
                    f.append(r, x)
                })
                .collect();
            out.push(Subspace::from_rref_unchecked(f, self.ambient + 1, rows));
        }
        out.sort();
        Ok(out)
    }

    /// The unique `(d+1)`-subspace of `F_q^{m+1}` that punctures to `self`.
    pub fn extension_raise_dim(&self) -> Result<Subspace, SubspaceError> {
        let f = self.field;
        check_ambient(f, self.ambient + 1)?;
        let mut rows: Rows = self.rows.iter().map(|&r| f.append(r, 0)).collect();
        rows.push(1);
        Ok(Subspace::from_rref_unchecked(f, self.ambient + 1, rows))
    }

    /// Every `t_target`-subspace of `F_q^{n_target}` whose `(n_target - m)`-fold
    /// puncture is `self`.
    pub fn extensions(
        &self,
        t_target: usize,
        n_target: usize,
    ) -> Result<impl Iterator<Item = Subspace> + '_, SubspaceError> {
        let (f, m, s) = (self.field, self.ambient, self.dim());
        check_ambient(f, n_target)?;
        if n_target < m || t_target < s || n_target - m < t_target - s {
            return Err(SubspaceError::BadExtension {
                dim: s,
                m,
                target_dim: t_target,
                target_ambient: n_target,
            });
        }
        let tail = n_target - m;
        let q = f.order() as usize;
        let tails = Grassmannian::new(f, tail, t_target - s)?;
        Ok(tails.flat_map(move |g2| {
            let pivots = g2.pivots();
            let free_cols: Vec<usize> = (0..tail).filter(|c| !pivots.contains(c)).collect();
            let slots = s * free_cols.len();
            let total = q.pow(slots as u32);
            let shift = f.bits() as usize * tail;
            (0..total).map(move |idx| {
                let mut code = idx;
                let mut rows: Rows = SmallVec::with_capacity(t_target);
                for &r in &self.rows {
                    let mut b = 0u64;
                    for &c in &free_cols {
                        b = f.with_coord(b, tail, c, (code % q) as u8);
                        code /= q;
                    }
                    rows.push((r << shift) | b);
                }
                rows.extend(g2.rows.iter().copied());
                Subspace::from_rref_unchecked(f, n_target, rows)
            })
        }))
    }

    /// The `(q^k - 1) x m` row list of the `k`-expansion.
    pub fn expand(&self, k: usize) -> Result<VirtualExpansion, SubspaceError> {
        let d = self.dim();
        if d > k {
            return Err(SubspaceError::DimensionOutOfRange { dim: d, max: k });
        }
        let copies = (self.field.order() as usize).pow((k - d) as u32);
        let base = self.nonzero_vectors();
        let mut rows = Vec::with_capacity(copies * base.len() + copies - 1);
        for _ in 0..copies {
            rows.extend_from_slice(&base);
        }
        rows.extend(std::iter::repeat_n(0, copies - 1));
        Ok(VirtualExpansion { field: self.field, ambient: self.ambient, k, rows })
    }

    /// Every `s`-subspace contained in `self`.
    pub fn subspaces(&self, s: usize) -> Result<impl Iterator<Item = Subspace> + '_, SubspaceError> {
        let (f, m, d) = (self.field, self.ambient, self.dim());
        let inner = Grassmannian::new(f, d, s)?;
        Ok(inner.map(move |w| {
            let mut rows: Rows = w
                .rows
                .iter()
                .map(|&coeffs| {
                    (0..d).fold(0u64, |acc, i| {
                        f.axpy(acc, f.coord(coeffs, d, i), self.rows[i], m)
                    })
                })
                .collect();
            reduce(f, m, &mut rows);
            Subspace { field: f, ambient: m, rows }
        }))
    }

    /// Image under an invertible linear map on `F_q^m` given on packed vectors.
    pub fn map_linear(&self, map: impl Fn(u64) -> u64) -> Subspace {
        let mut rows: Rows = self.rows.iter().map(|&r| map(r)).collect();
        reduce(self.field, self.ambient, &mut rows);
        Subspace { field: self.field, ambient: self.ambient, rows }
    }

    /// Smallest subspace containing both.
    pub fn join(&self, other: &Subspace) -> Result<Subspace, SubspaceError> {
        self.same_space(other)?;
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().copied());
        reduce(self.field, self.ambient, &mut rows);
        Ok(Subspace { field: self.field, ambient: self.ambient, rows })
    }

    /// Direct sum with a subspace of `F_q^r` placed on `r` new trailing coordinates.
    pub fn direct_sum_tail(&self, tail: &Subspace) -> Result<Subspace, SubspaceError> {
        let f = self.field;
        let m = self.ambient + tail.ambient;
        check_ambient(f, m)?;
        let shift = f.bits() as usize * tail.ambient;
        let mut rows: Rows = self.rows.iter().map(|&r| r << shift).collect();
        rows.extend(tail.rows.iter().copied());
        Ok(Subspace::from_rref_unchecked(f, m, rows))
    }
}

impl PartialOrd for Subspace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical order: field, ambient, dimension, then RREF rows read row-major.
impl Ord for Subspace {
    fn cmp(&self, other: &Self) -> Ordering {
        self.field
            .cmp(&other.field)
            .then(self.ambient.cmp(&other.ambient))
            .then(self.dim().cmp(&other.dim()))
            .then_with(|| self.rows.as_slice().cmp(other.rows.as_slice()))
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}; {}>", self.dim(), format_rows(self.field, self.ambient, &self.rows))
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rows(self.field, self.ambient, &self.rows))
    }
}

/// Row syntax shared with the file formats: digits per row, rows joined by `;`,
/// `-` for the empty matrix. Digits are space separated when `q > 9`.
pub fn format_rows(field: Field, m: usize, rows: &[u64]) -> String {
    if rows.is_empty() {
        return "-".to_string();
    }
    let sep = if field.order() > 9 { " " } else { "" };
    rows.iter()
        .map(|&r| {
            field
                .unpack(r, m)
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(sep)
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// Integer encoding of a vector with the first coordinate least significant.
pub fn vector_index(field: Field, v: u64, m: usize) -> u64 {
    let q = field.order() as u64;
    (0..m).rev().fold(0, |acc, j| acc * q + field.coord(v, m, j) as u64)
}

/// A punctured subspace written as the row list of its `k`-expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualExpansion {
    pub field: Field,
    pub ambient: usize,
    pub k: usize,
    /// `q^k - 1` packed rows, possibly repeated or zero.
    pub rows: Vec<u64>,
}

impl VirtualExpansion {
    pub fn coords(&self) -> Vec<Vec<u8>> {
        self.rows.iter().map(|&r| self.field.unpack(r, self.ambient)).collect()
    }

    /// The subspace spanned by the rows.
    pub fn underlying(&self) -> Subspace {
        rref(self.field, self.ambient, &self.rows).expect("rows share the ambient dimension")
    }
}

/// Streaming enumeration of the Grassmannian `G_q(m, d)`.
///
/// Order: pivot column sets in lexicographic order, then the free entries as an
/// odometer (row-major, last entry fastest). The null subspace is the only
/// member when `d = 0`.
pub struct Grassmannian {
    field: Field,
    m: usize,
    d: usize,
    pivots: Vec<usize>,
    free: Vec<(usize, usize)>,
    digits: Vec<u8>,
    done: bool,
}

impl Grassmannian {
    pub fn new(field: Field, m: usize, d: usize) -> Result<Self, SubspaceError> {
        check_ambient(field, m)?;
        if d > m {
            return Err(SubspaceError::DimensionOutOfRange { dim: d, max: m });
        }
        let mut g = Grassmannian {
            field,
            m,
            d,
            pivots: (0..d).collect(),
            free: Vec::new(),
            digits: Vec::new(),
            done: false,
        };
        g.reset_free();
        Ok(g)
    }

    fn reset_free(&mut self) {
        self.free.clear();
        for (i, &c) in self.pivots.iter().enumerate() {
            for col in c + 1..self.m {
                if !self.pivots.contains(&col) {
                    self.free.push((i, col));
                }
            }
        }
        self.digits = vec![0; self.free.len()];
    }

    fn next_pivots(&mut self) -> bool {
        let (m, d) = (self.m, self.d);
        let mut i = d;
        while i > 0 {
            i -= 1;
            if self.pivots[i] < m - d + i {
                self.pivots[i] += 1;
                for j in i + 1..d {
                    self.pivots[j] = self.pivots[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for Grassmannian {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        if self.done {
            return None;
        }
        let (f, m) = (self.field, self.m);
        let mut rows: Rows = self.pivots.iter().map(|&c| f.with_coord(0, m, c, 1)).collect();
        for (&(i, col), &x) in self.free.iter().zip(&self.digits) {
            rows[i] = f.with_coord(rows[i], m, col, x);
        }
        let item = Subspace { field: f, ambient: m, rows };

        let q = f.order() as u8;
        let mut pos = self.digits.len();
        loop {
            if pos == 0 {
                if self.next_pivots() {
                    self.reset_free();
                } else {
                    self.done = true;
                }
                break;
            }
            pos -= 1;
            self.digits[pos] += 1;
            if self.digits[pos] < q {
                break;
            }
            self.digits[pos] = 0;
        }
        Some(item)
    }
}

/// Every `d`-subspace of `F_q^m`, each exactly once.
pub fn enumerate_subspaces(field: Field, m: usize, d: usize) -> Result<Grassmannian, SubspaceError> {
    Grassmannian::new(field, m, d)
}
