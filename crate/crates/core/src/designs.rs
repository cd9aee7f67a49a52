//! Punctured designs as multisets of subspaces, their verifier, and constructions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::counting::{count_c, gaussian, CountError};
use crate::equations::{uniform_family_solution, EquationError, Rational, UniformFamily};
use crate::field::{Field, FieldError};
use crate::subspace::{enumerate_subspaces, rref, Subspace, SubspaceError};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Equation(#[from] EquationError),
    #[error("block {block:?} does not live in F_{q}^{m}")]
    WrongSpace { block: Subspace, q: u32, m: u32 },
    #[error("multiplicity must be positive")]
    ZeroMultiplicity,
    #[error("multiplicity arithmetic overflowed")]
    Overflow,
    #[error("not a Steiner system: {0}")]
    NotSteiner(String),
    #[error("not a spread: {0}")]
    NotSpread(String),
    #[error("not a parallelism: {0}")]
    NotParallelism(String),
    #[error("spreads need an even ambient dimension, got {0}")]
    OddDimension(u32),
    #[error("parallelism search over F_{q}^{n} failed after {nodes} nodes{}", if *.exhausted { " (search space exhausted)" } else { " (node budget reached)" })]
    SearchFailed { q: u32, n: u32, nodes: u64, exhausted: bool },
    #[error("invalid assignment: {0}")]
    Assignment(String),
    #[error("column operation: {0}")]
    ColumnOp(String),
    #[error("constructed design failed verification: {0}")]
    Unverified(String),
    #[error("postcondition failed: {0}")]
    Postcondition(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("could not load {path}: {msg}")]
    Load { path: PathBuf, msg: String },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// `(q, t, k, n, m)` for a punctured system `S_q(t,k,n;m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DesignParams {
    pub q: u32,
    pub t: u32,
    pub k: u32,
    pub n: u32,
    pub m: u32,
}

impl DesignParams {
    pub const fn new(q: u32, t: u32, k: u32, n: u32, m: u32) -> Self {
        DesignParams { q, t, k, n, m }
    }

    /// Number of punctured coordinates.
    pub fn p(&self) -> u32 {
        self.n - self.m
    }

    pub fn check(&self) -> Result<(), String> {
        let DesignParams { q, t, k, n, m } = *self;
        Field::new(q).map_err(|e| e.to_string())?;
        if !(0 < t && t < k && k <= n) {
            return Err(format!("need 0 < t < k <= n, got t={t} k={k} n={n}"));
        }
        if m > n {
            return Err(format!("need m <= n, got m={m} n={n}"));
        }
        Ok(())
    }

    /// [`check`](Self::check) plus `1 <= m < n`.
    pub fn check_system(&self) -> Result<(), String> {
        self.check()?;
        if !(1 <= self.m && self.m < self.n) {
            return Err(format!("need 1 <= m < n, got m={} n={}", self.m, self.n));
        }
        Ok(())
    }

    /// Dimensions `s` of the subspaces that carry an equation.
    pub fn s_range(&self) -> RangeInclusive<u32> {
        self.t.saturating_sub(self.p())..=self.t.min(self.m)
    }

    /// Admissible block dimensions.
    pub fn r_range(&self) -> RangeInclusive<u32> {
        self.k.saturating_sub(self.p())..=self.k.min(self.m)
    }

    /// Block dimensions that contribute to the equation of an `s`-subspace.
    pub fn r_range_for(&self, s: u32) -> RangeInclusive<u32> {
        self.k.saturating_sub(self.p()).max(s)..=(self.k - self.t + s).min(self.m)
    }

    /// Right-hand side of the equation of an `s`-subspace.
    pub fn target(&self, s: u32) -> BigUint {
        let (p, q) = (self.p(), self.q);
        BigUint::from(q).pow(s * (p + s - self.t)) * gaussian(p, self.t - s, q)
    }

    /// Total multiplicity forced on every valid design, if integral.
    pub fn mass(&self) -> Option<BigUint> {
        let num = gaussian(self.n, self.t, self.q);
        let den = gaussian(self.k, self.t, self.q);
        (&num % &den).is_zero().then(|| num / den)
    }

    pub fn punctured(&self) -> Option<DesignParams> {
        (self.m > 0).then(|| DesignParams { m: self.m - 1, ..*self })
    }
}

impl fmt::Display for DesignParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S_{}({},{},{};{})", self.q, self.t, self.k, self.n, self.m)
    }
}

/// A multiset of subspaces of `F_q^m`.
///
/// Block dimensions are not restricted on insertion; [`verify`] reports any
/// block outside [`DesignParams::r_range`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignMultiset {
    params: DesignParams,
    field: Field,
    blocks: BTreeMap<Subspace, u64>,
}

impl DesignMultiset {
    pub fn new(params: DesignParams) -> Result<Self, DesignError> {
        params.check().map_err(DesignError::Params)?;
        Ok(DesignMultiset { params, field: Field::new(params.q)?, blocks: BTreeMap::new() })
    }

    pub fn from_blocks(
        params: DesignParams,
        blocks: impl IntoIterator<Item = (Subspace, u64)>,
    ) -> Result<Self, DesignError> {
        let mut d = Self::new(params)?;
        for (b, mult) in blocks {
            d.add(b, mult)?;
        }
        Ok(d)
    }

    /// Adds `mult` copies of `block`.
    pub fn add(&mut self, block: Subspace, mult: u64) -> Result<(), DesignError> {
        self.check_block(&block)?;
        if mult == 0 {
            return Err(DesignError::ZeroMultiplicity);
        }
        let slot = self.blocks.entry(block).or_insert(0);
        *slot = slot.checked_add(mult).ok_or(DesignError::Overflow)?;
        Ok(())
    }

    /// Sets the multiplicity of `block`; zero removes it.
    pub fn set_multiplicity(&mut self, block: Subspace, mult: u64) -> Result<(), DesignError> {
        self.check_block(&block)?;
        if mult == 0 {
            self.blocks.remove(&block);
        } else {
            self.blocks.insert(block, mult);
        }
        Ok(())
    }

    fn check_block(&self, block: &Subspace) -> Result<(), DesignError> {
        if block.field() != self.field || block.ambient() != self.params.m as usize {
            return Err(DesignError::WrongSpace {
                block: block.clone(),
                q: self.params.q,
                m: self.params.m,
            });
        }
        Ok(())
    }

    pub fn params(&self) -> DesignParams {
        self.params
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Distinct blocks with multiplicities, in canonical order.
    pub fn blocks(&self) -> &BTreeMap<Subspace, u64> {
        &self.blocks
    }

    pub fn multiplicity(&self, block: &Subspace) -> u64 {
        self.blocks.get(block).copied().unwrap_or(0)
    }

    /// Number of distinct blocks.
    pub fn distinct(&self) -> usize {
        self.blocks.len()
    }

    pub fn total_multiplicity(&self) -> BigUint {
        self.blocks.values().map(|&m| BigUint::from(m)).sum()
    }

    /// Total multiplicity per block dimension.
    pub fn dimension_totals(&self) -> BTreeMap<usize, BigUint> {
        let mut out: BTreeMap<usize, BigUint> = BTreeMap::new();
        for (b, &mult) in &self.blocks {
            *out.entry(b.dim()).or_default() += mult;
        }
        out
    }

    pub fn apply_transform(&self, ops: &[ColumnOp]) -> Result<Self, DesignError> {
        let map = ColumnOp::compose(self.field, self.params.m as usize, ops)?;
        let mut out = DesignMultiset::new(self.params)?;
        for (b, &mult) in &self.blocks {
            out.add(b.map_linear(&map), mult)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subspace: Subspace,
    pub expected: BigInt,
    pub actual: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub params: DesignParams,
    pub passed: bool,
    pub equations_checked: u64,
    /// Failed equations, in enumeration order.
    pub violations: Vec<Violation>,
    /// Blocks whose dimension is outside the admissible range, with a reason.
    pub invalid_blocks: Vec<(Subspace, String)>,
    pub total_multiplicity: BigUint,
}

impl VerificationReport {
    pub fn first_violation(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {}: {} equations checked, total multiplicity {}",
            self.params, self.equations_checked, self.total_multiplicity
        )?;
        if let Some((b, why)) = self.invalid_blocks.first() {
            write!(f, "\ninvalid block {}: {why}", b)?;
        }
        if let Some(v) = self.violations.first() {
            write!(
                f,
                "\nfirst violated {}-subspace {}: covered {} times, expected {}",
                v.subspace.dim(),
                v.subspace,
                v.actual,
                v.expected
            )?;
            if self.violations.len() > 1 {
                write!(f, " ({} violations in total)", self.violations.len())?;
            }
        }
        Ok(())
    }
}

fn to_u128(x: &BigUint) -> Result<u128, DesignError> {
    x.to_u128().ok_or(DesignError::Overflow)
}

/// Checks every covering equation of `design` without building the linear system.
pub fn verify(design: &DesignMultiset) -> Result<VerificationReport, DesignError> {
    verify_with_jobs(design, None)
}

/// [`verify`] on a dedicated pool of `jobs` worker threads.
pub fn verify_with_jobs(
    design: &DesignMultiset,
    jobs: Option<usize>,
) -> Result<VerificationReport, DesignError> {
    match jobs {
        None => verify_inner(design),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| DesignError::ThreadPool(e.to_string()))?
            .install(|| verify_inner(design)),
    }
}

type Coverage = HashMap<Subspace, u128>;

fn merge(mut a: Coverage, mut b: Coverage) -> Result<Coverage, DesignError> {
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    for (x, v) in b {
        let slot = a.entry(x).or_insert(0);
        *slot = slot.checked_add(v).ok_or(DesignError::Overflow)?;
    }
    Ok(a)
}

fn verify_inner(design: &DesignMultiset) -> Result<VerificationReport, DesignError> {
    let params = design.params();
    params.check().map_err(DesignError::Params)?;
    let DesignParams { q, t, k, m, .. } = params;
    let field = design.field();

    let r_range = params.r_range();
    let invalid_blocks: Vec<(Subspace, String)> = design
        .blocks()
        .keys()
        .filter(|b| !r_range.contains(&(b.dim() as u32)))
        .map(|b| {
            (
                b.clone(),
                format!(
                    "dimension {} outside {}..={}",
                    b.dim(),
                    r_range.start(),
                    r_range.end()
                ),
            )
        })
        .collect();

    let mut coeff: HashMap<(u32, u32), u128> = HashMap::new();
    for s in params.s_range() {
        for r in params.r_range_for(s) {
            coeff.insert((s, r), to_u128(&count_c(s, t, r, k, q)?)?);
        }
    }

    let blocks: Vec<(&Subspace, u64)> = design.blocks().iter().map(|(b, &m)| (b, m)).collect();
    let coverage = blocks
        .par_iter()
        .try_fold(Coverage::new, |mut acc, &(y, mult)| -> Result<Coverage, DesignError> {
            let r = y.dim() as u32;
            for s in params.s_range() {
                let Some(&c) = coeff.get(&(s, r)) else { continue };
                let add = c.checked_mul(mult as u128).ok_or(DesignError::Overflow)?;
                for x in y.subspaces(s as usize)? {
                    let slot = acc.entry(x).or_insert(0);
                    *slot = slot.checked_add(add).ok_or(DesignError::Overflow)?;
                }
            }
            Ok(acc)
        })
        .try_reduce(Coverage::new, merge)?;

    let mut violations = Vec::new();
    let mut equations_checked = 0u64;
    for s in params.s_range() {
        let target = to_u128(&params.target(s))?;
        let xs: Vec<Subspace> = enumerate_subspaces(field, m as usize, s as usize)?.collect();
        equations_checked += xs.len() as u64;
        let bad: Vec<Violation> = xs
            .into_par_iter()
            .filter_map(|x| {
                let got = coverage.get(&x).copied().unwrap_or(0);
                (got != target).then(|| Violation {
                    subspace: x,
                    expected: BigInt::from(target),
                    actual: BigInt::from(got),
                })
            })
            .collect();
        violations.extend(bad);
    }

    Ok(VerificationReport {
        params,
        passed: violations.is_empty() && invalid_blocks.is_empty(),
        equations_checked,
        violations,
        invalid_blocks,
        total_multiplicity: design.total_multiplicity(),
    })
}

fn require_pass(design: &DesignMultiset) -> Result<(), DesignError> {
    let report = verify(design)?;
    if report.passed {
        Ok(())
    } else {
        Err(DesignError::Unverified(report.to_string()))
    }
}

/// Punctures every block once; multiplicities of colliding images add up.
pub fn puncture_design(design: &DesignMultiset) -> Result<DesignMultiset, DesignError> {
    let params = design
        .params()
        .punctured()
        .ok_or_else(|| DesignError::Params("cannot puncture a design with m = 0".into()))?;
    let mut out = DesignMultiset::new(params)?;
    for (b, &mult) in design.blocks() {
        out.add(b.puncture(1)?, mult)?;
    }
    Ok(out)
}

/// `true` iff every block has multiplicity one.
pub fn distinctness_check(design: &DesignMultiset) -> bool {
    design.blocks().values().all(|&m| m == 1)
}

/// A set of `k`-subspaces of `F_q^n`; [`SteinerSystem::check`] tests the Steiner property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteinerSystem {
    field: Field,
    t: u32,
    k: u32,
    n: u32,
    blocks: BTreeSet<Subspace>,
}

impl SteinerSystem {
    pub fn new(
        field: Field,
        t: u32,
        k: u32,
        n: u32,
        blocks: impl IntoIterator<Item = Subspace>,
    ) -> Result<Self, DesignError> {
        if !(t < k && k <= n) {
            return Err(DesignError::Params(format!("need t < k <= n, got t={t} k={k} n={n}")));
        }
        let blocks: BTreeSet<Subspace> = blocks.into_iter().collect();
        for b in &blocks {
            if b.field() != field || b.ambient() != n as usize || b.dim() != k as usize {
                return Err(DesignError::NotSteiner(format!(
                    "block {b:?} is not a {k}-subspace of F_{}^{n}",
                    field.order()
                )));
            }
        }
        Ok(SteinerSystem { field, t, k, n, blocks })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn blocks(&self) -> &BTreeSet<Subspace> {
        &self.blocks
    }

    /// Every `t`-subspace lies in exactly one block.
    pub fn check(&self) -> Result<(), DesignError> {
        let q = self.field.order();
        let mut seen: HashMap<Subspace, u32> = HashMap::new();
        for b in &self.blocks {
            for x in b.subspaces(self.t as usize)? {
                let c = seen.entry(x).or_insert(0);
                *c += 1;
                if *c > 1 {
                    return Err(DesignError::NotSteiner(format!(
                        "{}-subspace {} lies in more than one block",
                        self.t,
                        b
                    )));
                }
            }
        }
        let expected = gaussian(self.n, self.t, q);
        if BigUint::from(seen.len()) != expected {
            return Err(DesignError::NotSteiner(format!(
                "{} of {} {}-subspaces covered",
                seen.len(),
                expected,
                self.t
            )));
        }
        Ok(())
    }

    /// The system as an unpunctured design (`m = n`), when `t >= 1`.
    pub fn as_design(&self) -> Result<DesignMultiset, DesignError> {
        let params = DesignParams::new(self.field.order(), self.t, self.k, self.n, self.n);
        DesignMultiset::from_blocks(params, self.blocks.iter().map(|b| (b.clone(), 1)))
    }

    pub fn apply_transform(&self, ops: &[ColumnOp]) -> Result<Self, DesignError> {
        let map = ColumnOp::compose(self.field, self.n as usize, ops)?;
        let blocks: Vec<Subspace> = self.blocks.iter().map(|b| b.map_linear(&map)).collect();
        SteinerSystem::new(self.field, self.t, self.k, self.n, blocks)
    }
}

/// Punctures a Steiner system `S_q(t,k,n)` once.
///
/// Returns every image as a design over `F_q^{n-1}` together with the blocks
/// whose image lost a dimension, which form an `S_q(t-1,k-1,n-1)`. Checks that
/// every `t`-subspace outside those blocks lies in exactly `q^t` of the
/// `k`-dimensional images and that covered ones lie in none.
pub fn puncture_steiner(
    system: &SteinerSystem,
) -> Result<(DesignMultiset, SteinerSystem), DesignError> {
    system.check()?;
    let (f, t, k, n) = (system.field, system.t, system.k, system.n);
    let q = f.order();
    let params = DesignParams::new(q, t, k, n, n - 1);
    let mut images = DesignMultiset::new(params)?;
    let mut lower = Vec::new();
    for b in &system.blocks {
        let img = b.puncture(1)?;
        if img.dim() + 1 == k as usize {
            lower.push(img.clone());
        }
        images.add(img, 1)?;
    }
    let lower = SteinerSystem::new(f, t - 1, k - 1, n - 1, lower)?;
    lower.check().map_err(|e| DesignError::Postcondition(format!("punctured part: {e}")))?;

    let mut count: HashMap<Subspace, u64> = HashMap::new();
    for (img, &mult) in images.blocks() {
        if img.dim() == k as usize {
            for x in img.subspaces(t as usize)? {
                *count.entry(x).or_insert(0) += mult;
            }
        }
    }
    let q_t = (q as u64).pow(t);
    for x in enumerate_subspaces(f, (n - 1) as usize, t as usize)? {
        let mut covered = false;
        for b in lower.blocks() {
            if b.contains(&x)? {
                covered = true;
                break;
            }
        }
        let got = count.get(&x).copied().unwrap_or(0);
        let want = if covered { 0 } else { q_t };
        if got != want {
            return Err(DesignError::Postcondition(format!(
                "{t}-subspace {x} appears {got} times among the {k}-dimensional images, expected {want}"
            )));
        }
    }
    Ok((images, lower))
}

/// Column operation `v_j <- sum_i coeffs[i] * v_i` on every vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnOp {
    pub column: usize,
    pub coeffs: Vec<u8>,
}

impl ColumnOp {
    pub fn new(column: usize, coeffs: Vec<u8>) -> Self {
        ColumnOp { column, coeffs }
    }

    fn check(&self, field: Field, m: usize) -> Result<(), DesignError> {
        if self.coeffs.len() != m {
            return Err(DesignError::ColumnOp(format!(
                "{} coefficients given for {m} columns",
                self.coeffs.len()
            )));
        }
        if self.column >= m {
            return Err(DesignError::ColumnOp(format!("column {} out of range", self.column)));
        }
        if let Some(&x) = self.coeffs.iter().find(|&&x| x as u32 >= field.order()) {
            return Err(DesignError::ColumnOp(format!("{x} is not an element of {field}")));
        }
        if self.coeffs[self.column] == 0 {
            return Err(SubspaceError::SingularColumnOp(self.column).into());
        }
        Ok(())
    }

    fn apply(&self, field: Field, m: usize, v: u64) -> u64 {
        let x = self
            .coeffs
            .iter()
            .enumerate()
            .fold(0u8, |acc, (i, &c)| field.add(acc, field.mul(c, field.coord(v, m, i))));
        field.with_coord(v, m, self.column, x)
    }

    /// Validates `ops` and returns the composite map, first op applied first.
    pub fn compose(
        field: Field,
        m: usize,
        ops: &[ColumnOp],
    ) -> Result<impl Fn(u64) -> u64 + '_, DesignError> {
        for op in ops {
            op.check(field, m)?;
        }
        Ok(move |v| ops.iter().fold(v, |v, op| op.apply(field, m, v)))
    }
}

/// Targets that [`apply_transform`] accepts.
pub trait Transformable: Sized {
    fn transformed(&self, ops: &[ColumnOp]) -> Result<Self, DesignError>;
}

impl Transformable for DesignMultiset {
    fn transformed(&self, ops: &[ColumnOp]) -> Result<Self, DesignError> {
        self.apply_transform(ops)
    }
}

impl Transformable for SteinerSystem {
    fn transformed(&self, ops: &[ColumnOp]) -> Result<Self, DesignError> {
        self.apply_transform(ops)
    }
}

pub fn apply_transform<T: Transformable>(target: &T, ops: &[ColumnOp]) -> Result<T, DesignError> {
    target.transformed(ops)
}

/// A partition of the nonzero vectors of `F_q^n` into 2-subspaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spread {
    field: Field,
    ambient: u32,
    lines: BTreeSet<Subspace>,
}

impl Spread {
    pub fn new(
        field: Field,
        ambient: u32,
        lines: impl IntoIterator<Item = Subspace>,
    ) -> Result<Self, DesignError> {
        let lines: BTreeSet<Subspace> = lines.into_iter().collect();
        let q = field.order() as u64;
        let mut seen = std::collections::HashSet::new();
        for l in &lines {
            if l.field() != field || l.ambient() != ambient as usize || l.dim() != 2 {
                return Err(DesignError::NotSpread(format!("{l:?} is not a 2-subspace of F^{ambient}")));
            }
            for v in l.nonzero_vectors() {
                if !seen.insert(v) {
                    return Err(DesignError::NotSpread(format!(
                        "vector {} lies on two lines",
                        crate::subspace::format_rows(field, ambient as usize, &[v])
                    )));
                }
            }
        }
        let total = q.checked_pow(ambient).map(|x| x - 1);
        if total != Some(seen.len() as u64) {
            return Err(DesignError::NotSpread(format!(
                "{} lines cover {} nonzero vectors",
                lines.len(),
                seen.len()
            )));
        }
        Ok(Spread { field, ambient, lines })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn ambient(&self) -> u32 {
        self.ambient
    }

    pub fn lines(&self) -> &BTreeSet<Subspace> {
        &self.lines
    }

    pub fn as_steiner(&self) -> Result<SteinerSystem, DesignError> {
        SteinerSystem::new(self.field, 1, 2, self.ambient, self.lines.iter().cloned())
    }
}

/// Multiplication by `w` on `F_q^2` viewed as `F_q[w]/(w^2 - a w - b)`.
fn quadratic_extension(field: Field) -> (u8, u8) {
    for a in field.elements() {
        for b in field.elements() {
            // x^2 - a x - b has no root in F_q
            let irreducible = field.elements().all(|x| {
                let v = field.sub(field.sub(field.mul(x, x), field.mul(a, x)), b);
                v != 0
            });
            if irreducible {
                return (a, b);
            }
        }
    }
    unreachable!("every finite field has an irreducible quadratic")
}

/// The Desarguesian spread: the 1-dimensional `F_{q^2}`-subspaces of `F_q^n`.
pub fn build_spread(q: u32, n: u32) -> Result<Spread, DesignError> {
    if n % 2 != 0 || n == 0 {
        return Err(DesignError::OddDimension(n));
    }
    let f = Field::new(q)?;
    let m = n as usize;
    let (a, b) = quadratic_extension(f);
    let omega = |v: u64| {
        let mut out = 0u64;
        for i in 0..m / 2 {
            let (x, y) = (f.coord(v, m, 2 * i), f.coord(v, m, 2 * i + 1));
            // w (x + y w) = b y + (x + a y) w
            out = f.with_coord(out, m, 2 * i, f.mul(b, y));
            out = f.with_coord(out, m, 2 * i + 1, f.add(x, f.mul(a, y)));
        }
        out
    };
    let mut lines = BTreeSet::new();
    for p in enumerate_subspaces(f, m, 1)? {
        let v = p.rows()[0];
        lines.insert(rref(f, m, &[v, omega(v)])?);
    }
    Spread::new(f, n, lines)
}

/// A partition of all 2-subspaces of `F_q^n` into spreads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parallelism {
    field: Field,
    ambient: u32,
    spreads: Vec<Spread>,
}

impl Parallelism {
    pub fn new(field: Field, ambient: u32, spreads: Vec<Spread>) -> Result<Self, DesignError> {
        let mut seen = BTreeSet::new();
        for s in &spreads {
            if s.field != field || s.ambient != ambient {
                return Err(DesignError::NotParallelism("spread over a different space".into()));
            }
            for l in &s.lines {
                if !seen.insert(l.clone()) {
                    return Err(DesignError::NotParallelism(format!("line {l} lies in two spreads")));
                }
            }
        }
        let expected = gaussian(ambient, 2, field.order());
        if BigUint::from(seen.len()) != expected {
            return Err(DesignError::NotParallelism(format!(
                "{} of {} lines covered",
                seen.len(),
                expected
            )));
        }
        Ok(Parallelism { field, ambient, spreads })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn ambient(&self) -> u32 {
        self.ambient
    }

    pub fn spreads(&self) -> &[Spread] {
        &self.spreads
    }
}

/// Where [`build_parallelism`] gets its parallelism from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParallelismSource {
    /// Backtracking search with a node budget; for `q = 2` a cyclic search
    /// follows when plain backtracking runs out.
    Search { node_budget: u64 },
    /// A parallelism file.
    File(PathBuf),
    /// Search when `q = 2`, then fall back to `$QSTEINER_DATA/parallelism-q<q>-n<n>.txt`.
    Auto,
}

pub const DEFAULT_NODE_BUDGET: u64 = 200_000;

/// File name looked up under `$QSTEINER_DATA`.
pub fn data_file_name(q: u32, n: u32) -> String {
    format!("parallelism-q{q}-n{n}.txt")
}

pub fn build_parallelism(q: u32, n: u32, source: &ParallelismSource) -> Result<Parallelism, DesignError> {
    match source {
        ParallelismSource::Search { node_budget } => search_any(q, n, *node_budget),
        ParallelismSource::File(path) => load_parallelism(q, n, path),
        ParallelismSource::Auto => {
            let searched = if q == 2 { Some(search_any(q, n, DEFAULT_NODE_BUDGET)) } else { None };
            match searched {
                Some(Ok(p)) => Ok(p),
                other => {
                    let Some(dir) = std::env::var_os("QSTEINER_DATA") else {
                        return match other {
                            Some(Err(e)) => Err(e),
                            _ => Err(DesignError::Unsupported(format!(
                                "no search for q={q}; set QSTEINER_DATA to a directory with {}",
                                data_file_name(q, n)
                            ))),
                        };
                    };
                    load_parallelism(q, n, &PathBuf::from(dir).join(data_file_name(q, n)))
                }
            }
        }
    }
}

fn load_parallelism(q: u32, n: u32, path: &PathBuf) -> Result<Parallelism, DesignError> {
    let load = |msg: String| DesignError::Load { path: path.clone(), msg };
    let text = std::fs::read_to_string(path).map_err(|e| load(e.to_string()))?;
    let par = crate::io::parse_parallelism(&text).map_err(|e| load(e.to_string()))?;
    if par.field.order() != q || par.ambient != n {
        return Err(load(format!(
            "file holds a parallelism of F_{}^{}, wanted F_{q}^{n}",
            par.field.order(),
            par.ambient
        )));
    }
    Ok(par)
}

struct Search {
    line_points: Vec<Vec<usize>>,
    through: Vec<Vec<usize>>,
    used: Vec<bool>,
    covered: Vec<bool>,
    current: Vec<usize>,
    done: Vec<Vec<usize>>,
    spread_size: usize,
    nodes: u64,
    budget: u64,
}

struct OutOfBudget;

impl Search {
    fn take(&mut self, l: usize) {
        self.used[l] = true;
        for &p in &self.line_points[l] {
            self.covered[p] = true;
        }
        self.current.push(l);
    }

    fn untake(&mut self, l: usize) {
        self.used[l] = false;
        for &p in &self.line_points[l] {
            self.covered[p] = false;
        }
        self.current.pop();
    }

    fn next_spread(&mut self) -> Result<bool, OutOfBudget> {
        let Some(first) = self.used.iter().position(|&u| !u) else {
            return Ok(true);
        };
        self.take(first);
        if self.fill()? {
            return Ok(true);
        }
        self.untake(first);
        Ok(false)
    }

    fn fill(&mut self) -> Result<bool, OutOfBudget> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(OutOfBudget);
        }
        if self.current.len() == self.spread_size {
            let spread = std::mem::take(&mut self.current);
            let covered = std::mem::replace(&mut self.covered, vec![false; self.through.len()]);
            self.done.push(spread);
            if self.next_spread()? {
                return Ok(true);
            }
            self.current = self.done.pop().expect("pushed above");
            self.covered = covered;
            return Ok(false);
        }
        // the uncovered point with the fewest usable lines
        let mut best: Option<Vec<usize>> = None;
        for p in (0..self.through.len()).filter(|&p| !self.covered[p]) {
            let cands: Vec<usize> = self.through[p]
                .iter()
                .copied()
                .filter(|&l| !self.used[l] && self.line_points[l].iter().all(|&x| !self.covered[x]))
                .collect();
            if best.as_ref().is_none_or(|b| cands.len() < b.len()) {
                let empty = cands.is_empty();
                best = Some(cands);
                if empty {
                    break;
                }
            }
        }
        for l in best.unwrap_or_default() {
            self.take(l);
            if self.fill()? {
                return Ok(true);
            }
            self.untake(l);
        }
        Ok(false)
    }
}

/// Deterministic backtracking: each new spread starts from the first unused
/// line and is completed one point at a time, trying lines in canonical order.
pub fn search_parallelism(q: u32, n: u32, node_budget: u64) -> Result<Parallelism, DesignError> {
    if n % 2 != 0 || n == 0 {
        return Err(DesignError::OddDimension(n));
    }
    let f = Field::new(q)?;
    let m = n as usize;
    let points: Vec<Subspace> = enumerate_subspaces(f, m, 1)?.collect();
    let point_id: HashMap<&Subspace, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut lines: Vec<Subspace> = enumerate_subspaces(f, m, 2)?.collect();
    lines.sort();
    let line_points: Vec<Vec<usize>> = lines
        .iter()
        .map(|l| Ok(l.subspaces(1)?.map(|p| point_id[&p]).collect()))
        .collect::<Result<_, SubspaceError>>()?;
    let mut through = vec![Vec::new(); points.len()];
    for (l, pts) in line_points.iter().enumerate() {
        for &p in pts {
            through[p].push(l);
        }
    }
    let spread_size = points.len() / (q as usize + 1);
    let mut search = Search {
        line_points,
        through,
        used: vec![false; lines.len()],
        covered: vec![false; points.len()],
        current: Vec::new(),
        done: Vec::new(),
        spread_size,
        nodes: 0,
        budget: node_budget,
    };
    match search.next_spread() {
        Ok(true) => {
            let spreads = search
                .done
                .iter()
                .map(|s| Spread::new(f, n, s.iter().map(|&l| lines[l].clone())))
                .collect::<Result<Vec<_>, _>>()?;
            Parallelism::new(f, n, spreads)
        }
        Ok(false) => Err(DesignError::SearchFailed { q, n, nodes: search.nodes, exhausted: true }),
        Err(OutOfBudget) => Err(DesignError::SearchFailed { q, n, nodes: search.nodes, exhausted: false }),
    }
}

/// Multiplication by `x` in `F_2[x]/(f)` for the first primitive `f` of degree `d`.
fn primitive_multiplier(d: u32) -> impl Fn(u64) -> u64 {
    let order = (1u64 << d) - 1;
    let times_x = move |f: u64, a: u64| {
        let a = a << 1;
        if a >> d & 1 == 1 { a ^ f } else { a }
    };
    let f = ((1u64 << d) + 1..1u64 << (d + 1))
        .step_by(2)
        .find(|&f| {
            let mut a = 1u64;
            for i in 1..=order {
                a = times_x(f, a);
                if a == 1 {
                    return i == order;
                }
            }
            false
        })
        .expect("primitive polynomials exist in every degree");
    move |a| times_x(f, a)
}

struct CyclicSearch {
    line_points: Vec<Vec<usize>>,
    through: Vec<Vec<usize>>,
    orbit: Vec<usize>,
    orbit_used: Vec<bool>,
    covered: Vec<bool>,
    chosen: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl CyclicSearch {
    fn fill(&mut self) -> Result<bool, OutOfBudget> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(OutOfBudget);
        }
        let mut best: Option<Vec<usize>> = None;
        for p in (0..self.through.len()).filter(|&p| !self.covered[p]) {
            let cands: Vec<usize> = self.through[p]
                .iter()
                .copied()
                .filter(|&l| {
                    !self.orbit_used[self.orbit[l]] && self.line_points[l].iter().all(|&x| !self.covered[x])
                })
                .collect();
            if best.as_ref().is_none_or(|b| cands.len() < b.len()) {
                let empty = cands.is_empty();
                best = Some(cands);
                if empty {
                    break;
                }
            }
        }
        let Some(cands) = best else { return Ok(true) };
        for l in cands {
            self.set(l, true);
            if self.fill()? {
                return Ok(true);
            }
            self.set(l, false);
        }
        Ok(false)
    }

    fn set(&mut self, l: usize, on: bool) {
        self.orbit_used[self.orbit[l]] = on;
        for &p in &self.line_points[l] {
            self.covered[p] = on;
        }
        if on {
            self.chosen.push(l);
        } else {
            self.chosen.pop();
        }
    }
}

/// Cyclic parallelism of `F_2^n`: `sigma` multiplies the first `n - 1`
/// coordinates by a primitive element of `F_{2^{n-1}}` and fixes the last one.
/// Every line orbit of `sigma` has full length, so a spread meeting each orbit
/// once yields a parallelism as its `2^{n-1} - 1` images.
pub fn search_cyclic_parallelism(n: u32, node_budget: u64) -> Result<Parallelism, DesignError> {
    if n % 2 != 0 || n < 4 {
        return Err(DesignError::OddDimension(n));
    }
    let f = Field::new(2)?;
    let m = n as usize;
    let mul = primitive_multiplier(n - 1);
    let sigma = |v: u64| (mul(v >> 1) << 1) | (v & 1);
    let period = (1usize << (n - 1)) - 1;

    let mut lines: Vec<Subspace> = enumerate_subspaces(f, m, 2)?.collect();
    lines.sort();
    let line_id: HashMap<&Subspace, usize> = lines.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let mut orbit = vec![usize::MAX; lines.len()];
    let mut orbits = 0;
    for start in 0..lines.len() {
        if orbit[start] != usize::MAX {
            continue;
        }
        let mut l = lines[start].clone();
        for _ in 0..period {
            orbit[line_id[&l]] = orbits;
            l = l.map_linear(sigma);
        }
        if l != lines[start] {
            return Err(DesignError::Postcondition("line orbit is not of full length".into()));
        }
        orbits += 1;
    }

    let points: Vec<u64> = (1..1u64 << n).collect();
    let line_points: Vec<Vec<usize>> =
        lines.iter().map(|l| l.nonzero_vectors().iter().map(|&v| v as usize - 1).collect()).collect();
    let mut through = vec![Vec::new(); points.len()];
    for (l, pts) in line_points.iter().enumerate() {
        for &p in pts {
            through[p].push(l);
        }
    }
    let mut search = CyclicSearch {
        line_points,
        through,
        orbit,
        orbit_used: vec![false; orbits],
        covered: vec![false; points.len()],
        chosen: Vec::new(),
        nodes: 0,
        budget: node_budget,
    };
    match search.fill() {
        Ok(true) => {
            let mut spread: Vec<Subspace> = search.chosen.iter().map(|&l| lines[l].clone()).collect();
            let mut spreads = Vec::with_capacity(period);
            for _ in 0..period {
                spreads.push(Spread::new(f, n, spread.iter().cloned())?);
                spread = spread.iter().map(|l| l.map_linear(sigma)).collect();
            }
            Parallelism::new(f, n, spreads)
        }
        Ok(false) => Err(DesignError::SearchFailed { q: 2, n, nodes: search.nodes, exhausted: true }),
        Err(OutOfBudget) => Err(DesignError::SearchFailed { q: 2, n, nodes: search.nodes, exhausted: false }),
    }
}

/// Plain backtracking, then for `q = 2` the cyclic search, each with `node_budget`.
fn search_any(q: u32, n: u32, node_budget: u64) -> Result<Parallelism, DesignError> {
    match search_parallelism(q, n, node_budget) {
        Err(DesignError::SearchFailed { .. }) if q == 2 => search_cyclic_parallelism(n, node_budget),
        other => other,
    }
}

/// Gives every `r`-subspace of `F_q^m` multiplicity `assignment[r - r_min]`.
pub fn construct_uniform_design(
    params: DesignParams,
    assignment: &[Rational],
) -> Result<DesignMultiset, DesignError> {
    params.check().map_err(DesignError::Params)?;
    let rs: Vec<u32> = params.r_range().collect();
    if assignment.len() != rs.len() {
        return Err(DesignError::Assignment(format!(
            "{} values given for dimensions {}..={}",
            assignment.len(),
            params.r_range().start(),
            params.r_range().end()
        )));
    }
    let f = Field::new(params.q)?;
    let mut design = DesignMultiset::new(params)?;
    for (&r, x) in rs.iter().zip(assignment) {
        if !x.is_integer() {
            return Err(DesignError::Assignment(format!("X{r} = {x} is not an integer")));
        }
        let mult = x
            .to_integer()
            .to_i128()
            .filter(|&v| v >= 0)
            .ok_or_else(|| DesignError::Assignment(format!("X{r} = {x} is negative or too large")))?;
        let mult = u64::try_from(mult).map_err(|_| DesignError::Overflow)?;
        if mult == 0 {
            continue;
        }
        for y in enumerate_subspaces(f, params.m as usize, r as usize)? {
            design.add(y, mult)?;
        }
    }
    Ok(design)
}

/// The uniform `S_q(2,3,7;4)` with multiplicities `(1, 0, q^2, q^4 (q-1))`.
pub fn construct_fano_m4(q: u32) -> Result<DesignMultiset, DesignError> {
    let sol = uniform_family_solution(UniformFamily::Fano, q, 3)?;
    construct_uniform_design(sol.params, &sol.as_rationals())
}

/// The six-part `S_q(3,4,8;5)`.
pub fn construct_s3485(q: u32) -> Result<DesignMultiset, DesignError> {
    let f = Field::new(q)?;
    let params = DesignParams::new(q, 3, 4, 8, 5);
    let qq = q as u64;
    let mut design = DesignMultiset::new(params)?;
    design.add(Subspace::null(f, 4)?.extension_raise_dim()?, 1)?;
    for r in 2..=4usize {
        for y in enumerate_subspaces(f, 5, r)? {
            let lost = y.puncture(1)?.dim() < r;
            let mult = match (r, lost) {
                (2, false) => 1,
                (2, true) => continue,
                (3, true) => qq.pow(4),
                (3, false) => qq * (qq.pow(3) - 1),
                (4, true) => qq.pow(7) * (qq - 1),
                (4, false) => qq.pow(8) - qq.pow(7) + qq.pow(3),
                _ => unreachable!(),
            };
            design.add(y, mult)?;
        }
    }
    require_pass(&design)?;
    Ok(design)
}

fn check_parallelism(par: &Parallelism, q: u32, n: u32) -> Result<(), DesignError> {
    if par.field.order() != q || par.ambient != n {
        return Err(DesignError::NotParallelism(format!(
            "need a parallelism of F_{q}^{n}, got F_{}^{}",
            par.field.order(),
            par.ambient
        )));
    }
    Ok(())
}

/// `S_q(2,3,7;5)` from a parallelism of `F_q^4`.
///
/// The first `q^2` spreads form set A, the remaining `q + 1` set B.
pub fn construct_fano_m5(q: u32, parallelism: &Parallelism) -> Result<DesignMultiset, DesignError> {
    check_parallelism(parallelism, q, 4)?;
    let f = Field::new(q)?;
    let qq = q as u64;
    let a_size = (q * q) as usize;
    if parallelism.spreads.len() != a_size + q as usize + 1 {
        return Err(DesignError::NotParallelism(format!(
            "{} spreads, expected {}",
            parallelism.spreads.len(),
            a_size + q as usize + 1
        )));
    }
    let mut design = DesignMultiset::new(DesignParams::new(q, 2, 3, 7, 5))?;
    design.add(Subspace::null(f, 4)?.extension_raise_dim()?, 1)?;
    for y in enumerate_subspaces(f, 4, 3)? {
        for e in y.extensions_same_dim()? {
            design.add(e, qq * (qq - 1))?;
        }
    }
    let (a, b) = parallelism.spreads.split_at(a_size);
    for line in a.iter().flat_map(|s| s.lines.iter()) {
        design.add(line.extension_raise_dim()?, qq * qq)?;
    }
    for line in b.iter().flat_map(|s| s.lines.iter()) {
        for e in line.extensions_same_dim()? {
            design.add(e, 1)?;
        }
    }
    require_pass(&design)?;
    Ok(design)
}

/// `S_2(2,3,2k+1;k+1+r)` with `r = floor((k+1)/3)`, from a parallelism of
/// `F_2^{k+1}` and a base `S_2(2,3,k;r)`.
///
/// Spreads are grouped in order: `2^{k-r}` spreads for each nonzero
/// `v in F_2^r` (taken in increasing integer order), then the last
/// `2^{k-r} - 1` spreads for the zero vector.
pub fn construct_recursive(
    q: u32,
    k: u32,
    parallelism: &Parallelism,
    base: &DesignMultiset,
) -> Result<DesignMultiset, DesignError> {
    if q != 2 {
        return Err(DesignError::Unsupported("the recursive construction is implemented for q = 2 only".into()));
    }
    if !(k >= 3 && (k % 6 == 1 || k % 6 == 3)) {
        return Err(DesignError::Params(format!("need k = 1 or 3 (mod 6) and k >= 3, got {k}")));
    }
    let r = (k + 1) / 3;
    check_parallelism(parallelism, 2, k + 1)?;
    let base_params = DesignParams::new(2, 2, 3, k, r);
    if base.params() != base_params {
        return Err(DesignError::Params(format!("base must be {base_params}, got {}", base.params())));
    }
    require_pass(base)?;
    let exp = |e: u32| -> Result<u64, DesignError> {
        2u64.checked_pow(e).ok_or(DesignError::Overflow)
    };
    let (m0, m1) = ((k + 1) as usize, (k + 1 + r) as usize);
    let f = Field::new(2)?;
    let mut design = DesignMultiset::new(DesignParams::new(2, 2, 3, 2 * k + 1, k + 1 + r))?;

    let zero = Subspace::null(f, m0)?;
    for (b, &mult) in base.blocks() {
        design.add(zero.direct_sum_tail(b)?, mult)?;
    }
    let mult3 = exp(k + 1 - 3 * r)?;
    for y in enumerate_subspaces(f, m0, 3)? {
        for e in y.extensions(3, m1)? {
            design.add(e, mult3)?;
        }
    }

    let per_vector = exp(k - r)? as usize;
    let spreads = parallelism.spreads();
    if spreads.len() != (exp(k)? - 1) as usize {
        return Err(DesignError::NotParallelism(format!("{} spreads", spreads.len())));
    }
    let nonzero_sets = spreads[..spreads.len() - (per_vector - 1)].chunks(per_vector);
    let zero_set = &spreads[spreads.len() - (per_vector - 1)..];
    let mult_v = exp(k - 1 - 2 * (r - 1))?;
    for (v, group) in (1u64..).zip(nonzero_sets) {
        // (0|v) as a packed vector of F_2^{m1}
        let tail = v;
        for line in group.iter().flat_map(|s| s.lines.iter()) {
            for w in line.extensions(3, m1)?.filter(|w| w.contains_vector(tail)) {
                design.add(w, mult_v)?;
            }
        }
    }
    let mult_0 = exp(k - 1 - 2 * r)?;
    for line in zero_set.iter().flat_map(|s| s.lines.iter()) {
        for e in line.extensions(2, m1)? {
            design.add(e, mult_0)?;
        }
    }
    require_pass(&design)?;
    Ok(design)
}

/// The single-block base `S_2(2,3,3;1)` used by [`construct_recursive`] at `k = 3`.
pub fn trivial_base(q: u32) -> Result<DesignMultiset, DesignError> {
    let f = Field::new(q)?;
    DesignMultiset::from_blocks(DesignParams::new(q, 2, 3, 3, 1), [(Subspace::whole(f, 1)?, 1)])
}
