//! Covering equations for punctured Steiner systems and an exact solver.
//!
//! Every `s`-subspace `X` of `F_q^m` (for `s` in [`DesignParams::s_range`])
//! contributes the equation
//!
//! ```text
//! N(s,m; t,n) = sum over blocks Y containing X of  C(s,t; dim Y,k) * a_Y
//! ```
//!
//! The [`FullSystem`] keeps one unknown per subspace; the [`UniformSystem`]
//! assumes all subspaces of one dimension share a multiplicity `X_r` and keeps
//! one equation per dimension `s`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::counting::{count_c, count_d, count_n, gaussian, CountError};
use crate::designs::{DesignMultiset, DesignParams, VerificationReport, Violation};
use crate::field::Field;
use crate::subspace::{enumerate_subspaces, Subspace};

pub type Rational = BigRational;

/// Largest full system that will be materialized.
pub const FULL_SYSTEM_GUARD: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquationError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("full system would have {0} equations, above the guard of 100000")]
    TooLarge(BigUint),
    #[error("unknown variable {0:?} in pin")]
    UnknownVariable(String),
    #[error("design parameters {design} do not match system parameters {system}")]
    ParamMismatch { design: DesignParams, system: DesignParams },
    #[error("unknown family {0:?}")]
    UnknownFamily(String),
    #[error("k = {k} violates the congruence condition of family {family}")]
    Congruence { family: String, k: u32 },
    #[error("closed form is not a nonnegative integer for {components:?}")]
    NonIntegral { components: Vec<String> },
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
    #[error(transparent)]
    Subspace(#[from] crate::subspace::SubspaceError),
}

fn to_int(x: BigUint) -> BigInt {
    BigInt::from(x)
}

/// One equation per dimension `s`, one unknown `X_r` per dimension `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSystem {
    pub params: DesignParams,
    pub s_values: Vec<u32>,
    pub r_values: Vec<u32>,
    /// `matrix[i][j]` is the coefficient of `X_{r_values[j]}` in the equation for `s_values[i]`.
    pub matrix: Vec<Vec<BigInt>>,
    pub rhs: Vec<BigInt>,
}

/// Uniform equations: `N = sum_r D(s,r,m) C(s,t;r,k) X_r`.
pub fn build_uniform(params: DesignParams) -> Result<UniformSystem, EquationError> {
    params.check_system().map_err(EquationError::Params)?;
    let DesignParams { q, t, k, n, m } = params;
    let s_values: Vec<u32> = params.s_range().collect();
    let r_values: Vec<u32> = params.r_range().collect();
    let mut matrix = Vec::with_capacity(s_values.len());
    let mut rhs = Vec::with_capacity(s_values.len());
    for &s in &s_values {
        let row = r_values
            .iter()
            .map(|&r| -> Result<BigInt, EquationError> {
                if params.r_range_for(s).contains(&r) {
                    Ok(to_int(count_d(s, r, m, q)? * count_c(s, t, r, k, q)?))
                } else {
                    Ok(BigInt::zero())
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        matrix.push(row);
        rhs.push(to_int(count_n(s, m, t, n, q)?));
    }
    Ok(UniformSystem { params, s_values, r_values, matrix, rhs })
}

impl UniformSystem {
    pub fn variable_name(r: u32) -> String {
        format!("X{r}")
    }
}

/// One equation per `s`-subspace, one unknown `a_Y` per `r`-subspace.
#[derive(Debug, Clone)]
pub struct FullSystem {
    pub params: DesignParams,
    pub field: Field,
    /// The `s`-subspaces, in canonical order.
    pub equations: Vec<Subspace>,
    /// The `r`-subspaces, in canonical order.
    pub variables: Vec<Subspace>,
    /// Sparse rows: `(variable index, coefficient)`.
    pub rows: Vec<Vec<(usize, BigInt)>>,
    pub rhs: Vec<BigInt>,
}

pub fn build_full(params: DesignParams) -> Result<FullSystem, EquationError> {
    params.check_system().map_err(EquationError::Params)?;
    let DesignParams { q, t, k, n, m } = params;
    let eq_count: BigUint = params.s_range().map(|s| gaussian(m, s, q)).sum();
    let var_count: BigUint = params.r_range().map(|r| gaussian(m, r, q)).sum();
    let guard = BigUint::from(FULL_SYSTEM_GUARD);
    if eq_count > guard || var_count > guard {
        return Err(EquationError::TooLarge(eq_count));
    }
    let field = Field::new(q)?;
    let mut equations = Vec::new();
    let mut rhs = Vec::new();
    for s in params.s_range() {
        let target = to_int(count_n(s, m, t, n, q)?);
        let mut xs: Vec<Subspace> = enumerate_subspaces(field, m as usize, s as usize)?.collect();
        xs.sort();
        rhs.extend(std::iter::repeat_n(target, xs.len()));
        equations.extend(xs);
    }
    let index: HashMap<&Subspace, usize> = equations.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let mut variables = Vec::new();
    for r in params.r_range() {
        let mut ys: Vec<Subspace> = enumerate_subspaces(field, m as usize, r as usize)?.collect();
        ys.sort();
        variables.extend(ys);
    }
    let mut rows: Vec<Vec<(usize, BigInt)>> = vec![Vec::new(); equations.len()];
    for (j, y) in variables.iter().enumerate() {
        let r = y.dim() as u32;
        for s in params.s_range() {
            if !params.r_range_for(s).contains(&r) {
                continue;
            }
            let c = to_int(count_c(s, t, r, k, q)?);
            for x in y.subspaces(s as usize)? {
                rows[index[&x]].push((j, c.clone()));
            }
        }
    }
    for row in &mut rows {
        row.sort_by_key(|(j, _)| *j);
    }
    Ok(FullSystem { params, field, equations, variables, rows, rhs })
}

impl FullSystem {
    pub fn variable_name(y: &Subspace) -> String {
        format!("a[{}]", y)
    }

    /// Substitute the design's multiplicities and report every nonzero residual.
    pub fn evaluate(&self, design: &DesignMultiset) -> Result<VerificationReport, EquationError> {
        if design.params() != self.params {
            return Err(EquationError::ParamMismatch { design: design.params(), system: self.params });
        }
        let index: HashMap<&Subspace, usize> =
            self.variables.iter().enumerate().map(|(i, y)| (y, i)).collect();
        let mut values = vec![BigInt::zero(); self.variables.len()];
        let mut invalid_blocks = Vec::new();
        for (block, &mult) in design.blocks() {
            match index.get(block) {
                Some(&j) => values[j] = BigInt::from(mult),
                None => invalid_blocks.push((
                    block.clone(),
                    format!("dimension {} outside the admissible block range", block.dim()),
                )),
            }
        }
        let mut violations = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            let lhs: BigInt = row.iter().map(|(j, c)| c * &values[*j]).sum();
            if lhs != self.rhs[i] {
                violations.push(Violation {
                    subspace: self.equations[i].clone(),
                    expected: self.rhs[i].clone(),
                    actual: lhs,
                });
            }
        }
        Ok(VerificationReport {
            params: self.params,
            passed: violations.is_empty() && invalid_blocks.is_empty(),
            equations_checked: self.equations.len() as u64,
            violations,
            invalid_blocks,
            total_multiplicity: design.total_multiplicity(),
        })
    }
}

/// Anything that can be handed to [`solve`].
pub trait LinearSystem {
    fn variable_names(&self) -> Vec<String>;
    /// Dense coefficient matrix and right-hand side.
    fn dense(&self) -> (Vec<Vec<BigInt>>, Vec<BigInt>);
}

impl LinearSystem for UniformSystem {
    fn variable_names(&self) -> Vec<String> {
        self.r_values.iter().map(|&r| Self::variable_name(r)).collect()
    }

    fn dense(&self) -> (Vec<Vec<BigInt>>, Vec<BigInt>) {
        (self.matrix.clone(), self.rhs.clone())
    }
}

impl LinearSystem for FullSystem {
    fn variable_names(&self) -> Vec<String> {
        self.variables.iter().map(Self::variable_name).collect()
    }

    fn dense(&self) -> (Vec<Vec<BigInt>>, Vec<BigInt>) {
        let width = self.variables.len();
        let matrix = self
            .rows
            .iter()
            .map(|row| {
                let mut dense = vec![BigInt::zero(); width];
                for (j, c) in row {
                    dense[*j] = c.clone();
                }
                dense
            })
            .collect();
        (matrix, self.rhs.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Unique,
    Underdetermined,
    Inconsistent,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Unique => "unique",
            SolveStatus::Underdetermined => "underdetermined",
            SolveStatus::Inconsistent => "inconsistent",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub variables: Vec<String>,
    /// A solution (pinned values included). For underdetermined systems this is
    /// the particular solution with every free variable set to zero. Empty when
    /// inconsistent.
    pub values: Vec<Rational>,
    /// Indices of the free variables.
    pub free: Vec<usize>,
    /// Unique and entirely nonnegative integers.
    pub nonneg_integer: bool,
}

impl SolveOutcome {
    pub fn value(&self, name: &str) -> Option<&Rational> {
        let i = self.variables.iter().position(|v| v == name)?;
        self.values.get(i)
    }
}

/// Parses `X0=1`, `X2=7/3` style pins.
pub fn parse_pin(s: &str) -> Result<(String, Rational), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("pin {s:?} is not NAME=VALUE"))?;
    let value = Rational::from_str(value.trim()).map_err(|e| format!("bad value in {s:?}: {e}"))?;
    Ok((name.trim().to_string(), value))
}

fn is_nonneg_integer(x: &Rational) -> bool {
    x.is_integer() && !x.is_negative()
}

/// `X0 = [n-m choose t] / [k choose t]`: the 0-subspace multiplicity of a
/// uniform design, used to pin the otherwise free direction.
pub fn null_pin(params: DesignParams) -> (String, Rational) {
    let DesignParams { q, t, k, n, m } = params;
    let num = BigInt::from(gaussian(n - m, t, q));
    let den = BigInt::from(gaussian(k, t, q));
    (UniformSystem::variable_name(0), Rational::new(num, den))
}

/// Exact Gauss-Jordan elimination over the rationals after substituting pins.
pub fn solve<S: LinearSystem + ?Sized>(
    system: &S,
    pins: &[(String, Rational)],
) -> Result<SolveOutcome, EquationError> {
    let names = system.variable_names();
    let (matrix, rhs) = system.dense();
    let width = names.len();
    let mut pinned: Vec<Option<Rational>> = vec![None; width];
    for (name, value) in pins {
        let j = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| EquationError::UnknownVariable(name.clone()))?;
        pinned[j] = Some(value.clone());
    }
    let unknown: Vec<usize> = (0..width).filter(|&j| pinned[j].is_none()).collect();

    // reduced augmented matrix over the unpinned columns
    let mut rows: Vec<Vec<Rational>> = matrix
        .iter()
        .zip(&rhs)
        .map(|(row, b)| {
            let mut b = Rational::from_integer(b.clone());
            for (j, v) in pinned.iter().enumerate() {
                if let Some(v) = v {
                    b -= Rational::from_integer(row[j].clone()) * v;
                }
            }
            let mut out: Vec<Rational> =
                unknown.iter().map(|&j| Rational::from_integer(row[j].clone())).collect();
            out.push(b);
            out
        })
        .collect();

    let cols = unknown.len();
    let mut pivot_cols = Vec::new();
    let mut rank = 0;
    for col in 0..cols {
        // smallest nonzero numerator keeps entry growth down
        let pick = (rank..rows.len())
            .filter(|&i| !rows[i][col].is_zero())
            .min_by(|&a, &b| {
                let (x, y) = (&rows[a][col], &rows[b][col]);
                x.numer().abs().cmp(&y.numer().abs()).then(x.denom().cmp(y.denom()))
            });
        let Some(p) = pick else { continue };
        rows.swap(rank, p);
        let inv = rows[rank][col].recip();
        for x in rows[rank].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == rank || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
        pivot_cols.push(col);
        rank += 1;
    }

    let inconsistent = rows[rank..].iter().any(|row| !row[cols].is_zero());
    if inconsistent {
        return Ok(SolveOutcome {
            status: SolveStatus::Inconsistent,
            variables: names,
            values: Vec::new(),
            free: Vec::new(),
            nonneg_integer: false,
        });
    }

    let mut values: Vec<Rational> = pinned
        .iter()
        .map(|v| v.clone().unwrap_or_else(Rational::zero))
        .collect();
    for (i, &col) in pivot_cols.iter().enumerate() {
        values[unknown[col]] = rows[i][cols].clone();
    }
    let free: Vec<usize> = (0..cols)
        .filter(|c| !pivot_cols.contains(c))
        .map(|c| unknown[c])
        .collect();
    let status = if free.is_empty() { SolveStatus::Unique } else { SolveStatus::Underdetermined };
    let nonneg_integer = status == SolveStatus::Unique && values.iter().all(is_nonneg_integer);
    Ok(SolveOutcome { status, variables: names, values, free, nonneg_integer })
}

/// Exact `lhs - rhs` for every equation under `values`.
pub fn residuals<S: LinearSystem + ?Sized>(system: &S, values: &[Rational]) -> Vec<Rational> {
    let (matrix, rhs) = system.dense();
    matrix
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let lhs: Rational = row
                .iter()
                .zip(values)
                .map(|(c, v)| Rational::from_integer(c.clone()) * v)
                .sum();
            lhs - Rational::from_integer(b)
        })
        .collect()
}

/// Families of uniform designs with published closed-form multiplicities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniformFamily {
    /// `S_q(2,3,2k+1;k+1)`, `k = 1 or 3 (mod 6)`, `k >= 3`.
    Fano,
    /// `S_q(3,4,8;4)`.
    S3484,
    /// `S_q(4,5,11;6)`.
    S45116,
    /// `S_q(5,6,12;6)`.
    S56126,
    /// `S_q(3,4,2k;k)`; the last multiplicity is integral only at `k = 4`.
    S34Even,
}

impl FromStr for UniformFamily {
    type Err = EquationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "fano" | "2-3-2k+1" => UniformFamily::Fano,
            "3-4-8-4" => UniformFamily::S3484,
            "4-5-11-6" => UniformFamily::S45116,
            "5-6-12-6" => UniformFamily::S56126,
            "3-4-2k-k" => UniformFamily::S34Even,
            _ => return Err(EquationError::UnknownFamily(s.to_string())),
        })
    }
}

impl fmt::Display for UniformFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UniformFamily::Fano => "2-3-2k+1",
            UniformFamily::S3484 => "3-4-8-4",
            UniformFamily::S45116 => "4-5-11-6",
            UniformFamily::S56126 => "5-6-12-6",
            UniformFamily::S34Even => "3-4-2k-k",
        })
    }
}

/// Closed-form multiplicities of a uniform family member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySolution {
    pub params: DesignParams,
    /// `(r, X_r)` for every `r` in the block range.
    pub values: Vec<(u32, BigUint)>,
}

impl FamilySolution {
    pub fn as_rationals(&self) -> Vec<Rational> {
        self.values
            .iter()
            .map(|(_, v)| Rational::from_integer(BigInt::from(v.clone())))
            .collect()
    }
}

impl UniformFamily {
    pub fn params(self, q: u32, k: u32) -> DesignParams {
        match self {
            UniformFamily::Fano => DesignParams::new(q, 2, 3, 2 * k + 1, k + 1),
            UniformFamily::S3484 => DesignParams::new(q, 3, 4, 8, 4),
            UniformFamily::S45116 => DesignParams::new(q, 4, 5, 11, 6),
            UniformFamily::S56126 => DesignParams::new(q, 5, 6, 12, 6),
            UniformFamily::S34Even => DesignParams::new(q, 3, 4, 2 * k, k),
        }
    }
}

/// Evaluates the closed-form uniform solution of `family` at `q` (and `k` for
/// the two infinite families; ignored otherwise).
pub fn uniform_family_solution(
    family: UniformFamily,
    q: u32,
    k: u32,
) -> Result<FamilySolution, EquationError> {
    let qi = BigInt::from(q);
    let p = |e: u32| qi.pow(e);
    let one = || BigInt::one();
    let z = BigInt::zero;
    let exact = |num: BigInt, den: BigInt| Rational::new(num, den);
    let int = Rational::from_integer;
    let gauss = |n: u32, k: u32| BigInt::from(gaussian(n, k, q));

    let values: Vec<Rational> = match family {
        UniformFamily::Fano => {
            if !(k >= 3 && (k % 6 == 1 || k % 6 == 3)) {
                return Err(EquationError::Congruence { family: family.to_string(), k });
            }
            vec![
                exact(gauss(k, 2), gauss(3, 2)),
                int(z()),
                int(p(k - 1)),
                int(p(k + 1) * (&qi - 1)),
            ]
        }
        UniformFamily::S3484 => vec![
            int(one()),
            int(z()),
            int(p(2) * (p(2) + 1)),
            int(p(4) * (p(4) - 1)),
            int(p(12) - p(11) + p(7)),
        ],
        UniformFamily::S45116 => vec![
            int(one()),
            int(z()),
            int(p(2) * (p(2) + 1)),
            int(p(9) + p(7) - p(4)),
            int(p(14) - p(9) + p(7)),
            int((p(18) + p(11)) * (&qi - 1)),
        ],
        UniformFamily::S56126 => vec![
            int(one()),
            int(z()),
            int(p(2) * (p(4) + p(2) + 1)),
            int(p(4) * (p(8) + p(6) + p(5) - 1)),
            int(p(7) * (p(11) + p(9) + p(7) - p(6) + 1)),
            int(p(11) * (p(13) - p(7) + p(6) - 1)),
            int(p(16) * (p(14) - p(13) + p(7) - p(6) + 1)),
        ],
        UniformFamily::S34Even => {
            if k < 4 {
                return Err(EquationError::Congruence { family: family.to_string(), k });
            }
            vec![
                exact(gauss(k, 3), gauss(4, 3)),
                int(z()),
                exact(p(k - 2) * (p(k) - 1), p(2) - 1),
                int(p(k) * (p(k) - 1)),
                exact((p(3 * k) - p(2 * k + 3) + p(k + 3)) * (&qi - 1), p(k - 3) - 1),
            ]
        }
    };

    let params = family.params(q, k);
    let r_values: Vec<u32> = params.r_range().collect();
    debug_assert_eq!(r_values.len(), values.len());
    let bad: Vec<String> = r_values
        .iter()
        .zip(&values)
        .filter(|(_, v)| !is_nonneg_integer(v))
        .map(|(r, _)| UniformSystem::variable_name(*r))
        .collect();
    if !bad.is_empty() {
        return Err(EquationError::NonIntegral { components: bad });
    }
    Ok(FamilySolution {
        params,
        values: r_values
            .into_iter()
            .zip(values)
            .map(|(r, v)| (r, v.to_integer().to_biguint().expect("checked nonnegative")))
            .collect(),
    })
}
