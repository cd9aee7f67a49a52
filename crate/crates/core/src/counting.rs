//! Exact counts: Gaussian coefficients, the extension counts `N`, `C`, `D`,
//! and the divisibility conditions every Steiner system must satisfy.
//!
//! [`oracle`] recomputes each count by enumerating subspaces; it shares no code
//! with the closed forms.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountError {
    #[error("parameters out of range: {0}")]
    Range(String),
    #[error("enumeration of {0} subspaces exceeds the oracle guard of 10^7")]
    GuardExceeded(BigUint),
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
    #[error(transparent)]
    Subspace(#[from] crate::subspace::SubspaceError),
}

fn pow(q: u32, e: u32) -> BigUint {
    BigUint::from(q).pow(e)
}

/// The Gaussian coefficient `[n choose k]_q`, the number of `k`-subspaces of
/// `F_q^n`. Returns 0 when `k > n`.
pub fn gaussian(n: u32, k: u32, q: u32) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..k {
        num *= pow(q, n - i) - 1u32;
        den *= pow(q, i + 1) - 1u32;
    }
    num / den
}

/// Number of `t`-subspaces of `F_q^n` whose puncture to `F_q^m` is a given
/// `s`-subspace: `q^{s(n-m-t+s)} [n-m choose t-s]_q`.
pub fn count_n(s: u32, m: u32, t: u32, n: u32, q: u32) -> Result<BigUint, CountError> {
    if !(0 < m && m < n && s <= t && s <= m && t - s <= n - m) {
        return Err(CountError::Range(format!("N(s={s},m={m}),(t={t},n={n})")));
    }
    Ok(pow(q, s * (n - m + s - t)) * gaussian(n - m, t - s, q))
}

/// Copies of the `t`-expansion of an `s`-subspace inside the `k`-expansion of an
/// `r`-subspace containing it: `[k-r choose t-s]_q q^{s(k-r-t+s)}`.
pub fn count_c(s: u32, t: u32, r: u32, k: u32, q: u32) -> Result<BigUint, CountError> {
    if !(s <= t && t < k && s <= r && r + t <= k + s) {
        return Err(CountError::Range(format!("C(s={s},t={t}),(r={r},k={k})")));
    }
    Ok(gaussian(k - r, t - s, q) * pow(q, s * (k + s - r - t)))
}

/// Number of `r`-subspaces of `F_q^m` containing a given `s`-subspace.
pub fn count_d(s: u32, r: u32, m: u32, q: u32) -> Result<BigUint, CountError> {
    if !(s <= r && r <= m) {
        return Err(CountError::Range(format!("D(s={s},r={r},m={m})")));
    }
    Ok(gaussian(m - s, r - s, q))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisibilityEntry {
    pub i: u32,
    pub numerator: BigUint,
    pub denominator: BigUint,
    pub divides: bool,
}

impl DivisibilityEntry {
    pub fn quotient(&self) -> Option<BigUint> {
        self.divides.then(|| &self.numerator / &self.denominator)
    }
}

/// `[n-i choose t-i] / [k-i choose t-i]` for `i = 0..t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisibilityReport {
    pub t: u32,
    pub k: u32,
    pub n: u32,
    pub q: u32,
    pub entries: Vec<DivisibilityEntry>,
    pub pass: bool,
}

impl DivisibilityReport {
    /// First `i` whose quotient is not an integer.
    pub fn first_failure(&self) -> Option<u32> {
        self.entries.iter().find(|e| !e.divides).map(|e| e.i)
    }
}

pub fn necessary_conditions(t: u32, k: u32, n: u32, q: u32) -> Result<DivisibilityReport, CountError> {
    if !(0 < t && t < k && k < n) {
        return Err(CountError::Range(format!("need 0 < t < k < n, got t={t} k={k} n={n}")));
    }
    let entries: Vec<_> = (0..t)
        .map(|i| {
            let numerator = gaussian(n - i, t - i, q);
            let denominator = gaussian(k - i, t - i, q);
            let divides = numerator.is_multiple_of(&denominator);
            DivisibilityEntry { i, numerator, denominator, divides }
        })
        .collect();
    let pass = entries.iter().all(|e| e.divides);
    Ok(DivisibilityReport { t, k, n, q, entries, pass })
}

/// Brute-force recomputation of `N`, `C`, `D` by enumerating subspaces.
pub mod oracle {
    use super::*;
    use crate::field::Field;
    use crate::subspace::{enumerate_subspaces, Subspace};

    pub const GUARD: u64 = 10_000_000;

    fn guard(n: usize, d: usize, q: u32) -> Result<(), CountError> {
        let size = gaussian(n as u32, d as u32, q);
        if size > BigUint::from(GUARD) {
            return Err(CountError::GuardExceeded(size));
        }
        Ok(())
    }

    fn first_subspace(field: Field, m: usize, d: usize) -> Result<Subspace, CountError> {
        Ok(enumerate_subspaces(field, m, d)?
            .next()
            .expect("every Grassmannian with d <= m is nonempty"))
    }

    /// Counts `t`-subspaces of `F_q^n` puncturing to `x`.
    pub fn oracle_n_for(x: &Subspace, t: usize, n: usize) -> Result<u64, CountError> {
        let f = x.field();
        if n < x.ambient() {
            return Err(CountError::Range(format!("n={n} below ambient {}", x.ambient())));
        }
        guard(n, t, f.order())?;
        let p = n - x.ambient();
        let mut count = 0;
        for y in enumerate_subspaces(f, n, t)? {
            if &y.puncture(p)? == x {
                count += 1;
            }
        }
        Ok(count)
    }

    /// `N` for the first `s`-subspace of `F_q^m` in enumeration order.
    pub fn oracle_n(s: u32, m: u32, t: u32, n: u32, q: u32) -> Result<u64, CountError> {
        let f = Field::new(q)?;
        if s > m || t > n {
            return Err(CountError::Range(format!("N(s={s},m={m}),(t={t},n={n})")));
        }
        let x = first_subspace(f, m as usize, s as usize)?;
        oracle_n_for(&x, t as usize, n as usize)
    }

    /// Builds one `k`-subspace `W` extending `y` (after `same_dim_choices.len()`
    /// same-dimension extension steps, taking the indicated extension at each
    /// step, then `k - dim y` dimension-raising steps) and counts the
    /// `t`-subspaces of `W` that puncture back to `x`.
    pub fn oracle_c_with(
        x: &Subspace,
        y: &Subspace,
        t: usize,
        k: usize,
        same_dim_choices: &[usize],
    ) -> Result<u64, CountError> {
        if !y.contains(x)? || y.dim() > k || t > k {
            return Err(CountError::Range("witness must satisfy X <= Y, dim Y <= k".into()));
        }
        let mut w = y.clone();
        for &choice in same_dim_choices {
            let ext = w.extensions_same_dim()?;
            w = ext[choice % ext.len()].clone();
        }
        for _ in y.dim()..k {
            w = w.extension_raise_dim()?;
        }
        let p = w.ambient() - x.ambient();
        let mut count = 0;
        for sub in w.subspaces(t)? {
            if &sub.puncture(p)? == x {
                count += 1;
            }
        }
        Ok(count)
    }

    /// `C` with the first `s`-subspace of `F_q^{r+1}` and the first `r`-subspace
    /// containing it as witnesses.
    pub fn oracle_c(s: u32, t: u32, r: u32, k: u32, q: u32) -> Result<u64, CountError> {
        let f = Field::new(q)?;
        if s > r || r > k {
            return Err(CountError::Range(format!("C(s={s},t={t}),(r={r},k={k})")));
        }
        let m = r as usize + 1;
        let x = first_subspace(f, m, s as usize)?;
        let y = enumerate_subspaces(f, m, r as usize)?
            .find(|y| y.contains(&x).unwrap_or(false))
            .expect("some r-subspace contains X");
        oracle_c_with(&x, &y, t as usize, k as usize, &[])
    }

    /// Counts `r`-subspaces of `F_q^m` containing the first `s`-subspace.
    pub fn oracle_d(s: u32, r: u32, m: u32, q: u32) -> Result<u64, CountError> {
        let f = Field::new(q)?;
        if s > m || r > m {
            return Err(CountError::Range(format!("D(s={s},r={r},m={m})")));
        }
        guard(m as usize, r as usize, q)?;
        let x = first_subspace(f, m as usize, s as usize)?;
        let mut count = 0;
        for y in enumerate_subspaces(f, m as usize, r as usize)? {
            if y.contains(&x)? {
                count += 1;
            }
        }
        Ok(count)
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn gaussian_values() {
        assert_eq!(gaussian(3, 2, 2), big(7));
        assert_eq!(gaussian(5, 2, 2), big(155));
        assert_eq!(gaussian(6, 2, 2), big(651));
        assert_eq!(gaussian(7, 2, 2), big(2667));
        assert_eq!(gaussian(4, 2, 2), big(35));
        assert_eq!(gaussian(5, 0, 3), big(1));
        assert_eq!(gaussian(5, 5, 3), big(1));
        assert_eq!(gaussian(3, 4, 2), big(0));
    }

    #[test]
    fn gaussian_pascal_identity() {
        for q in 2..=16u32 {
            for n in 2..=13u32 {
                for k in 1..n {
                    assert_eq!(
                        gaussian(n, k, q),
                        pow(q, k) * gaussian(n - 1, k, q) + gaussian(n - 1, k - 1, q)
                    );
                }
            }
        }
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_n(2, 5, 3, 7, 2).unwrap(), big(12));
        for q in [2, 3, 4] {
            assert_eq!(count_n(0, 4, 2, 7, q).unwrap(), gaussian(3, 2, q));
            assert_eq!(count_c(1, 2, 1, 3, q).unwrap(), big(((q + 1) * q) as u64));
            assert_eq!(count_d(2, 3, 4, q).unwrap(), big(q as u64 + 1));
            assert_eq!(count_d(2, 2, 4, q).unwrap(), big(1));
        }
        assert_eq!(count_n(2, 4, 2, 7, 2).unwrap(), big(64));
        assert_eq!(count_c(2, 2, 2, 3, 2).unwrap(), big(4));
        assert_eq!(count_c(0, 2, 1, 3, 2).unwrap(), big(1));
        assert_eq!(count_d(0, 2, 4, 2).unwrap(), big(35));
    }

    #[test]
    fn count_ranges_are_enforced() {
        assert!(count_n(1, 0, 2, 5, 2).is_err());
        assert!(count_n(1, 5, 2, 5, 2).is_err());
        assert!(count_n(3, 4, 2, 7, 2).is_err());
        assert!(count_n(0, 6, 2, 7, 2).is_err()); // t - s > n - m
        assert!(count_c(0, 3, 1, 3, 2).is_err()); // t = k
        assert!(count_c(1, 2, 3, 3, 2).is_err()); // r > k - t + s
        assert!(count_d(3, 2, 4, 2).is_err());
    }

    #[test]
    fn divisibility_examples() {
        let r = necessary_conditions(2, 3, 7, 2).unwrap();
        assert!(r.pass);
        let quotients: Vec<_> = r.entries.iter().map(|e| e.quotient().unwrap()).collect();
        assert_eq!(quotients, vec![big(381), big(21)]);

        let r = necessary_conditions(2, 3, 8, 2).unwrap();
        assert!(!r.pass);
        assert_eq!(r.first_failure(), Some(0));
        assert_eq!(r.entries[0].numerator, big(10795));

        for q in [2, 3, 4, 5] {
            for k in 2..=5 {
                assert!(necessary_conditions(1, 2, 2 * k, q).unwrap().pass);
            }
        }
        assert!(necessary_conditions(2, 2, 7, 2).is_err());
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(oracle_n(2, 5, 3, 7, 2).unwrap(), 12);
        assert_eq!(oracle_c(2, 2, 2, 3, 2).unwrap(), 4);
        assert_eq!(oracle_d(1, 2, 4, 2).unwrap(), 7);
        assert_eq!(oracle_n(2, 4, 2, 7, 2).unwrap(), 64);
    }

    #[test]
    fn oracle_guard() {
        assert!(matches!(oracle_n(1, 3, 6, 12, 2), Err(CountError::GuardExceeded(_))));
    }
}
