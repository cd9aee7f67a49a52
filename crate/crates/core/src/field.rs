//! Table-backed arithmetic in small finite fields.
//!
//! Elements are encoded as integers `0..q`. For `q = p^e` with `e > 1` the
//! integer `i` encodes the polynomial whose coefficients are the base-`p`
//! digits of `i` (least significant digit is the constant term), reduced
//! modulo a fixed irreducible polynomial.
//!
//! Vectors of `F_q^m` are packed into a single `u64`: one bit per coordinate
//! for `q = 2`, four bits otherwise. Coordinate 0 sits in the most significant
//! occupied position, so comparing two packed vectors as integers compares them
//! lexicographically, and deleting the last coordinate is a right shift.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::OnceLock;

use thiserror::Error;

/// Orders for which a field can be built.
pub const SUPPORTED_ORDERS: [u32; 10] = [2, 3, 4, 5, 7, 8, 9, 11, 13, 16];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("q = {0} is not a supported field order (expected one of 2,3,4,5,7,8,9,11,13,16)")]
    Unsupported(u32),
}

/// Full arithmetic tables for `F_q`.
pub struct FieldSpec {
    q: u32,
    p: u32,
    e: u32,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
    bits: u32,
}

impl FieldSpec {
    fn build(q: u32) -> Result<Self, FieldError> {
        // monic irreducible polynomials, coefficients from the constant term up
        let (p, e, modulus): (u32, u32, &[u32]) = match q {
            2 | 3 | 5 | 7 | 11 | 13 => (q, 1, &[]),
            4 => (2, 2, &[1, 1, 1]),
            8 => (2, 3, &[1, 1, 0, 1]),
            9 => (3, 2, &[1, 0, 1]),
            16 => (2, 4, &[1, 1, 0, 0, 1]),
            _ => return Err(FieldError::Unsupported(q)),
        };
        let n = q as usize;
        let digits = |x: u32| -> Vec<u32> {
            let mut d = vec![0; e as usize];
            let mut x = x;
            for slot in d.iter_mut() {
                *slot = x % p;
                x /= p;
            }
            d
        };
        let encode = |d: &[u32]| -> u32 { d.iter().rev().fold(0, |acc, &c| acc * p + c) };

        let mut add = vec![0u8; n * n];
        let mut mul = vec![0u8; n * n];
        for a in 0..q {
            for b in 0..q {
                let (da, db) = (digits(a), digits(b));
                let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[(a * q + b) as usize] = encode(&sum) as u8;

                let prod = if e == 1 {
                    (a * b) % p
                } else {
                    let mut full = vec![0u32; 2 * e as usize - 1];
                    for (i, x) in da.iter().enumerate() {
                        for (j, y) in db.iter().enumerate() {
                            full[i + j] = (full[i + j] + x * y) % p;
                        }
                    }
                    // reduce by the monic modulus from the top degree down
                    for deg in (e as usize..full.len()).rev() {
                        let c = full[deg];
                        if c == 0 {
                            continue;
                        }
                        for (i, m) in modulus.iter().enumerate() {
                            let idx = deg - e as usize + i;
                            full[idx] = (full[idx] + (p - c) * m) % p;
                        }
                    }
                    encode(&full[..e as usize])
                };
                mul[(a * q + b) as usize] = prod as u8;
            }
        }
        let mut neg = vec![0u8; n];
        let mut inv = vec![0u8; n];
        for a in 0..q {
            for b in 0..q {
                if add[(a * q + b) as usize] == 0 {
                    neg[a as usize] = b as u8;
                }
                if mul[(a * q + b) as usize] == 1 {
                    inv[a as usize] = b as u8;
                }
            }
        }
        Ok(FieldSpec {
            q,
            p,
            e,
            add,
            mul,
            neg,
            inv,
            bits: if q == 2 { 1 } else { 4 },
        })
    }
}

/// A handle to the (process-wide, immutable) tables of `F_q`.
#[derive(Clone, Copy)]
pub struct Field(&'static FieldSpec);

static FIELDS: [OnceLock<FieldSpec>; 17] = [const { OnceLock::new() }; 17];

impl Field {
    pub fn new(q: u32) -> Result<Field, FieldError> {
        if !SUPPORTED_ORDERS.contains(&q) {
            return Err(FieldError::Unsupported(q));
        }
        let spec = FIELDS[q as usize].get_or_init(|| FieldSpec::build(q).expect("supported order"));
        Ok(Field(spec))
    }

    #[inline]
    pub fn order(self) -> u32 {
        self.0.q
    }

    #[inline]
    pub fn characteristic(self) -> u32 {
        self.0.p
    }

    #[inline]
    pub fn degree(self) -> u32 {
        self.0.e
    }

    #[inline]
    pub fn add(self, a: u8, b: u8) -> u8 {
        self.0.add[a as usize * self.0.q as usize + b as usize]
    }

    #[inline]
    pub fn sub(self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(self, a: u8, b: u8) -> u8 {
        self.0.mul[a as usize * self.0.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(self, a: u8) -> u8 {
        self.0.neg[a as usize]
    }

    /// Multiplicative inverse; `inv(0)` is 0.
    #[inline]
    pub fn inv(self, a: u8) -> u8 {
        self.0.inv[a as usize]
    }

    pub fn pow(self, a: u8, exp: u32) -> u8 {
        (0..exp).fold(1, |acc, _| self.mul(acc, a))
    }

    pub fn elements(self) -> impl Iterator<Item = u8> {
        0..self.0.q as u8
    }

    /// Bits occupied by one coordinate in a packed vector.
    #[inline]
    pub fn bits(self) -> u32 {
        self.0.bits
    }

    /// Largest ambient dimension a packed vector can hold.
    #[inline]
    pub fn max_ambient(self) -> usize {
        (64 / self.0.bits) as usize
    }

    #[inline]
    fn elem_mask(self) -> u64 {
        (1u64 << self.0.bits) - 1
    }

    /// Coordinate `j` (0-based, from the left) of a packed vector of length `m`.
    #[inline]
    pub fn coord(self, v: u64, m: usize, j: usize) -> u8 {
        ((v >> (self.0.bits as usize * (m - 1 - j))) & self.elem_mask()) as u8
    }

    #[inline]
    pub fn with_coord(self, v: u64, m: usize, j: usize, x: u8) -> u64 {
        let shift = self.0.bits as usize * (m - 1 - j);
        (v & !(self.elem_mask() << shift)) | ((x as u64) << shift)
    }

    pub fn pack(self, coords: &[u8]) -> u64 {
        coords
            .iter()
            .fold(0u64, |acc, &x| (acc << self.0.bits) | x as u64)
    }

    pub fn unpack(self, v: u64, m: usize) -> Vec<u8> {
        (0..m).map(|j| self.coord(v, m, j)).collect()
    }

    /// Packed `a + b`.
    #[inline]
    pub fn add_vec(self, a: u64, b: u64, m: usize) -> u64 {
        if self.0.p == 2 {
            return a ^ b;
        }
        let mut out = 0u64;
        let bits = self.0.bits as usize;
        let mask = self.elem_mask();
        for j in 0..m {
            let shift = bits * j;
            let x = ((a >> shift) & mask) as u8;
            let y = ((b >> shift) & mask) as u8;
            out |= (self.add(x, y) as u64) << shift;
        }
        out
    }

    /// Packed `c * a`.
    #[inline]
    pub fn scale_vec(self, c: u8, a: u64, m: usize) -> u64 {
        match c {
            0 => 0,
            1 => a,
            _ => {
                let mut out = 0u64;
                let bits = self.0.bits as usize;
                let mask = self.elem_mask();
                for j in 0..m {
                    let shift = bits * j;
                    let x = ((a >> shift) & mask) as u8;
                    out |= (self.mul(c, x) as u64) << shift;
                }
                out
            }
        }
    }

    /// Packed `a + c * b`.
    #[inline]
    pub fn axpy(self, a: u64, c: u8, b: u64, m: usize) -> u64 {
        if c == 0 {
            a
        } else {
            self.add_vec(a, self.scale_vec(c, b, m), m)
        }
    }

    /// Index of the first nonzero coordinate, if any.
    #[inline]
    pub fn leading(self, v: u64, m: usize) -> Option<usize> {
        if v == 0 {
            return None;
        }
        let top = 63 - v.leading_zeros() as usize;
        Some(m - 1 - top / self.0.bits as usize)
    }

    /// Drop the last `p` coordinates.
    #[inline]
    pub fn truncate(self, v: u64, p: usize) -> u64 {
        if p == 0 {
            v
        } else {
            v >> (self.0.bits as usize * p)
        }
    }

    /// Append one coordinate `x` at the end.
    #[inline]
    pub fn append(self, v: u64, x: u8) -> u64 {
        (v << self.0.bits) | x as u64
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.0.q == other.0.q
    }
}

impl Eq for Field {}

impl Hash for Field {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.q.hash(state);
    }
}

impl PartialOrd for Field {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Field {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.q.cmp(&other.0.q)
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.0.q)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.0.q)
    }
}
