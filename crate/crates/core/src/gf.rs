//! Prime-field arithmetic and short-vector linear algebra.
//!
//! Vectors have length 1..=4, which is all the crate ever needs, so they are
//! stored inline. Subspaces keep a reduced row echelon basis so equality of
//! subspaces is plain structural equality.

use std::fmt;

use rand::Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::is_prime;

/// Largest supported vector length.
pub const MAX_LEN: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("{0} is not a prime in 2..=2^31-1")]
    NotPrime(u64),
    #[error("vector length {0} outside 1..=4")]
    BadLength(usize),
    #[error("dimension mismatch: expected length {expected} over GF({q}), got length {got} over GF({got_q})")]
    DimensionMismatch { expected: usize, q: u32, got: usize, got_q: u32 },
    #[error("cannot sample a nonzero vector from the zero subspace")]
    ZeroSubspace,
}

/// A prime field GF(q).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Field {
    q: u32,
}

impl Field {
    pub fn new(q: u64) -> Result<Field, GfError> {
        if q > i32::MAX as u64 || !is_prime(q) {
            return Err(GfError::NotPrime(q));
        }
        Ok(Field { q: q as u32 })
    }

    pub fn q(self) -> u32 {
        self.q
    }

    pub fn reduce(self, x: i64) -> u32 {
        x.rem_euclid(self.q as i64) as u32
    }

    pub fn add(self, a: u32, b: u32) -> u32 {
        ((a as u64 + b as u64) % self.q as u64) as u32
    }

    pub fn sub(self, a: u32, b: u32) -> u32 {
        ((a as u64 + self.q as u64 - b as u64) % self.q as u64) as u32
    }

    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }

    /// Multiplicative inverse of a nonzero element (Fermat).
    pub fn inv(self, a: u32) -> u32 {
        assert!(!a.is_multiple_of(self.q), "inverse of zero");
        let mut base = a as u64 % self.q as u64;
        let mut exp = self.q as u64 - 2;
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % self.q as u64;
            }
            base = base * base % self.q as u64;
            exp >>= 1;
        }
        acc as u32
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

/// A vector of length 1..=4 over a prime field.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FVector {
    field: Field,
    len: u8,
    coords: [u32; MAX_LEN],
}

impl FVector {
    /// Builds a vector, reducing every coordinate mod q.
    pub fn new(field: Field, coords: &[i64]) -> Result<FVector, GfError> {
        if coords.is_empty() || coords.len() > MAX_LEN {
            return Err(GfError::BadLength(coords.len()));
        }
        let mut c = [0u32; MAX_LEN];
        for (slot, &x) in c.iter_mut().zip(coords) {
            *slot = field.reduce(x);
        }
        Ok(FVector { field, len: coords.len() as u8, coords: c })
    }

    pub fn zero(field: Field, len: usize) -> Result<FVector, GfError> {
        FVector::new(field, &vec![0; len])
    }

    /// The `i`-th standard basis vector (0-based).
    pub fn unit(field: Field, len: usize, i: usize) -> Result<FVector, GfError> {
        let mut c = vec![0; len];
        if i < len {
            c[i] = 1;
        }
        FVector::new(field, &c)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords[..self.len as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.coords().iter().all(|&c| c == 0)
    }

    pub fn scale(&self, c: u32) -> FVector {
        let mut out = *self;
        for x in out.coords.iter_mut().take(self.len()) {
            *x = self.field.mul(*x, c);
        }
        out
    }

    pub fn add(&self, other: &FVector) -> FVector {
        let mut out = *self;
        for (x, y) in out.coords.iter_mut().zip(other.coords.iter()).take(self.len()) {
            *x = self.field.add(*x, *y);
        }
        out
    }

    fn check(&self, field: Field, len: usize) -> Result<(), GfError> {
        if self.field != field || self.len() != len {
            return Err(GfError::DimensionMismatch { expected: len, q: field.q, got: self.len(), got_q: self.field.q });
        }
        Ok(())
    }
}

impl fmt::Display for FVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ") over GF({})", self.field.q)
    }
}

impl fmt::Debug for FVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for FVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.coords().iter())
    }
}

/// Row-reduces `rows` (each of width `width`) in place to reduced row echelon
/// form, dropping zero rows. Returns the pivot columns.
fn rref(field: Field, rows: &mut Vec<Vec<u32>>, width: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..width {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][col] != 0) else { continue };
        rows.swap(r, p);
        let inv = field.inv(rows[r][col]);
        for x in rows[r].iter_mut() {
            *x = field.mul(*x, inv);
        }
        for i in 0..rows.len() {
            if i != r && rows[i][col] != 0 {
                let f = rows[i][col];
                for c in 0..width {
                    let sub = field.mul(f, rows[r][c]);
                    rows[i][c] = field.sub(rows[i][c], sub);
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

/// A subspace of GF(q)^L with a canonical reduced row echelon basis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    field: Field,
    len: usize,
    basis: Vec<FVector>,
}

impl Subspace {
    pub fn zero(field: Field, len: usize) -> Result<Subspace, GfError> {
        if len == 0 || len > MAX_LEN {
            return Err(GfError::BadLength(len));
        }
        Ok(Subspace { field, len, basis: Vec::new() })
    }

    pub fn full(field: Field, len: usize) -> Result<Subspace, GfError> {
        let units = (0..len).map(|i| FVector::unit(field, len, i)).collect::<Result<Vec<_>, _>>()?;
        span_of(field, len, &units)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[FVector] {
        &self.basis
    }

    /// Whether `v` is a linear combination of the basis.
    pub fn contains(&self, v: &FVector) -> Result<bool, GfError> {
        v.check(self.field, self.len)?;
        let mut w: Vec<u32> = v.coords().to_vec();
        for b in &self.basis {
            let pivot = b.coords().iter().position(|&c| c != 0).expect("basis rows are nonzero");
            let f = w[pivot];
            if f != 0 {
                for (x, y) in w.iter_mut().zip(b.coords()) {
                    *x = self.field.sub(*x, self.field.mul(f, *y));
                }
            }
        }
        Ok(w.iter().all(|&c| c == 0))
    }

    /// The sum of two subspaces.
    pub fn sum(&self, other: &Subspace) -> Result<Subspace, GfError> {
        self.check(other)?;
        let all: Vec<FVector> = self.basis.iter().chain(other.basis.iter()).copied().collect();
        span_of(self.field, self.len, &all)
    }

    /// Subspace spanned by this one plus `v`.
    pub fn extend(&self, v: &FVector) -> Result<Subspace, GfError> {
        v.check(self.field, self.len)?;
        let mut all = self.basis.clone();
        all.push(*v);
        span_of(self.field, self.len, &all)
    }

    /// Intersection via the Zassenhaus algorithm.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace, GfError> {
        self.check(other)?;
        let l = self.len;
        let mut rows: Vec<Vec<u32>> = Vec::new();
        for b in &self.basis {
            let mut row = b.coords().to_vec();
            row.extend_from_slice(b.coords());
            rows.push(row);
        }
        for b in &other.basis {
            let mut row = b.coords().to_vec();
            row.extend(std::iter::repeat_n(0, l));
            rows.push(row);
        }
        rref(self.field, &mut rows, 2 * l);
        let mut out = Vec::new();
        for row in rows {
            if row[..l].iter().all(|&c| c == 0) {
                let coords: Vec<i64> = row[l..].iter().map(|&c| c as i64).collect();
                out.push(FVector::new(self.field, &coords)?);
            }
        }
        span_of(self.field, l, &out)
    }

    fn check(&self, other: &Subspace) -> Result<(), GfError> {
        if self.field != other.field || self.len != other.len {
            return Err(GfError::DimensionMismatch {
                expected: self.len,
                q: self.field.q,
                got: other.len,
                got_q: other.field.q,
            });
        }
        Ok(())
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "span{{")?;
        for (i, b) in self.basis.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:?}", b.coords())?;
        }
        write!(f, "}} over GF({})", self.field.q)
    }
}

/// Canonical span of `vectors`, each of length `len` over `field`.
pub fn span_of(field: Field, len: usize, vectors: &[FVector]) -> Result<Subspace, GfError> {
    if len == 0 || len > MAX_LEN {
        return Err(GfError::BadLength(len));
    }
    for v in vectors {
        v.check(field, len)?;
    }
    let mut rows: Vec<Vec<u32>> = vectors.iter().map(|v| v.coords().to_vec()).collect();
    rref(field, &mut rows, len);
    let basis = rows
        .into_iter()
        .map(|r| {
            let mut coords = [0u32; MAX_LEN];
            coords[..len].copy_from_slice(&r);
            FVector { field, len: len as u8, coords }
        })
        .collect();
    Ok(Subspace { field, len, basis })
}

/// Rank of a list of vectors.
pub fn rank(field: Field, len: usize, vectors: &[FVector]) -> Result<usize, GfError> {
    Ok(span_of(field, len, vectors)?.dim())
}

/// Whether `v` lies in `s`.
pub fn in_span(v: &FVector, s: &Subspace) -> Result<bool, GfError> {
    s.contains(v)
}

/// Uniformly random nonzero vector of `s`.
pub fn sample_nonzero<R: Rng + ?Sized>(s: &Subspace, rng: &mut R) -> Result<FVector, GfError> {
    if s.dim() == 0 {
        return Err(GfError::ZeroSubspace);
    }
    let q = s.field.q;
    loop {
        let coeffs: Vec<u32> = (0..s.dim()).map(|_| rng.gen_range(0..q)).collect();
        if coeffs.iter().all(|&c| c == 0) {
            continue;
        }
        let mut v = FVector::zero(s.field, s.len)?;
        for (c, b) in coeffs.iter().zip(&s.basis) {
            v = v.add(&b.scale(*c));
        }
        return Ok(v);
    }
}

/// Uniformly random nonzero vector of GF(q)^len.
pub fn random_nonzero<R: Rng + ?Sized>(field: Field, len: usize, rng: &mut R) -> Result<FVector, GfError> {
    sample_nonzero(&Subspace::full(field, len)?, rng)
}

/// Uniformly random nonzero vector outside `s` (which must not be the whole space).
pub fn sample_outside<R: Rng + ?Sized>(s: &Subspace, rng: &mut R) -> Result<FVector, GfError> {
    if s.dim() == s.len() {
        return Err(GfError::ZeroSubspace);
    }
    loop {
        let v = random_nonzero(s.field, s.len, rng)?;
        if !s.contains(&v)? {
            return Ok(v);
        }
    }
}
