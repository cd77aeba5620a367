//! Exact linear algebra over a prime field GF(q).
//!
//! Everything here is deterministic integer arithmetic: element ops reduce
//! mod q, elimination uses the first nonzero pivot, and MDS verification is
//! a brute-force sweep over column subsets. Moduli are capped at `u32` so a
//! residue always fits one wire word; products go through `u64`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use itertools::Itertools;

/// A residue in GF(q), tagged with its modulus.
///
/// Mixing moduli is a programming error and panics. Only prime moduli make
/// this a field; constructors that accept a modulus from the outside world
/// (database files, CLI flags) check primality before any element exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement {
    value: u32,
    modulus: u32,
}

impl FieldElement {
    pub fn new(value: u32, modulus: u32) -> Self {
        assert!(modulus >= 2, "modulus must be at least 2");
        FieldElement { value: value % modulus, modulus }
    }

    pub fn zero(modulus: u32) -> Self {
        Self::new(0, modulus)
    }

    pub fn one(modulus: u32) -> Self {
        Self::new(1, modulus)
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> u32 {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Self::one(self.modulus);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat: a^(q-2).
    ///
    /// Panics on zero; use [`FieldElement::checked_inv`] when zero is a
    /// reachable input.
    pub fn inv(self) -> Self {
        self.checked_inv().expect("cannot invert zero")
    }

    pub fn checked_inv(self) -> Option<Self> {
        if self.value == 0 {
            return None;
        }
        Some(self.pow(u64::from(self.modulus) - 2))
    }

    fn assert_same_field(self, rhs: Self) {
        assert_eq!(
            self.modulus, rhs.modulus,
            "field modulus mismatch: {} vs {}",
            self.modulus, rhs.modulus
        );
    }
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: Self) -> Self {
        self.assert_same_field(rhs);
        let sum = (u64::from(self.value) + u64::from(rhs.value)) % u64::from(self.modulus);
        FieldElement { value: sum as u32, modulus: self.modulus }
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: Self) -> Self {
        self.assert_same_field(rhs);
        let m = u64::from(self.modulus);
        let diff = (u64::from(self.value) + m - u64::from(rhs.value)) % m;
        FieldElement { value: diff as u32, modulus: self.modulus }
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: Self) -> Self {
        self.assert_same_field(rhs);
        let prod = (u64::from(self.value) * u64::from(rhs.value)) % u64::from(self.modulus);
        FieldElement { value: prod as u32, modulus: self.modulus }
    }
}

impl Div for FieldElement {
    type Output = FieldElement;
    /// Panics when dividing by zero, like [`FieldElement::inv`].
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.inv()
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> Self {
        FieldElement::zero(self.modulus) - self
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// A vector of residues sharing one modulus.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldVector {
    modulus: u32,
    values: Vec<u32>,
}

impl FieldVector {
    pub fn new(modulus: u32, values: Vec<u32>) -> Self {
        assert!(modulus >= 2);
        assert!(values.iter().all(|&v| v < modulus), "residue out of range");
        FieldVector { modulus, values }
    }

    pub fn zeros(modulus: u32, len: usize) -> Self {
        FieldVector { modulus, values: vec![0; len] }
    }

    pub fn from_elements(elements: &[FieldElement]) -> Self {
        let modulus = elements.first().map(|e| e.modulus()).unwrap_or(2);
        assert!(elements.iter().all(|e| e.modulus() == modulus), "mixed moduli");
        FieldVector { modulus, values: elements.iter().map(|e| e.value()).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn element(&self, i: usize) -> FieldElement {
        FieldElement { value: self.values[i], modulus: self.modulus }
    }

    pub fn iter(&self) -> impl Iterator<Item = FieldElement> + '_ {
        let m = self.modulus;
        self.values.iter().map(move |&v| FieldElement { value: v, modulus: m })
    }

    pub fn add(&self, rhs: &FieldVector) -> FieldVector {
        assert_eq!(self.len(), rhs.len(), "vector length mismatch");
        FieldVector::from_elements(
            &self.iter().zip(rhs.iter()).map(|(a, b)| a + b).collect::<Vec<_>>(),
        )
    }

    pub fn sub(&self, rhs: &FieldVector) -> FieldVector {
        assert_eq!(self.len(), rhs.len(), "vector length mismatch");
        FieldVector::from_elements(
            &self.iter().zip(rhs.iter()).map(|(a, b)| a - b).collect::<Vec<_>>(),
        )
    }

    pub fn scale(&self, c: FieldElement) -> FieldVector {
        FieldVector::from_elements(&self.iter().map(|a| a * c).collect::<Vec<_>>())
    }

    pub fn dot(&self, rhs: &FieldVector) -> FieldElement {
        assert_eq!(self.len(), rhs.len(), "vector length mismatch");
        self.iter()
            .zip(rhs.iter())
            .fold(FieldElement::zero(self.modulus), |acc, (a, b)| acc + a * b)
    }

    /// Indices (0-based) of nonzero entries.
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (v != 0).then_some(i))
            .collect()
    }
}

/// Row-major matrix over GF(q).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    modulus: u32,
    entries: Vec<u32>,
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize, modulus: u32) -> Self {
        assert!(modulus >= 2);
        FieldMatrix { rows, cols, modulus, entries: vec![0; rows * cols] }
    }

    pub fn from_entries(rows: usize, cols: usize, modulus: u32, entries: Vec<u32>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
        assert!(entries.iter().all(|&v| v < modulus), "residue out of range");
        FieldMatrix { rows, cols, modulus, entries }
    }

    pub fn from_rows(rows: &[FieldVector]) -> Self {
        assert!(!rows.is_empty(), "need at least one row");
        let cols = rows[0].len();
        let modulus = rows[0].modulus();
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            assert_eq!(r.modulus(), modulus, "mixed moduli");
            entries.extend_from_slice(r.values());
        }
        FieldMatrix { rows: rows.len(), cols, modulus, entries }
    }

    pub fn identity(n: usize, modulus: u32) -> Self {
        let mut m = Self::zeros(n, n, modulus);
        for i in 0..n {
            m.set(i, i, FieldElement::one(modulus));
        }
        m
    }

    /// A 1×cols matrix row representation of the unit vector e_j (0-based j).
    pub fn unit_row(j: usize, cols: usize, modulus: u32) -> FieldVector {
        let mut v = vec![0; cols];
        v[j] = 1;
        FieldVector::new(modulus, v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        assert!(i < self.rows && j < self.cols, "index out of range");
        FieldElement { value: self.entries[i * self.cols + j], modulus: self.modulus }
    }

    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        assert_eq!(v.modulus(), self.modulus, "field modulus mismatch");
        self.entries[i * self.cols + j] = v.value();
    }

    pub fn row(&self, i: usize) -> FieldVector {
        assert!(i < self.rows);
        FieldVector {
            modulus: self.modulus,
            values: self.entries[i * self.cols..(i + 1) * self.cols].to_vec(),
        }
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut t = FieldMatrix::zeros(self.cols, self.rows, self.modulus);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Stack `other` below `self`.
    pub fn vstack(&self, other: &FieldMatrix) -> FieldMatrix {
        assert_eq!(self.cols, other.cols, "column count mismatch");
        assert_eq!(self.modulus, other.modulus, "field modulus mismatch");
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        FieldMatrix { rows: self.rows + other.rows, cols: self.cols, modulus: self.modulus, entries }
    }

    /// Append extra rows (e.g. unit vectors) below the matrix.
    pub fn with_rows(&self, extra: &[FieldVector]) -> FieldMatrix {
        let mut entries = self.entries.clone();
        for r in extra {
            assert_eq!(r.len(), self.cols, "row length mismatch");
            assert_eq!(r.modulus(), self.modulus, "field modulus mismatch");
            entries.extend_from_slice(r.values());
        }
        FieldMatrix {
            rows: self.rows + extra.len(),
            cols: self.cols,
            modulus: self.modulus,
            entries,
        }
    }

    /// Keep only the listed columns (0-based), in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(self.rows, cols.len(), self.modulus);
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                out.set(i, jj, self.get(i, j));
            }
        }
        out
    }

    /// Matrix × column-vector product.
    pub fn mul_vector(&self, v: &FieldVector) -> FieldVector {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        let out: Vec<FieldElement> = (0..self.rows).map(|i| self.row(i).dot(v)).collect();
        if out.is_empty() {
            FieldVector::zeros(self.modulus, 0)
        } else {
            FieldVector::from_elements(&out)
        }
    }

    /// Row-vector × matrix product (u as a length-`rows` vector).
    pub fn vector_mul(&self, u: &FieldVector) -> FieldVector {
        assert_eq!(self.rows, u.len(), "dimension mismatch");
        let mut acc = FieldVector::zeros(self.modulus, self.cols);
        for i in 0..self.rows {
            acc = acc.add(&self.row(i).scale(u.element(i)));
        }
        acc
    }

    /// Reduced row echelon form together with the pivot column list.
    /// First-nonzero pivot selection keeps the result deterministic.
    pub fn rref(&self) -> (FieldMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..m.cols {
            if pivot_row >= m.rows {
                break;
            }
            let Some(sel) = (pivot_row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(pivot_row, sel);
            let inv = m.get(pivot_row, col).inv();
            m.scale_row(pivot_row, inv);
            for r in 0..m.rows {
                if r != pivot_row && !m.get(r, col).is_zero() {
                    let factor = m.get(r, col);
                    m.sub_scaled_row(r, pivot_row, factor);
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of {v : self · v = 0}; size is cols − rank.
    pub fn nullspace(&self) -> Vec<FieldVector> {
        let (r, pivots) = self.rref();
        let is_pivot: Vec<bool> = {
            let mut v = vec![false; self.cols];
            for &p in &pivots {
                v[p] = true;
            }
            v
        };
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![FieldElement::zero(self.modulus); self.cols];
            v[free] = FieldElement::one(self.modulus);
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r.get(row, free);
            }
            basis.push(FieldVector::from_elements(&v));
        }
        basis
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn scale_row(&mut self, r: usize, c: FieldElement) {
        for j in 0..self.cols {
            let v = self.get(r, j) * c;
            self.set(r, j, v);
        }
    }

    /// row r -= factor * row src
    fn sub_scaled_row(&mut self, r: usize, src: usize, factor: FieldElement) {
        for j in 0..self.cols {
            let v = self.get(r, j) - self.get(src, j) * factor;
            self.set(r, j, v);
        }
    }
}

impl fmt::Display for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// The P×K Vandermonde matrix on evaluation points 0..K-1: column j is
/// (1, j, j², …, j^(P-1)). For prime q ≥ K the points are distinct, so the
/// matrix generates a \[K,P\] MDS code.
pub fn vandermonde_generator(p: usize, k: usize, q: u32) -> crate::error::Result<FieldMatrix> {
    use crate::error::Error;
    if !is_prime(q) {
        return Err(Error::InvalidParameter(format!("q must be prime (got {q})")));
    }
    if (q as usize) < k {
        return Err(Error::InvalidParameter(format!(
            "q must be at least K for distinct evaluation points (q={q}, K={k})"
        )));
    }
    if p == 0 || p > k {
        return Err(Error::InvalidParameter(format!("need 1 <= P <= K (P={p}, K={k})")));
    }
    let mut m = FieldMatrix::zeros(p, k, q);
    for j in 0..k {
        let point = FieldElement::new(j as u32, q);
        let mut pw = FieldElement::one(q);
        for i in 0..p {
            m.set(i, j, pw);
            pw = pw * point;
        }
    }
    Ok(m)
}

/// Brute-force MDS test: every rows×rows column submatrix must be invertible.
pub fn is_mds(g: &FieldMatrix) -> bool {
    let p = g.rows();
    let k = g.cols();
    assert!(p <= k, "generator must have rows <= cols");
    (0..k).combinations(p).all(|subset| g.select_columns(&subset).rank() == p)
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

pub fn smallest_prime_geq(n: u32) -> u32 {
    let mut c = n.max(2);
    while !is_prime(c) {
        c += 1;
    }
    c
}
