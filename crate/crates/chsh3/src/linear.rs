//! Dense linear algebra over the crate's scalar types.
//!
//! `Mat<T>` works for any [`Field`] scalar: the exact fields Q, F, Q(omega), K
//! from [`crate::exactnum`] and the arbitrary-precision complex floats [`Cf`].
//! Exact routines (row reduction, kernels, pivoted LDL^T with sign
//! certification) never touch floating point; the float routines (Jacobi
//! eigendecomposition, Cholesky, matrix exponential) run at whatever MPFR
//! precision their inputs carry.

use crate::exactnum::{Cyc3, FNum, KNum, Rat};
use rug::Float;
use std::fmt;

// ---------------------------------------------------------------------------
// Scalar traits
// ---------------------------------------------------------------------------

pub trait Field: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Self;
    fn is_zero(&self) -> bool;
    /// Complex conjugation; identity on real fields.
    fn conj(&self) -> Self;
}

/// Fields with an exact real embedding and decidable sign.
pub trait OrderedField: Field {
    fn sign(&self) -> i32;
}

impl Field for Rat {
    fn zero() -> Self {
        Rat::new()
    }
    fn one() -> Self {
        Rat::from(1)
    }
    fn add(&self, o: &Self) -> Self {
        Rat::from(self + o)
    }
    fn sub(&self, o: &Self) -> Self {
        Rat::from(self - o)
    }
    fn mul(&self, o: &Self) -> Self {
        Rat::from(self * o)
    }
    fn neg(&self) -> Self {
        Rat::from(-self.clone())
    }
    fn inv(&self) -> Self {
        Rat::from(1) / self.clone()
    }
    fn is_zero(&self) -> bool {
        self.cmp0() == std::cmp::Ordering::Equal
    }
    fn conj(&self) -> Self {
        self.clone()
    }
}

impl OrderedField for Rat {
    fn sign(&self) -> i32 {
        match self.cmp0() {
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Greater => 1,
        }
    }
}

impl Field for FNum {
    fn zero() -> Self {
        FNum::zero()
    }
    fn one() -> Self {
        FNum::one()
    }
    fn add(&self, o: &Self) -> Self {
        FNum::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        FNum::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        FNum::mul(self, o)
    }
    fn neg(&self) -> Self {
        FNum::neg(self)
    }
    fn inv(&self) -> Self {
        FNum::inv(self)
    }
    fn is_zero(&self) -> bool {
        FNum::is_zero(self)
    }
    fn conj(&self) -> Self {
        self.clone()
    }
}

impl OrderedField for FNum {
    fn sign(&self) -> i32 {
        FNum::sign(self)
    }
}

impl Field for Cyc3 {
    fn zero() -> Self {
        Cyc3::zero()
    }
    fn one() -> Self {
        Cyc3::one()
    }
    fn add(&self, o: &Self) -> Self {
        Cyc3::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Cyc3::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Cyc3::mul(self, o)
    }
    fn neg(&self) -> Self {
        Cyc3::neg(self)
    }
    fn inv(&self) -> Self {
        Cyc3::inv(self)
    }
    fn is_zero(&self) -> bool {
        Cyc3::is_zero(self)
    }
    fn conj(&self) -> Self {
        Cyc3::conj(self)
    }
}

impl Field for KNum {
    fn zero() -> Self {
        KNum::zero()
    }
    fn one() -> Self {
        KNum::one()
    }
    fn add(&self, o: &Self) -> Self {
        KNum::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        KNum::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        KNum::mul(self, o)
    }
    fn neg(&self) -> Self {
        KNum::neg(self)
    }
    fn inv(&self) -> Self {
        KNum::inv(self)
    }
    fn is_zero(&self) -> bool {
        KNum::is_zero(self)
    }
    fn conj(&self) -> Self {
        KNum::conj(self)
    }
}

// ---------------------------------------------------------------------------
// Arbitrary-precision complex scalar
// ---------------------------------------------------------------------------

/// Complex number over MPFR floats. Precision is set at construction and
/// propagates through arithmetic.
#[derive(Clone, PartialEq)]
pub struct Cf {
    pub re: Float,
    pub im: Float,
}

impl fmt::Debug for Cf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6e},{:.6e})", self.re.to_f64(), self.im.to_f64())
    }
}

impl Cf {
    pub fn new(re: Float, im: Float) -> Self {
        Cf { re, im }
    }

    pub fn zero_p(prec: u32) -> Self {
        Cf::new(Float::with_val(prec, 0), Float::with_val(prec, 0))
    }

    pub fn one_p(prec: u32) -> Self {
        Cf::new(Float::with_val(prec, 1), Float::with_val(prec, 0))
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        Cf::new(Float::with_val(prec, re), Float::with_val(prec, im))
    }

    pub fn real(re: Float) -> Self {
        let p = re.prec();
        Cf::new(re, Float::with_val(p, 0))
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn abs2(&self) -> Float {
        self.re.clone() * &self.re + self.im.clone() * &self.im
    }

    pub fn abs(&self) -> Float {
        self.abs2().sqrt()
    }

    pub fn scale(&self, f: &Float) -> Cf {
        Cf::new(self.re.clone() * f, self.im.clone() * f)
    }
}

/// Fallback precision for `Field::zero/one` on `Cf`; real code paths construct
/// with explicit precision.
pub const DEFAULT_PREC: u32 = 256;

impl Field for Cf {
    fn zero() -> Self {
        Cf::zero_p(DEFAULT_PREC)
    }
    fn one() -> Self {
        Cf::one_p(DEFAULT_PREC)
    }
    fn add(&self, o: &Self) -> Self {
        Cf::new(self.re.clone() + &o.re, self.im.clone() + &o.im)
    }
    fn sub(&self, o: &Self) -> Self {
        Cf::new(self.re.clone() - &o.re, self.im.clone() - &o.im)
    }
    fn mul(&self, o: &Self) -> Self {
        Cf::new(
            self.re.clone() * &o.re - self.im.clone() * &o.im,
            self.re.clone() * &o.im + self.im.clone() * &o.re,
        )
    }
    fn neg(&self) -> Self {
        Cf::new(-self.re.clone(), -self.im.clone())
    }
    fn inv(&self) -> Self {
        let n = self.abs2();
        Cf::new(self.re.clone() / &n, -(self.im.clone() / &n))
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn conj(&self) -> Self {
        Cf::new(self.re.clone(), -self.im.clone())
    }
}

// ---------------------------------------------------------------------------
// Dense matrices
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{:?} ", self.data[r * self.cols + c])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Field> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn add(&self, o: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.mul(s)).collect(),
        }
    }

    pub fn matmul(&self, o: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, o.rows, "matmul dimension mismatch");
        let mut out: Mat<T> = Mat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let p = a.mul(&o[(k, j)]);
                    out[(i, j)] = out[(i, j)].add(&p);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for k in 0..self.cols {
                    if !self[(i, k)].is_zero() {
                        acc = acc.add(&self[(i, k)].mul(&v[k]));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn is_zero_mat(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn map<U: Field>(&self, f: impl Fn(&T) -> U) -> Mat<U> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn trace(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut acc = T::zero();
        for i in 0..self.rows {
            acc = acc.add(&self[(i, i)]);
        }
        acc
    }

    /// Kronecker product.
    pub fn kron(&self, o: &Mat<T>) -> Mat<T> {
        let mut out = Mat::zeros(self.rows * o.rows, self.cols * o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self[(i, j)].is_zero() {
                    continue;
                }
                for k in 0..o.rows {
                    for l in 0..o.cols {
                        out[(i * o.rows + k, j * o.cols + l)] = self[(i, j)].mul(&o[(k, l)]);
                    }
                }
            }
        }
        out
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

// ---------------------------------------------------------------------------
// Exact elimination
// ---------------------------------------------------------------------------

/// In-place reduced row echelon form. Returns the pivot columns.
pub fn rref_in_place<T: Field>(m: &mut Mat<T>) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..m.cols {
        if row == m.rows {
            break;
        }
        let mut sel = None;
        for r in row..m.rows {
            if !m[(r, col)].is_zero() {
                sel = Some(r);
                break;
            }
        }
        let Some(sel) = sel else { continue };
        if sel != row {
            for c in 0..m.cols {
                let tmp = m[(sel, c)].clone();
                m[(sel, c)] = m[(row, c)].clone();
                m[(row, c)] = tmp;
            }
        }
        let pinv = m[(row, col)].inv();
        for c in col..m.cols {
            m[(row, c)] = m[(row, c)].mul(&pinv);
        }
        for r in 0..m.rows {
            if r != row && !m[(r, col)].is_zero() {
                let factor = m[(r, col)].clone();
                for c in col..m.cols {
                    let sub = factor.mul(&m[(row, c)]);
                    m[(r, c)] = m[(r, c)].sub(&sub);
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

pub fn rank<T: Field>(m: &Mat<T>) -> usize {
    let mut c = m.clone();
    rref_in_place(&mut c).len()
}

/// Basis of the right kernel {v : M v = 0}.
pub fn kernel_basis<T: Field>(m: &Mat<T>) -> Vec<Vec<T>> {
    let mut r = m.clone();
    let pivots = rref_in_place(&mut r);
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    let mut out = Vec::new();
    for &fc in &free {
        let mut v = vec![T::zero(); m.cols];
        v[fc] = T::one();
        for (prow, &pcol) in pivots.iter().enumerate() {
            v[pcol] = r[(prow, fc)].neg();
        }
        out.push(v);
    }
    out
}

/// Solve M x = b for square invertible M. None when singular.
pub fn solve_square<T: Field>(m: &Mat<T>, b: &[T]) -> Option<Vec<T>> {
    assert_eq!(m.rows, m.cols);
    assert_eq!(m.rows, b.len());
    let mut aug = Mat::zeros(m.rows, m.cols + 1);
    for r in 0..m.rows {
        for c in 0..m.cols {
            aug[(r, c)] = m[(r, c)].clone();
        }
        aug[(r, m.cols)] = b[r].clone();
    }
    let pivots = rref_in_place(&mut aug);
    if pivots.len() != m.cols || pivots.contains(&m.cols) {
        return None;
    }
    Some((0..m.rows).map(|r| aug[(r, m.cols)].clone()).collect())
}

/// Outcome of exact pivoted LDL^T factorization of a symmetric PSD matrix:
/// A = L D L^T with unit-lower-trapezoidal-up-to-permutation L (n x r) and
/// strictly positive diagonal D (length r).
pub struct Ldlt<T> {
    /// Original row index eliminated at each step.
    pub perm: Vec<usize>,
    /// n x r factor, already un-permuted so that A = L D L^T directly.
    pub l: Mat<T>,
    /// The r strictly positive pivots.
    pub pivots: Vec<T>,
    pub rank: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum LdltError {
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("negative pivot at elimination step {step}")]
    NegativePivot { step: usize },
    #[error("zero diagonal with nonzero residual at row {row}: not positive semidefinite")]
    ZeroDiagonal { row: usize },
}

/// Exact rank-revealing LDL^T for symmetric positive semidefinite matrices
/// over an ordered exact field. Diagonal pivoting; every sign decision goes
/// through the field's exact `sign`, never floating point.
pub fn ldlt_psd<T: OrderedField>(a: &Mat<T>) -> Result<Ldlt<T>, LdltError> {
    let n = a.rows;
    if a.rows != a.cols {
        return Err(LdltError::NotSymmetric);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if a[(i, j)] != a[(j, i)] {
                return Err(LdltError::NotSymmetric);
            }
        }
    }
    let mut work = a.clone();
    let mut active: Vec<usize> = (0..n).collect();
    let mut perm = Vec::new();
    let mut cols: Vec<Vec<T>> = Vec::new();
    let mut pivots = Vec::new();

    loop {
        let mut pick = None;
        for (ai, &orig) in active.iter().enumerate() {
            let s = work[(orig, orig)].sign();
            if s > 0 {
                pick = Some(ai);
                break;
            }
            if s < 0 {
                return Err(LdltError::NegativePivot { step: perm.len() });
            }
        }
        let Some(pick) = pick else {
            // remaining diagonals all zero; PSD forces the whole block to vanish
            for &r in &active {
                for &c in &active {
                    if !work[(r, c)].is_zero() {
                        return Err(LdltError::ZeroDiagonal { row: r });
                    }
                }
            }
            break;
        };
        let p = active.remove(pick);
        let d = work[(p, p)].clone();
        let dinv = d.inv();
        let mut col = vec![T::zero(); n];
        col[p] = T::one();
        for &r in &active {
            col[r] = work[(r, p)].mul(&dinv);
        }
        for &r in &active {
            for &c in &active {
                let upd = col[r].mul(&d).mul(&col[c]);
                work[(r, c)] = work[(r, c)].sub(&upd);
            }
        }
        perm.push(p);
        pivots.push(d);
        cols.push(col);
    }

    let r = pivots.len();
    let mut l = Mat::zeros(n, r);
    for (k, col) in cols.iter().enumerate() {
        for i in 0..n {
            l[(i, k)] = col[i].clone();
        }
    }
    Ok(Ldlt { perm, l, pivots, rank: r })
}

// ---------------------------------------------------------------------------
// Float (MPFR complex) routines
// ---------------------------------------------------------------------------

pub type CMat = Mat<Cf>;

impl CMat {
    pub fn zeros_p(rows: usize, cols: usize, prec: u32) -> CMat {
        Mat { rows, cols, data: vec![Cf::zero_p(prec); rows * cols] }
    }

    pub fn identity_p(n: usize, prec: u32) -> CMat {
        let mut m = CMat::zeros_p(n, n, prec);
        for i in 0..n {
            m[(i, i)] = Cf::one_p(prec);
        }
        m
    }

    pub fn frobenius_norm(&self) -> Float {
        let prec = if self.data.is_empty() { 64 } else { self.data[0].prec() };
        let mut acc = Float::with_val(prec, 0);
        for x in &self.data {
            acc += x.abs2();
        }
        acc.sqrt()
    }

    pub fn max_abs(&self) -> Float {
        let prec = if self.data.is_empty() { 64 } else { self.data[0].prec() };
        let mut acc = Float::with_val(prec, 0);
        for x in &self.data {
            let a = x.abs();
            if a > acc {
                acc = a;
            }
        }
        acc
    }

    /// Hermitian eigendecomposition by cyclic Jacobi: A = V diag(w) V* with
    /// w ascending and V unitary.
    pub fn eigh(&self) -> (Vec<Float>, CMat) {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let prec = if n == 0 { 64 } else { self.data[0].prec() };
        let mut a = self.clone();
        let mut v = CMat::identity_p(n, prec);
        let tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 8));
        let one = Float::with_val(prec, 1);
        let mut scale = self.max_abs();
        if scale.is_zero() {
            scale = one.clone();
        }

        for _sweep in 0..80 {
            let mut off = Float::with_val(prec, 0);
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].abs2();
                }
            }
            if off.sqrt() < tol.clone() * &scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)].clone();
                    let mag = apq.abs();
                    if mag < Float::with_val(prec, Float::i_exp(1, -2 * prec as i32)) {
                        continue;
                    }
                    let phase = Cf::new(apq.re.clone() / &mag, apq.im.clone() / &mag);
                    let app = a[(p, p)].re.clone();
                    let aqq = a[(q, q)].re.clone();
                    let tau = (aqq - &app) / (Float::with_val(prec, 2) * &mag);
                    let denom =
                        tau.clone().abs() + (tau.clone().square() + &one).sqrt();
                    let mut t = one.clone() / denom;
                    if tau.is_sign_negative() && !tau.is_zero() {
                        t = -t;
                    }
                    let c = one.clone() / (t.clone().square() + &one).sqrt();
                    let s = t * &c;
                    let u_pp = Cf::new(c.clone(), Float::with_val(prec, 0));
                    let u_pq = Cf::new(s.clone(), Float::with_val(prec, 0)).mul(&phase);
                    // A <- U* A on rows p, q
                    for k in 0..n {
                        let x = a[(p, k)].clone();
                        let y = a[(q, k)].clone();
                        a[(p, k)] = u_pp.mul(&x).sub(&u_pq.conj().mul(&y));
                        a[(q, k)] = u_pq.mul(&x).add(&u_pp.mul(&y));
                    }
                    // A <- A U on cols p, q; same update accumulates into V
                    for k in 0..n {
                        let x = a[(k, p)].clone();
                        let y = a[(k, q)].clone();
                        a[(k, p)] = u_pp.mul(&x).sub(&u_pq.mul(&y));
                        a[(k, q)] = u_pq.conj().mul(&x).add(&u_pp.mul(&y));
                        let xv = v[(k, p)].clone();
                        let yv = v[(k, q)].clone();
                        v[(k, p)] = u_pp.mul(&xv).sub(&u_pq.mul(&yv));
                        v[(k, q)] = u_pq.conj().mul(&xv).add(&u_pp.mul(&yv));
                    }
                }
            }
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
        let w: Vec<Float> = idx.iter().map(|&i| a[(i, i)].re.clone()).collect();
        let vs = Mat::from_fn(n, n, |r, c| v[(r, idx[c])].clone());
        (w, vs)
    }

    /// Cholesky of a Hermitian positive definite matrix: A = L L*. None when
    /// a pivot fails to be strictly positive.
    pub fn cholesky(&self) -> Option<CMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let prec = if n == 0 { 64 } else { self.data[0].prec() };
        let mut l = CMat::zeros_p(n, n, prec);
        for j in 0..n {
            let mut d = self[(j, j)].re.clone();
            for k in 0..j {
                d -= l[(j, k)].abs2();
            }
            if !(d > 0) {
                return None;
            }
            let dj = d.sqrt();
            l[(j, j)] = Cf::new(dj.clone(), Float::with_val(prec, 0));
            for i in (j + 1)..n {
                let mut acc = self[(i, j)].clone();
                for k in 0..j {
                    acc = acc.sub(&l[(i, k)].mul(&l[(j, k)].conj()));
                }
                l[(i, j)] = Cf::new(acc.re / &dj, acc.im / &dj);
            }
        }
        Some(l)
    }

    /// Matrix exponential by scaling-and-squaring with a Taylor tail.
    pub fn expm(&self) -> CMat {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let prec = if n == 0 { 64 } else { self.data[0].prec() };
        let norm = self.frobenius_norm();
        let mut s = 0u32;
        let mut nf = norm.to_f64();
        while nf > 0.25 {
            nf /= 2.0;
            s += 1;
        }
        let scale = Float::with_val(prec, Float::i_exp(1, -(s as i32)));
        let x = self.map(|c| c.scale(&scale));
        let mut term = CMat::identity_p(n, prec);
        let mut acc = CMat::identity_p(n, prec);
        let terms = (prec as usize) / 2 + 8;
        for k in 1..terms {
            term = term.matmul(&x);
            let inv = Float::with_val(prec, 1) / Float::with_val(prec, k as u32);
            term = term.map(|c| c.scale(&inv));
            acc = acc.add(&term);
            if term.max_abs() < Float::with_val(prec, Float::i_exp(1, -(prec as i32) - 8)) {
                break;
            }
        }
        for _ in 0..s {
            acc = acc.matmul(&acc);
        }
        acc
    }

    /// Unitary polar factor via the Newton iteration U <- (U + U^-*)/2.
    pub fn polar_unitary(&self) -> CMat {
        assert_eq!(self.rows, self.cols);
        let prec = self.data[0].prec();
        let mut u = self.clone();
        for _ in 0..(32 + prec / 8) {
            let uinv = u.inverse().expect("polar factor of singular matrix");
            let next = u.add(&uinv.dagger()).map(|c| c.scale(&Float::with_val(prec, 0.5)));
            let delta = next.sub(&u).max_abs();
            u = next;
            if delta < Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 6)) {
                break;
            }
        }
        u
    }

    /// Gauss-Jordan inverse with partial pivoting by magnitude.
    pub fn inverse(&self) -> Option<CMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let prec = if n == 0 { 64 } else { self.data[0].prec() };
        let mut a = self.clone();
        let mut inv = CMat::identity_p(n, prec);
        for col in 0..n {
            let mut best = col;
            let mut bestmag = a[(col, col)].abs();
            for r in (col + 1)..n {
                let m = a[(r, col)].abs();
                if m > bestmag {
                    bestmag = m;
                    best = r;
                }
            }
            if bestmag.is_zero() {
                return None;
            }
            if best != col {
                for c in 0..n {
                    let t = a[(best, c)].clone();
                    a[(best, c)] = a[(col, c)].clone();
                    a[(col, c)] = t;
                    let t = inv[(best, c)].clone();
                    inv[(best, c)] = inv[(col, c)].clone();
                    inv[(col, c)] = t;
                }
            }
            let pinv = a[(col, col)].inv();
            for c in 0..n {
                a[(col, c)] = a[(col, c)].mul(&pinv);
                inv[(col, c)] = inv[(col, c)].mul(&pinv);
            }
            for r in 0..n {
                if r != col && !a[(r, col)].is_zero() {
                    let f = a[(r, col)].clone();
                    for c in 0..n {
                        let s = f.mul(&a[(col, c)]);
                        a[(r, c)] = a[(r, c)].sub(&s);
                        let s = f.mul(&inv[(col, c)]);
                        inv[(r, c)] = inv[(r, c)].sub(&s);
                    }
                }
            }
        }
        Some(inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat_i;

    #[test]
    fn rref_and_kernel() {
        let m = Mat::from_fn(3, 3, |r, c| {
            let vals = [[1i64, 0, 1], [0, 1, 1], [1, 1, 2]];
            Rat::from(vals[r][c])
        });
        assert_eq!(rank(&m), 2);
        let k = kernel_basis(&m);
        assert_eq!(k.len(), 1);
        let mv = m.mul_vec(&k[0]);
        assert!(mv.iter().all(|x| Field::is_zero(x)));
    }

    #[test]
    fn ldlt_psd_rank_and_reconstruction() {
        let b = Mat::from_fn(3, 2, |r, c| {
            let vals = [[1i64, 0], [2, 1], [0, 3]];
            Rat::from(vals[r][c])
        });
        let a = b.matmul(&b.transpose());
        let f = ldlt_psd(&a).unwrap();
        assert_eq!(f.rank, 2);
        let mut d = Mat::zeros(f.rank, f.rank);
        for i in 0..f.rank {
            d[(i, i)] = f.pivots[i].clone();
        }
        let rec = f.l.matmul(&d).matmul(&f.l.transpose());
        assert_eq!(rec, a);
    }

    #[test]
    fn ldlt_rejects_indefinite() {
        let mut a = Mat::<Rat>::zeros(2, 2);
        a[(0, 0)] = rat_i(1);
        a[(1, 1)] = rat_i(-1);
        assert!(ldlt_psd(&a).is_err());
        let mut b = Mat::<Rat>::zeros(2, 2);
        b[(0, 1)] = rat_i(1);
        b[(1, 0)] = rat_i(1);
        assert!(ldlt_psd(&b).is_err());
    }

    #[test]
    fn jacobi_eigh_small() {
        let prec = 192;
        let mut a = CMat::zeros_p(2, 2, prec);
        a[(0, 0)] = Cf::from_f64(prec, 2.0, 0.0);
        a[(1, 1)] = Cf::from_f64(prec, 2.0, 0.0);
        a[(0, 1)] = Cf::from_f64(prec, 0.0, 1.0);
        a[(1, 0)] = Cf::from_f64(prec, 0.0, -1.0);
        let (w, v) = a.eigh();
        assert!((w[0].to_f64() - 1.0).abs() < 1e-30);
        assert!((w[1].to_f64() - 3.0).abs() < 1e-30);
        let mut d = CMat::zeros_p(2, 2, prec);
        d[(0, 0)] = Cf::new(w[0].clone(), Float::with_val(prec, 0));
        d[(1, 1)] = Cf::new(w[1].clone(), Float::with_val(prec, 0));
        let diff = a.matmul(&v).sub(&v.matmul(&d)).max_abs();
        assert!(diff.to_f64() < 1e-40);
    }

    #[test]
    fn expm_identity_and_unitarity() {
        let prec = 128;
        let z = CMat::zeros_p(3, 3, prec);
        let e = z.expm();
        assert!(e.sub(&CMat::identity_p(3, prec)).max_abs().to_f64() < 1e-30);
        let mut h = CMat::zeros_p(2, 2, prec);
        h[(0, 1)] = Cf::from_f64(prec, 0.3, 0.4);
        h[(1, 0)] = Cf::from_f64(prec, -0.3, 0.4);
        let u = h.expm();
        let uu = u.dagger().matmul(&u);
        assert!(uu.sub(&CMat::identity_p(2, prec)).max_abs().to_f64() < 1e-30);
    }

    #[test]
    fn exact_knum_solve() {
        use crate::exactnum::{FNum, KNum};
        let mut m = Mat::<KNum>::identity(2);
        m[(0, 1)] = KNum::omega();
        m[(1, 0)] = KNum::from_fnum(FNum::gen_z());
        let b = vec![KNum::one(), KNum::omega()];
        let x = solve_square(&m, &b).unwrap();
        let back = m.mul_vec(&x);
        assert_eq!(back, b);
    }
}
