//! Normal-form word arithmetic in the group generated by X_1..X_d, Y_1..Y_d
//! modulo the relations X_j^d = Y_j^d = I and [X_j, Y_k] = 0, plus
//! K-coefficient noncommutative polynomials with involution and matrix
//! evaluation.
//!
//! A word is stored in the canonical form (A-letters, then B-letters) with
//! adjacent letters of equal index merged and zero exponents deleted; the
//! cross-commutation relation makes this a confluent normal form. Words are
//! interned in a global table so equality and hashing are integer comparisons;
//! the intern table is the only shared mutable structure and is safe for
//! concurrent insertion.

use crate::exactnum::{ExactError, KNum};
use crate::linear::{CMat, Field, Mat};
use rug::Float;
use std::collections::{BTreeMap, HashMap};
use std::sync::{OnceLock, RwLock};

#[derive(Debug, thiserror::Error)]
pub enum NcalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix for {side:?}{index} is not unitary")]
    NotUnitary { side: Side, index: u8 },
    #[error("{0}")]
    Parse(#[from] ExactError),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Side {
    A,
    B,
}

/// One generator power: X_index^exp (side A) or Y_index^exp (side B).
/// Exponents are always in 1..d-1; exponent-0 letters are deleted during
/// normalization.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Letter {
    pub side: Side,
    pub index: u8,
    pub exp: u8,
}

pub fn x(index: u8, exp: u8) -> Letter {
    Letter { side: Side::A, index, exp }
}

pub fn y(index: u8, exp: u8) -> Letter {
    Letter { side: Side::B, index, exp }
}

// ---------------------------------------------------------------------------
// Interned words
// ---------------------------------------------------------------------------

/// Interned normal-form word. Copyable; equality and hash are O(1).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Word(u32);

struct Intern {
    by_letters: HashMap<Vec<Letter>, u32>,
    data: Vec<Vec<Letter>>,
}

fn intern() -> &'static RwLock<Intern> {
    static TABLE: OnceLock<RwLock<Intern>> = OnceLock::new();
    TABLE.get_or_init(|| {
        RwLock::new(Intern { by_letters: HashMap::from([(Vec::new(), 0)]), data: vec![Vec::new()] })
    })
}

fn intern_letters(letters: Vec<Letter>) -> Word {
    {
        let t = intern().read().unwrap();
        if let Some(&id) = t.by_letters.get(&letters) {
            return Word(id);
        }
    }
    let mut t = intern().write().unwrap();
    if let Some(&id) = t.by_letters.get(&letters) {
        return Word(id);
    }
    let id = t.data.len() as u32;
    t.data.push(letters.clone());
    t.by_letters.insert(letters, id);
    Word(id)
}

impl Word {
    pub fn identity() -> Word {
        Word(0)
    }

    pub fn is_identity(self) -> bool {
        self.0 == 0
    }

    pub fn letters(self) -> Vec<Letter> {
        intern().read().unwrap().data[self.0 as usize].clone()
    }

    /// Total letter count; exponent-independent ("x1^2" is one letter).
    pub fn letter_degree(self) -> usize {
        intern().read().unwrap().data[self.0 as usize].len()
    }

    /// Exponent sums over the A- and B-letters, not reduced.
    pub fn exp_sums(self) -> (u32, u32) {
        let t = intern().read().unwrap();
        let mut a = 0u32;
        let mut b = 0u32;
        for l in &t.data[self.0 as usize] {
            match l.side {
                Side::A => a += l.exp as u32,
                Side::B => b += l.exp as u32,
            }
        }
        (a, b)
    }

    /// Grading class (sum of A-exponents mod d, sum of B-exponents mod d).
    pub fn class(self, d: u8) -> (u8, u8) {
        let (a, b) = self.exp_sums();
        ((a % d as u32) as u8, (b % d as u32) as u8)
    }

    /// Deterministic content order: by letter count, then lexicographically.
    pub fn cmp_graded(self, other: Word) -> std::cmp::Ordering {
        if self == other {
            return std::cmp::Ordering::Equal;
        }
        let t = intern().read().unwrap();
        let a = &t.data[self.0 as usize];
        let b = &t.data[other.0 as usize];
        a.len().cmp(&b.len()).then_with(|| a.cmp(b))
    }

    /// Display form: `1` for the identity, otherwise `x1^2 y3` style tokens.
    pub fn text(self) -> String {
        let letters = self.letters();
        if letters.is_empty() {
            return "1".to_string();
        }
        let mut parts = Vec::with_capacity(letters.len());
        for l in letters {
            let side = match l.side {
                Side::A => 'x',
                Side::B => 'y',
            };
            if l.exp == 1 {
                parts.push(format!("{}{}", side, l.index));
            } else {
                parts.push(format!("{}{}^{}", side, l.index, l.exp));
            }
        }
        parts.join(" ")
    }

    /// Parse the `x1^2 y3` syntax (case-insensitive); `1` is the identity.
    pub fn parse(text: &str, d: u8) -> Result<Word, NcalgError> {
        let mut letters = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let lower = tok.to_ascii_lowercase();
            let bytes = lower.as_bytes();
            let side = match bytes.first() {
                Some(b'x') => Side::A,
                Some(b'y') => Side::B,
                _ => {
                    return Err(ExactError::Parse {
                        pos: 0,
                        msg: format!("bad word token '{tok}'"),
                    }
                    .into())
                }
            };
            let rest = &lower[1..];
            let (idx_s, exp_s) = match rest.split_once('^') {
                Some((i, e)) => (i, e),
                None => (rest, "1"),
            };
            let index: u8 = idx_s.parse().map_err(|_| ExactError::Parse {
                pos: 0,
                msg: format!("bad index in '{tok}'"),
            })?;
            let exp: u8 = exp_s.parse().map_err(|_| ExactError::Parse {
                pos: 0,
                msg: format!("bad exponent in '{tok}'"),
            })?;
            if index == 0 || index > d || exp == 0 || exp >= d {
                return Err(ExactError::Parse {
                    pos: 0,
                    msg: format!("token '{tok}' out of range for d={d}"),
                }
                .into());
            }
            letters.push(Letter { side, index, exp });
        }
        Ok(normal_form(&letters, d))
    }
}

/// Confluent reduction: move B-letters right past A-letters, merge adjacent
/// equal-index letters with exponents mod d, and delete exponent-0 letters.
pub fn normal_form(raw: &[Letter], d: u8) -> Word {
    let mut xpart: Vec<Letter> = Vec::new();
    let mut ypart: Vec<Letter> = Vec::new();
    for l in raw {
        debug_assert!(l.index >= 1 && l.index <= d);
        let part = match l.side {
            Side::A => &mut xpart,
            Side::B => &mut ypart,
        };
        let exp = l.exp % d;
        if exp == 0 {
            continue;
        }
        push_merge(part, Letter { side: l.side, index: l.index, exp }, d);
    }
    let mut letters = xpart;
    letters.extend(ypart);
    intern_letters(letters)
}

fn push_merge(part: &mut Vec<Letter>, l: Letter, d: u8) {
    match part.last_mut() {
        Some(top) if top.index == l.index => {
            let e = (top.exp + l.exp) % d;
            if e == 0 {
                part.pop();
            } else {
                top.exp = e;
            }
        }
        _ => part.push(l),
    }
}

/// Concatenate and renormalize.
pub fn word_mul(a: Word, b: Word, d: u8) -> Word {
    if a.is_identity() {
        return b;
    }
    if b.is_identity() {
        return a;
    }
    let mut letters = a.letters();
    letters.extend(b.letters());
    normal_form(&letters, d)
}

/// Involution: reverse each side, negate exponents mod d.
pub fn word_involution(w: Word, d: u8) -> Word {
    let letters = w.letters();
    let mut out = Vec::with_capacity(letters.len());
    for side in [Side::A, Side::B] {
        for l in letters.iter().rev() {
            if l.side == side {
                out.push(Letter { side: l.side, index: l.index, exp: d - l.exp });
            }
        }
    }
    normal_form(&out, d)
}

// ---------------------------------------------------------------------------
// Noncommutative polynomials with K coefficients
// ---------------------------------------------------------------------------

/// Word wrapper ordered by the graded content order (used as map key so that
/// iteration is deterministic across runs, independent of interning order).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct OrdWord(pub Word);

impl PartialOrd for OrdWord {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdWord {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.cmp_graded(other.0)
    }
}

/// Finitely supported K-linear combination of normal-form words. No stored
/// zero coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct NCPoly {
    terms: BTreeMap<OrdWord, KNum>,
}

impl NCPoly {
    pub fn zero() -> Self {
        NCPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        NCPoly::from_word(Word::identity(), KNum::one())
    }

    pub fn from_word(w: Word, c: KNum) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(OrdWord(w), c);
        }
        NCPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, w: Word) -> KNum {
        self.terms.get(&OrdWord(w)).cloned().unwrap_or_else(KNum::zero)
    }

    pub fn support(&self) -> Vec<Word> {
        self.terms.keys().map(|k| k.0).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Word, &KNum)> {
        self.terms.iter().map(|(k, v)| (k.0, v))
    }

    /// Max letter count over the support.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|k| k.0.letter_degree()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, w: Word, c: &KNum) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(OrdWord(w)) {
            Entry::Vacant(e) => {
                e.insert(c.clone());
            }
            Entry::Occupied(mut e) => {
                let s = e.get().add(c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, o: &NCPoly) -> NCPoly {
        let mut out = self.clone();
        for (w, c) in o.iter() {
            out.add_term(w, c);
        }
        out
    }

    pub fn sub(&self, o: &NCPoly) -> NCPoly {
        let mut out = self.clone();
        for (w, c) in o.iter() {
            out.add_term(w, &c.neg());
        }
        out
    }

    pub fn neg(&self) -> NCPoly {
        NCPoly { terms: self.terms.iter().map(|(k, v)| (*k, v.neg())).collect() }
    }

    pub fn scale(&self, s: &KNum) -> NCPoly {
        if s.is_zero() {
            return NCPoly::zero();
        }
        NCPoly { terms: self.terms.iter().map(|(k, v)| (*k, v.mul(s))).collect() }
    }

    /// Bilinear product with word concatenation then normalization.
    pub fn mul(&self, o: &NCPoly, d: u8) -> NCPoly {
        let mut out = NCPoly::zero();
        for (wa, ca) in self.iter() {
            for (wb, cb) in o.iter() {
                out.add_term(word_mul(wa, wb, d), &ca.mul(cb));
            }
        }
        out
    }

    /// Coefficients conjugated in K, words reversed with exponents negated.
    pub fn involution(&self, d: u8) -> NCPoly {
        let mut out = NCPoly::zero();
        for (w, c) in self.iter() {
            out.add_term(word_involution(w, d), &c.conj());
        }
        out
    }

    pub fn is_self_adjoint(&self, d: u8) -> bool {
        self.involution(d) == *self
    }
}

// ---------------------------------------------------------------------------
// Evaluation at operator assignments
// ---------------------------------------------------------------------------

/// Exact operator assignment: X_i acts as M_i (x) I and Y_j as I (x) N_j on
/// the dim_a * dim_b tensor space. Matrices are checked unitary exactly.
pub struct ExactAssignment {
    pub d: u8,
    pub x_ops: Vec<Mat<KNum>>,
    pub y_ops: Vec<Mat<KNum>>,
    pub dim_a: usize,
    pub dim_b: usize,
}

impl ExactAssignment {
    pub fn new(d: u8, x_ops: Vec<Mat<KNum>>, y_ops: Vec<Mat<KNum>>) -> Result<Self, NcalgError> {
        if x_ops.len() != d as usize || y_ops.len() != d as usize {
            return Err(NcalgError::Dimension(format!(
                "need {d} operators per side, got {} and {}",
                x_ops.len(),
                y_ops.len()
            )));
        }
        let dim_a = x_ops[0].rows;
        let dim_b = y_ops[0].rows;
        for (i, m) in x_ops.iter().enumerate() {
            if m.rows != dim_a || m.cols != dim_a {
                return Err(NcalgError::Dimension("A-side dimensions differ".into()));
            }
            if m.matmul(&m.dagger()) != Mat::identity(dim_a) {
                return Err(NcalgError::NotUnitary { side: Side::A, index: i as u8 + 1 });
            }
        }
        for (j, m) in y_ops.iter().enumerate() {
            if m.rows != dim_b || m.cols != dim_b {
                return Err(NcalgError::Dimension("B-side dimensions differ".into()));
            }
            if m.matmul(&m.dagger()) != Mat::identity(dim_b) {
                return Err(NcalgError::NotUnitary { side: Side::B, index: j as u8 + 1 });
            }
        }
        Ok(ExactAssignment { d, x_ops, y_ops, dim_a, dim_b })
    }

    fn side_power(&self, side: Side, index: u8, exp: u8) -> Mat<KNum> {
        let m = match side {
            Side::A => &self.x_ops[(index - 1) as usize],
            Side::B => &self.y_ops[(index - 1) as usize],
        };
        let mut acc = m.clone();
        for _ in 1..exp {
            acc = acc.matmul(m);
        }
        acc
    }

    /// Matrix of a word on the tensor space: (A-product) kron (B-product).
    pub fn word_matrix(&self, w: Word) -> Mat<KNum> {
        let mut pa: Mat<KNum> = Mat::identity(self.dim_a);
        let mut pb: Mat<KNum> = Mat::identity(self.dim_b);
        for l in w.letters() {
            match l.side {
                Side::A => pa = pa.matmul(&self.side_power(l.side, l.index, l.exp)),
                Side::B => pb = pb.matmul(&self.side_power(l.side, l.index, l.exp)),
            }
        }
        pa.kron(&pb)
    }

    pub fn poly_matrix(&self, p: &NCPoly) -> Mat<KNum> {
        let n = self.dim_a * self.dim_b;
        let mut acc: Mat<KNum> = Mat::zeros(n, n);
        for (w, c) in p.iter() {
            acc = acc.add(&self.word_matrix(w).scale(c));
        }
        acc
    }

    /// psi* p(X, Y) psi / psi* psi, exact; psi need not be normalized.
    pub fn expectation(&self, p: &NCPoly, psi: &[KNum]) -> Result<KNum, NcalgError> {
        let n = self.dim_a * self.dim_b;
        if psi.len() != n {
            return Err(NcalgError::Dimension(format!(
                "state has length {}, expected {n}",
                psi.len()
            )));
        }
        let m = self.poly_matrix(p);
        let mp = m.mul_vec(psi);
        let mut num = KNum::zero();
        let mut den = KNum::zero();
        for i in 0..n {
            num = num.add(&psi[i].conj().mul(&mp[i]));
            den = den.add(&psi[i].conj().mul(&psi[i]));
        }
        Ok(num.mul(&den.inv()))
    }
}

/// Float operator assignment at a fixed MPFR precision; unitarity checked to
/// tolerance 2^(16-prec).
pub struct FloatAssignment {
    pub d: u8,
    pub x_ops: Vec<CMat>,
    pub y_ops: Vec<CMat>,
    pub dim_a: usize,
    pub dim_b: usize,
}

impl FloatAssignment {
    pub fn new(d: u8, x_ops: Vec<CMat>, y_ops: Vec<CMat>) -> Result<Self, NcalgError> {
        if x_ops.is_empty() || y_ops.is_empty() {
            return Err(NcalgError::Dimension("empty operator list".into()));
        }
        let dim_a = x_ops[0].rows;
        let dim_b = y_ops[0].rows;
        let prec = x_ops[0].data[0].prec();
        let tol = Float::with_val(prec, Float::i_exp(1, 16 - prec as i32));
        for (i, m) in x_ops.iter().enumerate() {
            let r = m.matmul(&m.dagger()).sub(&CMat::identity_p(dim_a, prec)).max_abs();
            if r > tol {
                return Err(NcalgError::NotUnitary { side: Side::A, index: i as u8 + 1 });
            }
        }
        for (j, m) in y_ops.iter().enumerate() {
            let r = m.matmul(&m.dagger()).sub(&CMat::identity_p(dim_b, prec)).max_abs();
            if r > tol {
                return Err(NcalgError::NotUnitary { side: Side::B, index: j as u8 + 1 });
            }
        }
        Ok(FloatAssignment { d, x_ops, y_ops, dim_a, dim_b })
    }

    fn side_power(&self, side: Side, index: u8, exp: u8) -> CMat {
        let m = match side {
            Side::A => &self.x_ops[(index - 1) as usize],
            Side::B => &self.y_ops[(index - 1) as usize],
        };
        let mut acc = m.clone();
        for _ in 1..exp {
            acc = acc.matmul(m);
        }
        acc
    }

    pub fn word_matrix(&self, w: Word) -> CMat {
        let prec = self.x_ops[0].data[0].prec();
        let mut pa = CMat::identity_p(self.dim_a, prec);
        let mut pb = CMat::identity_p(self.dim_b, prec);
        for l in w.letters() {
            match l.side {
                Side::A => pa = pa.matmul(&self.side_power(l.side, l.index, l.exp)),
                Side::B => pb = pb.matmul(&self.side_power(l.side, l.index, l.exp)),
            }
        }
        pa.kron(&pb)
    }

    pub fn poly_matrix(&self, p: &NCPoly, prec: u32) -> CMat {
        let n = self.dim_a * self.dim_b;
        let mut acc = CMat::zeros_p(n, n, prec);
        for (w, c) in p.iter() {
            let (re, im) = c.to_floats(prec);
            let cf = crate::linear::Cf::new(re, im);
            acc = acc.add(&self.word_matrix(w).map(|e| e.mul(&cf)));
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{rat, FNum};
    use proptest::prelude::*;

    fn w(letters: &[Letter]) -> Word {
        normal_form(letters, 3)
    }

    #[test]
    fn normal_form_examples() {
        // X1 Y2 X1^2 -> Y2
        let v = w(&[x(1, 1), y(2, 1), x(1, 2)]);
        assert_eq!(v, w(&[y(2, 1)]));
        // Y2 X1 -> X1 Y2
        assert_eq!(w(&[y(2, 1), x(1, 1)]), w(&[x(1, 1), y(2, 1)]));
        // X1 X2 X1 stays put
        let free = w(&[x(1, 1), x(2, 1), x(1, 1)]);
        assert_eq!(free.letters(), vec![x(1, 1), x(2, 1), x(1, 1)]);
    }

    #[test]
    fn involution_examples() {
        // (X1 Y2)* = X1^2 Y2^2
        let v = word_involution(w(&[x(1, 1), y(2, 1)]), 3);
        assert_eq!(v, w(&[x(1, 2), y(2, 2)]));
        assert_eq!(word_involution(Word::identity(), 3), Word::identity());
    }

    #[test]
    fn word_mul_unitarity() {
        let a = w(&[x(1, 1), y(1, 1)]);
        let astar = word_involution(a, 3);
        assert_eq!(word_mul(a, astar, 3), Word::identity());
        // (X1Y1)(X1Y1) = X1^2 Y1^2
        assert_eq!(word_mul(a, a, 3), w(&[x(1, 2), y(1, 2)]));
    }

    #[test]
    fn poly_involution_conjugates_coefficients() {
        let p = NCPoly::from_word(w(&[x(1, 1)]), KNum::omega());
        let q = p.involution(3);
        assert_eq!(q.coeff(w(&[x(1, 2)])), KNum::omega().conj());
        assert_eq!(p.involution(3).involution(3), p);
    }

    #[test]
    fn word_text_round_trip() {
        let v = w(&[x(1, 2), x(2, 1), y(3, 1)]);
        assert_eq!(v.text(), "x1^2 x2 y3");
        assert_eq!(Word::parse("X1^2  x2 Y3", 3).unwrap(), v);
        assert_eq!(Word::parse("1", 3).unwrap(), Word::identity());
        assert!(Word::parse("x4", 3).is_err());
        assert!(Word::parse("x1^3", 3).is_err());
    }

    #[test]
    fn degree2_words_in_generator_alphabet_count_91() {
        use std::collections::HashSet;
        let mut seen: HashSet<Word> = HashSet::new();
        seen.insert(Word::identity());
        let mut gens = Vec::new();
        for i in 1..=3u8 {
            for j in 1..=3u8 {
                gens.push(w(&[x(i, 1), y(j, 1)]));
            }
        }
        for &g in &gens {
            seen.insert(g);
        }
        for &g in &gens {
            for &h in &gens {
                seen.insert(word_mul(g, h, 3));
            }
        }
        assert_eq!(seen.len(), 91);
    }

    fn random_monomial_unitary(rng: &mut impl rand::Rng, dim: usize) -> Mat<KNum> {
        // order-3 monomial unitary over K: a power of the 3-cycle with
        // omega-power phases whose product along each cycle is 1
        assert_eq!(dim, 3);
        let shift: usize = rng.gen_range(0..3);
        let mut phases = [rng.gen_range(0..3i64), rng.gen_range(0..3i64), 0];
        if shift == 0 {
            phases[2] = rng.gen_range(0..3);
        } else {
            // single 3-cycle: product of phases must be omega^0
            phases[2] = (6 - phases[0] - phases[1]) % 3;
        }
        let mut m: Mat<KNum> = Mat::zeros(dim, dim);
        for c in 0..3 {
            m[((c + shift) % 3, c)] = KNum::omega_pow(phases[c]);
        }
        m
    }

    #[test]
    fn evaluate_star_homomorphism_and_examples() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<Mat<KNum>> = (0..3).map(|_| random_monomial_unitary(&mut rng, 3)).collect();
        let ys: Vec<Mat<KNum>> = (0..3).map(|_| random_monomial_unitary(&mut rng, 3)).collect();
        let assign = ExactAssignment::new(3, xs, ys).unwrap();

        // identity word evaluates to 1 on any unit state
        let psi: Vec<KNum> =
            (0..9).map(|i| if i == 2 { KNum::one() } else { KNum::zero() }).collect();
        let one = assign.expectation(&NCPoly::one(), &psi).unwrap();
        assert_eq!(one, KNum::one());

        // *-homomorphism on random polynomial pairs
        for seed in 0..20u64 {
            use rand::Rng;
            let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rand_poly = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut p = NCPoly::zero();
                for _ in 0..3 {
                    let mut ls = Vec::new();
                    for _ in 0..rng.gen_range(0..3) {
                        let side = if rng.gen_bool(0.5) { Side::A } else { Side::B };
                        ls.push(Letter {
                            side,
                            index: rng.gen_range(1..=3),
                            exp: rng.gen_range(1..=2),
                        });
                    }
                    p.add_term(
                        normal_form(&ls, 3),
                        &KNum::new(
                            FNum::from_rat(rat(rng.gen_range(-3i64..4), 1)),
                            FNum::from_rat(rat(rng.gen_range(-2i64..3), 1)),
                        ),
                    );
                }
                p
            };
            let p = rand_poly(&mut r2);
            let q = rand_poly(&mut r2);
            let lhs = assign.poly_matrix(&p.mul(&q, 3));
            let rhs = assign.poly_matrix(&p).matmul(&assign.poly_matrix(&q));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn all_identity_assignment() {
        let xs: Vec<Mat<KNum>> = (0..3).map(|_| Mat::identity(3)).collect();
        let ys: Vec<Mat<KNum>> = (0..3).map(|_| Mat::identity(3)).collect();
        let assign = ExactAssignment::new(3, xs, ys).unwrap();
        let p = NCPoly::from_word(w(&[x(1, 1), y(1, 1)]), KNum::one());
        let psi: Vec<KNum> = (0..9).map(|_| KNum::one()).collect();
        assert_eq!(assign.expectation(&p, &psi).unwrap(), KNum::one());
    }

    #[test]
    fn rejects_non_unitary() {
        let mut bad: Mat<KNum> = Mat::identity(3);
        bad[(0, 0)] = KNum::from_i64(2);
        let xs = vec![bad, Mat::identity(3), Mat::identity(3)];
        let ys: Vec<Mat<KNum>> = (0..3).map(|_| Mat::identity(3)).collect();
        assert!(ExactAssignment::new(3, xs, ys).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(150))]

        #[test]
        fn prop_normal_form_idempotent_and_relator_invariant(
            seq in proptest::collection::vec((0..2u8, 1..=3u8, 1..=2u8), 0..10),
            ins in 0usize..10,
            relator in 0..2u8,
            ri in 1..=3u8,
            rj in 1..=3u8,
        ) {
            let letters: Vec<Letter> = seq
                .iter()
                .map(|&(s, i, e)| Letter {
                    side: if s == 0 { Side::A } else { Side::B },
                    index: i,
                    exp: e,
                })
                .collect();
            let base = normal_form(&letters, 3);
            prop_assert_eq!(normal_form(&base.letters(), 3), base);
            // insert a relator subword: X_i^3 or the commutator X_i Y_j X_i^2 Y_j^2
            let rel: Vec<Letter> = if relator == 0 {
                vec![x(ri, 1), x(ri, 1), x(ri, 1)]
            } else {
                vec![x(ri, 1), y(rj, 1), x(ri, 2), y(rj, 2)]
            };
            let pos = ins.min(letters.len());
            let mut spliced = letters.clone();
            for (k, l) in rel.into_iter().enumerate() {
                spliced.insert(pos + k, l);
            }
            prop_assert_eq!(normal_form(&spliced, 3), base);
        }

        #[test]
        fn prop_mul_associative_involution_antihom(
            sa in proptest::collection::vec((0..2u8, 1..=3u8, 1..=2u8), 0..5),
            sb in proptest::collection::vec((0..2u8, 1..=3u8, 1..=2u8), 0..5),
            sc in proptest::collection::vec((0..2u8, 1..=3u8, 1..=2u8), 0..5),
        ) {
            let mk = |s: &[(u8, u8, u8)]| {
                let ls: Vec<Letter> = s
                    .iter()
                    .map(|&(sd, i, e)| Letter {
                        side: if sd == 0 { Side::A } else { Side::B },
                        index: i,
                        exp: e,
                    })
                    .collect();
                normal_form(&ls, 3)
            };
            let (a, b, c) = (mk(&sa), mk(&sb), mk(&sc));
            prop_assert_eq!(
                word_mul(word_mul(a, b, 3), c, 3),
                word_mul(a, word_mul(b, c, 3), 3)
            );
            prop_assert_eq!(
                word_involution(word_mul(a, b, 3), 3),
                word_mul(word_involution(b, 3), word_involution(a, 3), 3)
            );
            prop_assert_eq!(word_involution(word_involution(a, 3), 3), a);
        }
    }
}
