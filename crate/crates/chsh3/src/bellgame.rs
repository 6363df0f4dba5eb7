//! The CHSH mod d Bell polynomial, classical values and known bounds, and
//! strategy scoring.
//!
//! The game: players receive questions k, l in {1..d} and win when their
//! answers i, j satisfy i + j = k*l (mod d). In observable form the winning
//! probability polynomial is
//!
//! ```text
//! p_d = (1/d^3) sum_{k,l,n=1..d} omega^{k l n} X_k^n Y_l^n
//! ```
//!
//! with X_k, Y_l unitary d-th roots of the identity. Exact construction is
//! supported for d in {2, 3} (the coefficient field implemented here is
//! Q(omega_3), which contains omega_2 = -1); the classical exhaustive search
//! works for d <= 5 and the Buhrman-Massar bound for any d.

use crate::exactnum::{rat, rat_i, Cyc3, FNum, KNum, Rat};
use crate::linear::{Field, Mat};
use crate::ncalg::{normal_form, x, y, ExactAssignment, Letter, NCPoly, NcalgError, Side, Word};
use crate::par;
use rug::Float;

#[derive(Debug, thiserror::Error)]
pub enum BellError {
    #[error("d = {0} is not prime")]
    NotPrime(u8),
    #[error("exact coefficients for d = {0} need roots of unity outside Q(omega_3)")]
    UnsupportedField(u8),
    #[error("classical exhaustive search limited to d <= 5, got {0}")]
    TooLarge(u8),
    #[error("strategy invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Ncalg(#[from] NcalgError),
    #[error("{0}")]
    Parse(String),
}

pub fn is_prime(d: u8) -> bool {
    if d < 2 {
        return false;
    }
    for q in 2..d {
        if q * q > d {
            break;
        }
        if d % q == 0 {
            return false;
        }
    }
    true
}

/// omega_d^e as an element of Q(omega_3), for d in {2, 3}.
fn omega_d_pow(d: u8, e: i64) -> Result<Cyc3, BellError> {
    match d {
        2 => Ok(if e.rem_euclid(2) == 0 { Cyc3::one() } else { Cyc3::one().neg() }),
        3 => Ok(Cyc3::omega_pow(e)),
        _ => Err(BellError::UnsupportedField(d)),
    }
}

// ---------------------------------------------------------------------------
// Bell polynomial
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct BellPolynomial {
    pub d: u8,
    pub observable_form: NCPoly,
    pub identity_coefficient: Rat,
}

/// Observable form of the CHSH mod d polynomial.
pub fn build_p(d: u8) -> Result<BellPolynomial, BellError> {
    if !is_prime(d) {
        return Err(BellError::NotPrime(d));
    }
    let d3 = rat(1, (d as i64).pow(3));
    let mut p = NCPoly::zero();
    for k in 1..=d {
        for l in 1..=d {
            for n in 1..=d {
                let phase = omega_d_pow(d, (k as i64) * (l as i64) * (n as i64))?;
                let coeff = KNum::from_cyc3(&phase).scale_rat(&d3);
                let word = normal_form(&[x(k, n % d), y(l, n % d)], d);
                p.add_term(word, &coeff);
            }
        }
    }
    let identity_coefficient = {
        let c = p.coeff(Word::identity());
        debug_assert!(c.is_real());
        let f = c.real_part();
        debug_assert!(f.is_rational());
        f.c0
    };
    Ok(BellPolynomial { d, observable_form: p, identity_coefficient })
}

/// Projector-form data: coefficients c_{i,j,k,l} = (1/d^2) delta(i+j-kl mod d)
/// together with the conversion A_i^k = (1/d) sum_n omega^{in} X_k^n.
pub struct ProjectorForm {
    pub d: u8,
}

impl ProjectorForm {
    pub fn coeff(&self, i: u8, j: u8, k: u8, l: u8) -> Rat {
        let d = self.d as i64;
        let r = (i as i64 + j as i64 - (k as i64) * (l as i64)).rem_euclid(d);
        if r == 0 {
            rat(1, d * d)
        } else {
            Rat::new()
        }
    }

    /// The projector A_i^k (side A) or B_j^l (side B) as a polynomial in the
    /// observables.
    pub fn projector(&self, side: Side, answer: u8, question: u8) -> Result<NCPoly, BellError> {
        let d = self.d;
        let mut p = NCPoly::zero();
        for n in 1..=d {
            let phase = omega_d_pow(d, (answer as i64) * (n as i64))?;
            let coeff = KNum::from_cyc3(&phase).scale_rat(&rat(1, d as i64));
            let letter = Letter { side, index: question, exp: n % d };
            p.add_term(normal_form(&[letter], d), &coeff);
        }
        Ok(p)
    }

    /// Expand sum_{ijkl} c_{ijkl} A_i^k B_j^l exactly.
    pub fn expand(&self) -> Result<NCPoly, BellError> {
        let d = self.d;
        let mut acc = NCPoly::zero();
        for k in 1..=d {
            for l in 1..=d {
                for i in 1..=d {
                    for j in 1..=d {
                        let c = self.coeff(i, j, k, l);
                        if c.cmp0() == std::cmp::Ordering::Equal {
                            continue;
                        }
                        let a = self.projector(Side::A, i, k)?;
                        let b = self.projector(Side::B, j, l)?;
                        acc = acc.add(&a.mul(&b, d).scale(&KNum::from_rat(c)));
                    }
                }
            }
        }
        Ok(acc)
    }
}

pub fn projector_form(d: u8) -> Result<ProjectorForm, BellError> {
    if !is_prime(d) {
        return Err(BellError::NotPrime(d));
    }
    Ok(ProjectorForm { d })
}

// ---------------------------------------------------------------------------
// Classical value and Buhrman-Massar bound
// ---------------------------------------------------------------------------

/// Exact classical value: max over deterministic answer functions
/// a, b: {1..d} -> Z_d of (1/d^2) #{(k,l) : a(k) + b(l) = kl mod d}.
///
/// Exhaustive over all d^d x d^d assignments; the outer loop is data-parallel
/// with a deterministic max reduction.
pub fn classical_value(d: u8) -> Result<Rat, BellError> {
    if !is_prime(d) {
        return Err(BellError::NotPrime(d));
    }
    if d > 5 {
        return Err(BellError::TooLarge(d));
    }
    let dd = d as usize;
    let total = dd.pow(d as u32);
    let decode = move |mut idx: usize| -> Vec<u8> {
        let mut f = vec![0u8; dd];
        for slot in f.iter_mut() {
            *slot = (idx % dd) as u8;
            idx /= dd;
        }
        f
    };
    let mut klmod = vec![0u8; dd * dd];
    for k in 1..=dd {
        for l in 1..=dd {
            klmod[(k - 1) * dd + (l - 1)] = ((k * l) % dd) as u8;
        }
    }
    let klmod = &klmod;
    let best = par::fold_reduce(
        total,
        0usize,
        move |ai| {
            let a = decode(ai);
            let mut local_best = 0usize;
            for bi in 0..total {
                let b = decode(bi);
                let mut wins = 0usize;
                for k in 0..dd {
                    for l in 0..dd {
                        if (a[k] + b[l]) % d == klmod[k * dd + l] {
                            wins += 1;
                        }
                    }
                }
                local_best = local_best.max(wins);
            }
            local_best
        },
        |a, b| a.max(b),
    );
    Ok(rat(best as i64, (dd * dd) as i64))
}

/// Buhrman-Massar upper bound 1/d + (d-1)/(d sqrt d) as a high-precision float.
pub fn bm_bound(d: u8, prec: u32) -> Float {
    let df = Float::with_val(prec, d);
    let sqrt_d = df.clone().sqrt();
    Float::with_val(prec, 1) / &df + Float::with_val(prec, d - 1) / (df * sqrt_d)
}

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

/// An exact quantum strategy: order-d unitaries over K per side acting as
/// M (x) I and I (x) N, and a (not necessarily normalized) state on the
/// dim_a * dim_b tensor space. Scoring divides by the exact squared norm, so
/// states may be stored unnormalized (normalizing constants like
/// 1/sqrt(18 - 9z) live outside K).
#[derive(Clone, PartialEq)]
pub struct StrategyTuple {
    pub d: u8,
    pub dim_a: usize,
    pub dim_b: usize,
    pub x_ops: Vec<Mat<KNum>>,
    pub y_ops: Vec<Mat<KNum>>,
    pub psi: Vec<KNum>,
}

impl std::fmt::Debug for StrategyTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StrategyTuple(d={}, {}x{})", self.d, self.dim_a, self.dim_b)
    }
}

#[derive(Clone, Debug)]
pub struct ScoreReport {
    /// The exact value, an element of F (always real).
    pub value: FNum,
    /// lambda - value when a certificate bound lambda is registered.
    pub deficit: Option<FNum>,
}

impl StrategyTuple {
    /// Validates unitarity, order d, and a nonzero state.
    pub fn new(
        d: u8,
        x_ops: Vec<Mat<KNum>>,
        y_ops: Vec<Mat<KNum>>,
        psi: Vec<KNum>,
    ) -> Result<Self, BellError> {
        let assign = ExactAssignment::new(d, x_ops, y_ops)?;
        let (dim_a, dim_b) = (assign.dim_a, assign.dim_b);
        for (ops, dim, side) in [(&assign.x_ops, dim_a, "X"), (&assign.y_ops, dim_b, "Y")] {
            for (i, m) in ops.iter().enumerate() {
                let mut p: Mat<KNum> = Mat::identity(dim);
                for _ in 0..d {
                    p = p.matmul(m);
                }
                if p != Mat::identity(dim) {
                    return Err(BellError::Invariant(format!(
                        "{side}{} does not satisfy M^{d} = I",
                        i + 1
                    )));
                }
            }
        }
        if psi.len() != dim_a * dim_b {
            return Err(BellError::Invariant(format!(
                "state length {} != dimA*dimB = {}",
                psi.len(),
                dim_a * dim_b
            )));
        }
        if psi.iter().all(|c| c.is_zero()) {
            return Err(BellError::Invariant("state is zero".into()));
        }
        Ok(StrategyTuple { d, dim_a, dim_b, x_ops: assign.x_ops, y_ops: assign.y_ops, psi })
    }

    pub fn assignment(&self) -> ExactAssignment {
        ExactAssignment {
            d: self.d,
            x_ops: self.x_ops.clone(),
            y_ops: self.y_ops.clone(),
            dim_a: self.dim_a,
            dim_b: self.dim_b,
        }
    }

    /// Exact squared norm of the stored state, an element of F.
    pub fn norm2(&self) -> FNum {
        let mut acc = KNum::zero();
        for c in &self.psi {
            acc = acc.add(&c.conj().mul(c));
        }
        debug_assert!(acc.is_real());
        acc.real_part()
    }

    /// Reduced density of the normalized state on side A: Tr_B(psi psi*).
    pub fn reduced_density_a(&self) -> Mat<KNum> {
        let inv = KNum::from_fnum(self.norm2()).inv();
        Mat::from_fn(self.dim_a, self.dim_a, |j, jp| {
            let mut acc = KNum::zero();
            for k in 0..self.dim_b {
                acc =
                    acc.add(&self.psi[j * self.dim_b + k].mul(&self.psi[jp * self.dim_b + k].conj()));
            }
            acc.mul(&inv)
        })
    }

    /// Exact value of the Bell polynomial on this strategy.
    pub fn score(&self, lambda: Option<&FNum>) -> Result<ScoreReport, BellError> {
        let p = build_p(self.d)?;
        let v = self.assignment().expectation(&p.observable_form, &self.psi)?;
        if !v.is_real() {
            return Err(BellError::Invariant("value is not real".into()));
        }
        let value = v.real_part();
        let deficit = lambda.map(|l| l.sub(&value));
        Ok(ScoreReport { value, deficit })
    }
}

/// The shift matrix X|j> = |j+1 mod 3>.
pub fn shift_matrix() -> Mat<KNum> {
    let mut m: Mat<KNum> = Mat::zeros(3, 3);
    for j in 0..3 {
        m[((j + 1) % 3, j)] = KNum::one();
    }
    m
}

/// The clock matrix Z|j> = omega^j |j>.
pub fn clock_matrix() -> Mat<KNum> {
    let mut m: Mat<KNum> = Mat::zeros(3, 3);
    for j in 0..3 {
        m[(j, j)] = KNum::omega_pow(j as i64);
    }
    m
}

/// The explicit optimal strategy: X1 = Z^2 X^2, X2 = X, X3 = Z on side A and
/// Y1 = X, Y2 = Z^2 X^2, Y3 = Z on side B, with the state
///
/// ```text
/// (1, z-1, w^2 (2 - z^2), z-1, 2 - z^2, w^2, w^2 (2 - z^2), w^2, w (z-1))
/// ```
///
/// stored unnormalized: its squared norm is exactly 18 - 9z, and the
/// normalizing constant acts as a divisor through exact norm division.
pub fn optimal_strategy() -> StrategyTuple {
    let xm = shift_matrix();
    let zm = clock_matrix();
    let z2x2 = zm.matmul(&zm).matmul(&xm).matmul(&xm);
    let x_ops = vec![z2x2.clone(), xm.clone(), zm.clone()];
    let y_ops = vec![xm, z2x2, zm];

    let z = FNum::gen_z();
    let zm1 = z.sub(&FNum::one());
    let two_m_z2 = FNum::from_i64(2).sub(&z.mul(&z));
    let winv = KNum::omega_pow(2);
    let w = KNum::omega();
    let k = KNum::from_fnum;
    let psi = vec![
        KNum::one(),
        k(zm1.clone()),
        winv.mul(&k(two_m_z2.clone())),
        k(zm1.clone()),
        k(two_m_z2.clone()),
        winv.clone(),
        winv.mul(&k(two_m_z2)),
        winv,
        w.mul(&k(zm1)),
    ];
    StrategyTuple::new(3, x_ops, y_ops, psi).expect("optimal tuple is a valid strategy")
}

/// lambda = (1 + 2z + z^2)/9, the optimal value.
pub fn lambda_exact() -> FNum {
    FNum::new(rat(1, 9), rat(2, 9), rat(1, 9))
}

// ---------------------------------------------------------------------------
// Strategy file format
// ---------------------------------------------------------------------------

/// Serialize: header, matrices row-major as KNum text, then the state.
pub fn strategy_to_text(s: &StrategyTuple) -> String {
    let mut out = String::new();
    out.push_str("BSTRAT v1\n");
    out.push_str(&format!("d = {}\n", s.d));
    out.push_str(&format!("dimA = {}\n", s.dim_a));
    out.push_str(&format!("dimB = {}\n", s.dim_b));
    out.push_str("field = z^3-3z+1 @ [3/2,8/5]\n");
    for (tag, ops, dim) in [("X", &s.x_ops, s.dim_a), ("Y", &s.y_ops, s.dim_b)] {
        for (i, m) in ops.iter().enumerate() {
            out.push_str(&format!("{tag} {}\n", i + 1));
            for r in 0..dim {
                for c in 0..dim {
                    out.push_str(&m[(r, c)].to_text());
                    out.push('\n');
                }
            }
        }
    }
    out.push_str("PSI\n");
    for c in &s.psi {
        out.push_str(&c.to_text());
        out.push('\n');
    }
    out
}

pub fn strategy_from_text(text: &str) -> Result<StrategyTuple, BellError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    fn expect_line<'a>(
        lines: &mut impl Iterator<Item = &'a str>,
        what: &str,
    ) -> Result<String, BellError> {
        lines
            .next()
            .map(|s| s.trim().to_string())
            .ok_or_else(|| BellError::Parse(format!("unexpected end of file, wanted {what}")))
    }
    fn kv(line: &str, key: &str) -> Result<String, BellError> {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| BellError::Parse(format!("expected '{key} = ...', got '{line}'")))?;
        if k.trim() != key {
            return Err(BellError::Parse(format!("expected key {key}, got {}", k.trim())));
        }
        Ok(v.trim().to_string())
    }
    let header = expect_line(&mut lines, "header")?;
    if header != "BSTRAT v1" {
        return Err(BellError::Parse(format!("bad header '{header}'")));
    }
    let d: u8 = kv(&expect_line(&mut lines, "d")?, "d")?
        .parse()
        .map_err(|_| BellError::Parse("bad d".into()))?;
    let dim_a: usize = kv(&expect_line(&mut lines, "dimA")?, "dimA")?
        .parse()
        .map_err(|_| BellError::Parse("bad dimA".into()))?;
    let dim_b: usize = kv(&expect_line(&mut lines, "dimB")?, "dimB")?
        .parse()
        .map_err(|_| BellError::Parse("bad dimB".into()))?;
    let field = kv(&expect_line(&mut lines, "field")?, "field")?;
    if !field.starts_with("z^3-3z+1") {
        return Err(BellError::Parse(format!("unsupported field '{field}'")));
    }
    let mut read_mat = |tag: &str, idx: usize, dim: usize| -> Result<Mat<KNum>, BellError> {
        let head = expect_line(&mut lines, "matrix header")?;
        if head != format!("{tag} {idx}") {
            return Err(BellError::Parse(format!("expected '{tag} {idx}', got '{head}'")));
        }
        let mut m: Mat<KNum> = Mat::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                let line = expect_line(&mut lines, "matrix entry")?;
                m[(r, c)] = KNum::parse(&line).map_err(|e| BellError::Parse(e.to_string()))?;
            }
        }
        Ok(m)
    };
    let mut x_ops = Vec::new();
    for i in 1..=d as usize {
        x_ops.push(read_mat("X", i, dim_a)?);
    }
    let mut y_ops = Vec::new();
    for i in 1..=d as usize {
        y_ops.push(read_mat("Y", i, dim_b)?);
    }
    drop(read_mat);
    let head = expect_line(&mut lines, "PSI")?;
    if head != "PSI" {
        return Err(BellError::Parse(format!("expected 'PSI', got '{head}'")));
    }
    let mut psi = Vec::new();
    for _ in 0..dim_a * dim_b {
        let line = expect_line(&mut lines, "state entry")?;
        psi.push(KNum::parse(&line).map_err(|e| BellError::Parse(e.to_string()))?);
    }
    StrategyTuple::new(d, x_ops, y_ops, psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::RatInterval;

    #[test]
    fn p3_structure() {
        let p = build_p(3).unwrap();
        assert_eq!(p.identity_coefficient, rat(1, 3));
        let w11 = normal_form(&[x(1, 1), y(1, 1)], 3);
        let expected = KNum::omega().scale_rat(&rat(1, 27));
        assert_eq!(p.observable_form.coeff(w11), expected);
        assert!(p.observable_form.is_self_adjoint(3));
        // support: identity + 9 + 9 words
        assert_eq!(p.observable_form.num_terms(), 19);
    }

    #[test]
    fn projector_round_trip_d3() {
        let p = build_p(3).unwrap();
        let pf = projector_form(3).unwrap();
        assert_eq!(pf.expand().unwrap(), p.observable_form);
    }

    #[test]
    fn projector_round_trip_d2() {
        let p = build_p(2).unwrap();
        let pf = projector_form(2).unwrap();
        assert_eq!(pf.expand().unwrap(), p.observable_form);
    }

    #[test]
    fn projectors_sum_to_identity() {
        let pf = projector_form(3).unwrap();
        for k in 1..=3u8 {
            let mut acc = NCPoly::zero();
            for i in 1..=3u8 {
                acc = acc.add(&pf.projector(Side::A, i, k).unwrap());
            }
            assert_eq!(acc, NCPoly::one());
        }
    }

    #[test]
    fn classical_chsh2_is_three_quarters() {
        assert_eq!(classical_value(2).unwrap(), rat(3, 4));
    }

    #[test]
    fn classical_value_d3_stable() {
        let v = classical_value(3).unwrap();
        assert!(v > Rat::new() && v <= rat_i(1));
        assert_eq!(classical_value(3).unwrap(), v);
    }

    #[test]
    fn bm_bound_values() {
        let b2 = bm_bound(2, 128).to_f64();
        assert!((b2 - 0.8535533905932737).abs() < 1e-12);
        // 1/3 + 2/(3 sqrt 3)
        let b3 = bm_bound(3, 128).to_f64();
        assert!((b3 - 0.7182335127930838).abs() < 1e-12);
    }

    #[test]
    fn optimal_strategy_scores_lambda_exactly() {
        let s = optimal_strategy();
        let report = s.score(Some(&lambda_exact())).unwrap();
        assert_eq!(report.value, lambda_exact());
        assert!(report.deficit.unwrap().is_zero());
    }

    #[test]
    fn optimal_state_norm_and_entanglement() {
        let s = optimal_strategy();
        assert_eq!(s.norm2(), FNum::new(rat_i(18), rat_i(-9), Rat::new()));
        let rho = s.reduced_density_a();
        let third = Mat::<KNum>::identity(3).scale(&KNum::from_rat(rat(1, 3)));
        assert_eq!(rho, third);
    }

    #[test]
    fn lambda_between_classical_and_bm() {
        let classical = classical_value(3).unwrap();
        let lam = lambda_exact();
        let gap_low = lam.sub(&FNum::from_rat(classical));
        assert_eq!(gap_low.sign(), 1);
        let lamf = lam.to_float(192);
        let bm = bm_bound(3, 192);
        assert!(lamf < bm);
        // interval cross-check: lambda enclosure strictly below a rational
        // lower bound of the Buhrman-Massar value 0.71823351...
        let enc = crate::exactnum::RealCubicField::pipeline().refine_root(&rat(1, 1i64 << 40));
        let iv: RatInterval = lam.interval_eval(&enc);
        let bmlow = rat(71823351, 100000000);
        assert!(iv.hi < bmlow);
    }

    #[test]
    fn all_identity_strategy_value() {
        let xs: Vec<Mat<KNum>> = (0..3).map(|_| Mat::identity(3)).collect();
        let ys: Vec<Mat<KNum>> = (0..3).map(|_| Mat::identity(3)).collect();
        let psi: Vec<KNum> = (0..9).map(|_| KNum::one()).collect();
        let s = StrategyTuple::new(3, xs, ys, psi).unwrap();
        let v = s.score(None).unwrap().value;
        assert_eq!(v, FNum::from_rat(rat(5, 9)));
    }

    #[test]
    fn non_prime_rejected() {
        assert!(matches!(build_p(4), Err(BellError::NotPrime(4))));
        assert!(matches!(classical_value(6), Err(BellError::NotPrime(6))));
    }

    #[test]
    fn strategy_file_round_trip() {
        let s = optimal_strategy();
        let text = strategy_to_text(&s);
        let back = strategy_from_text(&text).unwrap();
        assert_eq!(back, s);
        assert!(strategy_from_text(&text.replace("BSTRAT v1", "BSTRAT v2")).is_err());
    }
}
