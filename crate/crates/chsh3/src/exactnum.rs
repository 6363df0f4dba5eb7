//! Exact arithmetic over Q, the real cubic field F = Q[z]/(z^3 - 3z + 1), the
//! cyclotomic field Q(omega) with omega = exp(2 pi i / 3), and their compositum
//! K = F(omega).
//!
//! These are the coefficient fields for every exact computation in the crate:
//! the Bell polynomial and the symmetry-adapted bases live over Q(omega), the
//! certificate lives over F, and strategy matrices live over K. Sign
//! determination for F-elements is done by exact interval refinement of the
//! isolating interval of the root z ~ 1.5320888862; zero testing is always
//! coefficient-wise, never numeric.

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

pub type Rat = Rational;
pub type Int = Integer;

/// Convenience rational from a signed numerator/denominator pair.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::from((n, d))
}

/// Convenience rational from an integer.
pub fn rat_i(n: i64) -> Rat {
    Rat::from(n)
}

#[derive(Debug, thiserror::Error)]
pub enum ExactError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("field construction: {0}")]
    Field(String),
}

// ---------------------------------------------------------------------------
// Rational intervals
// ---------------------------------------------------------------------------

/// Closed interval with rational endpoints. Arithmetic is inclusion-monotone.
#[derive(Clone, Debug, PartialEq)]
pub struct RatInterval {
    pub lo: Rat,
    pub hi: Rat,
}

impl RatInterval {
    pub fn new(lo: Rat, hi: Rat) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        RatInterval { lo, hi }
    }

    pub fn point(v: Rat) -> Self {
        RatInterval { lo: v.clone(), hi: v }
    }

    pub fn width(&self) -> Rat {
        Rat::from(&self.hi - &self.lo)
    }

    pub fn contains_zero(&self) -> bool {
        self.lo.cmp0() != std::cmp::Ordering::Greater && self.hi.cmp0() != std::cmp::Ordering::Less
    }

    pub fn contains(&self, v: &Rat) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn subset_of(&self, other: &RatInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn add(&self, o: &RatInterval) -> RatInterval {
        RatInterval::new(Rat::from(&self.lo + &o.lo), Rat::from(&self.hi + &o.hi))
    }

    pub fn mul(&self, o: &RatInterval) -> RatInterval {
        let cands = [
            Rat::from(&self.lo * &o.lo),
            Rat::from(&self.lo * &o.hi),
            Rat::from(&self.hi * &o.lo),
            Rat::from(&self.hi * &o.hi),
        ];
        let mut lo = cands[0].clone();
        let mut hi = cands[0].clone();
        for c in &cands[1..] {
            if c < &lo {
                lo = c.clone();
            }
            if c > &hi {
                hi = c.clone();
            }
        }
        RatInterval { lo, hi }
    }

    pub fn scale(&self, c: &Rat) -> RatInterval {
        if c.cmp0() == std::cmp::Ordering::Less {
            RatInterval::new(Rat::from(&self.hi * c), Rat::from(&self.lo * c))
        } else {
            RatInterval::new(Rat::from(&self.lo * c), Rat::from(&self.hi * c))
        }
    }

    pub fn sub(&self, o: &RatInterval) -> RatInterval {
        RatInterval::new(Rat::from(&self.lo - &o.hi), Rat::from(&self.hi - &o.lo))
    }

    /// Square, tight (no sign-crossing slack from naive self-multiplication).
    pub fn square(&self) -> RatInterval {
        if self.lo.cmp0() != std::cmp::Ordering::Less {
            RatInterval::new(Rat::from(&self.lo * &self.lo), Rat::from(&self.hi * &self.hi))
        } else if self.hi.cmp0() != std::cmp::Ordering::Greater {
            RatInterval::new(Rat::from(&self.hi * &self.hi), Rat::from(&self.lo * &self.lo))
        } else {
            let a = Rat::from(&self.lo * &self.lo);
            let b = Rat::from(&self.hi * &self.hi);
            RatInterval::new(Rat::new(), a.max(b))
        }
    }
}

/// Rational enclosure of sqrt(x) for x >= 0, with relative width ~2^-bits.
pub fn interval_sqrt(x: &RatInterval, bits: u32) -> RatInterval {
    assert!(
        x.lo.cmp0() != std::cmp::Ordering::Less,
        "interval_sqrt of interval reaching below zero"
    );
    let lo = rat_sqrt_below(&x.lo, bits);
    let hi = rat_sqrt_above(&x.hi, bits);
    RatInterval::new(lo, hi)
}

/// Largest rational of the form a/2^bits-scaled with a^2 <= x.
fn rat_sqrt_below(x: &Rat, bits: u32) -> Rat {
    if x.cmp0() == std::cmp::Ordering::Equal {
        return Rat::new();
    }
    // floor(sqrt(n * 4^bits / d)) / 2^bits  <= sqrt(n/d)
    let scaled = Rat::from(x * Rat::from(Int::from(4).pow(bits)));
    let (n, d) = (scaled.numer().clone(), scaled.denom().clone());
    let q = Int::from(n / d);
    let root = q.sqrt();
    Rat::from((root, Int::from(2).pow(bits)))
}

fn rat_sqrt_above(x: &Rat, bits: u32) -> Rat {
    if x.cmp0() == std::cmp::Ordering::Equal {
        return Rat::new();
    }
    let scaled = Rat::from(x * Rat::from(Int::from(4).pow(bits)));
    let (n, d) = (scaled.numer().clone(), scaled.denom().clone());
    let q = Int::from(n / d) + Int::from(1);
    let root = q.sqrt() + Int::from(1);
    Rat::from((root, Int::from(2).pow(bits)))
}

// ---------------------------------------------------------------------------
// The real cubic field configuration
// ---------------------------------------------------------------------------

/// A real cubic field Q[z]/(m(z)) pinned to one real root by an isolating
/// interval. Coefficients of `m` run constant -> leading and `m` is monic.
///
/// The shared pipeline field is z^3 - 3z + 1 isolated on [3/2, 8/5]; all
/// [`FNum`] arithmetic reduces modulo that polynomial. The refinement cache
/// only ever shrinks, so enclosures returned later are subsets of enclosures
/// returned earlier.
pub struct RealCubicField {
    pub min_poly: [Rat; 4],
    initial: RatInterval,
    cache: RwLock<RatInterval>,
    floats: RwLock<HashMap<u32, Float>>,
}

impl RealCubicField {
    pub fn new(min_poly: [Rat; 4], interval: RatInterval) -> Result<Self, ExactError> {
        if min_poly[3] != 1u32 {
            return Err(ExactError::Field("minimal polynomial must be monic".into()));
        }
        if has_rational_root(&min_poly) {
            return Err(ExactError::Field(
                "minimal polynomial is reducible over Q (rational root found)".into(),
            ));
        }
        let f_lo = eval_poly(&min_poly, &interval.lo);
        let f_hi = eval_poly(&min_poly, &interval.hi);
        if f_lo.cmp0() == std::cmp::Ordering::Equal || f_hi.cmp0() == std::cmp::Ordering::Equal {
            return Err(ExactError::Field("interval endpoint is a root".into()));
        }
        if f_lo.cmp0() == f_hi.cmp0() {
            return Err(ExactError::Field("no sign change on the isolating interval".into()));
        }
        // Monotonicity of m on the interval certifies the root is unique there.
        let deriv = [
            min_poly[1].clone(),
            Rat::from(&min_poly[2] * &rat_i(2)),
            Rat::from(&min_poly[3] * &rat_i(3)),
            Rat::new(),
        ];
        let dtest = eval_poly_interval(&deriv, &interval);
        if dtest.contains_zero() {
            return Err(ExactError::Field(
                "interval not isolating (derivative sign not constant)".into(),
            ));
        }
        Ok(RealCubicField {
            min_poly,
            cache: RwLock::new(interval.clone()),
            initial: interval,
            floats: RwLock::new(HashMap::new()),
        })
    }

    /// The field used throughout the pipeline: z^3 - 3z + 1 on [3/2, 8/5].
    pub fn pipeline() -> &'static RealCubicField {
        static FIELD: OnceLock<RealCubicField> = OnceLock::new();
        FIELD.get_or_init(|| {
            RealCubicField::new(
                [rat_i(1), rat_i(-3), rat_i(0), rat_i(1)],
                RatInterval::new(rat(3, 2), rat(8, 5)),
            )
            .expect("pipeline field is valid")
        })
    }

    pub fn initial_interval(&self) -> RatInterval {
        self.initial.clone()
    }

    /// Current cached enclosure of the root.
    pub fn enclosure(&self) -> RatInterval {
        self.cache.read().unwrap().clone()
    }

    /// Bisect the cached enclosure once and return it.
    pub fn refine_once(&self) -> RatInterval {
        let mut guard = self.cache.write().unwrap();
        let mid = Rat::from(&guard.lo + &guard.hi) / Rat::from(2);
        let fm = eval_poly(&self.min_poly, &mid);
        let flo = eval_poly(&self.min_poly, &guard.lo);
        match fm.cmp0() {
            std::cmp::Ordering::Equal => {
                *guard = RatInterval::point(mid);
            }
            s => {
                if s == flo.cmp0() {
                    guard.lo = mid;
                } else {
                    guard.hi = mid;
                }
            }
        }
        guard.clone()
    }

    /// Sign-bisection until the enclosure has width <= `width`.
    pub fn refine_root(&self, width: &Rat) -> RatInterval {
        assert!(width.cmp0() == std::cmp::Ordering::Greater, "width must be positive");
        loop {
            let cur = self.enclosure();
            if cur.width() <= *width {
                return cur;
            }
            self.refine_once();
        }
    }

    /// Float embedding of the root at `prec` bits (Newton, cached per precision).
    pub fn root_float(&self, prec: u32) -> Float {
        if let Some(f) = self.floats.read().unwrap().get(&prec) {
            return f.clone();
        }
        let enc = self.refine_root(&Rat::from((Int::from(1), Int::from(2).pow(8))));
        let mid = Rat::from(&enc.lo + &enc.hi) / Rat::from(2);
        let mut x = Float::with_val(prec + 64, &mid);
        // Newton for the monic cubic; quadratic convergence from the 2^-8 seed.
        let c0 = Float::with_val(prec + 64, &self.min_poly[0]);
        let c1 = Float::with_val(prec + 64, &self.min_poly[1]);
        let c2 = Float::with_val(prec + 64, &self.min_poly[2]);
        let steps = (32 - prec.leading_zeros()) + 4;
        for _ in 0..steps {
            let fx = x.clone() * &x * &x + x.clone() * &x * &c2 + x.clone() * &c1 + &c0;
            let dfx = 3u32 * x.clone() * &x + 2u32 * x.clone() * &c2 + &c1;
            x -= fx / dfx;
        }
        let out = Float::with_val(prec, &x);
        self.floats.write().unwrap().insert(prec, out.clone());
        out
    }
}

fn eval_poly(p: &[Rat; 4], x: &Rat) -> Rat {
    let mut acc = p[3].clone();
    for c in [&p[2], &p[1], &p[0]] {
        acc = acc * x + c;
    }
    acc
}

fn eval_poly_interval(p: &[Rat; 4], x: &RatInterval) -> RatInterval {
    let x2 = x.square();
    let x3 = x2.mul(x);
    x3.scale(&p[3])
        .add(&x2.scale(&p[2]))
        .add(&x.scale(&p[1]))
        .add(&RatInterval::point(p[0].clone()))
}

fn has_rational_root(p: &[Rat; 4]) -> bool {
    // Clear denominators; rational roots of the integer polynomial are n/d with
    // n | constant and d | leading.
    let mut l = Int::from(1);
    for c in p {
        l = l.lcm(c.denom());
    }
    let ip: Vec<Int> = p.iter().map(|c| Rat::from(c * Rat::from(&l)).numer().clone()).collect();
    if ip[0].cmp0() == std::cmp::Ordering::Equal {
        return true; // z = 0 is a root
    }
    let divisors = |n: &Int| -> Vec<Int> {
        let n = n.clone().abs();
        let mut out = Vec::new();
        let mut d = Int::from(1);
        // Trial division is fine here: constructor-only, small polynomials.
        while Int::from(&d * &d) <= n {
            if n.is_divisible(&d) {
                out.push(d.clone());
                out.push(Int::from(&n / &d));
            }
            d += 1;
            if out.len() > 10_000 {
                break;
            }
        }
        out
    };
    for n in divisors(&ip[0]) {
        for d in divisors(&ip[3]) {
            for sgn in [1i32, -1] {
                let cand = Rat::from((n.clone() * Int::from(sgn), d.clone()));
                if eval_poly(p, &cand).cmp0() == std::cmp::Ordering::Equal {
                    return true;
                }
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// FNum: elements of F = Q[z]/(z^3 - 3z + 1)
// ---------------------------------------------------------------------------

/// c0 + c1 z + c2 z^2 with rational coefficients, reduced by z^3 = 3z - 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FNum {
    pub c0: Rat,
    pub c1: Rat,
    pub c2: Rat,
}

impl fmt::Debug for FNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FNum({})", self.to_text())
    }
}

impl FNum {
    pub fn new(c0: Rat, c1: Rat, c2: Rat) -> Self {
        FNum { c0, c1, c2 }
    }

    pub fn zero() -> Self {
        FNum::new(Rat::new(), Rat::new(), Rat::new())
    }

    pub fn one() -> Self {
        FNum::new(rat_i(1), Rat::new(), Rat::new())
    }

    pub fn from_rat(r: Rat) -> Self {
        FNum::new(r, Rat::new(), Rat::new())
    }

    pub fn from_i64(n: i64) -> Self {
        FNum::from_rat(rat_i(n))
    }

    /// The generator z.
    pub fn gen_z() -> Self {
        FNum::new(Rat::new(), rat_i(1), Rat::new())
    }

    pub fn is_zero(&self) -> bool {
        self.c0.cmp0() == std::cmp::Ordering::Equal
            && self.c1.cmp0() == std::cmp::Ordering::Equal
            && self.c2.cmp0() == std::cmp::Ordering::Equal
    }

    pub fn is_rational(&self) -> bool {
        self.c1.cmp0() == std::cmp::Ordering::Equal && self.c2.cmp0() == std::cmp::Ordering::Equal
    }

    pub fn add(&self, o: &FNum) -> FNum {
        FNum::new(
            Rat::from(&self.c0 + &o.c0),
            Rat::from(&self.c1 + &o.c1),
            Rat::from(&self.c2 + &o.c2),
        )
    }

    pub fn sub(&self, o: &FNum) -> FNum {
        FNum::new(
            Rat::from(&self.c0 - &o.c0),
            Rat::from(&self.c1 - &o.c1),
            Rat::from(&self.c2 - &o.c2),
        )
    }

    pub fn neg(&self) -> FNum {
        FNum::new(
            Rat::from(-self.c0.clone()),
            Rat::from(-self.c1.clone()),
            Rat::from(-self.c2.clone()),
        )
    }

    pub fn scale(&self, r: &Rat) -> FNum {
        FNum::new(
            Rat::from(&self.c0 * r),
            Rat::from(&self.c1 * r),
            Rat::from(&self.c2 * r),
        )
    }

    pub fn mul(&self, o: &FNum) -> FNum {
        // Convolution up to degree 4, then z^3 = 3z - 1, z^4 = 3z^2 - z.
        let d0 = Rat::from(&self.c0 * &o.c0);
        let d1 = Rat::from(&self.c0 * &o.c1) + Rat::from(&self.c1 * &o.c0);
        let d2 = Rat::from(&self.c0 * &o.c2)
            + Rat::from(&self.c1 * &o.c1)
            + Rat::from(&self.c2 * &o.c0);
        let d3 = Rat::from(&self.c1 * &o.c2) + Rat::from(&self.c2 * &o.c1);
        let d4 = Rat::from(&self.c2 * &o.c2);
        FNum::new(
            d0 - &d3,
            d1 + Rat::from(&d3 * &rat_i(3)) - &d4,
            d2 + Rat::from(&d4 * &rat_i(3)),
        )
    }

    /// Multiplicative inverse via the extended Euclidean algorithm in Q[t].
    /// Panics on zero.
    pub fn inv(&self) -> FNum {
        assert!(!self.is_zero(), "division by zero in F");
        // Invert a = c0 + c1 t + c2 t^2 modulo m(t) = t^3 - 3t + 1.
        // Work with poly vectors little-endian.
        let m = vec![rat_i(1), rat_i(-3), rat_i(0), rat_i(1)];
        let a = vec![self.c0.clone(), self.c1.clone(), self.c2.clone()];
        let (g, u) = poly_ext_gcd(&a, &m);
        // g is a nonzero constant (m irreducible, a nonzero of lower degree)
        assert!(g.len() == 1, "gcd with the minimal polynomial must be constant");
        let ginv = Rat::from(1) / g[0].clone();
        let mut c = [Rat::new(), Rat::new(), Rat::new()];
        for (i, ui) in u.iter().enumerate().take(3) {
            c[i] = Rat::from(ui * &ginv);
        }
        FNum::new(c[0].clone(), c[1].clone(), c[2].clone())
    }

    /// Exact sign of the real embedding at the pinned root: -1, 0, or +1.
    ///
    /// Zero is decided coefficient-wise (1, z, z^2 are a Q-basis); otherwise the
    /// shared root enclosure is bisected until the interval evaluation excludes
    /// zero. No floating point is involved.
    pub fn sign(&self) -> i32 {
        if self.is_zero() {
            return 0;
        }
        let field = RealCubicField::pipeline();
        loop {
            let enc = field.enclosure();
            let iv = self.interval_eval(&enc);
            if iv.lo.cmp0() == std::cmp::Ordering::Greater {
                return 1;
            }
            if iv.hi.cmp0() == std::cmp::Ordering::Less {
                return -1;
            }
            field.refine_once();
        }
    }

    /// Inclusion-monotone interval evaluation over an enclosure of z.
    pub fn interval_eval(&self, z: &RatInterval) -> RatInterval {
        let z2 = z.square();
        z2.scale(&self.c2)
            .add(&z.scale(&self.c1))
            .add(&RatInterval::point(self.c0.clone()))
    }

    /// Float embedding at `prec` bits.
    pub fn to_float(&self, prec: u32) -> Float {
        let z = RealCubicField::pipeline().root_float(prec + 32);
        let v = Float::with_val(prec + 32, &self.c2) * &z * &z
            + Float::with_val(prec + 32, &self.c1) * &z
            + Float::with_val(prec + 32, &self.c0);
        Float::with_val(prec, v)
    }

    /// Common-denominator text form `p/s + q/s*z + r/s*z^2`.
    pub fn to_text(&self) -> String {
        let mut s = Int::from(1);
        for c in [&self.c0, &self.c1, &self.c2] {
            s = s.lcm(c.denom());
        }
        let term = |c: &Rat| -> Int { Rat::from(c * Rat::from(&s)).numer().clone() };
        format!("{}/{} + {}/{}*z + {}/{}*z^2", term(&self.c0), s, term(&self.c1), s, term(&self.c2), s)
    }

    pub fn parse(text: &str) -> Result<FNum, ExactError> {
        let mut p = TextParser::new(text);
        let v = p.fnum()?;
        p.end()?;
        Ok(v)
    }
}

// Extended gcd for little-endian rational polynomials: returns (g, u) with
// u*a = g mod b and g = gcd(a, b) up to a unit.
fn poly_ext_gcd(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    fn trim(mut v: Vec<Rat>) -> Vec<Rat> {
        while v.len() > 1 && v.last().unwrap().cmp0() == std::cmp::Ordering::Equal {
            v.pop();
        }
        v
    }
    fn is_zero(v: &[Rat]) -> bool {
        v.len() == 1 && v[0].cmp0() == std::cmp::Ordering::Equal
    }
    // rem, quo of r0 by r1
    fn divmod(r0: &[Rat], r1: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
        let mut rem: Vec<Rat> = r0.to_vec();
        let d1 = r1.len() - 1;
        let lead = r1[d1].clone();
        let mut quo = vec![Rat::new(); rem.len().saturating_sub(d1).max(1)];
        while rem.len() - 1 >= d1 && !is_zero(&rem) {
            let dr = rem.len() - 1;
            let coef = Rat::from(&rem[dr] / &lead);
            quo[dr - d1] = coef.clone();
            for i in 0..=d1 {
                let sub = Rat::from(&r1[i] * &coef);
                rem[dr - d1 + i] -= sub;
            }
            rem = trim(rem);
            if rem.len() - 1 < d1 || is_zero(&rem) {
                break;
            }
        }
        (trim(rem), trim(quo))
    }
    let mut r0 = trim(a.to_vec());
    let mut r1 = trim(b.to_vec());
    let mut u0: Vec<Rat> = vec![rat_i(1)];
    let mut u1: Vec<Rat> = vec![Rat::new()];
    while !is_zero(&r1) {
        let (rem, quo) = divmod(&r0, &r1);
        // u2 = u0 - quo*u1
        let mut qu = vec![Rat::new(); quo.len() + u1.len() - 1];
        for (i, qi) in quo.iter().enumerate() {
            for (j, uj) in u1.iter().enumerate() {
                qu[i + j] += Rat::from(qi * uj);
            }
        }
        let n = u0.len().max(qu.len());
        let mut u2 = vec![Rat::new(); n];
        for i in 0..n {
            if i < u0.len() {
                u2[i] += &u0[i];
            }
            if i < qu.len() {
                u2[i] -= &qu[i];
            }
        }
        r0 = r1;
        r1 = rem;
        u0 = u1;
        u1 = trim(u2);
    }
    (r0, u0)
}

// ---------------------------------------------------------------------------
// Cyc3: Q(omega)
// ---------------------------------------------------------------------------

/// a + b*omega with rational a, b; omega^2 = -1 - omega.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cyc3 {
    pub a: Rat,
    pub b: Rat,
}

impl fmt::Debug for Cyc3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyc3({} + {}w)", self.a, self.b)
    }
}

impl Cyc3 {
    pub fn new(a: Rat, b: Rat) -> Self {
        Cyc3 { a, b }
    }

    pub fn zero() -> Self {
        Cyc3::new(Rat::new(), Rat::new())
    }

    pub fn one() -> Self {
        Cyc3::new(rat_i(1), Rat::new())
    }

    pub fn omega() -> Self {
        Cyc3::new(Rat::new(), rat_i(1))
    }

    /// omega^k for any integer k.
    pub fn omega_pow(k: i64) -> Self {
        match k.rem_euclid(3) {
            0 => Cyc3::one(),
            1 => Cyc3::omega(),
            _ => Cyc3::new(rat_i(-1), rat_i(-1)),
        }
    }

    pub fn from_rat(r: Rat) -> Self {
        Cyc3::new(r, Rat::new())
    }

    pub fn is_zero(&self) -> bool {
        self.a.cmp0() == std::cmp::Ordering::Equal && self.b.cmp0() == std::cmp::Ordering::Equal
    }

    pub fn add(&self, o: &Cyc3) -> Cyc3 {
        Cyc3::new(Rat::from(&self.a + &o.a), Rat::from(&self.b + &o.b))
    }

    pub fn sub(&self, o: &Cyc3) -> Cyc3 {
        Cyc3::new(Rat::from(&self.a - &o.a), Rat::from(&self.b - &o.b))
    }

    pub fn neg(&self) -> Cyc3 {
        Cyc3::new(Rat::from(-self.a.clone()), Rat::from(-self.b.clone()))
    }

    pub fn mul(&self, o: &Cyc3) -> Cyc3 {
        // (a + b w)(c + d w) = (ac - bd) + (ad + bc - bd) w
        let ac = Rat::from(&self.a * &o.a);
        let bd = Rat::from(&self.b * &o.b);
        let ad = Rat::from(&self.a * &o.b);
        let bc = Rat::from(&self.b * &o.a);
        Cyc3::new(ac - &bd, ad + bc - &bd)
    }

    /// Complex conjugation: omega -> omega^2.
    pub fn conj(&self) -> Cyc3 {
        Cyc3::new(Rat::from(&self.a - &self.b), Rat::from(-self.b.clone()))
    }

    /// |x|^2 = x * conj(x) = a^2 - ab + b^2, a rational.
    pub fn norm2(&self) -> Rat {
        Rat::from(&self.a * &self.a) - Rat::from(&self.a * &self.b) + Rat::from(&self.b * &self.b)
    }

    pub fn inv(&self) -> Cyc3 {
        let n = self.norm2();
        assert!(n.cmp0() != std::cmp::Ordering::Equal, "division by zero in Q(w)");
        let ninv = Rat::from(1) / n;
        let c = self.conj();
        Cyc3::new(Rat::from(&c.a * &ninv), Rat::from(&c.b * &ninv))
    }

    /// Real part a - b/2 as a rational.
    pub fn re(&self) -> Rat {
        Rat::from(&self.a - Rat::from(&self.b / Rat::from(2)))
    }

    /// Imaginary part divided by sqrt(3)/2; rational. Im(x) = im_over_s * sqrt(3/4).
    pub fn im_over_s(&self) -> Rat {
        self.b.clone()
    }

    pub fn is_real(&self) -> bool {
        self.b.cmp0() == std::cmp::Ordering::Equal
    }

    pub fn to_floats(&self, prec: u32) -> (Float, Float) {
        let re = Float::with_val(prec, &self.re());
        let s = Float::with_val(prec, 3u32).sqrt() / 2u32;
        let im = Float::with_val(prec, &self.b) * s;
        (re, im)
    }
}

// ---------------------------------------------------------------------------
// KNum: K = F(omega)
// ---------------------------------------------------------------------------

/// re0 + re1*omega with FNum components: the degree-6 compositum of F and Q(omega).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct KNum {
    pub re0: FNum,
    pub re1: FNum,
}

impl fmt::Debug for KNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KNum({})", self.to_text())
    }
}

impl KNum {
    pub fn new(re0: FNum, re1: FNum) -> Self {
        KNum { re0, re1 }
    }

    pub fn zero() -> Self {
        KNum::new(FNum::zero(), FNum::zero())
    }

    pub fn one() -> Self {
        KNum::new(FNum::one(), FNum::zero())
    }

    pub fn omega() -> Self {
        KNum::new(FNum::zero(), FNum::one())
    }

    pub fn omega_pow(k: i64) -> Self {
        KNum::from_cyc3(&Cyc3::omega_pow(k))
    }

    pub fn from_fnum(f: FNum) -> Self {
        KNum::new(f, FNum::zero())
    }

    pub fn from_rat(r: Rat) -> Self {
        KNum::from_fnum(FNum::from_rat(r))
    }

    pub fn from_i64(n: i64) -> Self {
        KNum::from_rat(rat_i(n))
    }

    pub fn from_cyc3(c: &Cyc3) -> Self {
        KNum::new(FNum::from_rat(c.a.clone()), FNum::from_rat(c.b.clone()))
    }

    pub fn is_zero(&self) -> bool {
        self.re0.is_zero() && self.re1.is_zero()
    }

    pub fn add(&self, o: &KNum) -> KNum {
        KNum::new(self.re0.add(&o.re0), self.re1.add(&o.re1))
    }

    pub fn sub(&self, o: &KNum) -> KNum {
        KNum::new(self.re0.sub(&o.re0), self.re1.sub(&o.re1))
    }

    pub fn neg(&self) -> KNum {
        KNum::new(self.re0.neg(), self.re1.neg())
    }

    pub fn mul(&self, o: &KNum) -> KNum {
        let ac = self.re0.mul(&o.re0);
        let bd = self.re1.mul(&o.re1);
        let ad = self.re0.mul(&o.re1);
        let bc = self.re1.mul(&o.re0);
        KNum::new(ac.sub(&bd), ad.add(&bc).sub(&bd))
    }

    pub fn scale_f(&self, f: &FNum) -> KNum {
        KNum::new(self.re0.mul(f), self.re1.mul(f))
    }

    pub fn scale_rat(&self, r: &Rat) -> KNum {
        KNum::new(self.re0.scale(r), self.re1.scale(r))
    }

    /// The involutive automorphism omega -> omega^2, fixing F pointwise.
    pub fn conj(&self) -> KNum {
        KNum::new(self.re0.sub(&self.re1), self.re1.neg())
    }

    /// (x + conj(x))/2; the omega-component is eliminated and an FNum returned.
    pub fn real_part(&self) -> FNum {
        self.re0.sub(&self.re1.scale(&rat(1, 2)))
    }

    /// Imaginary part divided by sqrt(3)/2, an element of F.
    pub fn im_over_s(&self) -> FNum {
        self.re1.clone()
    }

    /// An element is real iff it equals its conjugate.
    pub fn is_real(&self) -> bool {
        self.re1.is_zero()
    }

    /// x * conj(x), always real (an FNum).
    pub fn norm2(&self) -> FNum {
        let p = self.mul(&self.conj());
        debug_assert!(p.re1.is_zero());
        p.re0
    }

    pub fn inv(&self) -> KNum {
        let n = self.norm2();
        assert!(!n.is_zero(), "division by zero in K");
        self.conj().scale_f(&n.inv())
    }

    /// Complex embedding (re, im) at `prec` bits.
    pub fn to_floats(&self, prec: u32) -> (Float, Float) {
        let u = self.re0.to_float(prec + 16);
        let v = self.re1.to_float(prec + 16);
        let re = u - Float::with_val(prec + 16, &v) / 2u32;
        let s = Float::with_val(prec + 16, 3u32).sqrt() / 2u32;
        let im = v * s;
        (Float::with_val(prec, re), Float::with_val(prec, im))
    }

    /// Text form `<fnum> + (<fnum>)*w`.
    pub fn to_text(&self) -> String {
        format!("{} + ({})*w", self.re0.to_text(), self.re1.to_text())
    }

    pub fn parse(text: &str) -> Result<KNum, ExactError> {
        let mut p = TextParser::new(text);
        let v = p.knum()?;
        p.end()?;
        Ok(v)
    }
}

// ---------------------------------------------------------------------------
// Text parsing (whitespace-insensitive, bit-exact round trip)
// ---------------------------------------------------------------------------

pub(crate) struct TextParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> TextParser<'a> {
    pub fn new(text: &'a str) -> Self {
        TextParser { bytes: text.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && (self.bytes[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn err<T>(&self, msg: &str) -> Result<T, ExactError> {
        Err(ExactError::Parse { pos: self.pos, msg: msg.to_string() })
    }

    pub fn expect(&mut self, lit: &str) -> Result<(), ExactError> {
        self.skip_ws();
        if self.bytes[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            Ok(())
        } else {
            self.err(&format!("expected '{lit}'"))
        }
    }

    pub fn peek_is(&mut self, lit: &str) -> bool {
        self.skip_ws();
        self.bytes[self.pos..].starts_with(lit.as_bytes())
    }

    pub fn rational(&mut self) -> Result<Rat, ExactError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos < self.bytes.len() && (self.bytes[self.pos] == b'-' || self.bytes[self.pos] == b'+') {
            self.pos += 1;
        }
        let numstart = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == numstart {
            return self.err("expected digits");
        }
        let mut text = String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned();
        self.skip_ws();
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'/' {
            self.pos += 1;
            self.skip_ws();
            let dstart = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == dstart {
                return self.err("expected denominator digits");
            }
            text.push('/');
            text.push_str(&String::from_utf8_lossy(&self.bytes[dstart..self.pos]));
        }
        match text.parse::<Rat>() {
            Ok(r) => Ok(r),
            Err(_) => self.err("bad rational"),
        }
    }

    pub fn fnum(&mut self) -> Result<FNum, ExactError> {
        let c0 = self.rational()?;
        self.expect("+")?;
        let c1 = self.rational()?;
        self.expect("*")?;
        self.expect("z")?;
        self.expect("+")?;
        let c2 = self.rational()?;
        self.expect("*")?;
        self.expect("z")?;
        self.expect("^")?;
        self.expect("2")?;
        Ok(FNum::new(c0, c1, c2))
    }

    pub fn knum(&mut self) -> Result<KNum, ExactError> {
        let re0 = self.fnum()?;
        self.expect("+")?;
        self.expect("(")?;
        let re1 = self.fnum()?;
        self.expect(")")?;
        self.expect("*")?;
        self.expect("w")?;
        Ok(KNum::new(re0, re1))
    }

    pub fn end(&mut self) -> Result<(), ExactError> {
        self.skip_ws();
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            self.err("trailing input")
        }
    }
}

// ---------------------------------------------------------------------------
// Algebraic recognition of high-precision decimals (rank-4 integer lattice)
// ---------------------------------------------------------------------------

/// Default denominator bound for recognition: 10^12.
pub fn default_den_bound() -> Int {
    Int::from(10).pow(12)
}

/// Recognize a high-precision float as (p + q z + r z^2)/s with |s| bounded.
///
/// Builds a rank-4 integer lattice from scaled approximations of (1, z, z^2, x),
/// LLL-reduces it, and re-verifies any short relation at doubled precision.
/// Returns `None` when no candidate passes; the caller decides what that means.
pub fn recognize(x: &Float, den_bound: &Int) -> Option<FNum> {
    let prec = x.prec();
    assert!(prec >= 128, "recognize requires >= 128 bits of precision");
    let field = RealCubicField::pipeline();
    let zf = field.root_float(prec + 32);

    let scale_bits = prec - 8;
    let scale = Float::with_val(prec + 32, Int::from(2).pow(scale_bits));
    let to_int = |v: Float| -> Int {
        let s = v * &scale;
        s.round().to_integer().unwrap_or_else(Int::new)
    };
    let alpha = [
        to_int(Float::with_val(prec + 32, 1)),
        to_int(zf.clone()),
        to_int(zf.clone() * &zf),
        to_int(Float::with_val(prec + 32, x)),
    ];

    let mut basis: Vec<Vec<Int>> = Vec::with_capacity(4);
    for i in 0..4 {
        let mut row = vec![Int::new(); 5];
        row[i] = Int::from(1);
        row[4] = alpha[i].clone();
        basis.push(row);
    }
    lll_reduce(&mut basis);

    let tol = {
        // |candidate - x| <= 2^(-prec/2)
        let e = -((prec / 2) as i32);
        Float::with_val(64, Float::i_exp(1, e))
    };
    for row in &basis {
        let t = &row[3];
        if t.cmp0() == std::cmp::Ordering::Equal {
            continue;
        }
        // relation p*1 + q*z + r*z^2 + t*x ~ 0  =>  x ~ -(p + q z + r z^2)/t
        let tq = Rat::from((Int::from(-1) * t.clone(), Int::from(1)));
        let cand = FNum::new(
            Rat::from((row[0].clone(), Int::from(1))) / tq.clone(),
            Rat::from((row[1].clone(), Int::from(1))) / tq.clone(),
            Rat::from((row[2].clone(), Int::from(1))) / tq,
        );
        // denominator bound on the common denominator
        let mut den = Int::from(1);
        for c in [&cand.c0, &cand.c1, &cand.c2] {
            den = den.lcm(c.denom());
        }
        if den > *den_bound {
            continue;
        }
        // re-verify at doubled precision
        let cf = cand.to_float(prec * 2);
        let diff = (cf - Float::with_val(prec * 2, x)).abs();
        if diff <= tol {
            return Some(cand);
        }
    }
    None
}

/// LLL reduction with delta = 99/100, exact rational Gram-Schmidt.
/// Rows of `basis` are the lattice vectors; reduced in place.
pub fn lll_reduce(basis: &mut Vec<Vec<Int>>) {
    let n = basis.len();
    if n == 0 {
        return;
    }
    let delta = rat(99, 100);

    let dot = |a: &[Int], b: &[Int]| -> Int {
        let mut acc = Int::new();
        for (x, y) in a.iter().zip(b) {
            acc += Int::from(x * y);
        }
        acc
    };

    // Gram-Schmidt data over Q: squared norms bstar2[i] and coefficients mu[i][j].
    let recompute = |basis: &Vec<Vec<Int>>| -> (Vec<Rat>, Vec<Vec<Rat>>) {
        let dim = basis[0].len();
        let mut bstar: Vec<Vec<Rat>> = Vec::with_capacity(n);
        let mut bstar2: Vec<Rat> = Vec::with_capacity(n);
        let mut mu = vec![vec![Rat::new(); n]; n];
        for i in 0..n {
            let mut v: Vec<Rat> = basis[i].iter().map(|x| Rat::from(x.clone())).collect();
            for j in 0..i {
                let num = {
                    let mut acc = Rat::new();
                    for k in 0..dim {
                        acc += Rat::from(&bstar[j][k] * Rat::from(basis[i][k].clone()));
                    }
                    acc
                };
                if bstar2[j].cmp0() == std::cmp::Ordering::Equal {
                    mu[i][j] = Rat::new();
                    continue;
                }
                mu[i][j] = num / bstar2[j].clone();
                for k in 0..dim {
                    let sub = Rat::from(&mu[i][j] * &bstar[j][k]);
                    v[k] -= sub;
                }
            }
            let mut n2 = Rat::new();
            for k in 0..dim {
                n2 += Rat::from(&v[k] * &v[k]);
            }
            bstar.push(v);
            bstar2.push(n2);
        }
        (bstar2, mu)
    };

    let (mut bstar2, mut mu) = recompute(basis);
    let mut k = 1usize;
    let mut guard = 0usize;
    while k < n {
        guard += 1;
        if guard > 100_000 {
            break; // fixed small dimensions; never hit in practice
        }
        // size reduction
        for j in (0..k).rev() {
            let half = rat(1, 2);
            if mu[k][j].clone().abs() > half {
                let q: Int = {
                    let r = mu[k][j].clone();
                    // nearest integer
                    let num = r.numer().clone();
                    let den = r.denom().clone();
                    let twice = Int::from(2) * num;
                    let rounded = Rat::from((twice + den.clone(), Int::from(2) * den));
                    rounded.floor().numer().clone()
                };
                if q.cmp0() != std::cmp::Ordering::Equal {
                    for idx in 0..basis[0].len() {
                        let sub = Int::from(&basis[j][idx] * &q);
                        basis[k][idx] -= sub;
                    }
                    (bstar2, mu) = recompute(basis);
                }
            }
        }
        // Lovasz condition
        let lhs = bstar2[k].clone();
        let rhs = Rat::from(&delta - Rat::from(&mu[k][k - 1] * &mu[k][k - 1])) * bstar2[k - 1].clone();
        if lhs >= rhs {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            (bstar2, mu) = recompute(basis);
            k = k.max(2) - 1;
            if k == 0 {
                k = 1;
            }
        }
    }
    let _ = dot;
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(c0: i64, c1: i64, c2: i64) -> FNum {
        FNum::new(rat_i(c0), rat_i(c1), rat_i(c2))
    }

    #[test]
    fn minimal_polynomial_reduces_to_zero() {
        // z^3 - 3z + 1 = 0: built as z*z*z - 3z + 1
        let z = FNum::gen_z();
        let v = z.mul(&z).mul(&z).sub(&z.scale(&rat_i(3))).add(&FNum::one());
        assert!(v.is_zero());
        assert_eq!(v.sign(), 0);
    }

    #[test]
    fn sign_examples() {
        // z - 1 > 0, 2 - z^2 < 0
        assert_eq!(f(-1, 1, 0).sign(), 1);
        assert_eq!(f(2, 0, -1).sign(), -1);
    }

    #[test]
    fn refine_root_nested_and_crosschecks() {
        let field = RealCubicField::pipeline();
        let w1 = field.refine_root(&rat_i(1));
        assert!(w1.subset_of(&RatInterval::new(rat(3, 2), rat(8, 5))));
        let w2 = field.refine_root(&rat(1, 2));
        assert!(w2.subset_of(&w1));
        let tiny = Rat::from((Int::from(1), Int::from(10).pow(10)));
        let w3 = field.refine_root(&tiny);
        assert!(w3.subset_of(&w2));
        assert!(w3.width() <= tiny);
        // midpoint is 1.5320888862... to ten digits
        let mid = Rat::from(&w3.lo + &w3.hi) / Rat::from(2);
        let approx = "15320888862/10000000000".parse::<Rat>().unwrap();
        let err = Rat::from(&mid - &approx).abs();
        assert!(err < rat(1, 1_000_000_000));
    }

    #[test]
    fn root_float_matches_cosine_form() {
        let field = RealCubicField::pipeline();
        let zf = field.root_float(256);
        let pi = Float::with_val(300, rug::float::Constant::Pi);
        let angle = pi * 2u32 / 9u32;
        let cosv = 2u32 * angle.cos();
        let diff = (Float::with_val(300, &zf) - cosv).abs();
        assert!(diff < Float::with_val(64, Float::i_exp(1, -250)));
    }

    #[test]
    fn field_axioms_fixed_cases() {
        let a = f(3, -2, 5).scale(&rat(1, 7));
        let b = f(-1, 4, 2);
        let c = f(2, 2, -3).scale(&rat(3, 5));
        // associativity, distributivity
        assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        // inverse
        let ai = a.inv();
        assert_eq!(a.mul(&ai), FNum::one());
    }

    #[test]
    fn interval_eval_contains_float_embedding() {
        let field = RealCubicField::pipeline();
        let x = f(1, 2, 1).scale(&rat(1, 9));
        let enc = field.refine_root(&rat(1, 1_000_000));
        let iv = x.interval_eval(&enc);
        let xf = x.to_float(128);
        let lo = Float::with_val(128, &iv.lo);
        let hi = Float::with_val(128, &iv.hi);
        assert!(lo <= xf && xf <= hi);
    }

    #[test]
    fn lambda_value_recognized() {
        // (1 + 2z + z^2)/9 = 0.71238601420...
        let lam = f(1, 2, 1).scale(&rat(1, 9));
        let xf = lam.to_float(256);
        let got = recognize(&xf, &default_den_bound()).expect("lambda must be recognized");
        assert_eq!(got, lam);
    }

    #[test]
    fn recognize_exact_half() {
        let xf = Float::with_val(192, 0.5f64);
        let got = recognize(&xf, &default_den_bound()).expect("1/2 recognized");
        assert_eq!(got, FNum::from_rat(rat(1, 2)));
    }

    #[test]
    fn recognize_rejects_pi() {
        let pi = Float::with_val(256, rug::float::Constant::Pi);
        assert!(recognize(&pi, &default_den_bound()).is_none());
    }

    #[test]
    fn cyc3_basics() {
        let w = Cyc3::omega();
        assert_eq!(w.conj(), Cyc3::new(rat_i(-1), rat_i(-1)));
        assert_eq!(w.re(), rat(-1, 2));
        assert_eq!(w.mul(&w).mul(&w), Cyc3::one());
        let x = Cyc3::new(rat(3, 4), rat(-2, 5));
        assert_eq!(x.mul(&x.inv()), Cyc3::one());
    }

    #[test]
    fn knum_conj_involution_and_real_part() {
        let w = KNum::omega();
        assert_eq!(w.conj(), KNum::new(FNum::from_i64(-1), FNum::from_i64(-1)));
        assert_eq!(w.real_part(), FNum::from_rat(rat(-1, 2)));
        let x = KNum::new(f(1, -2, 3), f(0, 1, 1).scale(&rat(2, 3)));
        assert_eq!(x.conj().conj(), x);
        assert_eq!(x.mul(&x.inv()), KNum::one());
        // real part via (x + conj)/2
        let two_re = x.add(&x.conj());
        assert!(two_re.is_real());
        assert_eq!(two_re.re0.scale(&rat(1, 2)), x.real_part());
    }

    #[test]
    fn text_round_trip() {
        let x = f(7, -3, 0).scale(&rat(1, 6));
        let t = x.to_text();
        assert_eq!(FNum::parse(&t).unwrap(), x);
        let k = KNum::new(x.clone(), f(-1, 0, 5).scale(&rat(2, 9)));
        let kt = k.to_text();
        assert_eq!(KNum::parse(&kt).unwrap(), k);
        // whitespace-insensitive
        let spaced = kt.replace('+', " + ").replace('*', " * ");
        assert_eq!(KNum::parse(&spaced).unwrap(), k);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn prop_field_axioms(
            a0 in -50i64..50, a1 in -50i64..50, a2 in -50i64..50,
            b0 in -50i64..50, b1 in -50i64..50, b2 in -50i64..50,
            c0 in -50i64..50, c1 in -50i64..50, c2 in -50i64..50,
            da in 1i64..20, db in 1i64..20,
        ) {
            let a = f(a0, a1, a2).scale(&rat(1, da));
            let b = f(b0, b1, b2).scale(&rat(1, db));
            let c = f(c0, c1, c2);
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            prop_assert_eq!(a.add(&b), b.add(&a));
            if !a.is_zero() {
                prop_assert_eq!(a.mul(&a.inv()), FNum::one());
            }
        }

        #[test]
        fn prop_sign_multiplicative_and_matches_float(
            a0 in -30i64..30, a1 in -30i64..30, a2 in -30i64..30,
            b0 in -30i64..30, b1 in -30i64..30, b2 in -30i64..30,
        ) {
            let a = f(a0, a1, a2);
            let b = f(b0, b1, b2);
            prop_assert_eq!(a.mul(&b).sign(), a.sign() * b.sign());
            // agreement with float evaluation at z ~ 1.5320888862
            let z = 1.5320888862379561f64;
            let av = a0 as f64 + a1 as f64 * z + a2 as f64 * z * z;
            if av.abs() > 1e-9 {
                prop_assert_eq!(a.sign(), if av > 0.0 { 1 } else { -1 });
            }
        }

        #[test]
        fn prop_recognize_round_trip(
            n0 in -1_000_000i64..1_000_000,
            n1 in -1_000_000i64..1_000_000,
            n2 in -1_000_000i64..1_000_000,
            d in 1i64..1_000_000,
        ) {
            let x = f(n0, n1, n2).scale(&rat(1, d));
            let xf = x.to_float(256);
            let got = recognize(&xf, &default_den_bound());
            prop_assert_eq!(got, Some(x));
        }

        #[test]
        fn prop_knum_conj_involution(
            a0 in -20i64..20, a1 in -20i64..20, a2 in -20i64..20,
            b0 in -20i64..20, b1 in -20i64..20, b2 in -20i64..20,
        ) {
            let x = KNum::new(f(a0, a1, a2), f(b0, b1, b2));
            prop_assert_eq!(x.conj().conj(), x.clone());
            prop_assert!(x.add(&x.conj()).is_real());
        }

        #[test]
        fn prop_interval_contains_embedding(
            a0 in -40i64..40, a1 in -40i64..40, a2 in -40i64..40,
            halvings in 0u32..20,
        ) {
            let x = f(a0, a1, a2);
            let field = RealCubicField::pipeline();
            let w = Rat::from((Int::from(1), Int::from(2).pow(halvings)));
            let enc = field.refine_root(&w);
            let iv = x.interval_eval(&enc);
            let xf = x.to_float(128);
            prop_assert!(Float::with_val(128, &iv.lo) <= xf);
            prop_assert!(xf <= Float::with_val(128, &iv.hi));
        }
    }
}
