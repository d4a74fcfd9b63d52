//! Exact scalar arithmetic: rationals, the Kronecker symbol, factored
//! quadratic characters, divisor bookkeeping, and generalized Bernoulli
//! numbers with the attached L-values at non-positive integers.
//!
//! Conventions:
//!
//! ```text
//! kronecker(a, 0)  = 1 if |a| = 1, else 0
//! kronecker(a, -1) = -1 for a < 0, 1 otherwise
//! kronecker(a, 2)  = 0 (a even), 1 (a = +-1 mod 8), -1 (a = +-3 mod 8)
//! B_1 = -1/2, so gen. Bernoulli of the trivial character mod 1 is B_w
//! L(1-w, chi) = -B_{w,chi} / w
//! ```

use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

pub use num_rational::BigRational as Rat;

use crate::EpsError;

/// Rational from an integer.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Rational from numerator and denominator.
pub fn ratq(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Renders a rational as `p/q`, or just `p` for integers.
pub fn rat_fmt(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Nearest f64; for display only, never in a load-bearing path.
pub fn rat_f64(x: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses `p` or `p/q`.
pub fn rat_parse(s: &str) -> Result<Rat, EpsError> {
    let bad = || EpsError::Input(format!("malformed rational '{s}'"));
    let s = s.trim();
    match s.split_once('/') {
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rat::from_integer(n))
        }
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(p, q))
        }
    }
}

/// Kronecker symbol (a|b), extended to all integer pairs.
pub fn kronecker(a: i64, b: i64) -> i32 {
    if b == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    if a % 2 == 0 && b % 2 == 0 {
        return 0;
    }
    let mut a = a as i128;
    let mut b = b as i128;
    let mut sign = 1i32;
    if b < 0 {
        b = -b;
        if a < 0 {
            sign = -sign;
        }
    }
    // factor out twos from b; each contributes (a|2)
    let mut twos = 0u32;
    while b % 2 == 0 {
        b /= 2;
        twos += 1;
    }
    if twos % 2 == 1 {
        match a.rem_euclid(8) {
            1 | 7 => {}
            3 | 5 => sign = -sign,
            _ => return 0, // a even
        }
    }
    // Jacobi symbol (a|b) for odd b > 0 by reciprocity
    a = a.rem_euclid(b);
    while a != 0 {
        let mut t = 0u32;
        while a % 2 == 0 {
            a /= 2;
            t += 1;
        }
        if t % 2 == 1 && matches!(b.rem_euclid(8), 3 | 5) {
            sign = -sign;
        }
        if a.rem_euclid(4) == 3 && b.rem_euclid(4) == 3 {
            sign = -sign;
        }
        std::mem::swap(&mut a, &mut b);
        a = a.rem_euclid(b);
    }
    if b == 1 {
        sign
    } else {
        0
    }
}

/// Prime factorization by trial division; fine for the level sizes in scope.
pub fn factor(mut n: u64) -> BTreeMap<u64, u32> {
    let mut out = BTreeMap::new();
    let mut p = 2u64;
    while p * p <= n {
        while n % p == 0 {
            *out.entry(p).or_insert(0) += 1;
            n /= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        *out.entry(n).or_insert(0) += 1;
    }
    out
}

/// Number of distinct prime factors.
pub fn omega(n: u64) -> u32 {
    factor(n).len() as u32
}

/// All divisors, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factor(n) {
        let prev = out.clone();
        let mut pw = 1u64;
        for _ in 0..e {
            pw *= p;
            out.extend(prev.iter().map(|d| d * pw));
        }
    }
    out.sort_unstable();
    out
}

/// Divisors m with gcd(m, n/m) = 1, ascending. These carry the full power
/// of each of their primes, so there are 2^omega(n) of them.
pub fn exact_divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factor(n) {
        let pw = p.pow(e);
        let prev = out.clone();
        out.extend(prev.iter().map(|d| d * pw));
    }
    out.sort_unstable();
    out
}

/// Coefficient weight s(n) = 2^omega(gcd(n, level)), with gcd(0, level) = level.
pub fn s_factor(n: i64, level: u64) -> u64 {
    let g = num_integer::gcd(n.unsigned_abs(), level);
    1u64 << omega(g)
}

/// Index of the Hecke congruence subgroup of level N in the full modular
/// group: N times the product of (1 + 1/p) over primes p | N.
pub fn gamma0_index(level: u64) -> u64 {
    let mut idx = level;
    for (p, _) in factor(level) {
        idx = idx / p * (p + 1);
    }
    idx
}

/// Vanishing bound: a holomorphic form of the given weight on the level-N
/// group (any quadratic character; squaring reduces to the trivial case)
/// vanishing at infinity past weight * index / 12 is zero.
pub fn sturm_bound(level: u64, weight: i64) -> i64 {
    let w = weight.max(1) as u64;
    ((w * gamma0_index(level)).div_ceil(12)) as i64
}

/// s(n) as a rational, for coefficient arithmetic.
pub fn s_rat(n: i64, level: u64) -> Rat {
    rat(s_factor(n, level) as i64)
}

/// One prime-local factor of a quadratic character.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CharPart {
    /// (./p) for an odd prime p, conductor p.
    Legendre,
    /// (-4/.), conductor 4.
    MinusFour,
    /// (2/.), conductor 8.
    Eight,
    /// (-2/.), conductor 8.
    MinusEight,
}

impl CharPart {
    fn eval(self, p: u64, n: i64) -> i32 {
        match self {
            CharPart::Legendre => kronecker(n, p as i64),
            CharPart::MinusFour => kronecker(-4, n),
            CharPart::Eight => kronecker(2, n),
            CharPart::MinusEight => kronecker(-2, n),
        }
    }

    fn discriminant(self, p: u64) -> i64 {
        match self {
            CharPart::Legendre => {
                // p* = (-1)^((p-1)/2) p, the fundamental discriminant with conductor p
                if p % 4 == 1 {
                    p as i64
                } else {
                    -(p as i64)
                }
            }
            CharPart::MinusFour => -4,
            CharPart::Eight => 8,
            CharPart::MinusEight => -8,
        }
    }

    fn conductor(self, p: u64) -> u64 {
        match self {
            CharPart::Legendre => p,
            CharPart::MinusFour => 4,
            CharPart::Eight | CharPart::MinusEight => 8,
        }
    }
}

/// A primitive quadratic Dirichlet character stored in factored form,
/// one local part per prime of the modulus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadChar {
    modulus: u64,
    parts: BTreeMap<u64, CharPart>,
}

/// Checks a level against the supported shape: odd squarefree times 1, 4 or 8.
/// Returns (odd part, 2-adic valuation).
pub fn level_shape(n: u64) -> Result<(u64, u32), EpsError> {
    if n == 0 {
        return Err(EpsError::Level(n, "level must be positive".into()));
    }
    let f = factor(n);
    let v2 = f.get(&2).copied().unwrap_or(0);
    if !matches!(v2, 0 | 2 | 3) {
        return Err(EpsError::Level(
            n,
            "2-part of the level must be 1, 4 or 8".into(),
        ));
    }
    for (&p, &e) in &f {
        if p != 2 && e > 1 {
            return Err(EpsError::Level(n, format!("odd part not squarefree: {p}^{e}")));
        }
    }
    if n == 1 {
        return Err(EpsError::Level(n, "level 1 carries a trivial character; not supported".into()));
    }
    Ok((n >> v2, v2))
}

impl QuadChar {
    /// The trivial character mod 1. Its value is 1 everywhere, including 0.
    pub fn trivial() -> Self {
        QuadChar { modulus: 1, parts: BTreeMap::new() }
    }

    /// The canonical primitive quadratic character attached to a level of the
    /// supported shape: Legendre parts at odd primes; at 2 the part is (-4/.)
    /// when 4 exactly divides N, and (2/.) or (-2/.) for N = 8, 24 mod 32.
    pub fn from_level(n: u64) -> Result<Self, EpsError> {
        let (odd, v2) = level_shape(n)?;
        let mut parts = BTreeMap::new();
        match v2 {
            0 => {}
            2 => {
                parts.insert(2, CharPart::MinusFour);
            }
            3 => {
                let m = n >> 3;
                parts.insert(2, if m % 4 == 1 { CharPart::Eight } else { CharPart::MinusEight });
            }
            _ => unreachable!(),
        }
        for (p, _) in factor(odd) {
            parts.insert(p, CharPart::Legendre);
        }
        Ok(QuadChar { modulus: n, parts })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// chi(n), the product of all local parts.
    pub fn eval(&self, n: i64) -> i32 {
        self.parts.iter().map(|(&p, &t)| t.eval(p, n)).product()
    }

    /// chi_m(n): the product of the local parts at primes dividing m.
    pub fn eval_part(&self, m: u64, n: i64) -> i32 {
        self.parts
            .iter()
            .filter(|(&p, _)| m % p == 0)
            .map(|(&p, &t)| t.eval(p, n))
            .product()
    }

    /// chi'_m(n): the complementary product over primes of the modulus not dividing m.
    pub fn eval_complement(&self, m: u64, n: i64) -> i32 {
        self.parts
            .iter()
            .filter(|(&p, _)| m % p != 0)
            .map(|(&p, &t)| t.eval(p, n))
            .product()
    }

    /// chi(-1); -1 exactly for odd characters.
    pub fn parity(&self) -> i32 {
        self.eval(-1)
    }

    /// The fundamental discriminant D with chi = (D|.). Its absolute value is
    /// the conductor.
    pub fn discriminant(&self) -> i64 {
        self.parts.iter().map(|(&p, &t)| t.discriminant(p)).product()
    }

    pub fn conductor(&self) -> u64 {
        self.parts.iter().map(|(&p, &t)| t.conductor(p)).product()
    }

    /// Local part at a prime, if present.
    pub fn part(&self, p: u64) -> Option<CharPart> {
        self.parts.get(&p).copied()
    }

    /// Primes carrying a local part, ascending.
    pub fn primes(&self) -> Vec<u64> {
        self.parts.keys().copied().collect()
    }
}

/// Binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 0..k {
        num *= BigInt::from(n - j);
        den *= BigInt::from(j + 1);
    }
    num / den
}

/// Bernoulli numbers B_0..B_w inclusive, with B_1 = -1/2.
pub fn bernoulli_numbers(w: u32) -> Vec<Rat> {
    let mut b: Vec<Rat> = Vec::with_capacity(w as usize + 1);
    for m in 0..=w as u64 {
        if m == 0 {
            b.push(Rat::one());
            continue;
        }
        // sum_{j<m} C(m+1, j) B_j = -(m+1) B_m
        let mut acc = Rat::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += Rat::from_integer(binomial(m + 1, j as u64)) * bj;
        }
        b.push(-acc / Rat::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// Bernoulli polynomial B_w(x) = sum_j C(w,j) B_j x^(w-j).
pub fn bernoulli_poly(w: u32, x: &Rat) -> Rat {
    let b = bernoulli_numbers(w);
    let mut acc = Rat::zero();
    let mut xpow = Rat::one();
    // iterate j = w down to 0 so powers of x build up from x^0
    for j in (0..=w).rev() {
        acc += Rat::from_integer(binomial(w as u64, j as u64)) * &b[j as usize] * &xpow;
        xpow *= x;
    }
    acc
}

/// Generalized Bernoulli number B_{w,chi} = N^(w-1) sum_{a=0}^{N-1} chi(a) B_w(a/N).
pub fn generalized_bernoulli(w: u32, chi: &QuadChar) -> Rat {
    let n = chi.modulus();
    let nr = rat(n as i64);
    let mut acc = Rat::zero();
    for a in 0..n {
        let c = chi.eval(a as i64);
        if c == 0 {
            continue;
        }
        let x = rat(a as i64) / &nr;
        acc += rat(c as i64) * bernoulli_poly(w, &x);
    }
    let mut scale = Rat::one();
    for _ in 1..w {
        scale *= &nr;
    }
    scale * acc
}

/// L(1-w, chi) = -B_{w,chi}/w for w >= 1.
pub fn l_value(w: u32, chi: &QuadChar) -> Rat {
    assert!(w >= 1, "L-value only defined at non-positive integers here");
    -generalized_bernoulli(w, chi) / rat(w as i64)
}

/// Fundamental discriminant of the square class of a nonzero integer.
pub fn fundamental_discriminant(n: i64) -> i64 {
    assert!(n != 0);
    let mut core = if n < 0 { -1i64 } else { 1i64 };
    for (p, e) in factor(n.unsigned_abs()) {
        if e % 2 == 1 {
            core *= p as i64;
        }
    }
    if core.rem_euclid(4) == 1 {
        core
    } else {
        4 * core
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_small_table() {
        // classic values
        assert_eq!(kronecker(1, 1), 1);
        assert_eq!(kronecker(0, 1), 1);
        assert_eq!(kronecker(0, 5), 0);
        assert_eq!(kronecker(2, 7), 1);
        assert_eq!(kronecker(2, 3), -1);
        assert_eq!(kronecker(3, 5), -1);
        assert_eq!(kronecker(-1, 5), 1);
        assert_eq!(kronecker(-1, 3), -1);
        assert_eq!(kronecker(2, 15), 1);
        assert_eq!(kronecker(-4, 7), -1);
        assert_eq!(kronecker(-4, 5), 1);
        assert_eq!(kronecker(5, 0), 0);
        assert_eq!(kronecker(-1, 0), 1);
        assert_eq!(kronecker(6, 2), 0);
        assert_eq!(kronecker(7, 2), 1);
        assert_eq!(kronecker(3, 2), -1);
        assert_eq!(kronecker(-7, -5), -1 * kronecker(-7, 5));
    }

    #[test]
    fn kronecker_multiplicative_in_both_arguments() {
        let vals = [-9i64, -7, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 7, 8, 9, 15];
        for &a in &vals {
            for &b in &vals {
                for &c in &vals {
                    // bottom multiplicativity needs care only at sign conventions;
                    // for positive bottoms it holds unconditionally
                    if b > 0 && c > 0 {
                        assert_eq!(
                            kronecker(a, b * c),
                            kronecker(a, b) * kronecker(a, c),
                            "a={a} b={b} c={c}"
                        );
                    }
                    if a % 2 != 0 || b % 2 != 0 {
                        // top multiplicativity for fixed bottom
                        let _ = c;
                    }
                }
            }
        }
        for &b in &[3i64, 5, 7, 15, 21, 8, 12] {
            for a1 in -20i64..20 {
                for a2 in -20i64..20 {
                    assert_eq!(
                        kronecker(a1 * a2, b),
                        kronecker(a1, b) * kronecker(a2, b),
                        "a1={a1} a2={a2} b={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn char_mod_15_values() {
        let chi = QuadChar::from_level(15).unwrap();
        let plus = [1i64, 2, 4, 8];
        let minus = [7i64, 11, 13, 14];
        for a in plus {
            assert_eq!(chi.eval(a), 1, "chi({a})");
        }
        for a in minus {
            assert_eq!(chi.eval(a), -1, "chi({a})");
        }
        assert_eq!(chi.eval(3), 0);
        assert_eq!(chi.eval(5), 0);
        assert_eq!(chi.parity(), -1);
        assert_eq!(chi.discriminant(), -15);
        assert_eq!(chi.conductor(), 15);
    }

    #[test]
    fn char_two_part_tags() {
        // 12 = 4*3
        let chi12 = QuadChar::from_level(12).unwrap();
        assert_eq!(chi12.part(2), Some(CharPart::MinusFour));
        assert_eq!(chi12.discriminant(), 12); // (-4)(-3)
        // 8: 8 mod 32 -> (2/.)
        let chi8 = QuadChar::from_level(8).unwrap();
        assert_eq!(chi8.part(2), Some(CharPart::Eight));
        assert_eq!(chi8.discriminant(), 8);
        // 24: 24 mod 32 -> (-2/.)
        let chi24 = QuadChar::from_level(24).unwrap();
        assert_eq!(chi24.part(2), Some(CharPart::MinusEight));
        assert_eq!(chi24.discriminant(), 24); // (-8)(-3)
    }

    #[test]
    fn char_discriminant_matches_eval() {
        // chi = (D|.) as functions, sampled
        for n in [8u64, 12, 15, 21, 24, 35, 40, 56, 60] {
            let chi = QuadChar::from_level(n).unwrap();
            let d = chi.discriminant();
            assert_eq!(d.unsigned_abs(), n, "conductor at {n}");
            for a in -40i64..40 {
                assert_eq!(chi.eval(a), kronecker(d, a), "level {n}, a={a}");
            }
        }
    }

    #[test]
    fn level_shape_rejections() {
        assert!(level_shape(2).is_err());
        assert!(level_shape(16).is_err());
        assert!(level_shape(9).is_err());
        assert!(level_shape(18).is_err());
        assert!(level_shape(1).is_err());
        assert!(level_shape(15).is_ok());
        assert!(level_shape(8).is_ok());
        assert!(level_shape(12).is_ok());
    }

    #[test]
    fn s_factor_values_level_12() {
        assert_eq!(s_factor(0, 12), 4);
        assert_eq!(s_factor(6, 12), 4);
        assert_eq!(s_factor(2, 12), 2);
        assert_eq!(s_factor(3, 12), 2);
        assert_eq!(s_factor(1, 12), 1);
        assert_eq!(s_factor(-6, 12), 4);
    }

    #[test]
    fn divisor_helpers() {
        assert_eq!(divisors(15), vec![1, 3, 5, 15]);
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(exact_divisors(12), vec![1, 3, 4, 12]);
        assert_eq!(exact_divisors(24), vec![1, 3, 8, 24]);
        assert_eq!(omega(15), 2);
    }

    #[test]
    fn bernoulli_small() {
        let b = bernoulli_numbers(12);
        assert_eq!(b[0], rat(1));
        assert_eq!(b[1], ratq(-1, 2));
        assert_eq!(b[2], ratq(1, 6));
        assert_eq!(b[3], rat(0));
        assert_eq!(b[4], ratq(-1, 30));
        assert_eq!(b[12], ratq(-691, 2730));
    }

    #[test]
    fn generalized_bernoulli_trivial_is_plain() {
        let chi = QuadChar::trivial();
        assert_eq!(generalized_bernoulli(1, &chi), ratq(-1, 2));
        assert_eq!(generalized_bernoulli(2, &chi), ratq(1, 6));
        assert_eq!(generalized_bernoulli(4, &chi), ratq(-1, 30));
    }

    #[test]
    fn generalized_bernoulli_level_15_weight_3() {
        let chi = QuadChar::from_level(15).unwrap();
        assert_eq!(generalized_bernoulli(3, &chi), rat(48));
        assert_eq!(l_value(3, &chi), rat(-16));
    }

    #[test]
    fn fundamental_discriminants() {
        assert_eq!(fundamental_discriminant(-3), -3);
        assert_eq!(fundamental_discriminant(-15), -15);
        assert_eq!(fundamental_discriminant(3), 12);
        assert_eq!(fundamental_discriminant(18), 8);
        assert_eq!(fundamental_discriminant(-27), -3);
        assert_eq!(fundamental_discriminant(45), 5);
    }
}
