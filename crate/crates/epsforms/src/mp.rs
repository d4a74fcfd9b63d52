//! Fixed-point arithmetic used by the numerical transformation checks.
//!
//! Values are stored as `m / 2^PREC` with `m` a big integer, giving about 72
//! decimal digits. That is far more than the 1e-8 tolerances the checks use,
//! so truncation of the q-series stays the dominant error term. Only the
//! operations the checks need are provided: ring operations, division, square
//! roots, pi, and the exponential/trigonometric kernels behind e(x) and q^x.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::arith::Rat;

/// Binary digits after the point.
const PREC: u32 = 240;

/// A real number in fixed-point representation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fix(BigInt);

impl Fix {
    pub fn zero() -> Self {
        Fix(BigInt::zero())
    }

    pub fn from_i64(n: i64) -> Self {
        Fix(BigInt::from(n) << PREC)
    }

    pub fn from_rat(x: &Rat) -> Self {
        Fix((x.numer() << PREC) / x.denom())
    }

    pub fn to_f64(&self) -> f64 {
        // split off the shift so huge mantissas stay inside f64 range
        let int = &self.0 >> PREC;
        let frac = &self.0 - (&int << PREC);
        int.to_f64().unwrap_or(f64::INFINITY)
            + frac.to_f64().unwrap_or(0.0) / 2f64.powi(PREC as i32)
    }

    pub fn abs(&self) -> Self {
        Fix(self.0.abs())
    }

    pub fn neg(&self) -> Self {
        Fix(-&self.0)
    }

    pub fn add(&self, o: &Self) -> Self {
        Fix(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Fix(&self.0 - &o.0)
    }

    pub fn mul(&self, o: &Self) -> Self {
        Fix((&self.0 * &o.0) >> PREC)
    }

    pub fn div(&self, o: &Self) -> Self {
        Fix((&self.0 << PREC) / &o.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Nearest integer, as a big integer.
    fn round(&self) -> BigInt {
        let half = BigInt::from(1) << (PREC - 1);
        (&self.0 + half) >> PREC
    }

    /// Square root by Newton iteration on the scaled integer.
    pub fn sqrt(&self) -> Self {
        assert!(!self.0.is_negative(), "sqrt of a negative value");
        if self.0.is_zero() {
            return Fix::zero();
        }
        // sqrt(m / 2^P) = sqrt(m * 2^P) / 2^P
        let target = &self.0 << PREC;
        let mut x = BigInt::from(1) << ((target.bits() as u32 + 1) / 2);
        loop {
            let next: BigInt = (&x + &target / &x) >> 1;
            let step: BigInt = &next - &x;
            if step.abs() <= BigInt::from(1) {
                return Fix(next);
            }
            x = next;
        }
    }
}

/// pi by Machin's formula 16 atan(1/5) - 4 atan(1/239).
pub fn pi() -> Fix {
    fn atan_inv(n: i64) -> BigInt {
        // atan(1/n) * 2^PREC via the alternating Taylor series
        let one = BigInt::from(1) << (PREC + 16);
        let nn = BigInt::from(n) * n;
        let mut term = one / n;
        let mut acc = term.clone();
        let mut k: i64 = 1;
        while !term.is_zero() {
            term = &term / &nn;
            let signed = &term / (2 * k + 1);
            if k % 2 == 1 {
                acc -= signed;
            } else {
                acc += signed;
            }
            k += 1;
        }
        acc
    }
    let raw = atan_inv(5) * 16 - atan_inv(239) * 4;
    Fix(raw >> 16)
}

/// exp(x) with integer/fraction split so the Taylor tail stays short.
pub fn exp(x: &Fix) -> Fix {
    let n = x.round();
    let frac = Fix(&x.0 - (&n << PREC));
    // Taylor on |frac| <= 1/2
    let mut term = Fix::from_i64(1);
    let mut acc = Fix::from_i64(1);
    let mut k: i64 = 1;
    while !term.is_zero() {
        term = term.mul(&frac);
        term = Fix(term.0 / k);
        acc = acc.add(&term);
        k += 1;
    }
    // e^n by binary powering of e or 1/e
    let e1 = {
        let mut t = Fix::from_i64(1);
        let mut a = Fix::from_i64(1);
        let mut k: i64 = 1;
        while !t.is_zero() {
            t = Fix(t.0 / k);
            a = a.add(&t);
            k += 1;
        }
        a
    };
    let mag = n.magnitude().to_u64().expect("exponent in range") as u32;
    let mut pw = Fix::from_i64(1);
    let mut base = if n.is_negative() { Fix::from_i64(1).div(&e1) } else { e1 };
    let mut e = mag;
    while e > 0 {
        if e & 1 == 1 {
            pw = pw.mul(&base);
        }
        base = base.mul(&base);
        e >>= 1;
    }
    acc.mul(&pw)
}

/// (cos t, sin t) with argument reduction modulo 2 pi.
pub fn sincos(t: &Fix) -> (Fix, Fix) {
    let two_pi = pi().mul(&Fix::from_i64(2));
    let k = t.div(&two_pi).round();
    let r = Fix(&t.0 - (two_pi.0 * k));
    // |r| <= pi + rounding
    let r2 = r.mul(&r);
    let mut cos = Fix::from_i64(1);
    let mut sin = r.clone();
    let mut term_c = Fix::from_i64(1);
    let mut term_s = r.clone();
    let mut k: i64 = 1;
    loop {
        term_c = Fix(term_c.mul(&r2).0 / ((2 * k - 1) * 2 * k));
        term_s = Fix(term_s.mul(&r2).0 / (2 * k * (2 * k + 1)));
        if term_c.is_zero() && term_s.is_zero() {
            break;
        }
        if k % 2 == 1 {
            cos = cos.sub(&term_c);
            sin = sin.sub(&term_s);
        } else {
            cos = cos.add(&term_c);
            sin = sin.add(&term_s);
        }
        k += 1;
    }
    (cos, sin)
}

/// A complex number over `Fix`.
#[derive(Clone, Debug)]
pub struct Cx {
    pub re: Fix,
    pub im: Fix,
}

impl Cx {
    pub fn zero() -> Self {
        Cx { re: Fix::zero(), im: Fix::zero() }
    }

    pub fn new(re: Fix, im: Fix) -> Self {
        Cx { re, im }
    }

    pub fn from_rats(re: &Rat, im: &Rat) -> Self {
        Cx { re: Fix::from_rat(re), im: Fix::from_rat(im) }
    }

    pub fn add(&self, o: &Self) -> Self {
        Cx { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Cx { re: self.re.sub(&o.re), im: self.im.sub(&o.im) }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Cx {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    pub fn scale(&self, s: &Fix) -> Self {
        Cx { re: self.re.mul(s), im: self.im.mul(s) }
    }

    pub fn recip(&self) -> Self {
        let n2 = self.re.mul(&self.re).add(&self.im.mul(&self.im));
        Cx { re: self.re.div(&n2), im: self.im.neg().div(&n2) }
    }

    pub fn div(&self, o: &Self) -> Self {
        self.mul(&o.recip())
    }

    /// Integer power (negative exponents via the reciprocal).
    pub fn powi(&self, e: i64) -> Self {
        let base = if e < 0 { self.recip() } else { self.clone() };
        let mut acc = Cx::new(Fix::from_i64(1), Fix::zero());
        let mut b = base;
        let mut m = e.unsigned_abs();
        while m > 0 {
            if m & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            m >>= 1;
        }
        acc
    }

    pub fn abs(&self) -> Fix {
        self.re.mul(&self.re).add(&self.im.mul(&self.im)).sqrt()
    }
}

/// e(x) = exp(2 pi i x) for an exact rational phase; the phase is reduced
/// modulo 1 exactly before any rounding happens.
pub fn e_of(x: &Rat) -> Cx {
    let frac = x - x.floor();
    let theta = Fix::from_rat(&frac).mul(&pi()).mul(&Fix::from_i64(2));
    let (c, s) = sincos(&theta);
    Cx::new(c, s)
}

/// q^expo at tau, i.e. exp(2 pi i expo tau), for exact rational expo and tau.
pub fn q_power(tau: &Cx, expo: &Rat) -> Cx {
    let e = Fix::from_rat(expo);
    let two_pi = pi().mul(&Fix::from_i64(2));
    // exp(2 pi i e (x + iy)) = exp(-2 pi e y) * (cos(2 pi e x) + i sin(2 pi e x))
    let mag = exp(&two_pi.mul(&e).mul(&tau.im).neg());
    let theta = two_pi.mul(&e).mul(&tau.re);
    let (c, s) = sincos(&theta);
    Cx::new(c.mul(&mag), s.mul(&mag))
}
