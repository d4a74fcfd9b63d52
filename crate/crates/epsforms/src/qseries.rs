//! Windowed q-expansions with exact rational coefficients.
//!
//! A [`QSeries`] stores the coefficients of a formal expansion
//! `sum a(i) q^(i/denom)` on a window of lattice indices `[lower, trunc)`.
//! Everything below `lower` is exactly zero; everything from `trunc` on is
//! unknown. Arithmetic tracks the largest window on which the result is
//! still fully determined by its inputs, so truncation bookkeeping never
//! has to be done by callers:
//!
//! ```text
//! add:      [min(l1,l2), min(t1,t2))
//! mul:      [l1+l2,      min(t1+l2, t2+l1))
//! invert:   [-l,         t - 2l)
//! rescale:  [m*l,        m*t)          (exponent dilation by m)
//! section:  [ceil(l/m),  ceil(t/m))    (picks indices divisible by m)
//! ```
//!
//! Series on different lattices merge to the lcm lattice on demand.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;

use crate::arith::{rat, rat_fmt, Rat};
use crate::EpsError;

/// Least common multiple of the coefficients' denominators.
fn common_denom(cs: &[Rat]) -> BigInt {
    let mut d = BigInt::one();
    for c in cs {
        if !c.is_zero() {
            d = d.lcm(c.denom());
        }
    }
    d
}

/// Numerators after multiplying through by the common denominator `d`.
fn int_scaled(cs: &[Rat], d: &BigInt) -> Vec<BigInt> {
    if d.is_one() {
        return cs.iter().map(|c| c.numer().clone()).collect();
    }
    cs.iter().map(|c| c.numer() * (d / c.denom())).collect()
}

/// A q-expansion known exactly on a window of exponents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    denom: u64,
    lower: i64,
    coeffs: Vec<Rat>,
    trunc: i64,
}

impl QSeries {
    /// The zero series, known to vanish on `(-inf, trunc)`.
    pub fn zero(denom: u64, trunc: i64) -> Self {
        assert!(denom >= 1);
        QSeries { denom, lower: trunc, coeffs: Vec::new(), trunc }
    }

    /// The constant 1, known on `(-inf, trunc)`.
    pub fn one(denom: u64, trunc: i64) -> Self {
        Self::monomial(denom, 0, rat(1), trunc)
    }

    /// `c * q^(idx/denom)`, known on `(-inf, trunc)`.
    pub fn monomial(denom: u64, idx: i64, c: Rat, trunc: i64) -> Self {
        assert!(denom >= 1);
        assert!(idx < trunc, "monomial exponent outside window");
        let mut coeffs = vec![Rat::zero(); (trunc - idx) as usize];
        coeffs[0] = c;
        let mut s = QSeries { denom, lower: idx, coeffs, trunc };
        s.normalize();
        s
    }

    /// Builds a series from consecutive coefficients starting at `lower`.
    /// The window is `[lower, lower + coeffs.len())`.
    pub fn from_coeffs(denom: u64, lower: i64, coeffs: Vec<Rat>) -> Self {
        assert!(denom >= 1);
        let trunc = lower + coeffs.len() as i64;
        let mut s = QSeries { denom, lower, coeffs, trunc };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        let strip = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if strip > 0 {
            self.coeffs.drain(..strip);
            self.lower += strip as i64;
        }
        debug_assert_eq!(self.lower + self.coeffs.len() as i64, self.trunc);
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    /// First index that can carry a nonzero coefficient.
    pub fn lower(&self) -> i64 {
        self.lower
    }

    /// Exclusive end of the guaranteed window.
    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    pub fn is_zero_on_window(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest nonzero term `(index, coefficient)`, if any inside the window.
    pub fn leading(&self) -> Option<(i64, &Rat)> {
        self.coeffs.first().map(|c| (self.lower, c))
    }

    /// Coefficient at a lattice index; `None` when the index is at or past
    /// the window end.
    pub fn coeff(&self, idx: i64) -> Option<Rat> {
        if idx >= self.trunc {
            return None;
        }
        if idx < self.lower {
            return Some(Rat::zero());
        }
        Some(self.coeffs[(idx - self.lower) as usize].clone())
    }

    /// Coefficient at an exact rational exponent.
    pub fn coeff_at(&self, expo: &Rat) -> Option<Rat> {
        let scaled = expo * rat(self.denom as i64);
        if !scaled.denom().is_one() {
            return Some(Rat::zero()); // off-lattice exponents never occur
        }
        let idx = i64::try_from(scaled.numer().clone()).ok()?;
        self.coeff(idx)
    }

    /// The exponent carried by a lattice index, as a rational.
    pub fn exponent(&self, idx: i64) -> Rat {
        Rat::new(idx.into(), (self.denom as i64).into())
    }

    /// Indices with nonzero coefficient, ascending.
    pub fn support(&self) -> Vec<i64> {
        (self.lower..self.trunc)
            .filter(|&i| !self.coeffs[(i - self.lower) as usize].is_zero())
            .collect()
    }

    /// Reinterprets the series on a finer lattice; `d` must be a multiple of
    /// the current denominator.
    pub fn with_denom(&self, d: u64) -> Self {
        assert!(d >= 1 && d % self.denom == 0);
        let f = (d / self.denom) as i64;
        if f == 1 {
            return self.clone();
        }
        // indices off the coarse lattice are known zero through trunc * f
        let lower = self.lower * f;
        let trunc = self.trunc * f;
        let mut coeffs = vec![Rat::zero(); (trunc - lower) as usize];
        for (j, c) in self.coeffs.iter().enumerate() {
            coeffs[j * f as usize] = c.clone();
        }
        let mut s = QSeries { denom: d, lower, coeffs, trunc };
        s.normalize();
        s
    }

    fn merged(x: &Self, y: &Self) -> (Self, Self) {
        let d = num_integer::lcm(x.denom, y.denom);
        (x.with_denom(d), y.with_denom(d))
    }

    /// Effective lower bound for window arithmetic: `trunc` when the series
    /// is zero on its window (its support, if any, starts past the window).
    fn eff_lower(&self) -> i64 {
        if self.coeffs.is_empty() {
            self.trunc
        } else {
            self.lower
        }
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = -c.clone();
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return QSeries::zero(self.denom, self.trunc);
        }
        let mut out = self.clone();
        for x in &mut out.coeffs {
            *x *= c;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let (x, y) = Self::merged(self, other);
        let lower = x.eff_lower().min(y.eff_lower());
        let trunc = x.trunc.min(y.trunc);
        if trunc <= lower {
            return QSeries::zero(x.denom, trunc);
        }
        let mut coeffs = vec![Rat::zero(); (trunc - lower) as usize];
        for (s, out_off) in [(&x, lower), (&y, lower)] {
            for (j, c) in s.coeffs.iter().enumerate() {
                let idx = s.lower + j as i64;
                if idx >= out_off && idx < trunc {
                    coeffs[(idx - out_off) as usize] += c;
                }
            }
        }
        let mut s = QSeries { denom: x.denom, lower, coeffs, trunc };
        s.normalize();
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (x, y) = Self::merged(self, other);
        let (lx, ly) = (x.eff_lower(), y.eff_lower());
        let trunc = (x.trunc + ly).min(y.trunc + lx);
        let lower = lx + ly;
        if x.coeffs.is_empty() || y.coeffs.is_empty() || trunc <= lower {
            return QSeries::zero(x.denom, trunc);
        }
        // convolve over the integers: clearing denominators up front replaces
        // a gcd reduction per partial product with one per output coefficient
        let dx = common_denom(&x.coeffs);
        let dy = common_denom(&y.coeffs);
        let xi = int_scaled(&x.coeffs, &dx);
        let yi = int_scaled(&y.coeffs, &dy);
        let mut acc = vec![BigInt::zero(); (trunc - lower) as usize];
        for (i, a) in xi.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let xlead = x.lower + i as i64;
            for (j, b) in yi.iter().enumerate() {
                let idx = xlead + y.lower + j as i64;
                if idx >= trunc {
                    break;
                }
                if !b.is_zero() {
                    acc[(idx - lower) as usize] += a * b;
                }
            }
        }
        let den = dx * dy;
        let coeffs = if den.is_one() {
            acc.into_iter().map(Rat::from_integer).collect()
        } else {
            acc.into_iter().map(|n| Rat::new(n, den.clone())).collect()
        };
        let mut s = QSeries { denom: x.denom, lower, coeffs, trunc };
        s.normalize();
        s
    }

    /// Integer power by repeated squaring. `pow(0)` is the constant 1 on the
    /// same window. The result window matches e-fold repeated multiplication.
    pub fn pow(&self, e: u32) -> Self {
        if e == 0 {
            return QSeries::one(self.denom, self.trunc);
        }
        // unit with enough window that it never binds in the products
        let slack = (e as i64 + 1) * self.eff_lower().min(0).unsigned_abs() as i64;
        let mut acc = QSeries::one(self.denom, self.trunc + slack + 1);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Multiplicative inverse. The leading term must sit inside the window.
    pub fn invert(&self) -> Result<Self, EpsError> {
        let (l, c0) = self
            .leading()
            .map(|(l, c)| (l, c.clone()))
            .ok_or_else(|| EpsError::NonUnit("series is zero on its window".into()))?;
        let len = (self.trunc - 2 * l).max(-l + 1) - (-l);
        let len = len as usize;
        let mut out = vec![Rat::zero(); len];
        out[0] = Rat::one() / &c0;
        for m in 1..len {
            // coefficient of q^((-l+m)/denom) in the inverse
            let mut acc = Rat::zero();
            for s in 1..=m {
                let a = &self.coeffs.get(s).cloned().unwrap_or_else(Rat::zero);
                if !a.is_zero() && !out[m - s].is_zero() {
                    acc += a * &out[m - s];
                }
            }
            out[m] = -acc / &c0;
        }
        Ok(QSeries::from_coeffs(self.denom, -l, out))
    }

    /// Exponent dilation by `m >= 1`: `q^e` becomes `q^(m e)` on the same
    /// lattice denominator.
    pub fn rescale(&self, m: u64) -> Self {
        assert!(m >= 1);
        let m = m as i64;
        if self.coeffs.is_empty() {
            return QSeries::zero(self.denom, self.trunc * m);
        }
        let lower = self.lower * m;
        let trunc = self.trunc * m;
        let mut coeffs = vec![Rat::zero(); (trunc - lower) as usize];
        for (j, c) in self.coeffs.iter().enumerate() {
            coeffs[j * m as usize] = c.clone();
        }
        // indices past m*(trunc-1) that are not multiples of m are still known zero
        let mut s = QSeries { denom: self.denom, lower, coeffs, trunc };
        s.normalize();
        s
    }

    /// The section picking every `m`-th coefficient: index `i` of the result
    /// is index `m i` of the input.
    pub fn section(&self, m: u64) -> Self {
        assert!(m >= 1);
        let m = m as i64;
        let lower = self.lower.div_euclid(m) + if self.lower.rem_euclid(m) > 0 { 1 } else { 0 };
        let trunc = self.trunc.div_euclid(m) + if self.trunc.rem_euclid(m) > 0 { 1 } else { 0 };
        if self.coeffs.is_empty() || trunc <= lower {
            return QSeries::zero(self.denom, trunc);
        }
        let coeffs = (lower..trunc)
            .map(|i| self.coeff(i * m).unwrap_or_else(Rat::zero))
            .collect();
        let mut s = QSeries { denom: self.denom, lower, coeffs, trunc };
        s.normalize();
        s
    }

    /// Multiplies by `q^(di/denom)`.
    pub fn shift(&self, di: i64) -> Self {
        let mut out = self.clone();
        out.lower += di;
        out.trunc += di;
        out
    }

    /// Restricts the window end to `min(trunc, t)`.
    pub fn truncated(&self, t: i64) -> Self {
        if t >= self.trunc {
            return self.clone();
        }
        let mut out = self.clone();
        out.trunc = t;
        if out.lower >= t {
            out.lower = t;
            out.coeffs.clear();
        } else {
            out.coeffs.truncate((t - out.lower) as usize);
        }
        out.normalize();
        out
    }

    /// Constant term of the product with `other`, i.e. the sum of
    /// `self[n] * other[-n]`. Both windows must be long enough that every
    /// unseen index pairs with a known-zero one; otherwise the constant term
    /// is not determined and an error is returned.
    pub fn product_constant(&self, other: &Self) -> Result<Rat, EpsError> {
        if self.denom != other.denom {
            return Err(EpsError::Input("lattice denominators differ".into()));
        }
        if self.trunc <= -other.eff_lower() || other.trunc <= -self.eff_lower() {
            return Err(EpsError::Window(format!(
                "constant term needs windows past {} and {}, have {} and {}",
                -other.eff_lower(),
                -self.eff_lower(),
                self.trunc,
                other.trunc
            )));
        }
        let lo = self.eff_lower().max(-(other.trunc - 1));
        let hi = (self.trunc - 1).min(-other.eff_lower());
        let mut acc = Rat::zero();
        for n in lo..=hi {
            let a = self.coeff(n).expect("inside window");
            if a.is_zero() {
                continue;
            }
            let b = other.coeff(-n).expect("inside window");
            if !b.is_zero() {
                acc += a * b;
            }
        }
        Ok(acc)
    }

    /// True when both series agree at every index of their common window.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let (x, y) = Self::merged(self, other);
        let lo = x.eff_lower().min(y.eff_lower());
        let hi = x.trunc.min(y.trunc);
        (lo..hi).all(|i| x.coeff(i) == y.coeff(i))
    }

    /// All coefficients on `[from, to)` as a dense vector (window must cover it).
    pub fn window_vec(&self, from: i64, to: i64) -> Result<Vec<Rat>, EpsError> {
        if to > self.trunc {
            return Err(EpsError::Window(format!(
                "requested [{from}, {to}) but window ends at {}",
                self.trunc
            )));
        }
        Ok((from..to).map(|i| self.coeff(i).unwrap()).collect())
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for i in self.lower..self.trunc {
            let c = self.coeff(i).unwrap();
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if wrote {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            } else if neg {
                write!(f, "-")?;
            }
            wrote = true;
            let show_coeff = !a.is_one() || i == 0;
            if show_coeff {
                write!(f, "{}", rat_fmt(&a))?;
            }
            if i != 0 {
                if show_coeff {
                    write!(f, " ")?;
                }
                let e = self.exponent(i);
                if e.denom().is_one() {
                    write!(f, "q^{}", e.numer())?;
                } else {
                    write!(f, "q^({})", e)?;
                }
            }
        }
        if !wrote {
            write!(f, "0")?;
        }
        let t = self.exponent(self.trunc);
        if t.denom().is_one() {
            write!(f, " + O(q^{})", t.numer())
        } else {
            write!(f, " + O(q^({}))", t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratq;

    fn geo(trunc: i64) -> QSeries {
        // 1/(1-q) = 1 + q + q^2 + ...
        QSeries::from_coeffs(1, 0, vec![rat(1); trunc as usize])
    }

    #[test]
    fn mul_window_rule() {
        // x known to q^4, lower -2; y known to q^6, lower 1
        let x = QSeries::from_coeffs(1, -2, vec![rat(1); 7]);
        let y = QSeries::from_coeffs(1, 1, vec![rat(2); 6]);
        let p = x.mul(&y);
        assert_eq!(p.lower(), -1);
        assert_eq!(p.trunc(), (5i64 + 1).min(7 - 2));
    }

    #[test]
    fn invert_geometric() {
        let one_minus_q = QSeries::from_coeffs(1, 0, vec![rat(1), rat(-1), rat(0), rat(0), rat(0)]);
        let inv = one_minus_q.invert().unwrap();
        assert!(inv.agrees_with(&geo(5)));
        let p = one_minus_q.mul(&inv);
        assert!(p.agrees_with(&QSeries::one(1, 5)));
    }

    #[test]
    fn invert_with_pole_window() {
        // x = q^-2 (1 + q + ...) known on [-2, 3): inverse window is [2, 7)
        let x = QSeries::from_coeffs(1, -2, vec![rat(1); 5]);
        let inv = x.invert().unwrap();
        assert_eq!(inv.lower(), 2);
        assert_eq!(inv.trunc(), 3 + 4);
        assert!(x.mul(&inv).agrees_with(&QSeries::one(1, 10)));
    }

    #[test]
    fn rescale_and_section_are_adjoint() {
        let x = QSeries::from_coeffs(1, -1, vec![rat(3), rat(1), rat(4), rat(1), rat(5)]);
        let up = x.rescale(3);
        assert_eq!(up.coeff(-3), Some(rat(3)));
        assert_eq!(up.coeff(-2), Some(rat(0)));
        assert_eq!(up.coeff(3), Some(rat(4)));
        let back = up.section(3);
        assert!(back.agrees_with(&x));
        assert_eq!(back.trunc(), x.trunc());
    }

    #[test]
    fn section_window() {
        let x = QSeries::from_coeffs(1, -4, (0..9).map(rat).collect());
        // leading zero strips to support from -3; section(2) reads -2,0,2,4
        let s = x.section(2);
        assert_eq!(s.lower(), -1);
        assert_eq!(s.trunc(), 3);
        assert_eq!(s.coeff(-2), Some(rat(0)));
        assert_eq!(s.coeff(-1), Some(rat(2)));
        assert_eq!(s.coeff(2), Some(rat(8)));
    }

    #[test]
    fn lattice_merge() {
        let x = QSeries::from_coeffs(3, -1, vec![rat(1), rat(2)]); // q^(-1/3) + 2
        let y = QSeries::from_coeffs(2, 0, vec![rat(5), rat(7)]); // 5 + 7 q^(1/2)
        let s = x.add(&y);
        assert_eq!(s.denom(), 6);
        assert_eq!(s.coeff(-2), Some(rat(1)));
        assert_eq!(s.coeff(0), Some(rat(7)));
        assert_eq!(s.coeff(1), Some(rat(0))); // off both lattices
        assert_eq!(s.coeff(2), None); // x only known below exponent 1/3
        assert_eq!(s.trunc(), 2);
    }

    #[test]
    fn display_format() {
        let x = QSeries::from_coeffs(1, -3, vec![ratq(1, 2), rat(0), rat(0), ratq(-1, 2), rat(0), rat(3)]);
        assert_eq!(format!("{x}"), "1/2 q^-3 - 1/2 + 3 q^2 + O(q^3)");
        let y = QSeries::from_coeffs(15, -3, vec![ratq(1, 2)]);
        assert_eq!(format!("{y}"), "1/2 q^(-1/5) + O(q^(-2/15))");
    }

    #[test]
    fn zero_handling() {
        let z = QSeries::zero(1, 9);
        let x = QSeries::from_coeffs(1, -2, vec![rat(1); 5]);
        assert!(z.add(&x).agrees_with(&x));
        let p = z.mul(&x);
        assert!(p.is_zero_on_window());
        // product window: unknown parts of z could start at 9: 9 + (-2) = 7
        assert_eq!(p.trunc(), 7);
        assert!(x.scale(&rat(0)).is_zero_on_window());
    }

    #[test]
    fn pow_matches_repeated_mul() {
        let x = QSeries::from_coeffs(1, -1, vec![rat(1), rat(2), rat(-1), rat(5)]);
        let mut acc = QSeries::one(1, 10);
        for _ in 0..4 {
            acc = acc.mul(&x);
        }
        assert!(x.pow(4).agrees_with(&acc));
        assert_eq!(x.pow(4).trunc(), acc.trunc());
    }

    #[test]
    fn truncated_shrinks() {
        let x = QSeries::from_coeffs(1, -2, (0..10).map(rat).collect());
        let t = x.truncated(3);
        assert_eq!(t.trunc(), 3);
        assert_eq!(t.coeff(2), Some(rat(4)));
        assert_eq!(t.coeff(3), None);
        let gone = x.truncated(-2);
        assert!(gone.is_zero_on_window());
    }
}
