//! Finite quadratic modules attached to a level and a vector of signs, one
//! sign per prime of the level. The module is assembled from one Jordan
//! block per prime; the block data determines the quadratic form values,
//! the signature mod 8, the attached quadratic character, and the exact
//! phases of the Weil representation matrices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;

use crate::arith::{kronecker, rat, ratq, Rat};
use crate::{EpsError, QuadChar};

/// Sign choice per prime of the level (the prime 2 participates when the
/// level is divisible by 4).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SignVector {
    signs: BTreeMap<u64, i8>,
}

impl SignVector {
    pub fn new(signs: BTreeMap<u64, i8>) -> Result<Self, EpsError> {
        for (&p, &s) in &signs {
            if s != 1 && s != -1 {
                return Err(EpsError::Input(format!("sign at {p} must be +1 or -1")));
            }
        }
        Ok(SignVector { signs })
    }

    /// Validates the key set against a level: exactly the odd primes of the
    /// level, plus 2 when 4 divides it.
    pub fn check_level(&self, level: u64) -> Result<(), EpsError> {
        let chi = QuadChar::from_level(level)?;
        let expect: Vec<u64> = chi.primes();
        let got: Vec<u64> = self.signs.keys().copied().collect();
        if expect != got {
            return Err(EpsError::Input(format!(
                "sign vector primes {got:?} do not match level {level} (expected {expect:?})"
            )));
        }
        Ok(())
    }

    pub fn from_pairs(pairs: &[(u64, i8)]) -> Result<Self, EpsError> {
        Self::new(pairs.iter().copied().collect())
    }

    pub fn sign(&self, p: u64) -> Option<i8> {
        self.signs.get(&p).copied()
    }

    pub fn primes(&self) -> impl Iterator<Item = (u64, i8)> + '_ {
        self.signs.iter().map(|(&p, &s)| (p, s))
    }

    /// The dual sign vector: each sign multiplied by the local value of the
    /// level character at -1.
    pub fn dual(&self, level: u64) -> Result<SignVector, EpsError> {
        let chi = QuadChar::from_level(level)?;
        let mut out = BTreeMap::new();
        for (&p, &s) in &self.signs {
            let c = chi.eval_part(p, -1);
            debug_assert!(c == 1 || c == -1);
            out.insert(p, s * c as i8);
        }
        Ok(SignVector { signs: out })
    }

    /// Parses "3=-1,5=1" or "3:-1,5:+1".
    pub fn parse(s: &str) -> Result<Self, EpsError> {
        let mut signs = BTreeMap::new();
        for item in s.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (p, v) = item
                .split_once(['=', ':'])
                .ok_or_else(|| EpsError::Input(format!("malformed sign entry '{item}'")))?;
            let p: u64 = p.trim().parse().map_err(|_| EpsError::Input(format!("bad prime '{p}'")))?;
            let v: i8 = v
                .trim()
                .trim_start_matches('+')
                .parse()
                .map_err(|_| EpsError::Input(format!("bad sign '{v}'")))?;
            signs.insert(p, v);
        }
        Self::new(signs)
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (&p, &s) in &self.signs {
            if !first {
                write!(f, ",")?;
            }
            first = false;
            write!(f, "{p}={}", if s > 0 { "+1" } else { "-1" })?;
        }
        Ok(())
    }
}

/// One Jordan block of the module, keyed by its prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JordanBlock {
    /// Cyclic of order p with generator norm a/p. The symbol sign is
    /// (2a|p); `a` itself is kept so negation acts on coordinates exactly.
    Odd { p: u64, a: u64 },
    /// (Z/2)^2 with norm (x^2 + y^2) t/8; symbol 2_t^{+2}, t in {2, -2}.
    TwoEven { t: i8 },
    /// Z/2 x Z/4 with norm x^2 t1/4 + y^2 t2/8; symbol 2_{t1}^{+1} 4_{t2},
    /// t1 in {1, -1}, t2 in {1, 3, -3, -1}.
    TwoPair { t1: i8, t2: i8 },
}

impl JordanBlock {
    fn group_order(&self) -> u64 {
        match self {
            JordanBlock::Odd { p, .. } => *p,
            JordanBlock::TwoEven { .. } => 4,
            JordanBlock::TwoPair { .. } => 8,
        }
    }

    fn coord_moduli(&self) -> Vec<u64> {
        match self {
            JordanBlock::Odd { p, .. } => vec![*p],
            JordanBlock::TwoEven { .. } => vec![2, 2],
            JordanBlock::TwoPair { .. } => vec![2, 4],
        }
    }

    /// Norm of a coordinate tuple, as a rational mod 1.
    fn norm(&self, coords: &[u64]) -> Rat {
        let frac = match self {
            JordanBlock::Odd { p, a } => {
                ratq((a * coords[0] * coords[0]) as i64, *p as i64)
            }
            JordanBlock::TwoEven { t } => {
                let s = (coords[0] * coords[0] + coords[1] * coords[1]) as i64;
                ratq(s * *t as i64, 8)
            }
            JordanBlock::TwoPair { t1, t2 } => {
                let x = (coords[0] * coords[0]) as i64 * *t1 as i64;
                let y = (coords[1] * coords[1]) as i64 * *t2 as i64;
                ratq(x, 4) + ratq(y, 8)
            }
        };
        frac_mod1(&frac)
    }

    /// Genus-symbol style rendering: `p^+1`, `p^-1`, `2_t^+2`, or
    /// `2_t1^+1 4_t2^(+-)1`.
    pub fn symbol(&self) -> String {
        match self {
            JordanBlock::Odd { p, a } => {
                let s = if kronecker((2 * a) as i64, *p as i64) == 1 { '+' } else { '-' };
                format!("{p}^{s}1")
            }
            JordanBlock::TwoEven { t } => format!("2_{t}^+2"),
            JordanBlock::TwoPair { t1, t2 } => {
                let s = if kronecker(2, *t2 as i64) == 1 { '+' } else { '-' };
                format!("2_{t1}^+1 4_{t2}^{s}1")
            }
        }
    }

    /// Oddity (2-adic) or p-excess (odd) contribution to the signature.
    fn signature_term(&self) -> i64 {
        match self {
            // p-excess enters the signature with a minus sign
            JordanBlock::Odd { p, a } => {
                let k = if kronecker((2 * a) as i64, *p as i64) == -1 { 4 } else { 0 };
                -((*p as i64 - 1) + k)
            }
            JordanBlock::TwoEven { t } => *t as i64,
            JordanBlock::TwoPair { t1, t2 } => *t1 as i64 + *t2 as i64,
        }
    }
}

/// Smallest positive a with (2a|p) = delta; the generator of the block p^delta
/// has norm a/p.
fn odd_generator_scale(p: u64, delta: i8) -> u64 {
    (1..p)
        .find(|&a| kronecker(2 * a as i64, p as i64) == delta as i32)
        .expect("quadratic residues of both signs exist mod an odd prime")
}

fn frac_mod1(x: &Rat) -> Rat {
    x - x.floor()
}

/// An element, stored as the concatenated coordinates of all blocks in
/// ascending prime order.
pub type Element = Vec<u64>;

/// A finite quadratic module of the supported family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscForm {
    level: u64,
    blocks: BTreeMap<u64, JordanBlock>,
}

impl DiscForm {
    /// Builds the module matching a level and sign vector: the unique (up to
    /// isomorphism) form whose character is the level character and whose
    /// local signs are `eps`. For levels divisible by 8 two isomorphic
    /// parameter choices exist; the lexicographically smaller `(t1, t2)` is
    /// taken.
    pub fn build(level: u64, eps: &SignVector) -> Result<Self, EpsError> {
        eps.check_level(level)?;
        let chi = QuadChar::from_level(level)?;
        let mut blocks = BTreeMap::new();
        for (p, s) in eps.primes() {
            if p == 2 {
                continue;
            }
            let delta = kronecker((2 * level / p) as i64, p as i64) * s as i32;
            debug_assert!(delta == 1 || delta == -1);
            blocks.insert(p, JordanBlock::Odd { p, a: odd_generator_scale(p, delta as i8) });
        }
        if level % 4 == 0 && level % 8 != 0 {
            let eps2 = eps.sign(2).ok_or_else(|| EpsError::Input("missing sign at 2".into()))? as i32;
            let m = (level / 4) as i64;
            let t = [2i8, -2]
                .into_iter()
                .find(|&t| kronecker(-4, m * (t as i64) / 2) == eps2)
                .expect("one of the two parities matches");
            blocks.insert(2, JordanBlock::TwoEven { t });
        } else if level % 8 == 0 {
            let eps2 = eps.sign(2).ok_or_else(|| EpsError::Input("missing sign at 2".into()))? as i32;
            let chi2 = chi.part(2).expect("8 | level carries a 2-part");
            let chi2_eval = |n: i64| match chi2 {
                crate::arith::CharPart::Eight => kronecker(2, n),
                crate::arith::CharPart::MinusEight => kronecker(-2, n),
                _ => unreachable!("2-part at 8 | level is (2|.) or (-2|.)"),
            };
            let want_t2 = chi2_eval((level / 8) as i64) * eps2;
            let want_mod4 = if chi2 == crate::arith::CharPart::MinusEight { 1u64 } else { 3 };
            let mut found = None;
            'outer: for t1 in [-1i8, 1] {
                for t2 in [-3i8, -1, 1, 3] {
                    if chi2_eval(t2 as i64) != want_t2 {
                        continue;
                    }
                    let prod = (t1 as i64 * t2 as i64).rem_euclid(4) as u64;
                    if prod != want_mod4 {
                        continue;
                    }
                    found = Some((t1, t2));
                    break 'outer;
                }
            }
            let (t1, t2) = found.ok_or_else(|| {
                EpsError::Internal(format!("no 2-adic block matches level {level}, eps {eps}"))
            })?;
            blocks.insert(2, JordanBlock::TwoPair { t1, t2 });
        }
        let out = DiscForm { level, blocks };
        debug_assert_eq!(out.chi(), chi);
        debug_assert_eq!(&out.epsilon(), eps);
        Ok(out)
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    /// Group order; equals the level throughout the supported family.
    pub fn order(&self) -> u64 {
        self.blocks.values().map(|b| b.group_order()).product()
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&u64, &JordanBlock)> {
        self.blocks.iter()
    }

    /// Signature mod 8, from the oddity and p-excess contributions.
    pub fn signature(&self) -> u8 {
        self.blocks
            .values()
            .map(|b| b.signature_term())
            .sum::<i64>()
            .rem_euclid(8) as u8
    }

    /// The quadratic character attached to the module.
    pub fn chi(&self) -> QuadChar {
        // reconstructed through the fundamental discriminant of the blocks
        let mut disc = 1i64;
        for b in self.blocks.values() {
            disc *= match b {
                JordanBlock::Odd { p, .. } => {
                    if p % 4 == 1 {
                        *p as i64
                    } else {
                        -(*p as i64)
                    }
                }
                JordanBlock::TwoEven { .. } => -4,
                JordanBlock::TwoPair { t1, t2 } => {
                    if (*t1 as i64 * *t2 as i64).rem_euclid(4) == 1 {
                        -8
                    } else {
                        8
                    }
                }
            };
        }
        let chi = QuadChar::from_level(self.level).expect("level validated at build time");
        debug_assert_eq!(chi.discriminant(), disc);
        chi
    }

    /// Local signs recovered from the block data.
    pub fn epsilon(&self) -> SignVector {
        let mut signs = BTreeMap::new();
        for (&p, b) in &self.blocks {
            let s = match b {
                JordanBlock::Odd { p, a } => {
                    kronecker((2 * a) as i64, *p as i64)
                        * kronecker((2 * self.level / p) as i64, *p as i64)
                }
                JordanBlock::TwoEven { t } => {
                    kronecker(-4, (self.level / 4) as i64 * (*t as i64) / 2)
                }
                JordanBlock::TwoPair { t1, t2 } => {
                    let chi2 = if (*t1 as i64 * *t2 as i64).rem_euclid(4) == 1 { -2 } else { 2 };
                    kronecker(chi2, *t2 as i64) * kronecker(chi2, (self.level / 8) as i64)
                }
            };
            debug_assert!(s == 1 || s == -1);
            signs.insert(p, s as i8);
        }
        SignVector { signs }
    }

    /// The module with the negated quadratic form on the same coordinates:
    /// norm(gamma) flips sign mod 1 for every element, which is what pairing
    /// against the dual side requires (a mere isomorphism class match is not
    /// enough when -1 is a square mod p).
    pub fn negated(&self) -> DiscForm {
        let blocks = self
            .blocks
            .iter()
            .map(|(&p, b)| {
                let nb = match b {
                    JordanBlock::Odd { p, a } => JordanBlock::Odd { p: *p, a: p - a },
                    JordanBlock::TwoEven { t } => JordanBlock::TwoEven { t: -t },
                    JordanBlock::TwoPair { t1, t2 } => JordanBlock::TwoPair { t1: -t1, t2: -t2 },
                };
                (p, nb)
            })
            .collect();
        DiscForm { level: self.level, blocks }
    }

    /// All elements in deterministic order: cartesian product of block
    /// coordinates, last coordinate fastest.
    pub fn elements(&self) -> Vec<Element> {
        let moduli: Vec<u64> = self.blocks.values().flat_map(|b| b.coord_moduli()).collect();
        let total: u64 = moduli.iter().product();
        let mut out = Vec::with_capacity(total as usize);
        for mut idx in 0..total {
            let mut coords = vec![0u64; moduli.len()];
            for (j, &m) in moduli.iter().enumerate().rev() {
                coords[j] = idx % m;
                idx /= m;
            }
            out.push(coords);
        }
        out
    }

    /// Norm q(gamma) in [0, 1).
    pub fn norm(&self, gamma: &Element) -> Rat {
        let mut off = 0;
        let mut acc = Rat::zero();
        for b in self.blocks.values() {
            let w = b.coord_moduli().len();
            acc += b.norm(&gamma[off..off + w]);
            off += w;
        }
        frac_mod1(&acc)
    }

    /// Negation of an element.
    pub fn neg_element(&self, gamma: &Element) -> Element {
        let moduli: Vec<u64> = self.blocks.values().flat_map(|b| b.coord_moduli()).collect();
        gamma.iter().zip(moduli).map(|(&x, m)| (m - x) % m).collect()
    }

    /// Sum of two elements.
    pub fn add_elements(&self, a: &Element, b: &Element) -> Element {
        let moduli: Vec<u64> = self.blocks.values().flat_map(|bk| bk.coord_moduli()).collect();
        a.iter().zip(b).zip(moduli).map(|((&x, &y), m)| (x + y) % m).collect()
    }

    /// Bilinear form (a, b) = q(a+b) - q(a) - q(b) in [0, 1).
    pub fn bilinear(&self, a: &Element, b: &Element) -> Rat {
        let s = self.add_elements(a, b);
        frac_mod1(&(self.norm(&s) - self.norm(a) - self.norm(b)))
    }

    /// Residues N q(gamma) mod N over all elements, ascending.
    pub fn norm_residues(&self) -> BTreeSet<u64> {
        let n = rat(self.level as i64);
        self.elements()
            .iter()
            .map(|g| {
                let v = self.norm(g) * &n;
                debug_assert!(v.denom() == &num_bigint::BigInt::from(1));
                u64::try_from(v.numer().clone()).expect("residue in [0, N)")
            })
            .collect()
    }

    /// Element indices grouped by norm residue.
    pub fn elements_by_residue(&self) -> BTreeMap<u64, Vec<usize>> {
        let n = rat(self.level as i64);
        let mut out: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, g) in self.elements().iter().enumerate() {
            let v = self.norm(g) * &n;
            let r = u64::try_from(v.numer().clone()).expect("residue in [0, N)");
            out.entry(r).or_default().push(i);
        }
        out
    }

    /// Exact phases of the two transformation matrices: the diagonal one
    /// (phases q(gamma)) and the full one with uniform magnitude
    /// 1/sqrt(order) and phases -(gamma, beta) - signature/8.
    pub fn weil_data(&self) -> WeilData {
        let elems = self.elements();
        let dim = elems.len();
        let t_phase: Vec<Rat> = elems.iter().map(|g| self.norm(g)).collect();
        let sig8 = ratq(self.signature() as i64, 8);
        let mut s_phase = Vec::with_capacity(dim);
        for g in &elems {
            let mut row = Vec::with_capacity(dim);
            for b in &elems {
                row.push(frac_mod1(&(-self.bilinear(g, b) - &sig8)));
            }
            s_phase.push(row);
        }
        WeilData { dim, order: self.order(), t_phase, s_phase }
    }
}

/// Exact phase data of the transformation matrices attached to a module.
/// Entries of the full matrix are e(s_phase) / sqrt(order); the diagonal
/// matrix has entries e(t_phase).
#[derive(Clone, Debug)]
pub struct WeilData {
    pub dim: usize,
    pub order: u64,
    pub t_phase: Vec<Rat>,
    pub s_phase: Vec<Vec<Rat>>,
}
