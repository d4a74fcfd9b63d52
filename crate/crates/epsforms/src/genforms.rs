//! Generators for spaces of holomorphic and weakly holomorphic forms on
//! Gamma_0(N) with a quadratic (or trivial) character: eta quotients with
//! exact cusp orders, Eisenstein series for the level character and for the
//! trivial character, the j-function, and a memoized pool that assembles
//! spanning sets of holomorphic spaces out of these pieces.
//!
//! Everything here is a *candidate supply*: downstream row reduction plus a
//! pivot audit against the predicted existence pattern decides whether the
//! supply actually spans. Bump [`GENERATOR_STRATEGY_VERSION`] whenever the
//! supply strategy changes, so cached bases are not mixed across strategies.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::{
    divisors, exact_divisors, fundamental_discriminant, l_value, rat, ratq, s_rat, Rat,
};
use crate::linalg::RowSpan;
use crate::qseries::QSeries;
use crate::{EpsError, QuadChar};

/// Version tag of the generator supply strategy; part of every cache key.
pub const GENERATOR_STRATEGY_VERSION: u32 = 1;

/// Euler product prod_{n >= 1} (1 - q^(d n)) on the integer lattice,
/// window [0, trunc), by the pentagonal number theorem.
pub fn euler_product(d: u64, trunc: i64) -> QSeries {
    let mut coeffs = vec![Rat::zero(); trunc.max(0) as usize];
    if trunc > 0 {
        coeffs[0] = Rat::one();
        let mut k: i64 = 1;
        loop {
            let mut hit = false;
            for g in [k * (3 * k - 1) / 2, k * (3 * k + 1) / 2] {
                let idx = g.checked_mul(d as i64).expect("pentagonal index overflow");
                if idx < trunc {
                    hit = true;
                    let sign = if k % 2 == 0 { 1 } else { -1 };
                    coeffs[idx as usize] += rat(sign);
                }
            }
            if !hit {
                break;
            }
            k += 1;
        }
    }
    QSeries::from_coeffs(1, 0, coeffs)
}

/// A formal eta quotient prod_d eta(d tau)^(r_d).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct EtaQuotient {
    exps: BTreeMap<u64, i64>,
}

impl EtaQuotient {
    pub fn new(pairs: impl IntoIterator<Item = (u64, i64)>) -> Self {
        let mut exps = BTreeMap::new();
        for (d, r) in pairs {
            if r != 0 {
                *exps.entry(d).or_insert(0) += r;
            }
        }
        exps.retain(|_, r| *r != 0);
        EtaQuotient { exps }
    }

    pub fn exps(&self) -> impl Iterator<Item = (u64, i64)> + '_ {
        self.exps.iter().map(|(&d, &r)| (d, r))
    }

    /// Twice the weight: sum of all exponents.
    pub fn weight_x2(&self) -> i64 {
        self.exps.values().sum()
    }

    /// 24 times the order at infinity: sum of d * r_d.
    pub fn ord_inf_x24(&self) -> i64 {
        self.exps.iter().map(|(&d, &r)| d as i64 * r).sum()
    }

    /// 24 times the invariant order at the cusp 1/c for c | N:
    /// sum of gcd(c,d)^2 r_d / d.
    pub fn ord_cusp_x24(&self, c: u64, level: u64) -> Rat {
        debug_assert!(level % c == 0);
        self.exps
            .iter()
            .map(|(&d, &r)| {
                let g = num_integer::gcd(c, d);
                ratq((g * g) as i64 * r, d as i64)
            })
            .sum()
    }

    /// Transformation conditions on Gamma_0(N) with a (possibly trivial)
    /// quadratic character: all eta arguments divide N and both 24-sums vanish
    /// mod 24.
    pub fn is_admissible(&self, level: u64) -> bool {
        self.exps.keys().all(|&d| level % d == 0)
            && self.ord_inf_x24() % 24 == 0
            && self
                .exps
                .iter()
                .map(|(&d, &r)| (level / d) as i64 * r)
                .sum::<i64>()
                % 24
                == 0
    }

    /// Fundamental discriminant of the character the quotient transforms
    /// with: the square class of (-1)^weight prod d^(r_d). Requires an even
    /// exponent sum.
    pub fn character_disc(&self) -> i64 {
        let w2 = self.weight_x2();
        debug_assert!(w2 % 2 == 0, "character of a half-integral quotient");
        let mut cls: i64 = if (w2 / 2) % 2 == 0 { 1 } else { -1 };
        for (&d, &r) in &self.exps {
            if r.rem_euclid(2) == 1 {
                cls *= d as i64;
            }
        }
        fundamental_discriminant(cls)
    }

    pub fn is_holomorphic(&self, level: u64) -> bool {
        divisors(level)
            .into_iter()
            .all(|c| self.ord_cusp_x24(c, level) >= Rat::zero())
    }

    /// q-expansion on the integer lattice, window end `trunc`. The order at
    /// infinity must be integral (guaranteed by admissibility).
    pub fn series(&self, trunc: i64) -> QSeries {
        let ord24 = self.ord_inf_x24();
        assert!(ord24 % 24 == 0, "fractional leading exponent");
        let ord = ord24 / 24;
        // sum of |r| d bounds the window slack lost to multiplications and inversions
        let slack: i64 = self.exps.iter().map(|(&d, &r)| d as i64 * r.abs()).sum::<i64>() / 12 + 2;
        let t = trunc - ord + slack;
        let mut acc = QSeries::one(1, t);
        for (&d, &r) in &self.exps {
            let p = euler_product(d, t).pow(r.unsigned_abs() as u32);
            let p = if r < 0 { p.invert().expect("euler product starts at 1") } else { p };
            acc = acc.mul(&p);
        }
        acc.shift(ord).truncated(trunc)
    }

    /// Pretty symbol like `eta(1)^-3 eta(3)^9`.
    pub fn symbol(&self) -> String {
        if self.exps.is_empty() {
            return "1".into();
        }
        self.exps
            .iter()
            .map(|(&d, &r)| {
                if r == 1 {
                    format!("eta({d})")
                } else {
                    format!("eta({d})^{r}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Sum of |r_d|, the search size of the quotient.
    pub fn complexity(&self) -> i64 {
        self.exps.values().map(|r| r.abs()).sum()
    }
}

/// All admissible eta quotients on Gamma_0(level) with given doubled weight,
/// character discriminant, and exponents bounded by `range` in absolute
/// value. `holomorphic` restricts to nonnegative order at every cusp.
/// Results are sorted by (complexity, exponent vector) and capped, so the
/// first entries are the structurally simplest quotients.
pub fn eta_quotients(
    level: u64,
    weight_x2: i64,
    disc: i64,
    range: i64,
    holomorphic: bool,
) -> Vec<EtaQuotient> {
    let divs = divisors(level);
    let mut out = Vec::new();
    let mut stack: Vec<i64> = Vec::new();
    // depth-first over exponent vectors with weight-sum pruning
    fn rec(
        divs: &[u64],
        level: u64,
        weight_x2: i64,
        disc: i64,
        range: i64,
        holomorphic: bool,
        stack: &mut Vec<i64>,
        out: &mut Vec<EtaQuotient>,
        budget: &mut i64,
    ) {
        if *budget <= 0 {
            return;
        }
        let k = stack.len();
        if k == divs.len() {
            *budget -= 1;
            let q = EtaQuotient::new(divs.iter().copied().zip(stack.iter().copied()));
            if q.weight_x2() != weight_x2 || !q.is_admissible(level) {
                return;
            }
            if q.weight_x2() % 2 != 0 || q.character_disc() != disc {
                return;
            }
            if holomorphic && !q.is_holomorphic(level) {
                return;
            }
            out.push(q);
            return;
        }
        let partial: i64 = stack.iter().sum();
        let rem = (divs.len() - k) as i64;
        if (weight_x2 - partial).abs() > range * rem {
            return;
        }
        if k + 1 == divs.len() {
            // last exponent is forced by the weight sum
            let r = weight_x2 - partial;
            if r.abs() <= range {
                stack.push(r);
                rec(divs, level, weight_x2, disc, range, holomorphic, stack, out, budget);
                stack.pop();
            }
            return;
        }
        for r in -range..=range {
            stack.push(r);
            rec(divs, level, weight_x2, disc, range, holomorphic, stack, out, budget);
            stack.pop();
            if *budget <= 0 {
                return;
            }
        }
    }
    let mut budget: i64 = 4_000_000;
    rec(&divs, level, weight_x2, disc, range, holomorphic, &mut stack, &mut out, &mut budget);
    out.sort_by_key(|q| (q.complexity(), q.exps.iter().map(|(&d, &r)| (d, r)).collect::<Vec<_>>()));
    out.truncate(64);
    out
}

/// Weight zero, trivial character, nonconstant quotients, sorted by
/// complexity. Both orientations appear (poles at infinity and poles at
/// other cusps), giving the candidate grid flexibility in every cusp
/// direction.
pub fn pole_units(level: u64, range: i64) -> Vec<EtaQuotient> {
    let mut us: Vec<EtaQuotient> = eta_quotients(level, 0, 1, range, false)
        .into_iter()
        .filter(|q| q.complexity() > 0)
        .collect();
    us.sort_by_key(|q| {
        (q.complexity(), q.exps.iter().map(|(&d, &r)| (d, r)).collect::<Vec<_>>())
    });
    us.truncate(6);
    us
}

/// The canonical cuspidal denominator: (prod_{d | N} eta(d tau))^e with the
/// smallest e >= 1 giving a trivial character. It vanishes at every cusp, so
/// dividing by it reaches forms with poles anywhere.
pub fn cuspidal_denominator(level: u64) -> EtaQuotient {
    let sigma: u64 = divisors(level).iter().sum();
    let mut e = 24 / num_integer::gcd(sigma, 24);
    loop {
        let q = EtaQuotient::new(divisors(level).into_iter().map(|d| (d, e as i64)));
        if q.is_admissible(level) && q.character_disc() == 1 {
            return q;
        }
        e *= 2;
        assert!(e <= 96, "no cuspidal denominator found");
    }
}

/// sigma_{w-1}(n) as a big integer.
fn sigma_pow(n: u64, wm1: u32) -> BigInt {
    divisors(n).into_iter().map(|d| BigInt::from(d).pow(wm1)).sum()
}

/// Level 1 Eisenstein series E_w = 1 - (2w / B_w) sum sigma_{w-1}(n) q^n for
/// even w >= 2 (w = 2 gives the quasimodular one).
pub fn eisenstein_level1(w: u32, trunc: i64) -> QSeries {
    assert!(w >= 2 && w % 2 == 0);
    let b = crate::arith::bernoulli_numbers(w);
    let factor = -rat(2 * w as i64) / &b[w as usize];
    let mut coeffs = vec![Rat::zero(); trunc.max(1) as usize];
    coeffs[0] = Rat::one();
    for n in 1..trunc.max(1) {
        coeffs[n as usize] = &factor * Rat::from_integer(sigma_pow(n as u64, w - 1));
    }
    QSeries::from_coeffs(1, 0, coeffs)
}

/// The modular j-function: q^-1 + 744 + 196884 q + ...
pub fn j_function(trunc: i64) -> QSeries {
    let t = trunc + 3;
    let e4 = eisenstein_level1(4, t);
    let delta = euler_product(1, t).pow(24).shift(1);
    let j = e4.pow(3).mul(&delta.invert().expect("delta is a unit"));
    j.truncated(trunc)
}

/// One member of the Eisenstein family for the level character: the series
/// indexed by an exact divisor m of N, with coefficients
/// 2 sum_{d | n} chi_m(n/d) chi'_m(d) d^(w-1) and constant term L(1-w, chi)
/// at m = 1, zero otherwise.
pub fn eisenstein_part(w: u32, chi: &QuadChar, m: u64, trunc: i64) -> QSeries {
    assert!(w >= 1);
    let mut coeffs = vec![Rat::zero(); trunc.max(1) as usize];
    coeffs[0] = if m == 1 { l_value(w, chi) } else { Rat::zero() };
    for n in 1..trunc.max(1) {
        let mut acc = BigInt::zero();
        for d in divisors(n as u64) {
            let c = chi.eval_part(m, (n as u64 / d) as i64) * chi.eval_complement(m, d as i64);
            if c != 0 {
                acc += BigInt::from(c) * BigInt::from(d).pow(w - 1);
            }
        }
        coeffs[n as usize] = rat(2) * Rat::from_integer(acc);
    }
    QSeries::from_coeffs(1, 0, coeffs)
}

/// The sign-selected Eisenstein series: the combination of the family
/// normalized to constant term 1/s(0) whose coefficients are supported on
/// the residues selected by eps. Errors if the normalizing L-value vanishes.
pub fn eisenstein_eps(
    level: u64,
    w: u32,
    chi: &QuadChar,
    eps: &crate::discform::SignVector,
    trunc: i64,
) -> Result<QSeries, EpsError> {
    let l = l_value(w, chi);
    if l.is_zero() {
        return Err(EpsError::Internal(format!(
            "normalizing L-value vanishes at level {level}, weight argument {w}"
        )));
    }
    let mut acc = QSeries::zero(1, trunc);
    for m in exact_divisors(level) {
        let mut sign = 1i64;
        for (p, s) in eps.primes() {
            if m % p == 0 {
                sign *= s as i64;
            }
        }
        let e = eisenstein_part(w, chi, m, trunc);
        acc = acc.add(&e.scale(&rat(sign)));
    }
    let norm = (s_rat(0, level) * &l).recip();
    Ok(acc.scale(&norm))
}

/// E_2(tau) - d E_2(d tau), holomorphic of weight 2 and trivial character.
fn e2_difference(d: u64, trunc: i64) -> QSeries {
    let mut coeffs = vec![Rat::zero(); trunc.max(1) as usize];
    coeffs[0] = rat(1 - d as i64);
    for n in 1..trunc.max(1) as u64 {
        let mut v = -rat(24) * Rat::from_integer(sigma_pow(n, 1));
        if n % d == 0 {
            v += rat(24 * d as i64) * Rat::from_integer(sigma_pow(n / d, 1));
        }
        coeffs[n as usize] = v;
    }
    QSeries::from_coeffs(1, 0, coeffs)
}

/// Which character a spanning request refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SpanKind {
    Trivial,
    LevelChar,
}

/// Memoized supply of echelonized spanning sets for holomorphic spaces at a
/// fixed level, plus the ladder pieces (units, denominator, j) used to build
/// weakly holomorphic candidates. All series are produced with window end at
/// least `trunc`.
pub struct GeneratorPool {
    level: u64,
    chi: QuadChar,
    trunc: i64,
    eta_range: i64,
    memo: Mutex<BTreeMap<(i64, SpanKind), Arc<Vec<QSeries>>>>,
    units_memo: OnceLock<Vec<EtaQuotient>>,
    denom_memo: OnceLock<EtaQuotient>,
    j_level_memo: OnceLock<QSeries>,
    j_one_memo: OnceLock<QSeries>,
}

/// Process-wide pool cache. Pools are append-only memo tables, so sharing
/// one per (level, window) across spaces avoids rebuilding the spans.
/// Windows are quantized upward and any cached pool with a window at least
/// as large is reused.
pub fn shared_pool(level: u64, trunc: i64) -> Result<Arc<GeneratorPool>, EpsError> {
    static POOLS: Mutex<BTreeMap<(u64, i64), Arc<GeneratorPool>>> = Mutex::new(BTreeMap::new());
    let q = (trunc.max(1) + 63) / 64 * 64;
    let mut map = POOLS.lock().expect("pool cache poisoned");
    if let Some((_, p)) = map.range((level, q)..=(level, i64::MAX)).next() {
        return Ok(p.clone());
    }
    let p = Arc::new(GeneratorPool::new(level, q)?);
    map.insert((level, q), p.clone());
    Ok(p)
}

impl GeneratorPool {
    pub fn new(level: u64, trunc: i64) -> Result<Self, EpsError> {
        let chi = QuadChar::from_level(level)?;
        // range wide enough for the known structural quotients at small levels
        let eta_range = if divisors(level).len() <= 4 { 12 } else { 6 };
        Ok(GeneratorPool {
            level,
            chi,
            trunc,
            eta_range,
            memo: Mutex::new(BTreeMap::new()),
            units_memo: OnceLock::new(),
            denom_memo: OnceLock::new(),
            j_level_memo: OnceLock::new(),
            j_one_memo: OnceLock::new(),
        })
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn chi(&self) -> &QuadChar {
        &self.chi
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    fn parity_ok(&self, weight: i64, kind: SpanKind) -> bool {
        match kind {
            SpanKind::Trivial => weight % 2 == 0,
            SpanKind::LevelChar => {
                let sign = if weight.rem_euclid(2) == 0 { 1 } else { -1 };
                self.chi.parity() == sign
            }
        }
    }

    /// Echelonized spanning candidates for the holomorphic space of the given
    /// weight and character kind. The returned rows have strictly increasing
    /// leading exponents and leading coefficient 1. Spanning is *claimed*,
    /// not proven; callers audit pivots downstream.
    pub fn span(&self, weight: i64, kind: SpanKind) -> Result<Arc<Vec<QSeries>>, EpsError> {
        if let Some(v) = self.memo.lock().expect("span memo poisoned").get(&(weight, kind)) {
            return Ok(v.clone());
        }
        // build without holding the lock: the recursion below re-enters span
        let v = Arc::new(self.build_span(weight, kind)?);
        self.memo
            .lock()
            .expect("span memo poisoned")
            .entry((weight, kind))
            .or_insert_with(|| v.clone());
        Ok(v)
    }

    fn build_span(&self, weight: i64, kind: SpanKind) -> Result<Vec<QSeries>, EpsError> {
        if weight < 0 || !self.parity_ok(weight, kind) {
            return Ok(Vec::new());
        }
        if weight == 0 {
            return Ok(match kind {
                SpanKind::Trivial => vec![QSeries::one(1, self.trunc)],
                SpanKind::LevelChar => Vec::new(),
            });
        }
        if weight == 1 {
            // weight one is out of scope; nothing is supplied
            return Ok(Vec::new());
        }
        let mut cands: Vec<QSeries> = Vec::new();
        match kind {
            SpanKind::Trivial => {
                if weight == 2 {
                    for d in divisors(self.level).into_iter().filter(|&d| d > 1) {
                        cands.push(e2_difference(d, self.trunc));
                    }
                } else {
                    for d in divisors(self.level) {
                        cands.push(eisenstein_level1(weight as u32, self.trunc + 1).rescale(d).truncated(self.trunc));
                    }
                }
            }
            SpanKind::LevelChar => {
                for m in exact_divisors(self.level) {
                    cands.push(eisenstein_part(weight as u32, &self.chi, m, self.trunc));
                }
            }
        }
        let disc = match kind {
            SpanKind::Trivial => 1,
            SpanKind::LevelChar => self.chi.discriminant(),
        };
        for q in eta_quotients(self.level, 2 * weight, disc, self.eta_range, true) {
            cands.push(q.series(self.trunc));
        }
        // products of lower-weight spans
        for a in [2i64, 3] {
            let b = weight - a;
            if b < a {
                continue;
            }
            let combos: &[(SpanKind, SpanKind)] = match kind {
                SpanKind::Trivial => &[(SpanKind::Trivial, SpanKind::Trivial), (SpanKind::LevelChar, SpanKind::LevelChar)],
                SpanKind::LevelChar => &[(SpanKind::Trivial, SpanKind::LevelChar), (SpanKind::LevelChar, SpanKind::Trivial)],
            };
            for &(ka, kb) in combos {
                if !self.parity_ok(a, ka) || !self.parity_ok(b, kb) {
                    continue;
                }
                let left = self.span(a, ka)?;
                let right = self.span(b, kb)?;
                for x in left.iter() {
                    for y in right.iter() {
                        cands.push(x.mul(y));
                    }
                }
            }
        }
        Ok(echelonize_holomorphic(cands, self.trunc))
    }

    /// Weight-0 trivial-character units, both pole orientations.
    pub fn units(&self) -> &[EtaQuotient] {
        self.units_memo.get_or_init(|| pole_units(self.level, self.eta_range.min(12)))
    }

    pub fn denominator(&self) -> &EtaQuotient {
        self.denom_memo.get_or_init(|| cuspidal_denominator(self.level))
    }

    /// j(N tau) with window end `trunc`.
    pub fn j_level(&self) -> &QSeries {
        self.j_level_memo.get_or_init(|| {
            j_function(self.trunc.div_euclid(self.level as i64) + 2)
                .rescale(self.level)
                .truncated(self.trunc)
        })
    }

    /// j(tau) with window end `trunc`.
    pub fn j_one(&self) -> &QSeries {
        self.j_one_memo.get_or_init(|| j_function(self.trunc))
    }
}

/// Row-reduces holomorphic candidates on the window [0, trunc); returns the
/// echelon basis as series with ascending leading exponent, dropping
/// dependent candidates.
fn echelonize_holomorphic(cands: Vec<QSeries>, trunc: i64) -> Vec<QSeries> {
    let cols = trunc.max(0) as usize;
    let mut span = RowSpan::new(cols);
    for c in &cands {
        debug_assert!(c.lower() >= 0, "holomorphic candidate with a pole");
        if c.trunc() < trunc {
            // too short to participate safely
            continue;
        }
        if let Ok(v) = c.window_vec(0, trunc) {
            span.insert(v);
        }
    }
    span.into_rows()
        .into_iter()
        .map(|(_, row)| QSeries::from_coeffs(1, 0, row))
        .collect()
}
