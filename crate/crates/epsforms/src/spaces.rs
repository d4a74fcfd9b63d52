//! Sign-restricted spaces of weakly holomorphic modular forms and their
//! reduced (row-echelon) bases.
//!
//! A space is fixed by a level of the supported shape, an integer weight
//! different from 1, and one sign per prime divisor of the level. Members are
//! weakly holomorphic forms for the level character whose q-expansions are
//! supported on the residues selected by the signs. The reduced basis
//! consists of one form per admissible leading order m, normalized to
//! leading coefficient 1/s(m), with all coefficients at other basis orders
//! equal to zero.
//!
//! The basis is built in three steps. First, candidates of the right weight
//! and character are assembled from holomorphic spanning sets divided by a
//! cuspidal eta quotient, multiplied by eta units and powers of j(N tau);
//! row reduction over the exact rationals turns these into a full-space
//! echelon. Second, the sign condition is imposed as a linear constraint
//! system and the nullspace is re-echelonized. Third, multiplication by
//! j(N tau), which preserves the sign condition because its support lies in
//! N * Z, ladders each residue class down to the requested depth. A pivot
//! audit compares the achieved leading orders against the predicted
//! existence pattern and refuses to return a basis that does not match.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::Zero;

use crate::arith::{s_rat, sturm_bound, Rat};
use crate::discform::{DiscForm, SignVector};
use crate::genforms::{shared_pool, GeneratorPool, SpanKind};
use crate::linalg::{Mat, RowSpan};
use crate::qseries::QSeries;
use crate::{EpsError, QuadChar};

/// Identifies one sign-restricted space and the output truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceSpec {
    pub level: u64,
    pub weight: i64,
    pub eps: SignVector,
    pub trunc: i64,
}

impl SpaceSpec {
    pub fn new(level: u64, weight: i64, eps: SignVector, trunc: i64) -> Result<Self, EpsError> {
        let chi = QuadChar::from_level(level)?;
        eps.check_level(level)?;
        if weight == 1 {
            return Err(EpsError::Weight {
                level,
                weight,
                reason: "weight one is not supported".into(),
            });
        }
        let odd = weight.rem_euclid(2) == 1;
        if odd != (chi.parity() == -1) {
            return Err(EpsError::Weight {
                level,
                weight,
                reason: format!(
                    "weight parity does not match the level character (character parity {})",
                    chi.parity()
                ),
            });
        }
        if trunc < 1 {
            return Err(EpsError::Input("truncation must be at least 1".into()));
        }
        Ok(SpaceSpec { level, weight, eps, trunc })
    }

    /// The pairing partner: weight 2 - k with the componentwise-adjusted signs.
    pub fn dual(&self) -> Result<SpaceSpec, EpsError> {
        SpaceSpec::new(self.level, 2 - self.weight, self.eps.dual(self.level)?, self.trunc)
    }
}

/// Why a given leading order does or does not occur in a space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Existence {
    Exists,
    /// The order falls outside the residue classes selected by the signs.
    NotSelected,
    /// Weight <= 0 only: a dual cusp form with this leading order pairs
    /// against it, so the reduced form is absent.
    BlockedByDualCusp,
    /// Weight <= 0 only: nonnegative orders never occur.
    NoHolomorphicMembers,
    /// Weight >= 2 only: positive orders occur only at cusp-form pivots.
    AboveMaxOrder,
}

impl Existence {
    pub fn exists(&self) -> bool {
        matches!(self, Existence::Exists)
    }
}

/// A reduced basis: one normalized form per achievable leading order, on a
/// common output window.
#[derive(Clone, Debug)]
pub struct ReducedBasis {
    pub spec: SpaceSpec,
    /// Window end of every returned series.
    pub window_end: i64,
    /// Leading order -> form with leading coefficient 1/s(order) and zero
    /// coefficients at every other basis order.
    pub forms: BTreeMap<i64, QSeries>,
    /// Positive leading orders (nonempty only for weight >= 2).
    pub cusp_orders: Vec<i64>,
}

impl ReducedBasis {
    /// Largest leading order occurring, at least 0 (weight >= 2 spaces always
    /// contain the order-0 Eisenstein member).
    pub fn max_order(&self) -> i64 {
        self.cusp_orders.iter().copied().max().unwrap_or(0)
    }

    pub fn form(&self, m: i64) -> Option<&QSeries> {
        self.forms.get(&m)
    }
}

/// One sign-restricted space with its residue bookkeeping.
pub struct EpsSpace {
    spec: SpaceSpec,
    chi: QuadChar,
    residues: BTreeSet<u64>,
}

impl EpsSpace {
    pub fn new(spec: SpaceSpec) -> Result<Self, EpsError> {
        let chi = QuadChar::from_level(spec.level)?;
        let dform = DiscForm::build(spec.level, &spec.eps)?;
        let residues = dform.norm_residues();
        Ok(EpsSpace { spec, chi, residues })
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn chi(&self) -> &QuadChar {
        &self.chi
    }

    pub fn residues(&self) -> &BTreeSet<u64> {
        &self.residues
    }

    /// Whether the exponent lies in a selected residue class.
    pub fn is_selected(&self, n: i64) -> bool {
        self.residues.contains(&(n.rem_euclid(self.spec.level as i64) as u64))
    }

    pub fn dual(&self) -> Result<EpsSpace, EpsError> {
        EpsSpace::new(self.spec.dual()?)
    }

    /// Positive leading orders of the dual space's holomorphic members.
    /// These block orders on the weight <= 0 side.
    pub fn dual_cusp_orders(&self, pool: &GeneratorPool) -> Result<Vec<i64>, EpsError> {
        let dual = self.dual()?;
        let rows = dual.holomorphic_rows(pool)?;
        Ok(rows.keys().copied().filter(|&m| m > 0).collect())
    }

    /// Existence of a reduced form with leading order m, per the predicted
    /// pattern (audited elsewhere against the actual construction).
    pub fn existence(&self, m: i64, pool: &GeneratorPool) -> Result<Existence, EpsError> {
        if !self.is_selected(m) {
            return Ok(Existence::NotSelected);
        }
        if self.spec.weight <= 0 {
            if m >= 0 {
                return Ok(Existence::NoHolomorphicMembers);
            }
            if self.dual_cusp_orders(pool)?.contains(&(-m)) {
                return Ok(Existence::BlockedByDualCusp);
            }
            Ok(Existence::Exists)
        } else {
            if m <= 0 {
                return Ok(Existence::Exists);
            }
            let rows = self.holomorphic_rows(pool)?;
            if rows.contains_key(&m) {
                Ok(Existence::Exists)
            } else {
                Ok(Existence::AboveMaxOrder)
            }
        }
    }

    /// Builds the reduced basis for all leading orders >= -depth, fetching a
    /// suitably sized generator pool from the shared cache.
    pub fn reduced_basis(&self, depth: i64) -> Result<ReducedBasis, EpsError> {
        let pool = self.sized_pool(depth)?;
        self.reduced_basis_with_pool(depth, &pool)
    }

    /// A generator pool large enough for `reduced_basis_with_pool(depth, ..)`.
    pub fn sized_pool(&self, depth: i64) -> Result<Arc<GeneratorPool>, EpsError> {
        shared_pool(self.spec.level, self.pool_need(depth))
    }

    fn pool_need(&self, depth: i64) -> i64 {
        let n = self.spec.level as i64;
        let k = self.spec.weight;
        let work = self.work_window(depth.max(0) + n);
        // grid monomials reach pole depth about shallow-depth + positive
        // range; the extra level multiples leave room for window retries
        work + self.shallow_depth_bound()
            + sturm_bound(self.spec.level, k.abs() + 2)
            + 5 * n
            + 16
    }

    /// Window end used during construction: covers the requested output
    /// window plus the precision eroded by ladder multiplications, plus a
    /// margin long enough that a candidate combination violating the sign
    /// condition only beyond the window cannot realistically survive the
    /// constraint system (such combinations are weakly holomorphic forms of
    /// level a small multiple of N, so their wrong-residue parts die within
    /// a valence-bound number of coefficients).
    fn work_window(&self, depth: i64) -> i64 {
        let n = self.spec.level as i64;
        let k = self.spec.weight;
        let base = self
            .spec
            .trunc
            .max(sturm_bound(self.spec.level, k.abs().max(2 - k).max(2)) + 4)
            .max(2);
        let ghost_margin = if k <= 0 { 3 * n } else { n };
        base + depth.max(0) + n + 4 + ghost_margin
    }

    /// Upper bound for the shallow construction depth before the ladder
    /// takes over: one full residue period below the largest possible dual
    /// cusp order.
    fn shallow_depth_bound(&self) -> i64 {
        let n = self.spec.level as i64;
        let k = self.spec.weight;
        n + sturm_bound(self.spec.level, (2 - k).max(k).max(2)) + 2
    }

    /// Echelonized sign-restricted rows of the holomorphic members (weight
    /// >= 2): leading order -> series with leading coefficient 1, fully
    /// reduced. Used for cusp-order discovery and dual blocking.
    fn holomorphic_rows(&self, pool: &GeneratorPool) -> Result<BTreeMap<i64, QSeries>, EpsError> {
        let k = self.spec.weight;
        debug_assert!(k >= 2, "holomorphic rows only exist for weight >= 2");
        let w_end = self.work_window(0).min(pool.trunc());
        let cands = pool.span(k, SpanKind::LevelChar)?;
        self.sign_restrict(cands.as_slice(), 0, w_end)
    }

    /// Imposes the sign condition on the span of the candidates over the
    /// window [lo, hi) and returns the echelonized result keyed by leading
    /// order, each row normalized to leading coefficient 1.
    fn sign_restrict(
        &self,
        cands: &[QSeries],
        lo: i64,
        hi: i64,
    ) -> Result<BTreeMap<i64, QSeries>, EpsError> {
        let cols = (hi - lo) as usize;
        let mut full = RowSpan::new(cols);
        for c in cands {
            if c.lower() < lo || c.trunc() < hi {
                continue;
            }
            full.insert(c.window_vec(lo, hi)?);
        }
        let rows = full.into_rows();
        if rows.is_empty() {
            return Ok(BTreeMap::new());
        }
        // constraint matrix: coefficients at unselected exponents must vanish
        let forbidden: Vec<usize> = (0..cols)
            .filter(|&c| !self.is_selected(lo + c as i64))
            .collect();
        let mut cmat = Mat::zero(forbidden.len(), rows.len());
        for (ci, &f) in forbidden.iter().enumerate() {
            for (ri, (_, row)) in rows.iter().enumerate() {
                *cmat.at_mut(ci, ri) = row[f].clone();
            }
        }
        let combos = cmat.nullspace();
        let mut eps_span = RowSpan::new(cols);
        for combo in combos {
            let mut v = vec![Rat::zero(); cols];
            for (ri, c) in combo.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                for (j, x) in rows[ri].1.iter().enumerate() {
                    if !x.is_zero() {
                        v[j] += c * x;
                    }
                }
            }
            eps_span.insert(v);
        }
        let mut out = BTreeMap::new();
        for (p, row) in eps_span.into_rows() {
            let m = lo + p as i64;
            let series = QSeries::from_coeffs(1, lo, row);
            debug_assert_eq!(series.leading().map(|(e, _)| e), Some(m));
            out.insert(m, series);
        }
        Ok(out)
    }

    /// Builds the reduced basis for all leading orders >= -depth using the
    /// supplied pool (which must satisfy `sized_pool`'s window).
    pub fn reduced_basis_with_pool(
        &self,
        depth: i64,
        pool: &GeneratorPool,
    ) -> Result<ReducedBasis, EpsError> {
        let n = self.spec.level as i64;
        let k = self.spec.weight;
        let depth = depth.max(0);
        if pool.trunc() < self.pool_need(depth) {
            return Err(EpsError::Internal(format!(
                "generator pool window {} is too short (need {})",
                pool.trunc(),
                self.pool_need(depth)
            )));
        }

        // blocking data: dual cusp orders for weight <= 0, own cusp orders
        // for weight >= 2
        let (blockers, own_shallow) = if k <= 0 {
            (self.dual_cusp_orders(pool)?, BTreeMap::new())
        } else {
            (Vec::new(), self.holomorphic_rows(pool)?)
        };
        let max_block = blockers.iter().copied().max().unwrap_or(0);
        let own_max = own_shallow.keys().copied().max().unwrap_or(0).max(0);

        // shallow depth: one residue period past every blocked order
        let d0 = depth.min(n + if k <= 0 { max_block } else { own_max } + 1);
        let base_end = self.work_window(depth - d0 + n);
        let lo = -(d0 + 2);

        let predicted = |m: i64| -> bool {
            if !self.is_selected(m) {
                return false;
            }
            if k <= 0 {
                m < 0 && !blockers.contains(&-m)
            } else {
                m <= 0 || own_shallow.contains_key(&m)
            }
        };

        // the leading orders phase one must produce
        let mut required: BTreeSet<i64> = (-d0..=0).filter(|&m| predicted(m)).collect();
        for &m in own_shallow.keys() {
            if m > 0 {
                required.insert(m);
            }
        }

        // phase one: sign-restricted rows down to -d0, audited against the
        // predicted pivot pattern. A pivot the pattern forbids means some
        // candidate combination satisfies the sign condition on the whole
        // window while violating it further out; such combinations cannot
        // survive arbitrarily long windows, so retry with a longer one.
        let mut rows = BTreeMap::new();
        let mut audit_err: Option<EpsError> = None;
        let mut last_end = 0;
        for attempt in 0..3 {
            let w_end = (base_end + attempt * 2 * n).min(pool.trunc());
            if w_end == last_end {
                break;
            }
            last_end = w_end;
            rows = if d0 > 0 || k >= 2 {
                self.shallow_rows(pool, d0, lo, w_end, &required)?
            } else {
                BTreeMap::new()
            };
            let mut extra = Vec::new();
            for &m in rows.keys() {
                if !predicted(m) && (m <= 0 || k >= 2) {
                    extra.push(m);
                }
                if m > 0 && k <= 0 {
                    extra.push(m);
                }
            }
            if extra.is_empty() {
                audit_err = None;
                break;
            }
            audit_err = Some(EpsError::SpanningIncomplete {
                level: self.spec.level,
                weight: k,
                missing: Vec::new(),
                extra,
            });
        }
        if let Some(e) = audit_err {
            return Err(e);
        }

        // phase two: ladder each residue class down to -depth, shallowest
        // next pivot first so every new row is fully reduced on arrival
        if depth > d0 {
            let j_n = pool.j_level().clone();
            let mut agenda: Vec<i64> = rows
                .keys()
                .copied()
                .filter(|&m| m < 0 && m - n >= -depth)
                .map(|m| m - n)
                .filter(|t| !rows.contains_key(t))
                .collect();
            agenda.sort_unstable();
            while let Some(target) = agenda.pop() {
                if rows.contains_key(&target) {
                    continue;
                }
                let seed = rows
                    .get(&(target + n))
                    .ok_or_else(|| EpsError::Internal(format!("ladder seed {} missing", target + n)))?;
                let mut next = seed.mul(&j_n);
                if next.leading().map(|(e, _)| e) != Some(target) {
                    return Err(EpsError::Internal(format!(
                        "ladder step to {target} lost its leading term"
                    )));
                }
                next = reduce_against(next, &rows);
                let lead = next
                    .leading()
                    .map(|(_, c)| c.clone())
                    .ok_or_else(|| EpsError::Internal("ladder row vanished".into()))?;
                next = next.scale(&lead.recip());
                rows.insert(target, next);
                if target - n >= -depth {
                    agenda.push(target - n);
                    agenda.sort_unstable();
                }
            }
        }

        // back-clean: deep rows appear as nonzero coefficients of shallower
        // rows at their pivot exponents only if those exponents lie in the
        // shallow rows' windows; pivots added later are deeper than every
        // earlier row's leading order, hence already zero there. Verify.
        let pivots: Vec<i64> = rows.keys().copied().collect();
        for (&m, row) in &rows {
            for &p in &pivots {
                if p != m {
                    if let Some(c) = row.coeff(p) {
                        if !c.is_zero() {
                            return Err(EpsError::Internal(format!(
                                "row {m} is not reduced at basis order {p}"
                            )));
                        }
                    }
                }
            }
        }

        // final audit over the full requested range
        let mut missing = Vec::new();
        for m in -depth..=0 {
            if predicted(m) && !rows.contains_key(&m) {
                missing.push(m);
            }
        }
        if !missing.is_empty() {
            return Err(EpsError::SpanningIncomplete {
                level: self.spec.level,
                weight: k,
                missing,
                extra: Vec::new(),
            });
        }

        let out_end = self.spec.trunc.max(2);
        let mut forms = BTreeMap::new();
        let mut cusp_orders = Vec::new();
        for (m, row) in rows {
            if m < -depth {
                continue;
            }
            if m > 0 {
                cusp_orders.push(m);
            }
            if row.trunc() < out_end {
                return Err(EpsError::Window(format!(
                    "form at order {m} retains window {} < requested {out_end}",
                    row.trunc()
                )));
            }
            let scaled = row.scale(&s_rat(m, self.spec.level).recip());
            forms.insert(m, scaled.truncated(out_end));
        }
        Ok(ReducedBasis { spec: self.spec.clone(), window_end: out_end, forms, cusp_orders })
    }

    /// Candidate series of the right weight and character reaching every
    /// integer leading order in [-d0, positive range]: holomorphic spanning
    /// sets divided by the cuspidal denominator, times eta units and powers
    /// of j(N tau). Enumeration goes shallow to deep and stops as soon as
    /// the full-space row span covers the target range.
    /// Builds the sign-restricted echelon rows with leading orders in
    /// [-d0, ..]. Candidates are streamed in order of pole depth and the
    /// sign condition is re-imposed as they arrive; enumeration stops once
    /// every required leading order is present. Stopping any earlier on a
    /// full-space coverage criterion is not sound: the restricted span can
    /// need combinations of deeper candidates even when every leading order
    /// is already reachable in the unrestricted span.
    fn shallow_rows(
        &self,
        pool: &GeneratorPool,
        d0: i64,
        lo: i64,
        hi: i64,
        required: &BTreeSet<i64>,
    ) -> Result<BTreeMap<i64, QSeries>, EpsError> {
        let n = self.spec.level as i64;
        let k = self.spec.weight;
        let v = pool.denominator().clone();
        debug_assert!(v.weight_x2() % 2 == 0 && v.ord_inf_x24() % 24 == 0);
        let wv = v.weight_x2() / 2;
        let v_inf = v.ord_inf_x24() / 24;
        let pos_target = if k >= 2 { sturm_bound(self.spec.level, k) + 2 } else { 2 };

        let mut cands: Vec<QSeries> = Vec::new();
        let mut cover = RowSpan::new((hi - lo) as usize);
        let push = |c: QSeries, cands: &mut Vec<QSeries>, cover: &mut RowSpan| {
            if c.lower() < lo || c.trunc() < hi {
                return;
            }
            if let Ok(vv) = c.window_vec(lo, hi) {
                if cover.insert(vv).is_some() {
                    cands.push(c);
                }
            }
        };
        let covered = |cover: &RowSpan| -> bool {
            let have: BTreeSet<i64> =
                cover.rows().iter().map(|(p, _)| lo + *p as i64).collect();
            (-d0..=pos_target).all(|m| have.contains(&m))
        };
        let satisfied = |rows: &BTreeMap<i64, QSeries>| -> bool {
            required.iter().all(|m| rows.contains_key(m))
        };

        if k >= 2 {
            for g in pool.span(k, SpanKind::LevelChar)?.iter() {
                push(g.clone(), &mut cands, &mut cover);
            }
        }
        if covered(&cover) {
            let rows = self.sign_restrict(&cands, lo, hi)?;
            if satisfied(&rows) {
                return Ok(rows);
            }
        }

        // monomial grid: V^-l * u^a * j(N tau)^b, ordered by pole depth
        let l0 = if k >= 2 { 1 } else { (2 - k + wv - 1).div_euclid(wv).max(1) };
        let units = pool.units().to_vec();
        let b_max = (d0 + pos_target) / n + 1;
        let a_max = 4i64;
        // enumerate (l, b, unit index, a) sorted by the monomial's pole depth
        let mut mono_keys: Vec<(i64, i64, i64, usize, i64)> = Vec::new();
        for l in l0..=l0 + 1 {
            for b in 0..=b_max {
                mono_keys.push((l * v_inf + b * n, l, b, usize::MAX, 0));
                for (ui, u) in units.iter().enumerate() {
                    for a in 1..=a_max {
                        let u_inf = u.ord_inf_x24() / 24;
                        let depth = l * v_inf + b * n + (a * u_inf).abs();
                        mono_keys.push((depth, l, b, ui, a));
                    }
                }
            }
        }
        mono_keys.sort_unstable();

        let mut j_pows: BTreeMap<i64, QSeries> = BTreeMap::new();
        j_pows.insert(0, QSeries::one(1, pool.trunc()));
        let j_n = pool.j_level();
        for (depth_key, l, b, ui, a) in mono_keys {
            // assemble the eta part V^-l u^a as one quotient
            let mut exps: BTreeMap<u64, i64> = BTreeMap::new();
            for (d, r) in v.exps() {
                *exps.entry(d).or_insert(0) -= l * r;
            }
            if ui != usize::MAX {
                for (d, r) in units[ui].exps() {
                    *exps.entry(d).or_insert(0) += a * r;
                }
            }
            let eta_part = crate::genforms::EtaQuotient::new(exps);
            let max_have = *j_pows.keys().last().expect("power 0 seeded");
            for bb in max_have + 1..=b {
                let prev = j_pows[&(bb - 1)].clone();
                j_pows.insert(bb, prev.mul(j_n));
            }
            // the spanning factors are holomorphic, so the products keep a
            // window end of at least hi as long as the monomial reaches
            // hi + its own pole depth
            let reach = (hi + depth_key + 2).min(pool.trunc());
            let mono = eta_part.series(reach).mul(&j_pows[&b].truncated(reach));
            let span = pool.span(k + l * wv, SpanKind::LevelChar)?;
            let before = cands.len();
            for g in span.iter() {
                push(g.truncated(reach).mul(&mono), &mut cands, &mut cover);
            }
            if cands.len() == before || !covered(&cover) {
                continue;
            }
            let rows = self.sign_restrict(&cands, lo, hi)?;
            if satisfied(&rows) {
                return Ok(rows);
            }
        }
        // enumeration exhausted: report what stayed out of reach
        let missing: Vec<i64> = if covered(&cover) {
            let rows = self.sign_restrict(&cands, lo, hi)?;
            if satisfied(&rows) {
                return Ok(rows);
            }
            required.iter().filter(|m| !rows.contains_key(m)).copied().collect()
        } else {
            let have: BTreeSet<i64> =
                cover.rows().iter().map(|(p, _)| lo + *p as i64).collect();
            (-d0..=pos_target).filter(|m| !have.contains(m)).collect()
        };
        Err(EpsError::SpanningIncomplete {
            level: self.spec.level,
            weight: k,
            missing,
            extra: Vec::new(),
        })
    }
}

/// Subtracts multiples of the given leading-coefficient-1 rows to clear the
/// series' coefficients at their leading orders.
fn reduce_against(mut f: QSeries, rows: &BTreeMap<i64, QSeries>) -> QSeries {
    for (&p, r) in rows {
        match f.coeff(p) {
            Some(c) if !c.is_zero() => {
                f = f.sub(&r.scale(&c));
            }
            _ => {}
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, ratq};

    fn space(level: u64, weight: i64, signs: &[(u64, i8)], trunc: i64) -> EpsSpace {
        let eps = SignVector::from_pairs(signs).unwrap();
        EpsSpace::new(SpaceSpec::new(level, weight, eps, trunc).unwrap()).unwrap()
    }

    #[test]
    fn spec_validation() {
        let eps = SignVector::from_pairs(&[(3, 1), (5, 1)]).unwrap();
        assert!(SpaceSpec::new(15, 1, eps.clone(), 10).is_err());
        // even weight has the wrong parity for the odd character mod 15
        assert!(SpaceSpec::new(15, 2, eps.clone(), 10).is_err());
        assert!(SpaceSpec::new(15, 3, eps.clone(), 10).is_ok());
        assert!(SpaceSpec::new(15, -1, eps, 10).is_ok());
        // wrong sign keys
        let bad = SignVector::from_pairs(&[(3, 1), (7, 1)]).unwrap();
        assert!(SpaceSpec::new(15, 3, bad, 10).is_err());
    }

    #[test]
    fn dual_spec_flips_weight_and_signs() {
        let eps = SignVector::from_pairs(&[(3, -1), (5, -1)]).unwrap();
        let spec = SpaceSpec::new(15, -1, eps, 10).unwrap();
        let dual = spec.dual().unwrap();
        assert_eq!(dual.weight, 3);
        // chi_3(-1) = -1 flips, chi_5(-1) = 1 keeps
        assert_eq!(dual.eps.sign(3), Some(1));
        assert_eq!(dual.eps.sign(5), Some(-1));
    }

    #[test]
    fn level3_weight3_holomorphic_basis() {
        // one Eisenstein member per sign vector, no cusp forms
        for (signs, residues) in [
            (vec![(3i64, 1i8)], vec![0i64, 1]),
            (vec![(3, -1)], vec![0, 2]),
        ] {
            let sp = space(3, 3, &signs.iter().map(|&(p, s)| (p as u64, s)).collect::<Vec<_>>(), 9);
            let basis = sp.reduced_basis(0).unwrap();
            assert_eq!(basis.forms.len(), 1, "signs {signs:?}");
            assert!(basis.cusp_orders.is_empty());
            let f0 = basis.form(0).unwrap();
            // gcd(0, 3) = 3 has one prime factor, so s(0) = 2
            assert_eq!(f0.coeff(0), Some(ratq(1, 2)));
            for i in 1..9 {
                let selected = residues.contains(&(i % 3));
                assert_eq!(f0.coeff(i).unwrap().is_zero(), !selected, "order {i}");
            }
        }
    }

    #[test]
    fn level15_weight3_cusp_orders() {
        // the two eta cusp forms sit in the expected sign spaces
        let sp4 = space(15, 3, &[(3, 1), (5, 1)], 12);
        let b4 = sp4.reduced_basis(0).unwrap();
        assert_eq!(b4.cusp_orders, vec![1]);
        let g1 = b4.form(1).unwrap();
        assert_eq!(g1.coeff(1), Some(rat(1)));
        assert_eq!(g1.coeff(4), Some(rat(-3)));
        assert_eq!(g1.coeff(6), Some(rat(-3)));
        assert_eq!(g1.coeff(9), Some(rat(9)));
        assert_eq!(g1.coeff(10), Some(rat(5)));

        let sp1 = space(15, 3, &[(3, -1), (5, -1)], 13);
        let b1 = sp1.reduced_basis(0).unwrap();
        assert_eq!(b1.cusp_orders, vec![2]);
        let g2 = b1.form(2).unwrap();
        assert_eq!(g2.coeff(2), Some(rat(1)));
        assert_eq!(g2.coeff(3), Some(rat(-3)));
        assert_eq!(g2.coeff(5), Some(rat(5)));
        assert_eq!(g2.coeff(8), Some(rat(-7)));
        assert_eq!(g2.coeff(12), Some(rat(9)));

        // the order-0 member is reduced against the cusp pivot at 2; adding
        // the right multiple back recovers the sign-selected Eisenstein series
        let e1 = b1.form(0).unwrap();
        assert_eq!(e1.coeff(0), Some(ratq(1, 4)));
        assert_eq!(e1.coeff(2), Some(rat(0)));
        let eis = e1.sub(&g2.scale(&ratq(5, 8)));
        let want = [
            (1, rat(0)),
            (2, ratq(-5, 8)),
            (3, ratq(-5, 8)),
            (4, rat(0)),
            (5, ratq(-13, 8)),
            (6, rat(0)),
            (7, rat(0)),
            (8, ratq(-85, 8)),
            (9, rat(0)),
            (10, rat(0)),
            (11, rat(0)),
            (12, ratq(-105, 8)),
        ];
        for (i, v) in want {
            assert_eq!(eis.coeff(i), Some(v), "eisenstein index {i}");
        }
    }

    #[test]
    fn level15_weight3_dual_basis_tables() {
        // reduced holomorphic+weak basis for signs (3,5) -> (+1,-1), depth 2
        let sp = space(15, 3, &[(3, 1), (5, -1)], 14);
        let basis = sp.reduced_basis(2).unwrap();
        // orders: -2 and 0 exist; -1 is not selected; 1..=? no cusp forms here
        assert!(basis.form(-1).is_none());
        let f0 = basis.form(0).unwrap();
        assert_eq!(f0.coeff(0), Some(ratq(1, 4)));
        assert_eq!(f0.coeff(3), Some(ratq(1, 2)));
        assert_eq!(f0.coeff(7), Some(rat(6)));
        assert_eq!(f0.coeff(10), Some(ratq(15, 2)));
        assert_eq!(f0.coeff(12), Some(ratq(21, 2)));
        assert_eq!(f0.coeff(13), Some(rat(21)));
        let fm2 = basis.form(-2).unwrap();
        assert_eq!(fm2.coeff(-2), Some(rat(1)));
        assert_eq!(fm2.coeff(3), Some(rat(-3)));
        assert_eq!(fm2.coeff(7), Some(rat(-12)));
        assert_eq!(fm2.coeff(10), Some(rat(-45)));
        assert_eq!(fm2.coeff(12), Some(rat(36)));
        assert_eq!(fm2.coeff(13), Some(rat(146)));
    }

    #[test]
    fn level15_weightm1_basis_tables() {
        // signs (3,5) -> (-1,-1): orders exist iff selected; f_-3 and f_-7
        let sp = space(15, -1, &[(3, -1), (5, -1)], 13);
        let basis = sp.reduced_basis(8).unwrap();
        assert!(basis.cusp_orders.is_empty());
        // selected residues mod 15 are 0,2,3,5,8,12, so the only orders in
        // [-8, -1] lying in a selected class are -7 and -3
        assert_eq!(
            basis.forms.keys().copied().collect::<Vec<_>>(),
            vec![-7, -3]
        );
        let f3 = basis.form(-3).unwrap();
        assert_eq!(f3.coeff(-3), Some(ratq(1, 2)));
        assert_eq!(f3.coeff(0), Some(ratq(-1, 2)));
        assert_eq!(f3.coeff(2), Some(rat(3)));
        assert_eq!(f3.coeff(3), Some(ratq(-1, 2)));
        assert_eq!(f3.coeff(5), Some(rat(-3)));
        assert_eq!(f3.coeff(8), Some(rat(-3)));
        assert_eq!(f3.coeff(12), Some(rat(6)));
        let f7 = basis.form(-7).unwrap();
        assert_eq!(f7.coeff(-7), Some(rat(1)));
        assert_eq!(f7.coeff(0), Some(rat(-6)));
        assert_eq!(f7.coeff(2), Some(rat(12)));
        assert_eq!(f7.coeff(3), Some(rat(33)));
        assert_eq!(f7.coeff(5), Some(rat(39)));
        assert_eq!(f7.coeff(8), Some(rat(-140)));
        assert_eq!(f7.coeff(12), Some(rat(-144)));
    }

    #[test]
    fn level15_weightm1_blocked_order() {
        // signs (3,5) -> (-1,+1): residues 0,5,6,9,11,14; order -1 is blocked
        // by the dual cusp form of order 1
        let sp = space(15, -1, &[(3, -1), (5, 1)], 15);
        let pool = sp.sized_pool(9).unwrap();
        assert_eq!(sp.dual_cusp_orders(&pool).unwrap(), vec![1]);
        assert_eq!(
            sp.existence(-1, &pool).unwrap(),
            Existence::BlockedByDualCusp
        );
        assert_eq!(sp.existence(-4, &pool).unwrap(), Existence::Exists);
        assert_eq!(sp.existence(-2, &pool).unwrap(), Existence::NotSelected);
        assert_eq!(
            sp.existence(0, &pool).unwrap(),
            Existence::NoHolomorphicMembers
        );

        let basis = sp.reduced_basis_with_pool(9, &pool).unwrap();
        assert_eq!(
            basis.forms.keys().copied().collect::<Vec<_>>(),
            vec![-9, -6, -4]
        );
        let f4 = basis.form(-4).unwrap();
        assert_eq!(f4.coeff(-4), Some(rat(1)));
        assert_eq!(f4.coeff(-1), Some(rat(3)));
        assert_eq!(f4.coeff(0), Some(rat(3)));
        assert_eq!(f4.coeff(5), Some(rat(-7)));
        assert_eq!(f4.coeff(6), Some(rat(3)));
        assert_eq!(f4.coeff(9), Some(rat(-21)));
        assert_eq!(f4.coeff(11), Some(rat(-11)));
        assert_eq!(f4.coeff(14), Some(rat(44)));
        let f6 = basis.form(-6).unwrap();
        assert_eq!(f6.coeff(-6), Some(ratq(1, 2)));
        assert_eq!(f6.coeff(-1), Some(rat(3)));
        assert_eq!(f6.coeff(0), Some(ratq(7, 2)));
        assert_eq!(f6.coeff(5), Some(rat(21)));
        assert_eq!(f6.coeff(6), Some(ratq(-49, 2)));
        assert_eq!(f6.coeff(9), Some(rat(19)));
        assert_eq!(f6.coeff(11), Some(rat(-147)));
        assert_eq!(f6.coeff(14), Some(rat(99)));
        let f9 = basis.form(-9).unwrap();
        assert_eq!(f9.coeff(-9), Some(ratq(1, 2)));
        assert_eq!(f9.coeff(-1), Some(rat(-9)));
        assert_eq!(f9.coeff(0), Some(rat(4)));
        assert_eq!(f9.coeff(5), Some(rat(99)));
        assert_eq!(f9.coeff(6), Some(rat(48)));
        assert_eq!(f9.coeff(9), Some(rat(-275)));
        assert_eq!(f9.coeff(11), Some(rat(360)));
        assert_eq!(f9.coeff(14), Some(rat(-2160)));
    }

    #[test]
    fn level3_weightm1_basis_tables() {
        // residues {0,2} carry the order -1 form
        let sp = space(3, -1, &[(3, -1)], 9);
        let basis = sp.reduced_basis(1).unwrap();
        let f1 = basis.form(-1).unwrap();
        assert_eq!(f1.coeff(-1), Some(rat(1)));
        assert_eq!(f1.coeff(0), Some(rat(9)));
        assert_eq!(f1.coeff(2), Some(rat(-82)));
        assert_eq!(f1.coeff(3), Some(rat(189)));
        assert_eq!(f1.coeff(5), Some(rat(-892)));
        assert_eq!(f1.coeff(6), Some(rat(1782)));
        assert_eq!(f1.coeff(8), Some(rat(-6234)));

        // residues {0,1} carry the order -2 and -3 forms
        let sp2 = space(3, -1, &[(3, 1)], 8);
        let basis2 = sp2.reduced_basis(3).unwrap();
        let f2 = basis2.form(-2).unwrap();
        assert_eq!(f2.coeff(-2), Some(rat(1)));
        assert_eq!(f2.coeff(0), Some(rat(-27)));
        assert_eq!(f2.coeff(1), Some(rat(328)));
        assert_eq!(f2.coeff(3), Some(rat(-7128)));
        assert_eq!(f2.coeff(4), Some(rat(24854)));
        assert_eq!(f2.coeff(6), Some(rat(-221859)));
        assert_eq!(f2.coeff(7), Some(rat(591632)));
        let f3 = basis2.form(-3).unwrap();
        assert_eq!(f3.coeff(-3), Some(ratq(1, 2)));
        assert_eq!(f3.coeff(0), Some(rat(-36)));
        assert_eq!(f3.coeff(1), Some(rat(-1701)));
        assert_eq!(f3.coeff(3), Some(rat(-50058)));
        assert_eq!(f3.coeff(4), Some(rat(-499608)));
        assert_eq!(f3.coeff(6), Some(rat(-4023392)));
        assert_eq!(f3.coeff(7), Some(rat(-27788508)));

        // the other sign's order -3 form
        let f3b = basis.form(-3);
        assert!(f3b.is_none(), "depth 1 basis has no deeper forms");
        let basis3 = sp.reduced_basis(3).unwrap();
        let g3 = basis3.form(-3).unwrap();
        assert_eq!(g3.coeff(-3), Some(ratq(1, 2)));
        assert_eq!(g3.coeff(0), Some(rat(45)));
        assert_eq!(g3.coeff(2), Some(rat(16038)));
        assert_eq!(g3.coeff(3), Some(rat(50058)));
        assert_eq!(g3.coeff(5), Some(rat(2125035)));
        assert_eq!(g3.coeff(6), Some(rat(4023310)));
        assert_eq!(g3.coeff(8), Some(rat(89099838)));
    }

    #[test]
    fn ladder_extends_depth() {
        // deepening our level 3 basis via the j(3 tau) ladder keeps the
        // reduced property and the leading normalization
        let sp = space(3, -1, &[(3, 1)], 6);
        let basis = sp.reduced_basis(10).unwrap();
        let orders: Vec<i64> = basis.forms.keys().copied().collect();
        // selected residues mod 3 for this sign: 0, 1
        assert_eq!(orders, vec![-9, -8, -6, -5, -3, -2]);
        for (&m, f) in &basis.forms {
            assert_eq!(f.leading().map(|(e, _)| e), Some(m));
            assert_eq!(f.leading().unwrap().1.clone(), s_rat(m, 3).recip());
            for (&p, _) in &basis.forms {
                if p != m && p < f.trunc() {
                    assert!(f.coeff(p).unwrap().is_zero(), "form {m} at order {p}");
                }
            }
        }
    }
}
