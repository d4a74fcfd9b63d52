//! Principal parts, the obstruction pairing, lifts, and the coefficient
//! duality between the weight k and weight 2 - k families.
//!
//! A weight k <= 0 form is determined by its principal part. Whether a
//! prescribed principal part occurs at all is decided by a finite pairing
//! test against the dual cusp forms; when it passes, the constant term is
//! forced by the dual Eisenstein series and the full form is assembled from
//! the reduced basis. Coefficients of the two bases satisfy an antisymmetric
//! grid identity, checked here exactly along with its companion vanishing
//! and cross-existence statements.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::arith::{rat_fmt, s_rat, Rat};
use crate::discform::SignVector;
use crate::genforms::eisenstein_eps;
use crate::qseries::QSeries;
use crate::spaces::{EpsSpace, ReducedBasis, SpaceSpec};
use crate::vvmf::VVForm;
use crate::EpsError;

/// A finite tail of negative-exponent terms prescribing the poles of a form.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalPart {
    terms: BTreeMap<i64, Rat>,
}

impl PrincipalPart {
    /// Keeps the nonzero terms; every order must be negative.
    pub fn new(terms: BTreeMap<i64, Rat>) -> Result<Self, EpsError> {
        for (&n, _) in &terms {
            if n >= 0 {
                return Err(EpsError::Input(format!(
                    "principal part carries non-negative exponent {n}"
                )));
            }
        }
        let terms = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(PrincipalPart { terms })
    }

    pub fn from_pairs(pairs: &[(i64, Rat)]) -> Result<Self, EpsError> {
        Self::new(pairs.iter().cloned().collect())
    }

    pub fn empty() -> Self {
        PrincipalPart { terms: BTreeMap::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_order(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &Rat)> {
        self.terms.iter().map(|(&n, c)| (n, c))
    }

    pub fn coeff(&self, n: i64) -> Rat {
        self.terms.get(&n).cloned().unwrap_or_else(Rat::zero)
    }

    /// The orders must lie in the residue classes the space selects.
    fn check_selected(&self, space: &EpsSpace) -> Result<(), EpsError> {
        for (&n, _) in &self.terms {
            if !space.is_selected(n) {
                return Err(EpsError::Input(format!(
                    "exponent {n} is not selected by the sign vector"
                )));
            }
        }
        Ok(())
    }
}

/// One dual cusp form whose pairing with the principal part fails to vanish.
#[derive(Clone, Debug)]
pub struct ObstructionWitness {
    /// Leading order of the witness in the dual cusp space.
    pub order: i64,
    /// The nonzero pairing value.
    pub value: Rat,
    /// The witness form itself.
    pub form: QSeries,
}

/// Outcome of the obstruction pairing.
#[derive(Clone, Debug)]
pub enum Obstruction {
    Pass,
    Fail(Vec<ObstructionWitness>),
}

impl Obstruction {
    pub fn passed(&self) -> bool {
        matches!(self, Obstruction::Pass)
    }
}

fn require_nonpositive_weight(space: &EpsSpace) -> Result<(), EpsError> {
    if space.spec().weight > 0 {
        return Err(EpsError::Input(format!(
            "principal-part operations need weight <= 0, got {}",
            space.spec().weight
        )));
    }
    Ok(())
}

/// The dual space rebuilt so its basis windows reach `wend`.
fn dual_space(space: &EpsSpace, wend: i64) -> Result<EpsSpace, EpsError> {
    let spec = space.spec();
    let dual_eps = spec.eps.dual(spec.level)?;
    EpsSpace::new(SpaceSpec::new(
        spec.level,
        2 - spec.weight,
        dual_eps,
        wend.max(spec.trunc).max(2),
    )?)
}

/// Pairs the principal part against every reduced cusp form of the dual
/// space: the sum of s(n) a(n) b(-n) must vanish for each. The failing
/// witnesses are returned with their pairing values.
pub fn obstruction_test(
    space: &EpsSpace,
    p: &PrincipalPart,
) -> Result<Obstruction, EpsError> {
    require_nonpositive_weight(space)?;
    p.check_selected(space)?;
    let Some(min) = p.min_order() else {
        return Ok(Obstruction::Pass);
    };
    let level = space.spec().level;
    let dual = dual_space(space, -min + 2)?;
    let basis = dual.reduced_basis(0)?;
    let mut witnesses = Vec::new();
    for &d in &basis.cusp_orders {
        let g = basis.form(d).expect("cusp order has a form");
        let mut value = Rat::zero();
        for (n, a) in p.terms() {
            let b = g.coeff(-n).ok_or_else(|| {
                EpsError::Window(format!("dual window misses exponent {}", -n))
            })?;
            if !b.is_zero() {
                value += s_rat(n, level) * a * b;
            }
        }
        if !value.is_zero() {
            witnesses.push(ObstructionWitness { order: d, value, form: g.clone() });
        }
    }
    if witnesses.is_empty() {
        Ok(Obstruction::Pass)
    } else {
        Ok(Obstruction::Fail(witnesses))
    }
}

/// The constant term forced on a lift of `p`: -sum of s(n) a(n) B(-n) with
/// B the coefficients of the dual sign-averaged Eisenstein series of weight
/// 2 - k.
pub fn constant_term(space: &EpsSpace, p: &PrincipalPart) -> Result<Rat, EpsError> {
    require_nonpositive_weight(space)?;
    p.check_selected(space)?;
    let Some(min) = p.min_order() else {
        return Ok(Rat::zero());
    };
    let spec = space.spec();
    let dual_eps = spec.eps.dual(spec.level)?;
    let w = u32::try_from(2 - spec.weight).expect("dual weight is positive");
    let eis = eisenstein_eps(spec.level, w, space.chi(), &dual_eps, -min + 2)?;
    let mut acc = Rat::zero();
    for (n, a) in p.terms() {
        let b = eis.coeff(-n).expect("window sized to the principal part");
        if !b.is_zero() {
            acc -= s_rat(n, spec.level) * a * b;
        }
    }
    Ok(acc)
}

/// Lifts an unobstructed principal part to the unique form carrying it,
/// assembled order by order from the reduced basis. A failing obstruction
/// test is reported as an error naming the number of witnesses; an
/// inconsistency after a passing test indicates a bug and is reported as an
/// internal error.
pub fn lift(space: &EpsSpace, p: &PrincipalPart) -> Result<QSeries, EpsError> {
    match obstruction_test(space, p)? {
        Obstruction::Pass => {}
        Obstruction::Fail(ws) => {
            return Err(EpsError::Obstructed { witnesses: ws.len() });
        }
    }
    let spec = space.spec();
    let Some(min) = p.min_order() else {
        return Ok(QSeries::zero(1, spec.trunc));
    };
    let basis = space.reduced_basis(-min)?;
    let mut f = QSeries::zero(1, basis.window_end);
    for n in min..0 {
        let have = f.coeff(n).expect("inside window");
        let want = p.coeff(n);
        let residual = want - have;
        if residual.is_zero() {
            continue;
        }
        let Some(fm) = basis.form(n) else {
            return Err(EpsError::Internal(format!(
                "passed obstruction test but exponent {n} is not matchable"
            )));
        };
        f = f.add(&fm.scale(&(residual * s_rat(n, spec.level))));
    }
    let forced = constant_term(space, p)?;
    if f.coeff(0).expect("inside window") != forced {
        return Err(EpsError::Internal(
            "lift constant term disagrees with the pairing formula".into(),
        ));
    }
    Ok(f)
}

/// Constant term of the componentwise product of two vector-valued forms,
/// summed over the group elements. The modules must have equal level and
/// order (one is typically the negation of the other).
pub fn pairing(f: &VVForm, g: &VVForm) -> Result<Rat, EpsError> {
    let (df, dg) = (f.disc(), g.disc());
    if df.level() != dg.level() || df.order() != dg.order() {
        return Err(EpsError::Input(format!(
            "modules do not match: level {} order {} vs level {} order {}",
            df.level(),
            df.order(),
            dg.level(),
            dg.order()
        )));
    }
    let n = crate::arith::rat(df.level() as i64);
    let mut acc = Rat::zero();
    for (ef, eg) in df.elements().iter().zip(dg.elements().iter()) {
        let rf = u64::try_from((df.norm(ef) * &n).numer().clone()).expect("residue");
        let rg = u64::try_from((dg.norm(eg) * &n).numer().clone()).expect("residue");
        let cf = f.component(rf).ok_or_else(|| {
            EpsError::Internal(format!("missing component for residue {rf}"))
        })?;
        let cg = g.component(rg).ok_or_else(|| {
            EpsError::Internal(format!("missing component for residue {rg}"))
        })?;
        acc += cf.product_constant(cg)?;
    }
    Ok(acc)
}

/// One verified instance of the antisymmetric coefficient identity.
#[derive(Clone, Debug)]
pub struct DualityIdentity {
    pub m: i64,
    pub d: i64,
    /// Coefficient of q^-d in the order-m form of the weight k side.
    pub a: Rat,
    /// Coefficient of q^-m in the order-d form of the weight 2-k side.
    pub b: Rat,
}

/// Outcome of a grid check: every checked identity, the check counts, and
/// any violations (which the caller should treat as fatal).
#[derive(Clone, Debug)]
pub struct DualityReport {
    pub level: u64,
    pub weight: i64,
    pub eps: SignVector,
    /// Existing orders on the weight k side within the requested range.
    pub m_orders: Vec<i64>,
    /// Existing orders on the weight 2-k side within the requested range.
    pub d_orders: Vec<i64>,
    pub identities: Vec<DualityIdentity>,
    pub vanishing_checks: usize,
    pub cross_existence_checks: usize,
    pub violations: Vec<String>,
}

impl DualityReport {
    pub fn all_hold(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies the coefficient duality on the grid `m in [m_lo, min(m_hi, -1)]`,
/// `d in [d_lo, min(d_hi, max dual order)]`: the antisymmetric identity for
/// every existing pair, the vanishing of a_m(-n) b_d(n) between the leading
/// orders, and cross-existence of the partner form at every nonzero
/// coefficient in range.
pub fn duality_check(
    space: &EpsSpace,
    m_lo: i64,
    m_hi: i64,
    d_lo: i64,
    d_hi: i64,
) -> Result<DualityReport, EpsError> {
    require_nonpositive_weight(space)?;
    if m_lo >= 0 || m_lo > m_hi || d_lo > d_hi {
        return Err(EpsError::Input(
            "need m_lo < 0, m_lo <= m_hi and d_lo <= d_hi".into(),
        ));
    }
    let spec = space.spec();
    let (level, k) = (spec.level, spec.weight);

    // the k side must expose coefficients up to -d_lo, the dual side up to -m_lo
    let sp_k = EpsSpace::new(SpaceSpec::new(
        level,
        k,
        spec.eps.clone(),
        (-d_lo + 2).max(spec.trunc).max(2),
    )?)?;
    let basis_k = sp_k.reduced_basis(-m_lo)?;
    let sp_d = dual_space(space, -m_lo + 2)?;
    let basis_d = sp_d.reduced_basis((-d_lo).max(0))?;

    let m_top = m_hi.min(-1);
    let m_orders: Vec<i64> =
        basis_k.forms.keys().copied().filter(|&m| m_lo <= m && m <= m_top).collect();
    let d_top = d_hi.min(basis_d.max_order());
    let d_orders: Vec<i64> =
        basis_d.forms.keys().copied().filter(|&d| d_lo <= d && d <= d_top).collect();

    let mut identities = Vec::new();
    let mut vanishing = 0usize;
    let mut cross = 0usize;
    let mut violations = Vec::new();
    for &m in &m_orders {
        let fm = basis_k.form(m).expect("listed order");
        for &d in &d_orders {
            let fd = basis_d.form(d).expect("listed order");
            let a = fm.coeff(-d).ok_or_else(|| {
                EpsError::Window(format!("k side window misses exponent {}", -d))
            })?;
            let b = fd.coeff(-m).ok_or_else(|| {
                EpsError::Window(format!("dual side window misses exponent {}", -m))
            })?;
            if a != -b.clone() {
                violations.push(format!(
                    "identity fails at m={m}, d={d}: {} vs -({})",
                    rat_fmt(&a),
                    rat_fmt(&b)
                ));
            }
            identities.push(DualityIdentity { m, d, a, b });
            for n in d + 1..-m {
                let an = fm.coeff(-n).expect("inside window");
                let bn = fd.coeff(n).expect("inside window");
                vanishing += 1;
                if !(an * bn).is_zero() {
                    violations.push(format!(
                        "vanishing fails at m={m}, d={d}, n={n}"
                    ));
                }
            }
        }
    }

    // nonzero coefficients force the partner form to exist
    for &m in &m_orders {
        for x in basis_k.form(m).expect("listed order").support() {
            let d = -x;
            if x > m && d_lo <= d && d <= d_top && !basis_d.forms.contains_key(&d) {
                violations.push(format!(
                    "a_{m}({x}) is nonzero but the dual order {d} form is absent"
                ));
            }
            cross += 1;
        }
    }
    for &d in &d_orders {
        for y in basis_d.form(d).expect("listed order").support() {
            let m = -y;
            if y > d && m_lo <= m && m <= m_top && !basis_k.forms.contains_key(&m) {
                violations.push(format!(
                    "b_{d}({y}) is nonzero but the order {m} form is absent"
                ));
            }
            cross += 1;
        }
    }

    Ok(DualityReport {
        level,
        weight: k,
        eps: spec.eps.clone(),
        m_orders,
        d_orders,
        identities,
        vanishing_checks: vanishing,
        cross_existence_checks: cross,
        violations,
    })
}

/// The two reduced bases of a grid at matching windows, for callers that
/// need the forms themselves (reports, serialization).
pub fn grid_bases(
    space: &EpsSpace,
    depth: i64,
) -> Result<(ReducedBasis, ReducedBasis), EpsError> {
    require_nonpositive_weight(space)?;
    let spec = space.spec();
    let sp_k = EpsSpace::new(SpaceSpec::new(
        spec.level,
        spec.weight,
        spec.eps.clone(),
        (depth + 2).max(spec.trunc),
    )?)?;
    let basis_k = sp_k.reduced_basis(depth)?;
    let sp_d = dual_space(space, depth + 2)?;
    let basis_d = sp_d.reduced_basis(depth)?;
    Ok((basis_k, basis_d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, ratq};
    use crate::discform::DiscForm;
    use crate::vvmf::psi;

    fn space(level: u64, weight: i64, signs: &[(u64, i8)], trunc: i64) -> EpsSpace {
        let eps = SignVector::from_pairs(signs).unwrap();
        EpsSpace::new(SpaceSpec::new(level, weight, eps, trunc).unwrap()).unwrap()
    }

    fn pp(pairs: &[(i64, i64, i64)]) -> PrincipalPart {
        PrincipalPart::from_pairs(
            &pairs.iter().map(|&(n, a, b)| (n, ratq(a, b))).collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn obstruction_examples() {
        let sp1 = space(15, -1, &[(3, -1), (5, -1)], 16);
        assert!(obstruction_test(&sp1, &pp(&[(-3, 1, 2)])).unwrap().passed());
        assert!(obstruction_test(&sp1, &PrincipalPart::empty()).unwrap().passed());

        let sp3 = space(15, -1, &[(3, -1), (5, 1)], 16);
        match obstruction_test(&sp3, &pp(&[(-1, 1, 1)])).unwrap() {
            Obstruction::Fail(ws) => {
                assert_eq!(ws.len(), 1);
                assert_eq!(ws[0].order, 1);
                assert_eq!(ws[0].value, rat(1));
            }
            Obstruction::Pass => panic!("expected an obstruction at order -1"),
        }
    }

    #[test]
    fn constant_term_examples() {
        let sp1 = space(15, -1, &[(3, -1), (5, -1)], 16);
        assert_eq!(constant_term(&sp1, &pp(&[(-3, 1, 2)])).unwrap(), ratq(-1, 2));
        assert_eq!(constant_term(&sp1, &pp(&[(-7, 1, 1)])).unwrap(), rat(-6));
        assert_eq!(constant_term(&sp1, &PrincipalPart::empty()).unwrap(), Rat::zero());
    }

    #[test]
    fn lift_examples() {
        let sp1 = space(15, -1, &[(3, -1), (5, -1)], 16);
        let f = lift(&sp1, &pp(&[(-3, 1, 2)])).unwrap();
        let basis = sp1.reduced_basis(3).unwrap();
        assert!(f.agrees_with(basis.form(-3).unwrap()));

        let sp3 = space(15, -1, &[(3, -1), (5, 1)], 16);
        let f4 = lift(&sp3, &pp(&[(-4, 1, 1), (-1, 3, 1)])).unwrap();
        let basis3 = sp3.reduced_basis(4).unwrap();
        assert!(f4.agrees_with(basis3.form(-4).unwrap()));

        assert!(matches!(
            lift(&sp3, &pp(&[(-1, 1, 1)])),
            Err(EpsError::Obstructed { witnesses: 1 })
        ));

        let zero = lift(&sp1, &PrincipalPart::empty()).unwrap();
        assert!(zero.is_zero_on_window());
    }

    #[test]
    fn pairing_matches_scalar_sum() {
        let eps = SignVector::from_pairs(&[(3, -1), (5, -1)]).unwrap();
        let sp = space(15, -1, &[(3, -1), (5, -1)], 12);
        let basis = sp.reduced_basis(7).unwrap();
        let f3 = basis.form(-3).unwrap();
        let d = DiscForm::build(15, &eps).unwrap();
        let fv = psi(f3, &d).unwrap();

        let dual_eps = eps.dual(15).unwrap();
        let eis = eisenstein_eps(15, 3, sp.chi(), &dual_eps, 12).unwrap();
        let gv = psi(&eis, &d.negated()).unwrap();

        // scalar-side sum of s(n) a(n) b(-n) over all n
        let mut direct = Rat::zero();
        for n in f3.lower()..f3.trunc() {
            let a = f3.coeff(n).unwrap();
            if a.is_zero() {
                continue;
            }
            if let Some(b) = eis.coeff(-n) {
                if !b.is_zero() {
                    direct += s_rat(n, 15) * a * b;
                }
            }
        }
        let paired = pairing(&fv, &gv).unwrap();
        assert_eq!(paired, s_rat(0, 15) * &direct);
        // the obstruction sum and forced constant term cancel exactly
        assert_eq!(paired, Rat::zero());

        // bilinearity in the first argument
        let f7 = basis.form(-7).unwrap();
        let fv7 = psi(f7, &d).unwrap();
        let sum = psi(&f3.add(&f7.scale(&rat(3))), &d).unwrap();
        let lhs = pairing(&sum, &gv).unwrap();
        let rhs = pairing(&fv, &gv).unwrap() + rat(3) * pairing(&fv7, &gv).unwrap();
        assert_eq!(lhs, rhs);

        // pairing against zero vanishes
        let zero = psi(&QSeries::zero(1, 12), &d.negated()).unwrap();
        assert_eq!(pairing(&fv, &zero).unwrap(), Rat::zero());
    }

    #[test]
    fn grid_identities_level15() {
        let sp1 = space(15, -1, &[(3, -1), (5, -1)], 16);
        let rep = duality_check(&sp1, -15, -1, -15, 0).unwrap();
        assert!(rep.all_hold(), "violations: {:?}", rep.violations);
        // a_{-3}(2) = 3 against b_{-2}(3) = -3
        let id = rep
            .identities
            .iter()
            .find(|i| i.m == -3 && i.d == -2)
            .expect("pair (-3, -2) in range");
        assert_eq!(id.a, rat(3));
        assert_eq!(id.b, rat(-3));

        let sp3 = space(15, -1, &[(3, -1), (5, 1)], 16);
        let rep3 = duality_check(&sp3, -10, -1, -10, 5).unwrap();
        assert!(rep3.all_hold(), "violations: {:?}", rep3.violations);
        let id45 = rep3
            .identities
            .iter()
            .find(|i| i.m == -4 && i.d == -5)
            .expect("pair (-4, -5) in range");
        assert_eq!(id45.a, rat(-7));
        assert_eq!(id45.b, rat(7));
        // the cusp-form column: a_{-4}(-1) = 3 against b_1(4) = -3
        let id_c = rep3
            .identities
            .iter()
            .find(|i| i.m == -4 && i.d == 1)
            .expect("pair (-4, 1) in range");
        assert_eq!(id_c.a, rat(3));
        assert_eq!(id_c.b, rat(-3));
    }

    #[test]
    fn grid_identities_level3() {
        let sp = space(3, -1, &[(3, 1)], 12);
        let rep = duality_check(&sp, -9, -1, -9, 3).unwrap();
        assert!(rep.all_hold(), "violations: {:?}", rep.violations);
        assert!(rep.identities.len() > 4);
    }
}
