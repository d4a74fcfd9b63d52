//! Sturm bounds, clearing-form search, and certification that the scaled
//! coefficient data s(n) a_m(n) is integral.
//!
//! A weakly holomorphic form with poles only at infinity becomes holomorphic
//! after multiplication by an eta quotient with a deep enough zero there and
//! nonnegative order at every other cusp. If the product's coefficients are
//! integers up to the Sturm bound of its weight they are integers everywhere,
//! and since the quotient's expansion is an integral unit, integrality pulls
//! back to the original form. Orders sharing primes with the level need the
//! sign-pair summation on top: combinations over partner sign vectors whose
//! supports partition the coprime exponents. Verdicts stay explicit about
//! what was proved: `Certified` rests on a Sturm argument, `VerifiedToPrecision`
//! only on inspected coefficients, `Violation` carries an exact non-integral
//! witness.

use std::collections::BTreeMap;

use num_traits::One;

use crate::arith::{divisors, rat, s_rat, Rat};
use crate::discform::SignVector;
use crate::genforms::EtaQuotient;
use crate::qseries::QSeries;
use crate::spaces::{EpsSpace, ReducedBasis, SpaceSpec};
use crate::EpsError;

/// Index of the principal congruence-with-character subgroup used for the
/// safe Sturm convention: N^2 prod (1 - 1/p^2), with the small levels pinned
/// by hand.
fn gamma1_index(level: u64) -> u64 {
    match level {
        1 => 1,
        2 => 3,
        _ => {
            let mut idx = level * level;
            for (p, _) in crate::arith::factor(level) {
                idx = idx / (p * p) * (p * p - 1);
            }
            idx
        }
    }
}

/// Sturm bound for weight `w` forms on the level: coefficients agreeing up
/// to this index (inclusive) force equality. The larger index convention is
/// used uniformly so the bound stays valid for every quadratic character.
pub fn sturm_bound(level: u64, w: i64) -> i64 {
    assert!(w >= 1, "Sturm bound needs positive weight, got {w}");
    (w * gamma1_index(level) as i64 + 11).div_euclid(12)
}

/// Lowest order the finite integrality check must reach: every deeper form
/// is an integer combination of multiples of j(N tau) (integral) with forms
/// above this bound, so scaled integrality propagates downward from it.
pub fn reduction_range(space: &EpsSpace) -> Result<i64, EpsError> {
    if space.spec().weight > 0 {
        return Err(EpsError::Input(format!(
            "reduction range needs weight <= 0, got {}",
            space.spec().weight
        )));
    }
    let dual = space.dual()?;
    let m_eps = dual.reduced_basis(0)?.max_order().max(0);
    Ok(-(space.spec().level as i64) - m_eps)
}

/// Searches the eta quotients on the divisors of the level for one that
/// clears a pole of the given depth: order at least `depth` at infinity,
/// nonnegative order at every other cusp, doubled weight at least
/// `min_weight_x2`, integer weight, and both 24-divisibility conditions (so
/// the expansion is an integral unit times an integer power of q). The
/// minimal-weight match wins, ties broken by lexicographically smallest
/// exponent vector.
pub fn clearing_form(level: u64, depth: i64, min_weight_x2: i64) -> Option<EtaQuotient> {
    let divs = divisors(level);
    let t = divs.len();
    // the box radius follows the worked examples at few divisors; it shrinks
    // for divisor-rich levels to keep the enumeration bounded
    let radius: i64 = if t <= 4 { 24 } else { 8 };
    // integer cusp data: ord at 1/c times 24 N is sum of gcd(c,d)^2 (N/d) r_d
    let cusps: Vec<Vec<i64>> = divs
        .iter()
        .filter(|&&c| c != level)
        .map(|&c| {
            divs.iter()
                .map(|&d| {
                    let g = num_integer::gcd(c, d);
                    ((g * g) * (level / d)) as i64
                })
                .collect()
        })
        .collect();
    let mut best: Option<(i64, Vec<i64>)> = None;
    let mut exps = vec![-radius; t];
    'outer: loop {
        let w2: i64 = exps.iter().sum();
        if w2 % 2 == 0 && w2 >= min_weight_x2 {
            let ord24: i64 = exps.iter().zip(&divs).map(|(&r, &d)| r * d as i64).sum();
            let zero24: i64 =
                exps.iter().zip(&divs).map(|(&r, &d)| r * (level / d) as i64).sum();
            if ord24 % 24 == 0
                && ord24 / 24 >= depth
                && zero24 % 24 == 0
                && cusps
                    .iter()
                    .all(|row| row.iter().zip(&exps).map(|(&c, &r)| c * r).sum::<i64>() >= 0)
            {
                let better = match &best {
                    None => true,
                    Some((bw, bex)) => w2 < *bw || (w2 == *bw && exps < *bex),
                };
                if better {
                    best = Some((w2, exps.clone()));
                }
            }
        }
        // odometer over the exponent box
        for i in (0..t).rev() {
            if exps[i] < radius {
                exps[i] += 1;
                continue 'outer;
            }
            exps[i] = -radius;
        }
        break;
    }
    best.map(|(_, ex)| EtaQuotient::new(divs.into_iter().zip(ex)))
}

/// A Sturm certificate: the clearing quotient, the weight of the cleared
/// products, the bound they were checked to, and the partner sign vectors
/// that entered the subset sums (empty when the order is coprime to the
/// level).
#[derive(Clone, Debug)]
pub struct Certificate {
    pub clearing: EtaQuotient,
    pub product_weight: i64,
    pub sturm: i64,
    pub partners: Vec<SignVector>,
}

/// What the report can honestly say about one order.
#[derive(Clone, Debug)]
pub enum Verdict {
    /// s(n) a_m(n) is an integer for every n, by the clearing argument.
    Certified(Certificate),
    /// No certificate closed; the data is integral as far as inspected.
    VerifiedToPrecision { up_to: i64 },
    /// An exact non-integral witness s(n) a_m(n).
    Violation { n: i64, value: Rat },
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified(_))
    }
}

/// Integrality verdicts for every existing order down to the reduction
/// bound, which settles the whole family when all of them certify.
#[derive(Clone, Debug)]
pub struct IntegralityReport {
    pub spec: SpaceSpec,
    pub lowest_order: i64,
    /// Direct scans cover exponents up to this index inclusive.
    pub check_to: i64,
    pub verdicts: BTreeMap<i64, Verdict>,
}

fn partner_basis<'a>(
    cache: &'a mut BTreeMap<SignVector, ReducedBasis>,
    level: u64,
    weight: i64,
    eps: &SignVector,
    window: i64,
    depth: i64,
) -> Result<&'a ReducedBasis, EpsError> {
    if !cache.contains_key(eps) {
        let sp = EpsSpace::new(SpaceSpec::new(level, weight, eps.clone(), window)?)?;
        cache.insert(eps.clone(), sp.reduced_basis(depth)?);
    }
    Ok(cache.get(eps).expect("just inserted"))
}

fn flipped_signs(eps: &SignVector, primes: &[u64], mask: u32) -> SignVector {
    let pairs: Vec<(u64, i8)> = eps
        .primes()
        .map(|(p, s)| {
            let flip = primes
                .iter()
                .position(|&q| q == p)
                .is_some_and(|i| mask >> i & 1 == 1);
            (p, if flip { -s } else { s })
        })
        .collect();
    SignVector::from_pairs(&pairs).expect("flipping signs preserves validity")
}

/// Builds the integrality report for every existing order within the
/// reduction range. Each order is scanned for exact violations first, then
/// a certificate is attempted: clear the pole, check the product (and, when
/// the order shares primes with the level, the scaled partner subset sums)
/// up to the Sturm bound of the product weight. Verdicts are independent
/// across orders.
pub fn integrality_report(space: &EpsSpace) -> Result<IntegralityReport, EpsError> {
    let spec = space.spec().clone();
    if spec.weight > 0 {
        return Err(EpsError::Input(format!(
            "integrality report needs weight <= 0, got {}",
            spec.weight
        )));
    }
    let level = spec.level;
    let k = spec.weight;
    let low = reduction_range(space)?;
    let min_w2 = 2 * (1 - k);

    // clearing data per order, sized before any basis so one window fits all
    let mut clears: BTreeMap<i64, (EtaQuotient, i64, i64)> = BTreeMap::new();
    let mut check_to = spec.trunc - 1;
    for depth in 1..=(-low) {
        match clearing_form(level, depth, min_w2) {
            Some(h) => {
                let w = h.weight_x2() / 2 + k;
                let bound = sturm_bound(level, w);
                check_to = check_to.max(4 * bound);
                clears.insert(-depth, (h, w, bound));
            }
            None => check_to = check_to.max(4 * sturm_bound(level, 2 - k)),
        }
    }

    let window = check_to + 1;
    let home = EpsSpace::new(SpaceSpec::new(level, k, spec.eps.clone(), window)?)?;
    let basis = home.reduced_basis(-low)?;
    let mut partner_bases: BTreeMap<SignVector, ReducedBasis> = BTreeMap::new();
    let mut verdicts = BTreeMap::new();

    'orders: for (&m, f) in basis.forms.range(low..0) {
        // an exact non-integral witness beats any certificate attempt
        for n in m..window {
            let v = s_rat(n, level) * f.coeff(n).expect("inside window");
            if !v.denom().is_one() {
                verdicts.insert(m, Verdict::Violation { n, value: v });
                continue 'orders;
            }
        }

        let Some((h, w, bound)) = clears.get(&m) else {
            verdicts.insert(m, Verdict::VerifiedToPrecision { up_to: check_to });
            continue;
        };
        let h_series = h.series(bound - m + 2);

        // primes shared between the order and the level drive the pair trick
        let shared: Vec<u64> = spec
            .eps
            .primes()
            .map(|(p, _)| p)
            .filter(|&p| m.unsigned_abs() % p == 0)
            .collect();
        let j = shared.len() as u32;

        // partner forms per sign-flip subset; a missing partner just drops
        // out of the sums (its support classes carry no coefficients anyway)
        let mut summands: Vec<(u32, QSeries)> = vec![(0, f.clone())];
        let mut partners = Vec::new();
        for s_mask in 1..(1u32 << j) {
            let flipped = flipped_signs(&spec.eps, &shared, s_mask);
            let b = partner_basis(&mut partner_bases, level, k, &flipped, window, -low)?;
            if let Some(g) = b.form(m) {
                partners.push(flipped);
                summands.push((s_mask, g.clone()));
            }
        }

        // every subset W of the shared primes must certify: the sum over
        // S in W of the partner forms, scaled by 2^(j - |W|), cleared by h,
        // integral up to the Sturm bound
        let mut certified = true;
        'subsets: for w_mask in 0..(1u32 << j) {
            let mut sum = QSeries::zero(1, window);
            for (s_mask, g) in &summands {
                if s_mask & !w_mask == 0 {
                    sum = sum.add(g);
                }
            }
            let scale = rat(1i64 << (j - w_mask.count_ones()));
            let prod = h_series.mul(&sum.scale(&scale));
            for n in prod.lower()..=*bound {
                if !prod.coeff(n).expect("window sized to the bound").is_integer() {
                    certified = false;
                    break 'subsets;
                }
            }
        }

        if certified {
            verdicts.insert(
                m,
                Verdict::Certified(Certificate {
                    clearing: h.clone(),
                    product_weight: *w,
                    sturm: *bound,
                    partners,
                }),
            );
        } else {
            verdicts.insert(m, Verdict::VerifiedToPrecision { up_to: check_to });
        }
    }

    Ok(IntegralityReport { spec, lowest_order: low, check_to, verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genforms::j_function;
    use num_traits::Zero;

    fn space(level: u64, weight: i64, signs: &[(u64, i8)], trunc: i64) -> EpsSpace {
        let eps = SignVector::from_pairs(signs).unwrap();
        EpsSpace::new(SpaceSpec::new(level, weight, eps, trunc).unwrap()).unwrap()
    }

    #[test]
    fn sturm_bound_examples() {
        assert_eq!(sturm_bound(3, 5), 4);
        assert_eq!(sturm_bound(3, 11), 8);
        assert_eq!(sturm_bound(3, 2), 2);
        assert_eq!(sturm_bound(15, 3), 48);
        assert_eq!(sturm_bound(1, 12), 1);
        assert_eq!(sturm_bound(2, 4), 1);
    }

    #[test]
    fn reduction_range_examples() {
        assert_eq!(reduction_range(&space(3, -1, &[(3, 1)], 8)).unwrap(), -3);
        assert_eq!(reduction_range(&space(15, -1, &[(3, -1), (5, -1)], 8)).unwrap(), -15);
        // the dual cusp form of order 1 pushes the bound one deeper
        assert_eq!(reduction_range(&space(15, -1, &[(3, -1), (5, 1)], 8)).unwrap(), -16);
    }

    #[test]
    fn clearing_search_level3() {
        let h1 = clearing_form(3, 1, 4).unwrap();
        assert_eq!(h1.exps().collect::<Vec<_>>(), vec![(1, -3), (3, 9)]);
        assert_eq!(h1.weight_x2(), 6);

        let h2 = clearing_form(3, 2, 4).unwrap();
        assert_eq!(h2.exps().collect::<Vec<_>>(), vec![(1, -6), (3, 18)]);

        let h3 = clearing_form(3, 3, 4).unwrap();
        assert_eq!(h3.exps().collect::<Vec<_>>(), vec![(3, 24)]);
        assert_eq!(h3.weight_x2(), 24);
    }

    #[test]
    fn clearing_units_are_integral() {
        // both weight-3 units on the level have integer expansions starting
        // with leading coefficient 1
        for exps in [vec![(1i64, -3i64), (3, 9)], vec![(1, 9), (3, -3)]] {
            let h = EtaQuotient::new(exps.iter().map(|&(d, r)| (d as u64, r)));
            let s = h.series(200);
            let lead = s.leading().expect("nonzero");
            assert_eq!(lead.1, &rat(1));
            for n in s.lower()..s.trunc() {
                assert!(s.coeff(n).unwrap().is_integer(), "fractional at {n}");
            }
        }
    }

    #[test]
    fn report_level3_certifies_all_orders() {
        // sign -1 carries orders -1 and -3; sign +1 carries -2 and -3
        let rep = integrality_report(&space(3, -1, &[(3, -1)], 10)).unwrap();
        assert_eq!(rep.lowest_order, -3);
        assert_eq!(rep.verdicts.keys().copied().collect::<Vec<_>>(), vec![-3, -1]);
        match &rep.verdicts[&-1] {
            Verdict::Certified(c) => {
                assert_eq!(c.clearing.exps().collect::<Vec<_>>(), vec![(1, -3), (3, 9)]);
                assert_eq!(c.product_weight, 2);
                assert_eq!(c.sturm, 2);
                assert!(c.partners.is_empty());
            }
            v => panic!("expected certification at -1, got {v:?}"),
        }
        match &rep.verdicts[&-3] {
            Verdict::Certified(c) => {
                assert_eq!(c.clearing.exps().collect::<Vec<_>>(), vec![(3, 24)]);
                assert_eq!(c.product_weight, 11);
                assert_eq!(c.sturm, 8);
                assert_eq!(c.partners, vec![SignVector::from_pairs(&[(3, 1)]).unwrap()]);
            }
            v => panic!("expected certification at -3, got {v:?}"),
        }

        let rep2 = integrality_report(&space(3, -1, &[(3, 1)], 10)).unwrap();
        assert_eq!(rep2.verdicts.keys().copied().collect::<Vec<_>>(), vec![-3, -2]);
        match &rep2.verdicts[&-2] {
            Verdict::Certified(c) => {
                assert_eq!(c.clearing.exps().collect::<Vec<_>>(), vec![(1, -6), (3, 18)]);
                assert_eq!(c.product_weight, 5);
                assert_eq!(c.sturm, 4);
            }
            v => panic!("expected certification at -2, got {v:?}"),
        }
        assert!(rep2.verdicts[&-3].is_certified());
    }

    #[test]
    fn order_minus3_pair_is_integral_past_the_window() {
        // the deepest reduced forms have a genuinely half-integral a(45) for
        // both signs, yet s(45) a(45) and the paired sum stay integral
        let minus = space(3, -1, &[(3, -1)], 47).reduced_basis(3).unwrap();
        let plus = space(3, -1, &[(3, 1)], 47).reduced_basis(3).unwrap();
        let fm = minus.form(-3).unwrap();
        let fp = plus.form(-3).unwrap();
        for f in [fm, fp] {
            let a = f.coeff(45).unwrap();
            assert!(!a.is_integer(), "expected a half-integral coefficient");
            assert!((s_rat(45, 3) * &a).is_integer());
        }
        let sum = fm.add(fp);
        for n in sum.lower()..sum.trunc() {
            assert!(sum.coeff(n).unwrap().is_integer(), "pair sum fractional at {n}");
        }
    }

    #[test]
    fn deep_order_agrees_with_j_recursion() {
        // one step of the downward recursion: multiply the shallowest form
        // by j(N tau) and reduce; the result must be the ladder's next form
        let sp = space(3, -1, &[(3, -1)], 20);
        let basis = sp.reduced_basis(4).unwrap();
        let f1 = basis.form(-1).unwrap();
        let f3 = basis.form(-3).unwrap();
        let f4 = basis.form(-4).unwrap();
        let j3 = j_function(12).rescale(3);
        let g = j3.mul(f1);
        let mut r = g.clone();
        for m in [-3i64, -1] {
            let c = r.coeff(m).unwrap();
            if !c.is_zero() {
                let fm = if m == -3 { f3 } else { f1 };
                r = r.sub(&fm.scale(&(c * s_rat(m, 3))));
            }
        }
        assert!(r.coeff(-2).unwrap().is_zero());
        assert!(r.agrees_with(f4));
    }
}
