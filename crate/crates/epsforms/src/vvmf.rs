//! Vector-valued q-expansions attached to a finite quadratic module.
//!
//! A scalar form with the sign condition determines one component per norm
//! residue class, with coefficients rescaled by s(n); conversely the scalar
//! form can be read back off the components. Components are stored per norm
//! residue rather than per group element: elements of equal norm always carry
//! equal components, so the residue-keyed map is the faithful storage and
//! element-level views are materialized on demand.
//!
//! The transformation behavior under the two generators of the modular group
//! is checked numerically at a sample point in the upper half plane. The
//! closed-form dictionary absorbs the normalization constants of the
//! averaging construction; consumers wanting the literal averaged series must
//! reintroduce them.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::arith::{s_rat, Rat};
use crate::discform::{DiscForm, Element};
use crate::mp::{e_of, q_power, Cx, Fix};
use crate::qseries::QSeries;
use crate::EpsError;

/// A vector-valued q-expansion: one component series per norm residue class
/// of the module, each on the lattice (1/N)Z.
#[derive(Clone, Debug, PartialEq)]
pub struct VVForm {
    disc: DiscForm,
    components: BTreeMap<u64, QSeries>,
}

impl VVForm {
    /// Validates and wraps residue-keyed components: keys must be norm
    /// residues of the module, each series must live on the (1/N)Z lattice
    /// and be supported on indices congruent to its key. Missing residues
    /// are filled in as zero series at the shortest provided window.
    pub fn new(disc: DiscForm, components: BTreeMap<u64, QSeries>) -> Result<Self, EpsError> {
        let n = disc.level();
        let residues = disc.norm_residues();
        let mut trunc = i64::MAX;
        for (r, c) in &components {
            if !residues.contains(r) {
                return Err(EpsError::Input(format!(
                    "residue {r} is not a norm residue of the level {n} module"
                )));
            }
            if c.denom() != n {
                return Err(EpsError::Input(format!(
                    "component {r} lives on denominator {} but the module needs {n}",
                    c.denom()
                )));
            }
            for i in c.support() {
                if i.rem_euclid(n as i64) as u64 != *r {
                    return Err(EpsError::Input(format!(
                        "component {r} carries exponent {i}/{n} outside its class"
                    )));
                }
            }
            trunc = trunc.min(c.trunc());
        }
        if trunc == i64::MAX {
            trunc = 0;
        }
        let mut full = components;
        for &r in &residues {
            full.entry(r).or_insert_with(|| QSeries::zero(n, trunc));
        }
        Ok(VVForm { disc, components: full })
    }

    pub fn disc(&self) -> &DiscForm {
        &self.disc
    }

    /// Residue-keyed components, every norm residue present.
    pub fn components(&self) -> &BTreeMap<u64, QSeries> {
        &self.components
    }

    pub fn component(&self, residue: u64) -> Option<&QSeries> {
        self.components.get(&residue)
    }

    /// Element-level view: each group element paired with its component.
    pub fn element_components(&self) -> Vec<(Element, QSeries)> {
        let n = self.disc.level() as i64;
        self.disc
            .elements()
            .into_iter()
            .map(|g| {
                let r = residue_of(&self.disc, &g, n);
                let c = self.components[&r].clone();
                (g, c)
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.components.values().all(|c| c.is_zero_on_window())
    }

    /// Copy with one coefficient nudged; used as a negative control in the
    /// transformation check.
    pub fn perturbed(&self, residue: u64, idx: i64, delta: &Rat) -> Result<Self, EpsError> {
        let n = self.disc.level();
        if idx.rem_euclid(n as i64) as u64 != residue {
            return Err(EpsError::Input(format!(
                "exponent {idx}/{n} is outside class {residue}"
            )));
        }
        let comp = self
            .components
            .get(&residue)
            .ok_or_else(|| EpsError::Input(format!("no component for residue {residue}")))?;
        let bump = QSeries::monomial(n, idx, delta.clone(), comp.trunc());
        let mut components = self.components.clone();
        components.insert(residue, comp.add(&bump));
        Ok(VVForm { disc: self.disc.clone(), components })
    }
}

fn residue_of(d: &DiscForm, g: &Element, n: i64) -> u64 {
    let v = d.norm(g) * crate::arith::rat(n);
    u64::try_from(v.numer().clone()).expect("norm residue in [0, N)")
}

/// Expands a scalar form with the sign condition into its vector-valued
/// components: the class-r component collects s(n) a(n) q^(n/N) over n = r
/// mod N. Errors if some coefficient sits outside the module's norm residues.
pub fn psi(f: &QSeries, d: &DiscForm) -> Result<VVForm, EpsError> {
    if f.denom() != 1 {
        return Err(EpsError::Input(
            "scalar input must live on the integer exponent lattice".into(),
        ));
    }
    let n = d.level() as i64;
    let residues = d.norm_residues();
    for i in f.support() {
        let r = i.rem_euclid(n) as u64;
        if !residues.contains(&r) {
            return Err(EpsError::Input(format!(
                "coefficient at q^{i} violates the sign condition of the module"
            )));
        }
    }
    let mut components = BTreeMap::new();
    for &r in &residues {
        let coeffs: Vec<Rat> = (f.lower()..f.trunc())
            .map(|i| {
                if i.rem_euclid(n) as u64 == r {
                    s_rat(i, d.level()) * f.coeff(i).expect("inside window")
                } else {
                    Rat::zero()
                }
            })
            .collect();
        components.insert(r, QSeries::from_coeffs(d.level(), f.lower(), coeffs));
    }
    Ok(VVForm { disc: d.clone(), components })
}

/// Reads the scalar form back off a vector-valued one: a(n) is the class
/// component's coefficient at n/N divided by s(n).
pub fn phi(f: &VVForm) -> Result<QSeries, EpsError> {
    let n = f.disc.level() as i64;
    let trunc = f.components.values().map(|c| c.trunc()).min().unwrap_or(0);
    let lower = f.components.values().map(|c| c.lower()).min().unwrap_or(0);
    let coeffs: Vec<Rat> = (lower..trunc)
        .map(|i| {
            let r = i.rem_euclid(n) as u64;
            match f.components.get(&r) {
                Some(c) => {
                    let v = c.coeff(i).unwrap_or_else(Rat::zero);
                    v / s_rat(i, f.disc.level())
                }
                None => Rat::zero(),
            }
        })
        .collect();
    Ok(QSeries::from_coeffs(1, lower, coeffs))
}

/// Evaluates one component at tau: sum of c_n q^(n/N) over the window.
/// Successive powers of q^(1/N) are accumulated so only one exponential is
/// computed per evaluation point.
fn component_value(c: &QSeries, tau: &Cx, n: u64) -> Cx {
    let step = q_power(tau, &crate::arith::ratq(1, n as i64));
    let lo = c.lower();
    let mut z = {
        // q^(lo/N)
        let mut acc = Cx::new(Fix::from_i64(1), Fix::zero());
        let base = if lo < 0 { step.recip() } else { step.clone() };
        for _ in 0..lo.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    };
    let mut acc = Cx::zero();
    for i in lo..c.trunc() {
        let coeff = c.coeff(i).expect("inside window");
        if !coeff.is_zero() {
            acc = acc.add(&z.scale(&Fix::from_rat(&coeff)));
        }
        z = z.mul(&step);
    }
    acc
}

/// Largest magnitude among the last few terms of the component at tau; the
/// truncation-sufficiency estimate for the transformation check.
fn edge_term(c: &QSeries, tau: &Cx, n: u64) -> f64 {
    let hi = c.trunc();
    let lo = (hi - 8).max(c.lower());
    let mut worst = 0f64;
    for i in lo..hi {
        let coeff = c.coeff(i).expect("inside window");
        if coeff.is_zero() {
            continue;
        }
        let t = q_power(tau, &crate::arith::ratq(i, n as i64))
            .scale(&Fix::from_rat(&coeff))
            .abs()
            .to_f64();
        worst = worst.max(t);
    }
    worst
}

/// Numerically checks the transformation behavior of a vector-valued form of
/// the given weight under the two generators at a sample point tau in the
/// upper half plane, returning the maximum componentwise deviation. The
/// series must be long enough that the neglected tails at tau and -1/tau are
/// below the requested tolerance; otherwise an error is returned.
pub fn check_weil_transform(
    f: &VVForm,
    weight: i64,
    tau_re: &Rat,
    tau_im: &Rat,
    prec: f64,
) -> Result<f64, EpsError> {
    let d = &f.disc;
    let n = d.level();
    let tau = Cx::from_rats(tau_re, tau_im);
    let s_tau = tau.recip().scale(&Fix::from_i64(-1));
    let t_tau = tau.add(&Cx::new(Fix::from_i64(1), Fix::zero()));
    for c in f.components.values() {
        let tail = edge_term(c, &tau, n).max(edge_term(c, &s_tau, n));
        if tail > prec / 1e3 {
            return Err(EpsError::Window(format!(
                "series truncation leaves tail estimate {tail:.3e}, too coarse for {prec:.1e}"
            )));
        }
    }
    let at = |t: &Cx| -> BTreeMap<u64, Cx> {
        f.components.iter().map(|(&r, c)| (r, component_value(c, t, n))).collect()
    };
    let v_tau = at(&tau);
    let v_stau = at(&s_tau);
    let v_ttau = at(&t_tau);

    let wd = d.weil_data();
    let elems = d.elements();
    let nr = crate::arith::rat(n as i64);
    let residues: Vec<u64> = elems
        .iter()
        .map(|g| u64::try_from((d.norm(g) * &nr).numer().clone()).expect("residue"))
        .collect();
    let root = Fix::from_i64(wd.order as i64).sqrt();
    let tau_pow = tau.powi(-weight);
    let mut dev = 0f64;
    for (gi, _) in elems.iter().enumerate() {
        // diagonal generator: F(tau+1) = e(q(gamma)) F(tau)
        let lhs_t = &v_ttau[&residues[gi]];
        let rhs_t = e_of(&wd.t_phase[gi]).mul(&v_tau[&residues[gi]]);
        dev = dev.max(lhs_t.sub(&rhs_t).abs().to_f64());
        // full generator: tau^-k F(-1/tau) = (1/sqrt(|D|)) sum_beta e(phase) F_beta(tau)
        let lhs_s = tau_pow.mul(&v_stau[&residues[gi]]);
        let mut rhs_s = Cx::zero();
        for (bi, _) in elems.iter().enumerate() {
            rhs_s = rhs_s.add(&e_of(&wd.s_phase[gi][bi]).mul(&v_tau[&residues[bi]]));
        }
        rhs_s = Cx::new(rhs_s.re.div(&root), rhs_s.im.div(&root));
        dev = dev.max(lhs_s.sub(&rhs_s).abs().to_f64());
    }
    Ok(dev)
}
