//! JSON documents for scalar and vector-valued q-expansions, and the
//! on-disk basis cache.
//!
//! Documents are hash-stable: struct fields serialize in declaration order,
//! maps are ordered, rationals are canonical lowest-terms strings, and no
//! whitespace varies between runs. Parsing validates canonicality, so
//! serialize, parse, serialize is byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::arith::{rat_fmt, rat_parse, Rat};
use crate::discform::{DiscForm, SignVector};
use crate::genforms::GENERATOR_STRATEGY_VERSION;
use crate::qseries::QSeries;
use crate::spaces::{ReducedBasis, SpaceSpec};
use crate::vvmf::VVForm;
use crate::EpsError;

pub const SCHEMA_VERSION: u32 = 1;

fn sign_map(eps: &SignVector) -> BTreeMap<u64, i8> {
    eps.primes().collect()
}

fn signs_from_map(map: &BTreeMap<u64, i8>) -> Result<SignVector, EpsError> {
    let pairs: Vec<(u64, i8)> = map.iter().map(|(&p, &s)| (p, s)).collect();
    SignVector::from_pairs(&pairs)
}

/// Nonzero coefficients of a series as canonical `[exponent, "num/den"]`
/// pairs, strictly ascending.
fn coeff_pairs(series: &QSeries) -> Vec<(i64, String)> {
    series
        .support()
        .into_iter()
        .map(|n| (n, rat_fmt(&series.coeff(n).expect("support is inside the window"))))
        .collect()
}

/// Validates one coefficient list: ascending exponents, parseable canonical
/// rationals, nonzero values, all below the truncation.
fn check_pairs(pairs: &[(i64, String)], trunc: i64) -> Result<Vec<(i64, Rat)>, EpsError> {
    let mut out = Vec::with_capacity(pairs.len());
    let mut last: Option<i64> = None;
    for (n, s) in pairs {
        if let Some(l) = last {
            if *n <= l {
                return Err(EpsError::Input(format!(
                    "coefficient exponents must ascend strictly, {n} after {l}"
                )));
            }
        }
        if *n >= trunc {
            return Err(EpsError::Input(format!(
                "coefficient exponent {n} at or past the truncation {trunc}"
            )));
        }
        let v = rat_parse(s)?;
        if v.is_zero() {
            return Err(EpsError::Input(format!("zero coefficient stored at {n}")));
        }
        if rat_fmt(&v) != *s {
            return Err(EpsError::Input(format!(
                "coefficient at {n} is not in canonical lowest terms: {s}"
            )));
        }
        last = Some(*n);
        out.push((*n, v));
    }
    Ok(out)
}

fn series_from_pairs(denom: u64, trunc: i64, pairs: &[(i64, Rat)]) -> QSeries {
    let lower = pairs.first().map_or(trunc, |&(n, _)| n);
    let mut coeffs = vec![Rat::zero(); (trunc - lower).max(0) as usize];
    for (n, v) in pairs {
        coeffs[(n - lower) as usize] = v.clone();
    }
    QSeries::from_coeffs(denom, lower, coeffs)
}

/// One scalar q-expansion with the space data that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QExpansionDocument {
    pub schema_version: u32,
    pub level: u64,
    pub weight: i64,
    pub character: String,
    pub epsilon: BTreeMap<u64, i8>,
    pub lattice_denom: u64,
    pub truncation: i64,
    pub coefficients: Vec<(i64, String)>,
}

impl QExpansionDocument {
    pub fn from_series(level: u64, weight: i64, eps: &SignVector, series: &QSeries) -> Self {
        QExpansionDocument {
            schema_version: SCHEMA_VERSION,
            level,
            weight,
            character: "kronecker".into(),
            epsilon: sign_map(eps),
            lattice_denom: series.denom(),
            truncation: series.trunc(),
            coefficients: coeff_pairs(series),
        }
    }

    pub fn epsilon(&self) -> Result<SignVector, EpsError> {
        signs_from_map(&self.epsilon)
    }

    pub fn series(&self) -> Result<QSeries, EpsError> {
        let pairs = check_pairs(&self.coefficients, self.truncation)?;
        Ok(series_from_pairs(self.lattice_denom, self.truncation, &pairs))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("document serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, EpsError> {
        let doc: QExpansionDocument = serde_json::from_str(s)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<(), EpsError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(EpsError::Input(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        if self.character != "kronecker" {
            return Err(EpsError::Input(format!(
                "unsupported character kind {:?}",
                self.character
            )));
        }
        if self.lattice_denom == 0 {
            return Err(EpsError::Input("lattice denominator must be positive".into()));
        }
        signs_from_map(&self.epsilon)?.check_level(self.level)?;
        check_pairs(&self.coefficients, self.truncation)?;
        Ok(())
    }
}

/// A vector-valued expansion: one coefficient list per norm residue, on the
/// exponent lattice (1/N)Z (lattice_denom = N, exponents are numerators).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VVDocument {
    pub schema_version: u32,
    pub level: u64,
    pub weight: i64,
    pub character: String,
    pub epsilon: BTreeMap<u64, i8>,
    pub lattice_denom: u64,
    pub truncation: i64,
    pub components: BTreeMap<u64, Vec<(i64, String)>>,
}

impl VVDocument {
    pub fn from_vvform(weight: i64, f: &VVForm) -> Self {
        let disc = f.disc();
        let trunc = f
            .components()
            .values()
            .map(|c| c.trunc())
            .min()
            .unwrap_or(0);
        VVDocument {
            schema_version: SCHEMA_VERSION,
            level: disc.level(),
            weight,
            character: "kronecker".into(),
            epsilon: sign_map(&disc.epsilon()),
            lattice_denom: disc.level(),
            truncation: trunc,
            components: f
                .components()
                .iter()
                .map(|(&r, c)| (r, coeff_pairs(c)))
                .collect(),
        }
    }

    pub fn vvform(&self) -> Result<VVForm, EpsError> {
        self.validate()?;
        let eps = signs_from_map(&self.epsilon)?;
        let disc = DiscForm::build(self.level, &eps)?;
        let mut comps = BTreeMap::new();
        for (&r, pairs) in &self.components {
            let parsed = check_pairs(pairs, self.truncation)?;
            comps.insert(r, series_from_pairs(self.lattice_denom, self.truncation, &parsed));
        }
        VVForm::new(disc, comps)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("document serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, EpsError> {
        let doc: VVDocument = serde_json::from_str(s)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<(), EpsError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(EpsError::Input(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        if self.character != "kronecker" {
            return Err(EpsError::Input(format!(
                "unsupported character kind {:?}",
                self.character
            )));
        }
        if self.lattice_denom != self.level {
            return Err(EpsError::Input(
                "vector-valued documents live on the (1/N)Z lattice".into(),
            ));
        }
        signs_from_map(&self.epsilon)?.check_level(self.level)?;
        for pairs in self.components.values() {
            check_pairs(pairs, self.truncation)?;
        }
        Ok(())
    }
}

/// A reduced basis with everything needed to rebuild it exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisDocument {
    pub schema_version: u32,
    pub generator_strategy_version: u32,
    pub level: u64,
    pub weight: i64,
    pub epsilon: BTreeMap<u64, i8>,
    pub truncation: i64,
    pub depth: i64,
    pub window_end: i64,
    pub cusp_orders: Vec<i64>,
    pub forms: BTreeMap<i64, Vec<(i64, String)>>,
}

impl BasisDocument {
    pub fn from_basis(basis: &ReducedBasis, depth: i64) -> Self {
        BasisDocument {
            schema_version: SCHEMA_VERSION,
            generator_strategy_version: GENERATOR_STRATEGY_VERSION,
            level: basis.spec.level,
            weight: basis.spec.weight,
            epsilon: sign_map(&basis.spec.eps),
            truncation: basis.spec.trunc,
            depth,
            window_end: basis.window_end,
            cusp_orders: basis.cusp_orders.clone(),
            forms: basis.forms.iter().map(|(&m, f)| (m, coeff_pairs(f))).collect(),
        }
    }

    pub fn basis(&self) -> Result<ReducedBasis, EpsError> {
        if self.schema_version != SCHEMA_VERSION
            || self.generator_strategy_version != GENERATOR_STRATEGY_VERSION
        {
            return Err(EpsError::Input("stale basis document version".into()));
        }
        let eps = signs_from_map(&self.epsilon)?;
        let spec = SpaceSpec::new(self.level, self.weight, eps, self.truncation)?;
        let mut forms = BTreeMap::new();
        for (&m, pairs) in &self.forms {
            let parsed = check_pairs(pairs, self.window_end)?;
            forms.insert(m, series_from_pairs(1, self.window_end, &parsed));
        }
        Ok(ReducedBasis {
            spec,
            window_end: self.window_end,
            forms,
            cusp_orders: self.cusp_orders.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("document serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, EpsError> {
        Ok(serde_json::from_str(s)?)
    }
}

/// File cache for reduced bases, keyed by every input that determines the
/// output, including the generator strategy version (so strategy changes
/// invalidate old entries by missing them). Writes go through a temp file
/// and an atomic rename.
pub struct BasisCache {
    dir: PathBuf,
}

impl BasisCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        BasisCache { dir: dir.into() }
    }

    /// Directory from EPSFORMS_CACHE, defaulting to ./.epsforms-cache.
    pub fn from_env() -> Self {
        let dir = std::env::var_os("EPSFORMS_CACHE")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("./.epsforms-cache"));
        BasisCache { dir }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn file_name(spec: &SpaceSpec, depth: i64) -> String {
        let eps: String = spec
            .eps
            .primes()
            .map(|(p, s)| format!("{p}{}", if s > 0 { "p" } else { "m" }))
            .collect();
        format!(
            "g{}-N{}-w{}-e{}-t{}-d{}.json",
            GENERATOR_STRATEGY_VERSION, spec.level, spec.weight, eps, spec.trunc, depth
        )
    }

    /// Cached basis for the exact spec and depth, if present and current.
    pub fn load(&self, spec: &SpaceSpec, depth: i64) -> Option<ReducedBasis> {
        let path = self.dir.join(Self::file_name(spec, depth));
        let text = fs::read_to_string(path).ok()?;
        let doc = BasisDocument::from_json(&text).ok()?;
        if doc.level != spec.level
            || doc.weight != spec.weight
            || doc.truncation != spec.trunc
            || doc.depth != depth
        {
            return None;
        }
        let basis = doc.basis().ok()?;
        (basis.spec.eps == spec.eps).then_some(basis)
    }

    /// Atomically persists a basis document.
    pub fn store(&self, basis: &ReducedBasis, depth: i64) -> Result<(), EpsError> {
        fs::create_dir_all(&self.dir)?;
        let doc = BasisDocument::from_basis(basis, depth);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(doc.to_json().as_bytes())?;
        tmp.flush()?;
        let path = self.dir.join(Self::file_name(&basis.spec, depth));
        tmp.persist(&path)
            .map_err(|e| EpsError::Io(e.error))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::EpsSpace;
    use crate::vvmf::psi;

    fn basis15() -> ReducedBasis {
        let eps = SignVector::from_pairs(&[(3, -1), (5, -1)]).unwrap();
        let sp = EpsSpace::new(SpaceSpec::new(15, -1, eps, 16).unwrap()).unwrap();
        sp.reduced_basis(7).unwrap()
    }

    #[test]
    fn document_round_trip_is_byte_identical() {
        let basis = basis15();
        let f = basis.form(-3).unwrap();
        let eps = basis.spec.eps.clone();
        let doc = QExpansionDocument::from_series(15, -1, &eps, f);
        let json = doc.to_json();
        let parsed = QExpansionDocument::from_json(&json).unwrap();
        assert_eq!(parsed.to_json(), json);
        assert!(parsed.series().unwrap().agrees_with(f));
    }

    #[test]
    fn document_rejects_non_canonical_data() {
        let basis = basis15();
        let eps = basis.spec.eps.clone();
        let mut doc = QExpansionDocument::from_series(15, -1, &eps, basis.form(-3).unwrap());
        doc.coefficients[0].1 = "2/4".into();
        assert!(matches!(doc.validate(), Err(EpsError::Input(_))));
        doc.coefficients[0].1 = "1/2".into();
        doc.coefficients.reverse();
        assert!(matches!(doc.validate(), Err(EpsError::Input(_))));
    }

    #[test]
    fn vv_document_round_trip() {
        let basis = basis15();
        let eps = basis.spec.eps.clone();
        let d = DiscForm::build(15, &eps).unwrap();
        let fv = psi(basis.form(-3).unwrap(), &d).unwrap();
        let doc = VVDocument::from_vvform(-1, &fv);
        let json = doc.to_json();
        let parsed = VVDocument::from_json(&json).unwrap();
        assert_eq!(parsed.to_json(), json);
        let back = parsed.vvform().unwrap();
        for (r, c) in fv.components() {
            assert!(back.component(*r).unwrap().agrees_with(c));
        }
    }

    #[test]
    fn cache_round_trip_matches_fresh_computation() {
        let tmp = tempfile::tempdir().unwrap();
        let cache = BasisCache::new(tmp.path());
        let basis = basis15();
        assert!(cache.load(&basis.spec, 7).is_none());
        cache.store(&basis, 7).unwrap();
        let loaded = cache.load(&basis.spec, 7).expect("cache hit");
        assert_eq!(loaded.window_end, basis.window_end);
        assert_eq!(loaded.cusp_orders, basis.cusp_orders);
        assert_eq!(
            loaded.forms.keys().collect::<Vec<_>>(),
            basis.forms.keys().collect::<Vec<_>>()
        );
        for (m, f) in &basis.forms {
            assert!(loaded.forms[m].agrees_with(f), "mismatch at order {m}");
        }
        // a second store and load stays byte-identical on disk
        let path = tmp.path().join(BasisCache::file_name(&basis.spec, 7));
        let bytes1 = fs::read(&path).unwrap();
        cache.store(&loaded, 7).unwrap();
        let bytes2 = fs::read(&path).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn stale_version_misses() {
        let tmp = tempfile::tempdir().unwrap();
        let cache = BasisCache::new(tmp.path());
        let basis = basis15();
        cache.store(&basis, 7).unwrap();
        // tamper the stored strategy version: the entry must be ignored
        let path = tmp.path().join(BasisCache::file_name(&basis.spec, 7));
        let text = fs::read_to_string(&path).unwrap();
        let tampered = text.replace(
            "\"generator_strategy_version\":1",
            "\"generator_strategy_version\":0",
        );
        assert_ne!(text, tampered, "tamper target not found");
        fs::write(&path, tampered).unwrap();
        assert!(cache.load(&basis.spec, 7).is_none());
    }
}
