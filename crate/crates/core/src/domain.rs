//! Core domain types: multiplicity sequences, flat indices, intervals,
//! sectors and the precision context.

use std::fmt;

use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mp;
use crate::source::SequenceSpec;

/// Frequencies `λ_n` with multiplicities `μ_n`, materialized at a fixed
/// binary precision.
///
/// The spec it came from is kept so that the same sequence can be rebuilt
/// exactly at a higher precision (see [`MultiplicitySequence::with_prec`]).
#[derive(Clone, Debug)]
pub struct MultiplicitySequence {
    entries: Vec<(Complex, u32)>,
    provenance: String,
    spec: Option<SequenceSpec>,
    prec: u32,
}

impl MultiplicitySequence {
    /// Builds a sequence from already materialized entries. It cannot be
    /// re-materialized at another precision.
    pub fn from_entries(entries: Vec<(Complex, u32)>, provenance: impl Into<String>) -> Self {
        let prec = entries.iter().map(|(z, _)| mp::prec_of(z)).max().unwrap_or(64);
        let entries = entries.into_iter().map(|(z, m)| (mp::cwith(prec, &z), m)).collect();
        MultiplicitySequence {
            entries,
            provenance: provenance.into(),
            spec: None,
            prec,
        }
    }

    pub(crate) fn from_spec(entries: Vec<(Complex, u32)>, provenance: String, spec: SequenceSpec, prec: u32) -> Self {
        MultiplicitySequence {
            entries,
            provenance,
            spec: Some(spec),
            prec,
        }
    }

    /// Convenience constructor for real frequencies given as `f64`.
    pub fn real(prec: u32, entries: &[(f64, u32)], provenance: &str) -> Self {
        let spec = SequenceSpec::explicit_real(entries);
        spec.materialize(entries.len(), prec)
            .map(|s| s.with_provenance(provenance))
            .expect("explicit sequence always materializes")
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn spec(&self) -> Option<&SequenceSpec> {
        self.spec.as_ref()
    }

    pub fn entries(&self) -> &[(Complex, u32)] {
        &self.entries
    }

    /// `λ_n`, 1-based.
    pub fn lambda(&self, n: usize) -> &Complex {
        &self.entries[n - 1].0
    }

    /// `μ_n`, 1-based.
    pub fn mu(&self, n: usize) -> u32 {
        self.entries[n - 1].1
    }

    /// First `n` entries.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        check_n(self, n)?;
        let mut out = self.clone();
        out.entries.truncate(n);
        Ok(out)
    }

    /// The same sequence at precision `prec`. Sequences with a spec are
    /// rebuilt from it; others are converted entry by entry.
    pub fn with_prec(&self, prec: u32) -> Self {
        if let Some(spec) = &self.spec {
            if let Ok(s) = spec.materialize(self.len(), prec) {
                return s.with_provenance(self.provenance.clone());
            }
        }
        MultiplicitySequence {
            entries: self.entries.iter().map(|(z, m)| (mp::cwith(prec, z), *m)).collect(),
            provenance: self.provenance.clone(),
            spec: self.spec.clone(),
            prec,
        }
    }

    /// `Σ_{n≤N} μ_n`.
    pub fn dimension(&self, n: usize) -> usize {
        self.entries[..n.min(self.len())].iter().map(|(_, m)| *m as usize).sum()
    }
}

pub(crate) fn check_n(seq: &MultiplicitySequence, n: usize) -> Result<()> {
    if n == 0 || n > seq.len() {
        return Err(Error::OutOfRange(format!(
            "N = {n} but the sequence has {} entries",
            seq.len()
        )));
    }
    Ok(())
}

/// Element `e_{n,k}(x) = x^k e^{λ_n x}`; `n` is 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlatIndex {
    pub n: usize,
    pub k: u32,
}

impl FlatIndex {
    pub fn new(n: usize, k: u32) -> Self {
        FlatIndex { n, k }
    }
}

impl fmt::Display for FlatIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.k)
    }
}

/// Enumerates `(1,0)…(1,μ_1−1),(2,0)…` up to frequency `n`.
pub fn flatten(seq: &MultiplicitySequence, n: usize) -> Result<Vec<FlatIndex>> {
    check_n(seq, n)?;
    let mut out = Vec::with_capacity(seq.dimension(n));
    for (i, (_, mu)) in seq.entries()[..n].iter().enumerate() {
        for k in 0..*mu {
            out.push(FlatIndex::new(i + 1, k));
        }
    }
    Ok(out)
}

/// Position of `idx` in the order produced by [`flatten`].
pub fn position(seq: &MultiplicitySequence, idx: FlatIndex) -> Option<usize> {
    if idx.n == 0 || idx.n > seq.len() || idx.k >= seq.mu(idx.n) {
        return None;
    }
    Some(seq.dimension(idx.n - 1) + idx.k as usize)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    ZeroFrequency { index: usize },
    ZeroMultiplicity { index: usize },
    Duplicate { index: usize, other: usize },
    ModulusOrder { index: usize },
    ArgOrder { index: usize },
}

impl Violation {
    pub fn index(&self) -> usize {
        match self {
            Violation::ZeroFrequency { index }
            | Violation::ZeroMultiplicity { index }
            | Violation::Duplicate { index, .. }
            | Violation::ModulusOrder { index }
            | Violation::ArgOrder { index } => *index,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroFrequency { index } => write!(f, "entry {index}: λ = 0"),
            Violation::ZeroMultiplicity { index } => write!(f, "entry {index}: μ = 0"),
            Violation::Duplicate { index, other } => write!(f, "entry {index}: duplicates entry {other}"),
            Violation::ModulusOrder { index } => write!(f, "entry {index}: |λ| smaller than its predecessor"),
            Violation::ArgOrder { index } => {
                write!(f, "entry {index}: equal modulus but arg not larger than its predecessor")
            }
        }
    }
}

/// Every ordering or distinctness violation, with 1-based indices. Arguments
/// are taken in (−π, π].
pub fn validate_sequence(seq: &MultiplicitySequence) -> Vec<Violation> {
    let mut out = Vec::new();
    let e = seq.entries();
    let prec = seq.prec();
    for (i, (z, mu)) in e.iter().enumerate() {
        if mp::is_zero(z) {
            out.push(Violation::ZeroFrequency { index: i + 1 });
        }
        if *mu == 0 {
            out.push(Violation::ZeroMultiplicity { index: i + 1 });
        }
        if let Some(j) = e[..i].iter().position(|(w, _)| w == z) {
            out.push(Violation::Duplicate { index: i + 1, other: j + 1 });
            continue;
        }
        if i > 0 {
            let prev = &e[i - 1].0;
            let (a, b) = (mp::abs(prev), mp::abs(z));
            if b < a {
                out.push(Violation::ModulusOrder { index: i + 1 });
            } else if a == b {
                let pa = Float::with_val(prec, prev.arg_ref());
                let pb = Float::with_val(prec, z.arg_ref());
                if pb <= pa {
                    out.push(Violation::ArgOrder { index: i + 1 });
                }
            }
        }
    }
    out
}

/// The interval `(γ, β)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntervalRepr")]
pub struct Interval {
    gamma: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct IntervalRepr {
    gamma: f64,
    beta: f64,
}

impl TryFrom<IntervalRepr> for Interval {
    type Error = Error;

    fn try_from(r: IntervalRepr) -> Result<Self> {
        Interval::new(r.gamma, r.beta)
    }
}

impl Interval {
    pub fn new(gamma: f64, beta: f64) -> Result<Self> {
        if !(gamma.is_finite() && beta.is_finite() && gamma < beta) {
            return Err(Error::invalid(format!("interval needs finite γ < β, got ({gamma}, {beta})")));
        }
        Ok(Interval { gamma, beta })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self) -> f64 {
        (self.beta + self.gamma) / 2.0
    }

    pub fn tau(&self) -> f64 {
        (self.beta - self.gamma) / 2.0
    }

    pub fn length(&self) -> f64 {
        self.beta - self.gamma
    }
}

/// `Θ_{η,β}`: `|Im z| ≤ |Re(z−β)| / tan η` and `Re z < β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub eta: f64,
    pub beta: f64,
}

impl Sector {
    pub fn new(eta: f64, beta: f64) -> Result<Self> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&eta) || !beta.is_finite() {
            return Err(Error::invalid(format!("sector needs η in [0, π/2) and finite β, got ({eta}, {beta})")));
        }
        Ok(Sector { eta, beta })
    }

    pub fn half_plane(beta: f64) -> Self {
        Sector { eta: 0.0, beta }
    }

    /// `None` when `z` is inside, otherwise the violated inequality.
    pub fn violation(&self, z: &Complex) -> Option<String> {
        let prec = mp::prec_of(z);
        let dx = Float::with_val(prec, z.real() - self.beta);
        if !dx.is_sign_negative() || dx.is_zero() {
            return Some(format!("Re z < β fails (β = {})", self.beta));
        }
        if self.eta > 0.0 {
            let lhs = Float::with_val(prec, z.imag().abs_ref()) * Float::with_val(prec, self.eta).tan();
            if lhs > dx.abs() {
                return Some(format!("|Im z / Re(z − β)| ≤ 1/tan η fails (η = {})", self.eta));
            }
        }
        None
    }
}

pub fn sector_contains(s: &Sector, z: &Complex) -> bool {
    s.violation(z).is_none()
}

/// Working precision and truncation orders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionContext {
    pub digits: u32,
    pub trunc_n: usize,
    pub taylor_m: usize,
    pub cos_k: usize,
    pub quad_q: usize,
    pub tol: f64,
}

impl PrecisionContext {
    pub fn new(digits: u32, trunc_n: usize) -> Result<Self> {
        let ctx = PrecisionContext {
            digits,
            trunc_n,
            taylor_m: 64,
            cos_k: 8,
            quad_q: 64,
            tol: default_tol(digits),
        };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<()> {
        if self.digits < 50 {
            return Err(Error::invalid(format!("digits must be at least 50, got {}", self.digits)));
        }
        if self.trunc_n == 0 || self.taylor_m == 0 || self.cos_k == 0 || self.quad_q == 0 {
            return Err(Error::invalid("truncation orders must be at least 1"));
        }
        // tol > 10^(10 - digits); below f64 range every positive tol qualifies
        let floor = 10f64.powi(10 - self.digits.min(300) as i32);
        if !(self.tol > 0.0 && self.tol.is_finite()) || (self.digits <= 300 && self.tol <= floor) {
            return Err(Error::invalid(format!("tol {} must exceed 10^(10-digits)", self.tol)));
        }
        Ok(())
    }

    pub fn prec(&self) -> u32 {
        mp::bits_for_digits(self.digits)
    }

    pub fn with_digits(&self, digits: u32) -> Self {
        PrecisionContext { digits, ..self.clone() }
    }
}

fn default_tol(digits: u32) -> f64 {
    10f64.powf(-(f64::from(digits) / 3.0).min(300.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 128;

    fn seq(e: &[(f64, u32)]) -> MultiplicitySequence {
        MultiplicitySequence::real(P, e, "test")
    }

    #[test]
    fn validates_spec_examples() {
        assert!(validate_sequence(&seq(&[(3.0, 2), (9.0, 4)])).is_empty());
        assert_eq!(
            validate_sequence(&seq(&[(1.0, 1), (1.0, 1)])),
            vec![Violation::Duplicate { index: 2, other: 1 }]
        );
        assert_eq!(validate_sequence(&seq(&[(2.0, 1), (1.0, 1)])), vec![Violation::ModulusOrder { index: 2 }]);
    }

    #[test]
    fn reports_every_violation() {
        let v = validate_sequence(&seq(&[(0.0, 1), (2.0, 0), (1.0, 1), (1.0, 1)]));
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn arg_tie_break() {
        let a = MultiplicitySequence::from_entries(
            vec![(mp::complex(P, 0.0, -1.0), 1), (mp::complex(P, 1.0, 0.0), 1), (mp::complex(P, 0.0, 1.0), 1)],
            "t",
        );
        assert!(validate_sequence(&a).is_empty());
        let b = MultiplicitySequence::from_entries(vec![(mp::complex(P, 0.0, 1.0), 1), (mp::complex(P, 1.0, 0.0), 1)], "t");
        assert_eq!(validate_sequence(&b), vec![Violation::ArgOrder { index: 2 }]);
    }

    #[test]
    fn flatten_examples() {
        let s = seq(&[(3.0, 2), (9.0, 4)]);
        let f = flatten(&s, 2).unwrap();
        let pairs: Vec<(usize, u32)> = f.iter().map(|i| (i.n, i.k)).collect();
        assert_eq!(pairs, vec![(1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (2, 3)]);
        assert_eq!(flatten(&s, 1).unwrap(), vec![FlatIndex::new(1, 0), FlatIndex::new(1, 1)]);
        assert_eq!(flatten(&seq(&[(1.0, 1)]), 1).unwrap(), vec![FlatIndex::new(1, 0)]);
        assert!(matches!(flatten(&s, 3), Err(Error::OutOfRange(_))));
        for (p, idx) in f.iter().enumerate() {
            assert_eq!(position(&s, *idx), Some(p));
        }
    }

    #[test]
    fn sector_examples() {
        let h = Sector::half_plane(1.0);
        assert!(sector_contains(&h, &mp::complex(P, 0.5, 0.0)));
        assert!(!sector_contains(&h, &mp::complex(P, 1.0, 0.0)));
        let s = Sector::new(std::f64::consts::FRAC_PI_4, 0.0).unwrap();
        assert!(sector_contains(&s, &mp::complex(P, -1.0, 0.5)));
        assert!(!sector_contains(&s, &mp::complex(P, -1.0, 1.5)));
    }

    #[test]
    fn interval_derived_values() {
        let i = Interval::new(-1.0, 3.0).unwrap();
        assert_eq!((i.sigma(), i.tau()), (1.0, 2.0));
        assert!(Interval::new(1.0, 1.0).is_err());
        let j: std::result::Result<Interval, _> = serde_json::from_str(r#"{"gamma":2,"beta":1}"#);
        assert!(j.is_err());
    }

    #[test]
    fn precision_context_rules() {
        assert!(PrecisionContext::new(40, 4).is_err());
        let c = PrecisionContext::new(100, 4).unwrap();
        assert!(c.tol < 1e-30);
        let mut bad = c.clone();
        bad.tol = 1e-95;
        assert!(bad.validate().is_err());
    }
}
