//! Taylor–Dirichlet series `Σ_n Σ_k c_{n,k} z^k e^{λ_n z}` over a finite
//! multiplicity sequence.

use std::collections::BTreeMap;

use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

use crate::domain::{check_n, position, FlatIndex, MultiplicitySequence, Sector};
use crate::error::{Error, Result};
use crate::mp::{self, Real};
use crate::source::{Scalar, SequenceSpec};

#[derive(Clone, Debug)]
pub struct TaylorDirichletSeries {
    seq: MultiplicitySequence,
    coeffs: BTreeMap<FlatIndex, Complex>,
    sector: Sector,
}

impl TaylorDirichletSeries {
    pub fn new(seq: MultiplicitySequence, coeffs: BTreeMap<FlatIndex, Complex>, sector: Sector) -> Result<Self> {
        for idx in coeffs.keys() {
            if position(&seq, *idx).is_none() {
                return Err(Error::OutOfRange(format!("coefficient index {idx} outside the sequence")));
            }
        }
        let prec = seq.prec();
        let coeffs = coeffs.into_iter().map(|(k, v)| (k, mp::cwith(prec, &v))).collect();
        Ok(TaylorDirichletSeries { seq, coeffs, sector })
    }

    /// Coefficients listed in [`crate::domain::flatten`] order.
    pub fn from_dense(seq: MultiplicitySequence, indices: &[FlatIndex], values: &[Complex], sector: Sector) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::invalid("index and value lists differ in length"));
        }
        let map = indices.iter().copied().zip(values.iter().cloned()).collect();
        Self::new(seq, map, sector)
    }

    pub fn seq(&self) -> &MultiplicitySequence {
        &self.seq
    }

    pub fn coeffs(&self) -> &BTreeMap<FlatIndex, Complex> {
        &self.coeffs
    }

    pub fn coeff(&self, idx: FlatIndex) -> Complex {
        self.coeffs.get(&idx).cloned().unwrap_or_else(|| mp::czero(self.seq.prec()))
    }

    pub fn sector(&self) -> &Sector {
        &self.sector
    }

    pub fn prec(&self) -> u32 {
        self.seq.prec()
    }

    /// Largest frequency index carrying a coefficient.
    pub fn support_n(&self) -> usize {
        self.coeffs.keys().map(|i| i.n).max().unwrap_or(0)
    }

    /// `C_n = max_k |c_{n,k}|`.
    pub fn star_coeff(&self, n: usize) -> Float {
        let mut m = mp::float(self.prec(), 0.0);
        for (_, v) in self.coeffs.range(FlatIndex::new(n, 0)..=FlatIndex::new(n, u32::MAX)) {
            m = m.max(&mp::abs(v));
        }
        m
    }

    /// Multiplies every coefficient by `w`.
    pub fn scaled(&self, w: &Complex) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, v)| (*k, Complex::with_val(self.prec(), v * w)))
            .collect();
        TaylorDirichletSeries {
            seq: self.seq.clone(),
            coeffs,
            sector: self.sector,
        }
    }

    /// `Σ_{n≤N} Σ_k c_{n,k} z^k e^{λ_n z}` without the sector check.
    pub fn partial_sum(&self, z: &Complex, n: usize) -> Complex {
        let prec = self.prec();
        let z = mp::cwith(prec, z);
        let mut acc = mp::czero(prec);
        for (idx, c) in self.coeffs.range(..FlatIndex::new(n + 1, 0)) {
            let e = Complex::with_val(prec, self.seq.lambda(idx.n) * &z).exp();
            acc += Complex::with_val(prec, c * mp::cpow(&z, idx.k)) * e;
        }
        acc
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesValue {
    pub value: mp::Cplx,
    pub tail_bound: Real,
    pub eps: f64,
    pub m_hat: Real,
}

/// Partial sum over `n ≤ N` and the envelope
/// `Σ_{n>N} m̂ μ_n max(1,|z|)^{μ_n} e^{(Re z − β + 2ε) Re λ_n}`, `ε = (β − Re z)/4`,
/// summed over the remaining entries of the sequence.
pub fn td_eval(s: &TaylorDirichletSeries, z: &Complex, n: usize) -> Result<SeriesValue> {
    check_n(s.seq(), n)?;
    if let Some(v) = s.sector().violation(z) {
        return Err(Error::OutsideSector(v));
    }
    let prec = s.prec();
    let beta = s.sector().beta;
    let x = mp::cwith(prec, z).real().to_f64();
    let eps = (beta - x) / 4.0;
    let bound = bound_check(s, beta, eps)?;
    let zabs = mp::abs(z).max(&mp::float(prec, 1.0));
    let mut tail = mp::float(prec, 0.0);
    for m in n + 1..=s.seq().len() {
        let mu = s.seq().mu(m);
        let lam_re = s.seq().lambda(m).real();
        let env = Float::with_val(prec, lam_re * (x - beta + 2.0 * eps)).exp();
        let t = Float::with_val(prec, &bound.m_hat.0 * mu) * Float::with_val(prec, rug::ops::Pow::pow(&zabs, mu)) * env;
        tail += t;
    }
    Ok(SeriesValue {
        value: mp::Cplx(s.partial_sum(z, n)),
        tail_bound: Real(tail),
        eps,
        m_hat: bound.m_hat,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Abscissa {
    /// `log C_n / Re λ_n`; `None` where `C_n = 0`.
    pub ratios: Vec<Option<Real>>,
    /// Max over the last half of the prefix; `-inf` when every coefficient there vanishes.
    pub a: Real,
    /// `−a`.
    pub beta_hat: Real,
}

impl Abscissa {
    /// Coefficient bound for apex `β` holds on the prefix iff `a ≤ −β + slack`.
    pub fn satisfies(&self, beta: f64, slack: f64) -> bool {
        self.a.0 <= slack - beta
    }
}

pub fn star_abscissa(s: &TaylorDirichletSeries, n: usize) -> Result<Abscissa> {
    check_n(s.seq(), n)?;
    if n < 6 {
        return Err(Error::invalid("abscissa estimate needs N ≥ 6"));
    }
    let prec = s.prec();
    let ratios: Vec<Option<Float>> = (1..=n)
        .map(|m| {
            let c = s.star_coeff(m);
            if c.is_zero() {
                None
            } else {
                Some(c.ln() / s.seq().lambda(m).real())
            }
        })
        .collect();
    let a = ratios[n / 2..]
        .iter()
        .flatten()
        .max_by(|x, y| x.partial_cmp(y).unwrap())
        .cloned()
        .unwrap_or_else(|| Float::with_val(prec, rug::float::Special::NegInfinity));
    let beta_hat = Float::with_val(prec, -&a);
    Ok(Abscissa {
        ratios: ratios.into_iter().map(|r| r.map(Real)).collect(),
        a: Real(a),
        beta_hat: Real(beta_hat),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub beta: f64,
    pub eps: f64,
    /// `max_{n,k} |c_{n,k}| e^{(β−ε) Re λ_n}`.
    pub m_hat: Real,
    pub argmax: Option<FlatIndex>,
    /// The maximum sits in the first half of the prefix.
    pub bounded: bool,
}

pub fn bound_check(s: &TaylorDirichletSeries, beta: f64, eps: f64) -> Result<BoundCheck> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("ε must be positive, got {eps}")));
    }
    let prec = s.prec();
    let mut best = mp::float(prec, 0.0);
    let mut argmax = None;
    for (idx, c) in s.coeffs() {
        let w = Float::with_val(prec, s.seq().lambda(idx.n).real() * (beta - eps)).exp();
        let v = mp::abs(c) * w;
        if v > best {
            best = v;
            argmax = Some(*idx);
        }
    }
    let half = s.seq().len().div_ceil(2);
    Ok(BoundCheck {
        beta,
        eps,
        bounded: argmax.is_none_or(|i| i.n <= half),
        m_hat: Real(best),
        argmax,
    })
}

/// Series file: `{"seq": …, "coeffs": [[n, k, re, im], …], "sector": {"eta": …, "beta": …}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesFile {
    pub seq: SequenceSpec,
    /// Entries of the sequence to materialize; defaults to the largest `n` in `coeffs`.
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub coeffs: Vec<(usize, u32, Scalar, Scalar)>,
    pub sector: Sector,
}

impl SeriesFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("series file: {e}")))
    }

    pub fn support_n(&self) -> usize {
        self.coeffs.iter().map(|c| c.0).max().unwrap_or(1)
    }

    pub fn build(&self, n: Option<usize>, prec: u32) -> Result<TaylorDirichletSeries> {
        let len = n.or(self.n).unwrap_or_else(|| self.support_n()).max(self.support_n());
        let seq = self.seq.materialize(len, prec)?;
        let sector = Sector::new(self.sector.eta, self.sector.beta)?;
        let mut map = BTreeMap::new();
        for (n, k, re, im) in &self.coeffs {
            let v = Complex::with_val(prec, (re.to_float(prec)?, im.to_float(prec)?));
            if map.insert(FlatIndex::new(*n, *k), v).is_some() {
                return Err(Error::Parse(format!("coefficient ({n},{k}) given twice")));
            }
        }
        TaylorDirichletSeries::new(seq, map, sector)
    }

    /// Writes a series back out with full-precision decimal strings.
    pub fn from_series(spec: SequenceSpec, s: &TaylorDirichletSeries) -> Self {
        let digits = mp::digits_for_bits(s.prec());
        let coeffs = s
            .coeffs()
            .iter()
            .map(|(i, v)| {
                let [re, im] = mp::fmt_pair(v, digits);
                (i.n, i.k, Scalar::Text(re), Scalar::Text(im))
            })
            .collect();
        SeriesFile {
            seq: spec,
            n: Some(s.seq().len()),
            coeffs,
            sector: *s.sector(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::fixture;

    const P: u32 = 200;

    fn squares(n: usize) -> MultiplicitySequence {
        fixture("example_i").unwrap().spec().materialize(n, P).unwrap()
    }

    fn series_with(n: usize, f: impl Fn(&Float) -> Float, beta: f64) -> TaylorDirichletSeries {
        let seq = squares(n);
        let map = (1..=n)
            .map(|m| (FlatIndex::new(m, 0), mp::from_real(&f(seq.lambda(m).real()))))
            .collect();
        TaylorDirichletSeries::new(seq, map, Sector::half_plane(beta)).unwrap()
    }

    #[test]
    fn single_term_at_zero() {
        let seq = MultiplicitySequence::real(P, &[(1.0, 1)], "t");
        let map = BTreeMap::from([(FlatIndex::new(1, 0), mp::cone(P))]);
        let s = TaylorDirichletSeries::new(seq, map, Sector::half_plane(1.0)).unwrap();
        let v = td_eval(&s, &mp::czero(P), 1).unwrap();
        assert_eq!(v.value.0, mp::cone(P));
        assert!(v.tail_bound.0.is_zero());
    }

    #[test]
    fn sum_of_gaussian_weights() {
        let s = series_with(12, |l| Float::with_val(P, -l).exp(), 1.0);
        let v = td_eval(&s, &mp::czero(P), 12).unwrap();
        let got = v.value.0.real().to_f64();
        assert!((got - 0.386_318_602_3).abs() < 1e-9, "{got}");
        assert!(matches!(td_eval(&s, &mp::complex(P, 1.0, 0.0), 12), Err(Error::OutsideSector(_))));
    }

    #[test]
    fn abscissa_examples() {
        let a = star_abscissa(&series_with(12, |l| Float::with_val(P, -l).exp(), 1.0), 12).unwrap();
        assert!((a.a.0.to_f64() + 1.0).abs() < 1e-40);
        assert!((a.beta_hat.0.to_f64() - 1.0).abs() < 1e-40);
        let b = star_abscissa(&series_with(12, |_| mp::float(P, 1.0), 0.0), 12).unwrap();
        assert!(b.a.0.is_zero());
        let c = star_abscissa(
            &series_with(12, |l| (Float::with_val(P, l * -2i32) + Float::with_val(P, l.sqrt_ref())).exp(), 1.0),
            12,
        )
        .unwrap();
        let av = c.a.0.to_f64();
        assert!(av > -2.0 && av < -1.7, "{av}");
    }

    #[test]
    fn bound_examples() {
        let (beta, eps) = (1.0, 0.2);
        let s = series_with(10, |l| Float::with_val(P, l * (eps / 2.0 - beta)).exp(), beta);
        let b = bound_check(&s, beta, eps).unwrap();
        assert!(b.bounded);
        let s = series_with(10, |l| Float::with_val(P, l * (2.0 * eps - beta)).exp(), beta);
        assert!(!bound_check(&s, beta, eps).unwrap().bounded);
        let z = series_with(10, |_| mp::float(P, 0.0), beta);
        let b = bound_check(&z, beta, eps).unwrap();
        assert!(b.m_hat.0.is_zero() && b.bounded);
    }

    #[test]
    fn series_file_round_trip() {
        let text = r#"{"seq":{"kind":"generator","name":"squares"},"coeffs":[[1,0,"0.5",0],[3,0,1,"-2"]],"sector":{"eta":0,"beta":1}}"#;
        let f = SeriesFile::parse(text).unwrap();
        let s = f.build(Some(4), P).unwrap();
        assert_eq!(s.seq().len(), 4);
        assert_eq!(s.coeff(FlatIndex::new(3, 0)), mp::complex(P, 1.0, -2.0));
        let back = SeriesFile::from_series(f.seq.clone(), &s);
        let again = back.build(None, P).unwrap();
        assert_eq!(again.coeff(FlatIndex::new(1, 0)), s.coeff(FlatIndex::new(1, 0)));
        assert!(SeriesFile::parse(r#"{"seq":{"kind":"generator","name":"squares"}}"#).is_err());
    }
}
