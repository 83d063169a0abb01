//! Finite-prefix diagnostics for a multiplicity sequence: the convergence
//! and sector conditions, counting functions, the geometric interpolation
//! conditions, separation and the condensation index.
//!
//! Limits cannot be decided on a prefix, so every verdict is a trend rule
//! applied to the raw ratios, and the ratios are always returned with it.

use rug::{Complex, Float};
use serde::Serialize;

use crate::domain::{check_n, MultiplicitySequence};
use crate::error::{Error, Result};
use crate::mp::{self, Real};
use crate::products::{derivative_factor, ProductKind};

#[derive(Clone, Debug, Serialize)]
pub struct ConditionA {
    pub partials: Vec<Real>,
    /// `exp(mean log(a_{n+1}/a_n))` over the last quarter of increments.
    pub ratio: f64,
    /// Least-squares slope of `log a_n` against `log n` over the same window.
    pub exponent: f64,
    pub converging: bool,
}

/// Partial sums `S_N = Σ_{n≤N} μ_n/|λ_n|`. The verdict is "converging" when
/// the tail increments decay geometrically (ratio < 0.99) or faster than
/// `n^{−1.05}`.
pub fn condition_a_partials(seq: &MultiplicitySequence, n: usize) -> Result<ConditionA> {
    check_n(seq, n)?;
    if n < 2 {
        return Err(Error::invalid("condition A needs N ≥ 2"));
    }
    let prec = seq.prec();
    let incs: Vec<Float> = seq.entries()[..n]
        .iter()
        .map(|(l, m)| Float::with_val(prec, *m) / mp::abs(l))
        .collect();
    let mut partials = Vec::with_capacity(n);
    let mut s = mp::float(prec, 0.0);
    for a in &incs {
        s += a;
        partials.push(s.clone());
    }
    let w = (n / 4).max(3).min(n);
    let start = n - w;
    let logs: Vec<f64> = incs[start..].iter().map(|a| a.clone().ln().to_f64()).collect();
    let steps = (logs.len() - 1) as f64;
    let ratio = if steps > 0.0 { ((logs[logs.len() - 1] - logs[0]) / steps).exp() } else { 1.0 };
    let xs: Vec<f64> = (start + 1..=n).map(|i| (i as f64).ln()).collect();
    let exponent = slope(&xs, &logs);
    Ok(ConditionA {
        partials: mp::reals(partials),
        ratio,
        exponent,
        converging: ratio < 0.99 || exponent < -1.05,
    })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `n_Λ(t) = Σ_{|λ_n| ≤ t} μ_n` over the prefix.
pub fn counting(seq: &MultiplicitySequence, n: usize, t: &Float) -> Result<u64> {
    check_n(seq, n)?;
    Ok(seq.entries()[..n]
        .iter()
        .filter(|(l, _)| mp::abs(l) <= *t)
        .map(|(_, m)| u64::from(*m))
        .sum())
}

/// `n_Λ(t, z₀) = Σ_{|λ_n − z₀| ≤ t} μ_n`.
pub fn counting_about(seq: &MultiplicitySequence, n: usize, z0: &Complex, t: &Float) -> Result<u64> {
    check_n(seq, n)?;
    let prec = seq.prec();
    Ok(seq.entries()[..n]
        .iter()
        .filter(|(l, _)| mp::abs(&Complex::with_val(prec, l - z0)) <= *t)
        .map(|(_, m)| u64::from(*m))
        .sum())
}

/// `N(r, Λ) = ∫_0^r n_Λ(t)/t dt = Σ_{|λ_n| ≤ r} μ_n log(r/|λ_n|)`.
pub fn integrated_counting(seq: &MultiplicitySequence, n: usize, r: &Float) -> Result<Float> {
    check_n(seq, n)?;
    let prec = seq.prec();
    let mut acc = mp::float(prec, 0.0);
    for (l, m) in &seq.entries()[..n] {
        let a = mp::abs(l);
        if a <= *r {
            acc += Float::with_val(prec, r / &a).ln() * *m;
        }
    }
    Ok(acc)
}

/// `N(|λ_n|, λ_n, Λ) = Σ_{0<|λ_n−λ_k|≤|λ_n|} μ_k log|λ_n/(λ_n−λ_k)| + μ_n log|λ_n|`.
pub fn integrated_about(seq: &MultiplicitySequence, n_trunc: usize, n: usize) -> Result<Float> {
    check_n(seq, n_trunc)?;
    if n == 0 || n > n_trunc {
        return Err(Error::OutOfRange(format!("index {n} outside 1..={n_trunc}")));
    }
    let prec = seq.prec();
    let lam = seq.lambda(n);
    let r = mp::abs(lam);
    let mut acc = Float::with_val(prec, r.ln_ref()) * seq.mu(n);
    for (k, (l, m)) in seq.entries()[..n_trunc].iter().enumerate() {
        if k + 1 == n {
            continue;
        }
        let d = mp::abs(&Complex::with_val(prec, lam - l));
        if !d.is_zero() && d <= r {
            acc += Float::with_val(prec, &r / &d).ln() * *m;
        }
    }
    Ok(acc)
}

/// Trend evidence for an `o(·)` statement about a ratio sequence.
#[derive(Clone, Debug, Serialize)]
pub struct TrendEvidence {
    pub ratios: Vec<Real>,
    pub last_third_nonincreasing: bool,
    pub peak: Real,
    pub last: Real,
    /// Last third non-increasing and the last ratio at most half the peak.
    pub consistent: bool,
}

pub fn o_trend(ratios: Vec<Float>) -> TrendEvidence {
    let len = ratios.len();
    let prec = ratios.first().map(|x| x.prec()).unwrap_or(64);
    let t = (len / 3).max(2).min(len);
    let tail = &ratios[len - t..];
    let slack = mp::float(prec, 1e-9);
    let tiny = mp::pow10(prec, -30);
    let nonincreasing = tail.windows(2).all(|w| {
        let bound = Float::with_val(prec, &w[0] * Float::with_val(prec, 1u32 + &slack)) + &tiny;
        w[1] <= bound
    });
    let peak = mp::max_float(&ratios).unwrap_or_else(|| mp::float(prec, 0.0));
    let last = ratios.last().cloned().unwrap_or_else(|| mp::float(prec, 0.0));
    let half = Float::with_val(prec, &peak / 2u32);
    let consistent = nonincreasing && last <= half;
    TrendEvidence {
        ratios: mp::reals(ratios),
        last_third_nonincreasing: nonincreasing,
        peak: Real(peak),
        last: Real(last),
        consistent,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometricReport {
    /// `N(|λ_j|, Λ)/|λ_j|`
    pub condition_i: TrendEvidence,
    /// `N(|λ_n|, λ_n, Λ)/|λ_n|`
    pub condition_ii: TrendEvidence,
}

pub fn geometric_conditions(seq: &MultiplicitySequence, n: usize) -> Result<GeometricReport> {
    check_n(seq, n)?;
    if n < 6 {
        return Err(Error::invalid("geometric conditions need N ≥ 6"));
    }
    let mut one = Vec::with_capacity(n);
    let mut two = Vec::with_capacity(n);
    for j in 1..=n {
        let r = mp::abs(seq.lambda(j));
        one.push(integrated_counting(seq, n, &r)? / &r);
        two.push(integrated_about(seq, n, j)? / &r);
    }
    Ok(GeometricReport {
        condition_i: o_trend(one),
        condition_ii: o_trend(two),
    })
}

/// `μ_n log|λ_n| / |λ_n|`, which must tend to 0 for interpolation.
pub fn necessary_condition(seq: &MultiplicitySequence, n: usize) -> Result<TrendEvidence> {
    check_n(seq, n)?;
    let ratios = seq.entries()[..n]
        .iter()
        .map(|(l, m)| {
            let a = mp::abs(l);
            Float::with_val(seq.prec(), a.ln_ref()) * *m / a
        })
        .collect();
    Ok(o_trend(ratios))
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    /// `n_Λ(|λ_j|)/|λ_j|`
    pub density: TrendEvidence,
    /// Largest `δ` on the grid `0.1·2^{−j/4}` such that `|λ_n − λ_k| ≤ δ|λ_k|` forces `n = k`.
    pub delta: Option<f64>,
}

pub fn separation(seq: &MultiplicitySequence, n: usize) -> Result<SeparationReport> {
    check_n(seq, n)?;
    let prec = seq.prec();
    let mut density = Vec::with_capacity(n);
    for j in 1..=n {
        let r = mp::abs(seq.lambda(j));
        density.push(Float::with_val(prec, counting(seq, n, &r)?) / r);
    }
    let mut worst: Option<Float> = None;
    for k in 1..=n {
        let lk = seq.lambda(k);
        let ak = mp::abs(lk);
        for m in 1..=n {
            if m == k {
                continue;
            }
            let rel = mp::abs(&Complex::with_val(prec, seq.lambda(m) - lk)) / &ak;
            if worst.as_ref().is_none_or(|w| rel < *w) {
                worst = Some(rel);
            }
        }
    }
    let delta = match worst {
        None => Some(0.1 * 2f64.powf(-0.25)),
        Some(w) => (1..=200).map(|j| 0.1 * 2f64.powf(-(j as f64) / 4.0)).find(|d| w > *d),
    };
    Ok(SeparationReport {
        density: o_trend(density),
        delta,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub eps: f64,
    /// `inf_{k≠n} |λ_n − λ_k|` over the prefix.
    pub gaps: Vec<Real>,
    /// `min_n gap_n · e^{ε|λ_n|/μ_n}`.
    pub m_eps: Real,
    /// `m_ε/2 · e^{−ε|λ_n|/μ_n}`
    pub radii_d: Vec<Real>,
    /// `m_ε/6 · e^{−ε|λ_n|/μ_n}`, shared by the C and P disks.
    pub radii_c: Vec<Real>,
    pub disjoint: bool,
}

impl GapReport {
    pub fn radii_p(&self) -> Vec<Float> {
        self.radii_c.iter().map(|r| r.0.clone()).collect()
    }
}

pub fn gap_check(seq: &MultiplicitySequence, n: usize, eps: f64) -> Result<GapReport> {
    check_n(seq, n)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("ε must be positive, got {eps}")));
    }
    if n < 2 {
        return Err(Error::invalid("gap check needs at least two frequencies"));
    }
    let prec = seq.prec();
    let mut gaps = Vec::with_capacity(n);
    for i in 1..=n {
        let mut g: Option<Float> = None;
        for k in 1..=n {
            if k != i {
                let d = mp::abs(&Complex::with_val(prec, seq.lambda(i) - seq.lambda(k)));
                if g.as_ref().is_none_or(|x| d < *x) {
                    g = Some(d);
                }
            }
        }
        let g = g.expect("n ≥ 2");
        if g.is_zero() {
            return Err(Error::invalid(format!("frequency {i} is duplicated")));
        }
        gaps.push(g);
    }
    let weights: Vec<Float> = (1..=n)
        .map(|i| (mp::abs(seq.lambda(i)) * eps / seq.mu(i)).exp())
        .collect();
    let m = gaps
        .iter()
        .zip(&weights)
        .map(|(g, w)| Float::with_val(prec, g * w))
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .expect("n ≥ 2");
    let radii_d: Vec<Float> = weights.iter().map(|w| Float::with_val(prec, &m / w) / 2u32).collect();
    let radii_c: Vec<Float> = weights.iter().map(|w| Float::with_val(prec, &m / w) / 6u32).collect();
    let mut disjoint = true;
    for i in 0..n {
        for k in i + 1..n {
            let d = mp::abs(&Complex::with_val(prec, seq.lambda(i + 1) - seq.lambda(k + 1)));
            if Float::with_val(prec, &radii_d[i] + &radii_d[k]) > d {
                disjoint = false;
            }
        }
    }
    Ok(GapReport {
        eps,
        gaps: mp::reals(gaps),
        m_eps: Real(m),
        radii_d: mp::reals(radii_d),
        radii_c: mp::reals(radii_c),
        disjoint,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Condensation {
    /// `−log|F′(λ_n)|/|λ_n|` for every `n ≤ N`.
    pub ratios: Vec<Real>,
    /// Max of the ratios over the last half of the prefix.
    pub estimate: Real,
}

/// Estimate of `c(Λ)` with `F(z) = ∏_{n≤N}(1 − z²/λ_n²)`; simple frequencies only.
pub fn condensation_index(seq: &MultiplicitySequence, n: usize) -> Result<Condensation> {
    check_n(seq, n)?;
    if n < 6 {
        return Err(Error::invalid("condensation index needs N ≥ 6"));
    }
    if let Some(i) = (1..=n).find(|&i| seq.mu(i) > 1) {
        return Err(Error::invalid(format!(
            "condensation index needs simple frequencies, μ_{i} = {}",
            seq.mu(i)
        )));
    }
    let prec = seq.prec();
    let mut ratios = Vec::with_capacity(n);
    for i in 1..=n {
        let d = mp::abs(&derivative_factor(ProductKind::FEven, seq, n, i)?);
        if d.is_zero() {
            return Err(Error::PrecisionInsufficient {
                required: u32::MAX,
                available: mp::digits_for_bits(prec),
            });
        }
        ratios.push(-d.ln() / mp::abs(seq.lambda(i)));
    }
    let estimate = mp::max_float(&ratios[n / 2..]).expect("non-empty tail");
    Ok(Condensation {
        ratios: mp::reals(ratios),
        estimate: Real(estimate),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionB {
    /// `max_n |arg λ_n|` over the prefix.
    pub eta_hat: Real,
    pub pass: bool,
}

pub fn condition_b(seq: &MultiplicitySequence, n: usize) -> Result<ConditionB> {
    check_n(seq, n)?;
    let prec = seq.prec();
    let eta = seq.entries()[..n]
        .iter()
        .map(|(l, _)| Float::with_val(prec, l.arg_ref()).abs())
        .max_by(|a, b| a.partial_cmp(b).unwrap())
        .expect("n ≥ 1");
    let half_pi = mp::pi(prec) / 2u32;
    Ok(ConditionB {
        pass: eta < half_pi,
        eta_hat: Real(eta),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassReport {
    pub provenance: String,
    pub n: usize,
    pub condition_a: ConditionA,
    pub condition_b: ConditionB,
    pub geometric: GeometricReport,
    pub necessary: TrendEvidence,
    pub separation: SeparationReport,
    pub gap: GapReport,
    /// `Err` text when the index is undefined (multiple frequencies).
    pub condensation: std::result::Result<Condensation, String>,
}

impl ClassReport {
    /// Every verdict passes.
    pub fn all_pass(&self) -> bool {
        self.condition_a.converging
            && self.condition_b.pass
            && self.geometric.condition_i.consistent
            && self.geometric.condition_ii.consistent
            && self.necessary.consistent
    }
}

pub fn analyze(seq: &MultiplicitySequence, n: usize, eps: f64) -> Result<ClassReport> {
    check_n(seq, n)?;
    let condensation = match condensation_index(seq, n) {
        Ok(c) => Ok(c),
        Err(Error::Invalid(msg)) => Err(msg),
        Err(e) => return Err(e),
    };
    Ok(ClassReport {
        provenance: seq.provenance().to_string(),
        n,
        condition_a: condition_a_partials(seq, n)?,
        condition_b: condition_b(seq, n)?,
        geometric: geometric_conditions(seq, n)?,
        necessary: necessary_condition(seq, n)?,
        separation: separation(seq, n)?,
        gap: gap_check(seq, n, eps)?,
        condensation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::fixture;

    const P: u32 = 340;

    fn real_seq(e: &[(f64, u32)]) -> MultiplicitySequence {
        MultiplicitySequence::real(P, e, "t")
    }

    fn squares(n: usize) -> MultiplicitySequence {
        fixture("example_i").unwrap().spec().materialize(n, P).unwrap()
    }

    fn f(x: &Real) -> f64 {
        x.0.to_f64()
    }

    #[test]
    fn condition_a_examples() {
        let a = condition_a_partials(&squares(4), 4).unwrap();
        let got: Vec<f64> = a.partials.iter().map(f).collect();
        let want = [1.0, 1.25, 1.25 + 1.0 / 9.0, 1.25 + 1.0 / 9.0 + 1.0 / 16.0];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-14);
        }
        let v = fixture("example_v").unwrap().spec().materialize(3, P).unwrap();
        let b = condition_a_partials(&v, 3).unwrap();
        let want = [2.0 / 3.0, 10.0 / 9.0, 38.0 / 27.0];
        for (g, w) in b.partials.iter().map(f).zip(want) {
            assert!((g - w).abs() < 1e-14);
        }
        let h: Vec<(f64, u32)> = (1..=200).map(|k| (k as f64, 1)).collect();
        assert!(!condition_a_partials(&real_seq(&h), 200).unwrap().converging);
        assert!(condition_a_partials(&squares(40), 40).unwrap().converging);
    }

    #[test]
    fn counting_examples() {
        let v = fixture("example_v").unwrap().spec().materialize(4, P).unwrap();
        assert_eq!(counting(&v, 4, &mp::float(P, 3.0)).unwrap(), 2);
        assert_eq!(counting(&v, 4, &mp::float(P, 9.0)).unwrap(), 6);
        assert_eq!(counting(&v, 4, &mp::float(P, 2.5)).unwrap(), 0);
        let z0 = mp::complex(P, 9.0, 0.0);
        assert_eq!(counting_about(&v, 4, &z0, &mp::float(P, 6.0)).unwrap(), 6);
    }

    #[test]
    fn integrated_about_examples() {
        let s = squares(6);
        let v = integrated_about(&s, 6, 2).unwrap().to_f64();
        assert!((v - ((4.0f64 / 3.0).ln() + 4f64.ln())).abs() < 1e-14);
        // 100 is too far from 10 to contribute
        let iso = real_seq(&[(1.0, 1), (10.0, 1), (100.0, 1)]);
        let v = integrated_about(&iso, 3, 2).unwrap().to_f64();
        assert!((v - (10f64.ln() + (10.0f64 / 9.0).ln())).abs() < 1e-14);
        assert!(integrated_counting(&s, 6, &mp::float(P, 0.5)).unwrap().is_zero());
    }

    #[test]
    fn gap_examples() {
        let s = squares(8);
        let g = gap_check(&s, 8, 0.1).unwrap();
        assert!(g.m_eps.0 > 0 && g.disjoint);
        for n in 2..8 {
            assert_eq!(f(&g.gaps[n - 1]), (2 * n - 1) as f64);
        }
        for (d, c) in g.radii_d.iter().zip(&g.radii_c) {
            let r = Float::with_val(P, &d.0 / &c.0);
            assert!(Float::with_val(P, r - 3u32).abs() < mp::pow10(P, -90));
        }
        let iii = fixture("example_iii").unwrap().spec();
        let fits: Vec<f64> = [6, 8, 10]
            .iter()
            .map(|&n| f(&gap_check(&iii.materialize(n, P).unwrap(), n, 0.1).unwrap().m_eps))
            .collect();
        assert!(fits[0] > fits[1] && fits[1] > fits[2]);
        assert!(gap_check(&real_seq(&[(1.0, 1), (1.0, 1)]), 2, 0.1).is_err());
    }

    #[test]
    fn condensation_rejects_multiplicity() {
        let iv = fixture("example_iv").unwrap().spec().materialize(8, P).unwrap();
        assert!(matches!(condensation_index(&iv, 8), Err(Error::Invalid(_))));
    }

    #[test]
    fn delta_search() {
        let v = fixture("example_v").unwrap().spec().materialize(6, P).unwrap();
        let d = separation(&v, 6).unwrap().delta.unwrap();
        assert!(d > 0.08 && d < 0.1);
        assert!(separation(&v, 6).unwrap().density.consistent);
    }
}
