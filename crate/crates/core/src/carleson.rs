//! The differential operator `F(D) = Σ_m F^{(m)}(0)/m! · d^m/dx^m` of the
//! truncated canonical product, its action on `t^k e^{λt}`, and the grouping
//! counterexample `λ_{2n−1} = n²`, `λ_{2n} = n² + e^{−n⁴}`.
//!
//! At truncation `F` is a polynomial, so `F(D)` has finite order and kills
//! every `e_{n,k}` exactly; the coefficients carry 128 extra bits so the
//! cancellation stays far below the working precision.

use rug::{Complex, Float};
use serde::Serialize;

use crate::domain::{check_n, MultiplicitySequence};
use crate::error::{Error, Result};
use crate::lambda_analysis::{geometric_conditions, GeometricReport};
use crate::mp::{self, Cplx, Real};
use crate::products::{taylor_coeffs, ProductKind};
use crate::series::TaylorDirichletSeries;
use crate::source::fixture;

const EXTRA_BITS: u32 = 128;

#[derive(Clone, Debug)]
pub struct CarlesonOperator {
    seq: MultiplicitySequence,
    fcoeffs: Vec<Complex>,
    gcoeffs: Vec<Complex>,
    degree: usize,
    prec: u32,
}

impl CarlesonOperator {
    /// Operator of `F = ∏_{n≤N}(1 − z/λ_n)^{μ_n}`, with the positive
    /// weights of `∏(1 + z/|λ_n|)^{μ_n}`.
    pub fn new(seq: &MultiplicitySequence, n: usize) -> Result<Self> {
        check_n(seq, n)?;
        let prec = seq.prec();
        let inner = seq.prefix(n)?.with_prec(prec + EXTRA_BITS);
        let degree = inner.dimension(n);
        let fcoeffs = taylor_coeffs(ProductKind::FPlain, &inner, n, degree)?;
        let gcoeffs = taylor_coeffs(ProductKind::GAbs, &inner, n, degree)?;
        Ok(CarlesonOperator {
            seq: inner,
            fcoeffs,
            gcoeffs,
            degree,
            prec,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Working precision requested by the caller (the operator itself
    /// carries more).
    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn fcoeffs(&self) -> &[Complex] {
        &self.fcoeffs
    }

    pub fn gcoeffs(&self) -> &[Complex] {
        &self.gcoeffs
    }

    pub fn seq(&self) -> &MultiplicitySequence {
        &self.seq
    }

    fn inner_prec(&self) -> u32 {
        self.prec + EXTRA_BITS
    }
}

/// `D^m (t^k e^{λt})(x)` for all `m ≤ m_max`:
/// `Σ_{i≤min(m,k)} C(m,i) k!/(k−i)! x^{k−i} λ^{m−i} e^{λx}`.
fn derivatives(lam: &Complex, k: u32, x: &Float, m_max: usize, prec: u32) -> Vec<Complex> {
    let lam = mp::cwith(prec, lam);
    let x = Float::with_val(prec, x);
    let e = Complex::with_val(prec, &lam * &x).exp();
    // falling[i] = k!/(k−i)! · x^{k−i}
    let falling: Vec<Float> = (0..=k)
        .map(|i| {
            let mut f = mp::float(prec, 1.0);
            for j in 0..i {
                f *= k - j;
            }
            f * Float::with_val(prec, rug::ops::Pow::pow(&x, k - i))
        })
        .collect();
    let mut lam_pows = Vec::with_capacity(m_max + 1);
    let mut p = mp::cone(prec);
    for _ in 0..=m_max {
        lam_pows.push(p.clone());
        p *= &lam;
    }
    (0..=m_max)
        .map(|m| {
            let mut acc = mp::czero(prec);
            for i in 0..=(k as usize).min(m) {
                let c = mp::binomial(prec, m as u32, i as u32) * &falling[i];
                acc += Complex::with_val(prec, &lam_pows[m - i] * &c);
            }
            acc * &e
        })
        .collect()
}

/// `F(D)[t^k e^{λt}](x)` by the Leibniz expansion, at the operator's
/// internal precision.
pub fn apply_to_exponential(op: &CarlesonOperator, lam: &Complex, k: u32, x: &Float) -> Result<Complex> {
    if k as usize > op.degree {
        return Err(Error::invalid(format!("k = {k} exceeds the operator degree {}", op.degree)));
    }
    let prec = op.inner_prec();
    let d = derivatives(lam, k, x, op.degree, prec);
    let mut acc = mp::czero(prec);
    for (f, dm) in op.fcoeffs.iter().zip(&d) {
        acc += Complex::with_val(prec, f * dm);
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    /// `sup_x |F(D)s(x)|` over the grid.
    pub residual: Real,
    /// `sup_x Σ |c_{n,k}| |x^k e^{λ_n x}|`.
    pub scale: Real,
    pub grid: Vec<f64>,
}

/// Matches each supported frequency of `s` to the operator's frequencies.
fn check_support(op: &CarlesonOperator, s: &TaylorDirichletSeries) -> Result<()> {
    let prec = s.prec().min(op.inner_prec());
    let tol_bits = (prec / 2) as i32;
    for (idx, c) in s.coeffs() {
        if mp::is_zero(c) {
            continue;
        }
        let lam = s.seq().lambda(idx.n);
        let hit = (1..=op.seq.len()).find(|&m| {
            let d = mp::abs(&Complex::with_val(prec, lam - op.seq.lambda(m)));
            let scale = mp::abs(lam).max(&mp::float(prec, 1.0));
            d <= scale * Float::with_val(prec, Float::i_exp(1, -tol_bits))
        });
        match hit {
            Some(m) if idx.k < op.seq.mu(m) => {}
            Some(m) => {
                return Err(Error::invalid(format!(
                    "term {idx} has degree beyond the multiplicity {} of its frequency",
                    op.seq.mu(m)
                )))
            }
            None => {
                return Err(Error::invalid(format!(
                    "frequency of term {idx} is not a zero of the truncated product"
                )))
            }
        }
    }
    Ok(())
}

pub fn residual_on_span(op: &CarlesonOperator, s: &TaylorDirichletSeries, grid: &[f64]) -> Result<ResidualReport> {
    check_support(op, s)?;
    if grid.is_empty() {
        return Err(Error::invalid("empty grid"));
    }
    let prec = op.inner_prec();
    let mut worst = mp::float(prec, 0.0);
    let mut scale = mp::float(prec, 0.0);
    for &x in grid {
        let xf = mp::float(prec, x);
        let mut acc = mp::czero(prec);
        let mut size = mp::float(prec, 0.0);
        for (idx, c) in s.coeffs() {
            let lam = s.seq().lambda(idx.n);
            let v = apply_to_exponential(op, lam, idx.k, &xf)?;
            acc += Complex::with_val(prec, c * &v);
            let e = Complex::with_val(prec, lam * &xf).exp();
            size += mp::abs(c) * mp::abs(&e) * Float::with_val(prec, rug::ops::Pow::pow(xf.clone().abs(), idx.k));
        }
        worst = worst.max(&mp::abs(&acc));
        scale = scale.max(&size);
    }
    Ok(ResidualReport {
        residual: Real(worst),
        scale: Real(scale),
        grid: grid.to_vec(),
    })
}

/// `s^{(m)}(x)` for `m ≤ m_max`, at the precision of `x`.
pub fn series_derivatives(s: &TaylorDirichletSeries, x: &Float, m_max: usize) -> Vec<Complex> {
    let prec = x.prec();
    let mut out = vec![mp::czero(prec); m_max + 1];
    for (idx, c) in s.coeffs() {
        let d = derivatives(s.seq().lambda(idx.n), idx.k, x, m_max, prec);
        for (acc, dm) in out.iter_mut().zip(&d) {
            *acc += Complex::with_val(prec, c * dm);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipVerdict {
    Converging,
    NotConverging,
    /// `M` does not reach past the operator degree.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipReport {
    pub grid: Vec<f64>,
    /// Per grid point, partial sums of `Σ_{m≤M} G_m |s^{(m)}(x)|`.
    pub partial_sums: Vec<Vec<Real>>,
    pub degree: usize,
    pub verdict: MembershipVerdict,
    /// At truncation the weights vanish past the degree; the verdict only
    /// speaks about the truncated operator.
    pub truncation_relative: bool,
}

/// Evidence that `Σ_m G_m |s^{(m)}(x)|` converges on `[γ+δ, β−δ]`.
pub fn class_membership(
    op: &CarlesonOperator,
    s: &TaylorDirichletSeries,
    gamma: f64,
    beta: f64,
    delta: f64,
    m_max: usize,
    points: usize,
) -> Result<MembershipReport> {
    if !(delta > 0.0) || gamma + delta >= beta - delta {
        return Err(Error::invalid("need δ > 0 and γ + δ < β − δ"));
    }
    if m_max > 4 * op.degree.max(1) {
        return Err(Error::invalid(format!("M = {m_max} exceeds 4·degree = {}", 4 * op.degree)));
    }
    let points = points.max(2);
    let lo = gamma + delta;
    let hi = beta - delta;
    let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let prec = op.inner_prec();
    let mut partial_sums = Vec::with_capacity(points);
    let mut past_degree_ok = true;
    for &x in &grid {
        let derivs = series_derivatives(s, &mp::float(prec, x), m_max);
        let mut sums = Vec::with_capacity(m_max + 1);
        let mut total = mp::float(prec, 0.0);
        let mut prev_inc: Option<Float> = None;
        for (m, dm) in derivs.iter().enumerate() {
            let g = op.gcoeffs.get(m).map(|g| g.real().clone()).unwrap_or_else(|| mp::float(prec, 0.0));
            let inc = g * mp::abs(dm);
            if m > op.degree {
                if let Some(p) = &prev_inc {
                    if !(inc.is_zero() || inc < *p) {
                        past_degree_ok = false;
                    }
                }
            }
            total += &inc;
            prev_inc = Some(inc);
            sums.push(Real(total.clone()));
        }
        partial_sums.push(sums);
    }
    let verdict = if m_max <= op.degree {
        MembershipVerdict::Inconclusive
    } else if past_degree_ok {
        MembershipVerdict::Converging
    } else {
        MembershipVerdict::NotConverging
    };
    Ok(MembershipReport {
        grid,
        partial_sums,
        degree: op.degree,
        verdict,
        truncation_relative: true,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleRow {
    pub n: u32,
    /// `|e^{n³}(e^{zn²} − e^{z(n²+e^{−n⁴})})|`
    pub grouped: Real,
    /// `e^{n³−n⁴} e^{|z|}`
    pub grouped_bound: Real,
    /// `e^{n³} |e^{n² z}|`
    pub ungrouped: Real,
    /// `e^{n³} |e^{(n²+e^{−n⁴}) z}|`
    pub ungrouped_pair: Real,
    /// `f_n(z)`, the grouped partial sum through `n`.
    pub partial_sum: Cplx,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexamplePoint {
    pub z: Cplx,
    pub rows: Vec<CounterexampleRow>,
    pub grouped_decreasing: bool,
    pub ungrouped_increasing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub nmax: u32,
    pub digits: u32,
    pub points: Vec<CounterexamplePoint>,
    /// Geometric conditions on the first `2·Nmax` frequencies (for `Nmax ≥ 3`).
    pub certificate: Option<GeometricReport>,
}

/// Decimal digits needed to resolve `e^{−Nmax⁴}` next to the `e^{Nmax³}` weights.
pub fn counterexample_digits(nmax: u32) -> u32 {
    let n = f64::from(nmax);
    (n.powi(4) / std::f64::consts::LN_10 + 2.0 * n.log10() + 30.0).ceil() as u32
}

pub fn counterexample(nmax: u32, digits: u32, points: &[Complex]) -> Result<CounterexampleReport> {
    if nmax == 0 || nmax > 8 {
        return Err(Error::invalid(format!("Nmax must lie in 1..=8, got {nmax}")));
    }
    let required = counterexample_digits(nmax);
    if digits < required {
        return Err(Error::PrecisionInsufficient {
            required,
            available: digits,
        });
    }
    if points.is_empty() {
        return Err(Error::invalid("no sample points"));
    }
    if let Some(z) = points.iter().find(|z| z.real().is_sign_positive() && !z.real().is_zero()) {
        return Err(Error::invalid(format!("sample point {z} has Re z > 0")));
    }
    let prec = mp::bits_for_digits(digits);
    let mut out = Vec::with_capacity(points.len());
    for z in points {
        let z = mp::cwith(prec, z);
        let zabs = mp::abs(&z);
        let mut rows = Vec::with_capacity(nmax as usize);
        let mut sum = mp::czero(prec);
        for n in 1..=nmax {
            let n2 = Float::with_val(prec, n * n);
            let n3 = Float::with_val(prec, n * n * n);
            let n4 = Float::with_val(prec, n * n * n * n);
            let shift = Float::with_val(prec, -&n4).exp();
            let lam2 = Float::with_val(prec, &n2 + &shift);
            let w = n3.clone().exp();
            let a = Complex::with_val(prec, &z * &n2).exp();
            let b = Complex::with_val(prec, &z * &lam2).exp();
            let term = Complex::with_val(prec, &a - &b) * &w;
            sum += &term;
            let bound = (Float::with_val(prec, &n3 - &n4) + &zabs).exp();
            rows.push(CounterexampleRow {
                n,
                grouped: Real(mp::abs(&term)),
                grouped_bound: Real(bound),
                ungrouped: Real(Float::with_val(prec, &w * mp::abs(&a))),
                ungrouped_pair: Real(Float::with_val(prec, &w * mp::abs(&b))),
                partial_sum: Cplx(sum.clone()),
            });
        }
        let grouped_decreasing = rows.windows(2).all(|r| r[1].grouped < r[0].grouped || r[1].grouped.0.is_zero());
        let ungrouped_increasing = rows.windows(2).all(|r| r[1].ungrouped > r[0].ungrouped);
        out.push(CounterexamplePoint {
            z: Cplx(z),
            rows,
            grouped_decreasing,
            ungrouped_increasing,
        });
    }
    let certificate = if nmax >= 3 {
        let n = 2 * nmax as usize;
        let seq = fixture("carleson_counterexample")
            .expect("built-in fixture")
            .spec()
            .materialize(n, prec)?;
        Some(geometric_conditions(&seq, n)?)
    } else {
        None
    };
    Ok(CounterexampleReport {
        nmax,
        digits,
        points: out,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::products::eval_product;

    fn squares_mu2(prec: u32) -> MultiplicitySequence {
        MultiplicitySequence::real(prec, &[(1.0, 1), (4.0, 2), (9.0, 1)], "t")
    }

    #[test]
    fn annihilates_zeros_with_multiplicity() {
        let p = mp::bits_for_digits(60);
        let s = squares_mu2(p);
        let op = CarlesonOperator::new(&s, 3).unwrap();
        assert_eq!(op.degree(), 4);
        let x = mp::float(p, 0.3);
        let tol = mp::pow10(p, -55);
        for (n, k) in [(1, 0), (2, 0), (2, 1), (3, 0)] {
            let v = apply_to_exponential(&op, s.lambda(n), k, &x).unwrap();
            assert!(mp::abs(&v) < tol, "({n},{k})");
        }
        // t·e^{t} is not a zero of multiplicity 2
        let v = apply_to_exponential(&op, s.lambda(1), 1, &x).unwrap();
        assert!(mp::abs(&v) > 1e-3);
    }

    #[test]
    fn eigen_relation_at_zero() {
        let p = mp::bits_for_digits(60);
        let s = squares_mu2(p);
        let op = CarlesonOperator::new(&s, 3).unwrap();
        let lam = mp::complex(p, 2.5, 0.7);
        let v = apply_to_exponential(&op, &lam, 0, &mp::float(p, 0.0)).unwrap();
        let f = eval_product(ProductKind::FPlain, &s, 3, &lam).unwrap();
        assert!(mp::abs(&Complex::with_val(p, &v - &f)) < mp::pow10(p, -55));
    }

    #[test]
    fn counterexample_rules() {
        assert!(matches!(counterexample(9, 3000, &[mp::czero(64)]), Err(Error::Invalid(_))));
        assert!(matches!(
            counterexample(4, 50, &[mp::czero(64)]),
            Err(Error::PrecisionInsufficient { required: 143, .. })
        ));
        let r = counterexample(2, counterexample_digits(2), &[mp::czero(64)]).unwrap();
        for row in &r.points[0].rows {
            assert!(row.grouped.0.is_zero() && mp::is_zero(&row.partial_sum.0));
        }
        assert!(counterexample(2, 60, &[mp::complex(64, 0.5, 0.0)]).is_err());
    }
}
