//! Exact inner products of `t^k e^{λt}` on `(γ, β)` or `(−∞, 0)`, Gram
//! systems, distances, and the biorthogonal family.
//!
//! Conventions: `⟨f, g⟩ = ∫ f·conj(g)`, so `G_ab = ∫ t^{k_a+k_b} e^{(λ_a + conj λ_b)t}`.
//! The biorthogonal coefficients are `C = G^{−1}`: `r_a = Σ_j C_aj e_j` and
//! `C·G = I` gives `⟨r_a, e_b⟩ = δ_ab`.

use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

use crate::domain::{check_n, flatten, FlatIndex, Interval, MultiplicitySequence, PrecisionContext};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMatrix, Cholesky};
use crate::mp::{self, Real};

/// Default cap on `Σ_{n≤N} μ_n`.
pub const DEFAULT_MAX_DIM: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Bounded(Interval),
    HalfLineNeg,
}

impl DomainSpec {
    pub fn bounded(gamma: f64, beta: f64) -> Result<Self> {
        Ok(DomainSpec::Bounded(Interval::new(gamma, beta)?))
    }
}

/// `∫ t^p e^{at} dt` over the domain, at precision `prec`.
pub fn monomial_exp_integral(p: u32, a: &Complex, dom: &DomainSpec, prec: u32) -> Result<Complex> {
    match dom {
        DomainSpec::HalfLineNeg => {
            if *a.real() <= 0 {
                return Err(Error::invalid("the half-line integral needs Re a > 0"));
            }
            let a = mp::cwith(prec, a);
            let sign = if p % 2 == 0 { 1 } else { -1 };
            let num = mp::factorial(prec, p) * sign;
            let den = mp::cpow(&a, p + 1);
            Ok(Complex::with_val(prec, &num / &den))
        }
        DomainSpec::Bounded(iv) => Ok(bounded_integral(p, a, iv, prec)),
    }
}

fn bounded_integral(p: u32, a: &Complex, iv: &Interval, prec: u32) -> Complex {
    let h = iv.length();
    if mp::is_zero(a) {
        let g = mp::float(prec, iv.gamma());
        let b = mp::float(prec, iv.beta());
        let e = p + 1;
        let v = Float::with_val(prec, rug::ops::Pow::pow(&b, e)) - Float::with_val(prec, rug::ops::Pow::pow(&g, e));
        return mp::from_real(&(v / e));
    }
    let small = mp::abs(a) * h < 0.5;
    let mut guard = 64u32;
    for _ in 0..6 {
        let wp = prec + guard;
        let (v, lost) = if small {
            series_integral(p, a, iv, wp)
        } else {
            recurrence_integral(p, a, iv, wp)
        };
        if lost + 32 <= i64::from(guard) {
            return mp::cwith(prec, &v);
        }
        guard = (lost as u32).saturating_add(96);
    }
    let (v, _) = recurrence_integral(p, a, iv, prec + guard);
    mp::cwith(prec, &v)
}

fn mag_bits(x: &Float) -> i64 {
    if x.is_zero() {
        i64::MIN / 4
    } else {
        x.get_exp().map(i64::from).unwrap_or(0)
    }
}

/// `t = γ + s`: `e^{aγ} Σ_i C(p,i) γ^{p−i} Σ_m a^m h^{i+m+1}/(m!(i+m+1))`.
/// Returns the value and the number of bits lost to cancellation.
fn series_integral(p: u32, a: &Complex, iv: &Interval, wp: u32) -> (Complex, i64) {
    let a = mp::cwith(wp, a);
    let g = mp::float(wp, iv.gamma());
    let h = mp::float(wp, iv.beta()) - &g;
    let eps_bits = -(wp as i64) - 8;
    let mut total = mp::czero(wp);
    let mut biggest = i64::MIN / 4;
    for i in 0..=p {
        // Σ_m a^m h^{i+m+1}/(m!(i+m+1))
        let mut inner = mp::czero(wp);
        let mut term = Complex::with_val(wp, rug::ops::Pow::pow(&h, i + 1)); // a^m h^{i+m+1}/m!
        let mut m = 0u32;
        loop {
            let contrib = Complex::with_val(wp, &term / (i + m + 1));
            let cb = mag_bits(&mp::abs(&contrib));
            inner += &contrib;
            if cb < mag_bits(&mp::abs(&inner)) + eps_bits || mp::is_zero(&term) {
                break;
            }
            m += 1;
            term *= &a;
            term *= &h;
            term /= m;
        }
        let coef = mp::binomial(wp, p, i) * Float::with_val(wp, rug::ops::Pow::pow(&g, p - i));
        let part = inner * coef;
        biggest = biggest.max(mag_bits(&mp::abs(&part)));
        total += part;
    }
    let lost = (biggest - mag_bits(&mp::abs(&total))).max(0);
    let shift = Complex::with_val(wp, &a * &g).exp();
    (total * shift, if p == 0 { 0 } else { lost })
}

/// `I(p) = [t^p e^{at}/a]_γ^β − (p/a) I(p−1)`.
fn recurrence_integral(p: u32, a: &Complex, iv: &Interval, wp: u32) -> (Complex, i64) {
    let a = mp::cwith(wp, a);
    let g = mp::float(wp, iv.gamma());
    let b = mp::float(wp, iv.beta());
    let eb = Complex::with_val(wp, &a * &b).exp() / &a;
    let eg = Complex::with_val(wp, &a * &g).exp() / &a;
    let mut i_prev = Complex::with_val(wp, &eb - &eg);
    let mut lost = 0i64;
    let mut bp = mp::float(wp, 1.0);
    let mut gp = mp::float(wp, 1.0);
    for k in 1..=p {
        bp *= &b;
        gp *= &g;
        let boundary = Complex::with_val(wp, &eb * &bp) - Complex::with_val(wp, &eg * &gp);
        let carry = Complex::with_val(wp, &i_prev * k) / &a;
        let big = mag_bits(&mp::abs(&boundary)).max(mag_bits(&mp::abs(&carry)));
        let next = boundary - carry;
        lost += (big - mag_bits(&mp::abs(&next))).max(0);
        i_prev = next;
    }
    (i_prev, lost)
}

pub fn inner_product(seq: &MultiplicitySequence, a: FlatIndex, b: FlatIndex, dom: &DomainSpec) -> Result<Complex> {
    let prec = seq.prec();
    for idx in [a, b] {
        if crate::domain::position(seq, idx).is_none() {
            return Err(Error::OutOfRange(format!("index {idx} not in the sequence")));
        }
    }
    let s = Complex::with_val(prec, seq.lambda(a.n) + &mp::conj(seq.lambda(b.n)));
    monomial_exp_integral(a.k + b.k, &s, dom, prec)
}

/// Hermitian positive-definite Gram matrix with its factorization.
#[derive(Clone, Debug)]
pub struct GramSystem {
    seq: MultiplicitySequence,
    indices: Vec<FlatIndex>,
    matrix: CMatrix,
    factor: Cholesky,
    inverse: CMatrix,
    domain: DomainSpec,
    digits: u32,
    condition: Float,
}

impl GramSystem {
    pub fn seq(&self) -> &MultiplicitySequence {
        &self.seq
    }

    pub fn indices(&self) -> &[FlatIndex] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn factor(&self) -> &Cholesky {
        &self.factor
    }

    /// `G^{−1}`.
    pub fn inverse(&self) -> &CMatrix {
        &self.inverse
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Decimal digits the system was finally assembled at.
    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn prec(&self) -> u32 {
        self.matrix.prec()
    }

    /// `‖G‖₁ ‖G^{−1}‖₁`.
    pub fn condition(&self) -> &Float {
        &self.condition
    }

    pub fn position(&self, idx: FlatIndex) -> Result<usize> {
        self.indices
            .iter()
            .position(|i| *i == idx)
            .ok_or_else(|| Error::OutOfRange(format!("index {idx} not in the system")))
    }

    /// `m_b = ⟨f, e_b⟩` for `f = Σ c_j e_j`, i.e. `m = Gᵀ c`.
    pub fn moments_of(&self, c: &[Complex]) -> Result<Vec<Complex>> {
        check_len(c.len(), self.dim())?;
        Ok(self.matrix.transpose().mul_vec(&cwith_all(self.prec(), c)))
    }

    /// `⟨f, g⟩` for `f = Σ u_j e_j`, `g = Σ v_j e_j`, i.e. `u G conj(v)`.
    pub fn form(&self, u: &[Complex], v: &[Complex]) -> Complex {
        let prec = self.prec();
        let vc: Vec<Complex> = v.iter().map(|x| mp::cwith(prec, x).conj()).collect();
        let gv = self.matrix.mul_vec(&vc);
        let mut acc = mp::czero(prec);
        for (a, b) in u.iter().zip(&gv) {
            acc += Complex::with_val(prec, a * b);
        }
        acc
    }
}

fn cwith_all(prec: u32, v: &[Complex]) -> Vec<Complex> {
    v.iter().map(|z| mp::cwith(prec, z)).collect()
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::invalid(format!("vector of length {got}, system dimension {want}")));
    }
    Ok(())
}

fn assemble(seq: &MultiplicitySequence, indices: &[FlatIndex], dom: &DomainSpec) -> Result<CMatrix> {
    let d = indices.len();
    let prec = seq.prec();
    let mut m = CMatrix::zeros(d, d, prec);
    for i in 0..d {
        for j in i..d {
            let v = inner_product(seq, indices[i], indices[j], dom)?;
            if i == j {
                m[(i, i)] = mp::from_real(v.real());
            } else {
                m[(j, i)] = v.clone().conj();
                m[(i, j)] = v;
            }
        }
    }
    Ok(m)
}

/// Assembles and factors the Gram system of the first `n` frequencies.
///
/// Digits double from `ctx.digits` up to four times that value until every
/// relative pivot `L_ii²/G_ii` exceeds `10^{−digits/2}`.
pub fn gram_matrix(
    seq: &MultiplicitySequence,
    n: usize,
    dom: &DomainSpec,
    ctx: &PrecisionContext,
    max_dim: usize,
) -> Result<GramSystem> {
    check_n(seq, n)?;
    let indices = flatten(seq, n)?;
    if indices.len() > max_dim {
        return Err(Error::DimensionCap {
            dim: indices.len(),
            cap: max_dim,
        });
    }
    if matches!(dom, DomainSpec::HalfLineNeg) {
        if let Some(i) = (1..=n).find(|&i| *seq.lambda(i).real() <= 0) {
            return Err(Error::invalid(format!("half-line Gram needs Re λ_n > 0, fails at n = {i}")));
        }
    }
    let mut digits = ctx.digits;
    let mut last_condition = "unavailable (factorization failed)".to_string();
    loop {
        let prec = mp::bits_for_digits(digits);
        let s = seq.prefix(n)?.with_prec(prec);
        let matrix = assemble(&s, &indices, dom)?;
        match Cholesky::factor(&matrix) {
            Ok(factor) => {
                let floor = mp::tol_digits(prec, digits, 2);
                let ok = factor
                    .pivots()
                    .iter()
                    .enumerate()
                    .all(|(i, p)| Float::with_val(prec, p / matrix[(i, i)].real()) > floor);
                let inverse = factor.inverse();
                let condition = matrix.norm_1() * inverse.norm_1();
                if ok {
                    return Ok(GramSystem {
                        seq: s,
                        indices,
                        matrix,
                        factor,
                        inverse,
                        domain: *dom,
                        digits,
                        condition,
                    });
                }
                last_condition = mp::fmt(&condition, 6);
            }
            Err(Error::NotPositiveDefinite { .. }) => {}
            Err(e) => return Err(e),
        }
        if digits >= ctx.digits.saturating_mul(4) {
            return Err(Error::PrecisionExhausted {
                digits,
                condition: last_condition,
            });
        }
        digits = (digits * 2).min(ctx.digits.saturating_mul(4));
    }
}

/// `D = sqrt(⟨v,v⟩ − w^H S^{−1} w)`, read off the factorized system as
/// `1/sqrt((G^{−1})_ii)`.
pub fn distance(g: &GramSystem, idx: FlatIndex) -> Result<Float> {
    let i = g.position(idx)?;
    Ok(Float::with_val(g.prec(), g.inverse[(i, i)].real()).recip().sqrt())
}

pub fn distances_all(g: &GramSystem) -> Vec<Float> {
    (0..g.dim())
        .map(|i| Float::with_val(g.prec(), g.inverse[(i, i)].real()).recip().sqrt())
        .collect()
}

/// The same distance from an explicit leave-one-out factorization.
pub fn distance_schur(g: &GramSystem, idx: FlatIndex) -> Result<Float> {
    let i = g.position(idx)?;
    let prec = g.prec();
    let gii = g.matrix[(i, i)].real().clone();
    if g.dim() == 1 {
        return Ok(gii.sqrt());
    }
    let rest: Vec<usize> = (0..g.dim()).filter(|&j| j != i).collect();
    let s = g.matrix.select(&rest, &rest);
    let w: Vec<Complex> = rest.iter().map(|&j| g.matrix[(j, i)].clone()).collect();
    let x = Cholesky::factor(&s)
        .map_err(|_| Error::PrecisionExhausted {
            digits: g.digits,
            condition: mp::fmt(&g.condition, 6),
        })?
        .solve(&w);
    let mut q = mp::czero(prec);
    for (wi, xi) in w.iter().zip(&x) {
        q += Complex::with_val(prec, &mp::conj(wi) * xi);
    }
    let d2 = gii - q.real();
    if d2 <= 0 {
        return Err(Error::PrecisionExhausted {
            digits: g.digits,
            condition: mp::fmt(&g.condition, 6),
        });
    }
    Ok(d2.sqrt())
}

/// `r_a = Σ_j coeffs[a][j] e_j` with `⟨r_a, e_b⟩ = δ_ab`.
#[derive(Clone, Debug)]
pub struct BiorthogonalFamily {
    pub coeffs: CMatrix,
    pub norms: Vec<Float>,
    pub distances: Vec<Float>,
}

impl BiorthogonalFamily {
    /// `max |coeffs·G − I|`.
    pub fn residual(&self, g: &GramSystem) -> Float {
        let prod = self.coeffs.mul(g.matrix());
        prod.max_abs_diff(&CMatrix::identity(g.dim(), g.prec()))
    }

    /// `max_a |‖r_a‖·D_a − 1|`.
    pub fn norm_distance_defect(&self) -> Float {
        let prec = self.norms.first().map(|x| x.prec()).unwrap_or(64);
        let mut worst = mp::float(prec, 0.0);
        for (r, d) in self.norms.iter().zip(&self.distances) {
            let e = Float::with_val(prec, Float::with_val(prec, r * d) - 1u32).abs();
            worst = worst.max(&e);
        }
        worst
    }
}

pub fn biorthogonal(g: &GramSystem) -> BiorthogonalFamily {
    let coeffs = g.inverse.clone();
    let norms = (0..g.dim())
        .map(|a| {
            let row = coeffs.row(a);
            let v = g.form(row, row);
            Float::with_val(g.prec(), v.real()).sqrt()
        })
        .collect();
    BiorthogonalFamily {
        norms,
        distances: distances_all(g),
        coeffs,
    }
}

/// `c_a = ⟨f, r_a⟩ = Σ_j conj(C_aj) m_j` from `m_j = ⟨f, e_j⟩`.
pub fn recover_coefficients(g: &GramSystem, fam: &BiorthogonalFamily, moments: &[Complex]) -> Result<Vec<Complex>> {
    check_len(moments.len(), g.dim())?;
    let prec = g.prec();
    Ok((0..g.dim())
        .map(|a| {
            let mut acc = mp::czero(prec);
            for (c, m) in fam.coeffs.row(a).iter().zip(moments) {
                acc += Complex::with_val(prec, &mp::conj(c) * m);
            }
            acc
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct MixedReport {
    /// Indices taken from `E_Λ`.
    pub n1: Vec<FlatIndex>,
    /// Indices taken from the biorthogonal family.
    pub n2: Vec<FlatIndex>,
    pub min_singular: Real,
    pub max_singular: Real,
}

/// Extreme singular values of the Gram of `{e_a : a ∈ N1} ∪ {r_a : a ∈ N2}`.
pub fn mixed_completeness(
    g: &GramSystem,
    fam: &BiorthogonalFamily,
    n1: &[FlatIndex],
    n2: &[FlatIndex],
) -> Result<MixedReport> {
    let d = g.dim();
    let mut seen = vec![false; d];
    for idx in n1.iter().chain(n2) {
        let p = g.position(*idx)?;
        if seen[p] {
            return Err(Error::invalid(format!("index {idx} appears twice in the partition")));
        }
        seen[p] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::invalid("partition does not cover the truncated index set"));
    }
    let prec = g.prec();
    let mut u = CMatrix::zeros(d, d, prec);
    let mut row = 0;
    for idx in n1 {
        u[(row, g.position(*idx)?)] = mp::cone(prec);
        row += 1;
    }
    for idx in n2 {
        let p = g.position(*idx)?;
        for j in 0..d {
            u[(row, j)] = fam.coeffs[(p, j)].clone();
        }
        row += 1;
    }
    let mixed = u.mul(g.matrix()).mul(&u.conj_transpose());
    let ev = hermitian_eigenvalues(&mixed);
    Ok(MixedReport {
        n1: n1.to_vec(),
        n2: n2.to_vec(),
        min_singular: Real(ev[0].clone().abs()),
        max_singular: Real(ev[d - 1].clone().abs()),
    })
}
