//! Entire and meromorphic functions built from a multiplicity sequence.
//!
//! Truncated products are polynomials; factors are applied in sequence
//! order (non-decreasing modulus) and written as `(λ − z)/λ`-type quotients
//! so that evaluating at a zero gives an exact 0.

use std::str::FromStr;

use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

use crate::domain::{check_n, Interval, MultiplicitySequence};
use crate::error::{Error, Result};
use crate::mp::{self, Cplx, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProductKind {
    /// `∏ (1 − z/λ_n)^{μ_n}`
    FPlain,
    /// `∏ (1 + z/|λ_n|)^{μ_n}`
    GAbs,
    /// `∏ (1 − z²/λ_n²)^{μ_n}`
    FEven,
    /// `∏ (1 + z²/λ_n²)^{μ_n}`
    LEven,
}

impl FromStr for ProductKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "F" | "F_PLAIN" => Ok(ProductKind::FPlain),
            "G" | "G_ABS" => Ok(ProductKind::GAbs),
            "F_EVEN" => Ok(ProductKind::FEven),
            "L" | "L_EVEN" => Ok(ProductKind::LEven),
            _ => Err(Error::Parse(format!("unknown product kind {s:?}"))),
        }
    }
}

fn factor(kind: ProductKind, lam: &Complex, z: &Complex, prec: u32) -> Complex {
    match kind {
        ProductKind::FPlain => Complex::with_val(prec, lam - z) / lam,
        ProductKind::GAbs => {
            let a = mp::abs(lam);
            Complex::with_val(prec, z + &a) / a
        }
        ProductKind::FEven => {
            let num = Complex::with_val(prec, lam - z) * Complex::with_val(prec, lam + z);
            num / Complex::with_val(prec, lam.square_ref())
        }
        ProductKind::LEven => {
            let iz = z.clone().mul_i(false);
            let num = Complex::with_val(prec, lam - &iz) * Complex::with_val(prec, lam + &iz);
            num / Complex::with_val(prec, lam.square_ref())
        }
    }
}

fn product_over(kind: ProductKind, seq: &MultiplicitySequence, n: usize, skip: Option<usize>, z: &Complex) -> Complex {
    let prec = seq.prec().max(mp::prec_of(z));
    let z = mp::cwith(prec, z);
    let mut acc = mp::cone(prec);
    for (i, (lam, mu)) in seq.entries()[..n].iter().enumerate() {
        if skip == Some(i + 1) {
            continue;
        }
        let f = factor(kind, lam, &z, prec);
        if mp::is_zero(&f) {
            return mp::czero(prec);
        }
        acc *= mp::cpow(&f, *mu);
    }
    acc
}

/// The truncated product over `n ≤ N` at `z`.
pub fn eval_product(kind: ProductKind, seq: &MultiplicitySequence, n: usize, z: &Complex) -> Result<Complex> {
    check_n(seq, n)?;
    Ok(product_over(kind, seq, n, None, z))
}

/// `F^{(μ_n)}(λ_n)/μ_n!` by factor removal, for `F_PLAIN` or `F_EVEN`.
pub fn derivative_factor(kind: ProductKind, seq: &MultiplicitySequence, n_trunc: usize, n: usize) -> Result<Complex> {
    check_n(seq, n_trunc)?;
    if n == 0 || n > n_trunc {
        return Err(Error::OutOfRange(format!("index {n} outside 1..={n_trunc}")));
    }
    let prec = seq.prec();
    let lam = seq.lambda(n);
    let mu = seq.mu(n);
    let lead = match kind {
        ProductKind::FPlain => Complex::with_val(prec, -1) / lam,
        ProductKind::FEven => Complex::with_val(prec, -2) / lam,
        _ => return Err(Error::invalid("derivative_factor is defined for F_PLAIN and F_EVEN")),
    };
    let rest = product_over(kind, seq, n_trunc, Some(n), lam);
    Ok(mp::cpow(&lead, mu) * rest)
}

/// First `m + 1` Maclaurin coefficients of the truncated product, at the
/// precision of `seq`.
pub fn taylor_coeffs(kind: ProductKind, seq: &MultiplicitySequence, n: usize, m: usize) -> Result<Vec<Complex>> {
    check_n(seq, n)?;
    let prec = seq.prec();
    let mut c = vec![mp::czero(prec); m + 1];
    c[0] = mp::cone(prec);
    for (lam, mu) in &seq.entries()[..n] {
        // factor as (1 + a z^s)
        let (a, s) = match kind {
            ProductKind::FPlain => (Complex::with_val(prec, -1) / lam, 1),
            ProductKind::GAbs => (mp::from_real(&mp::abs(lam).recip()), 1),
            ProductKind::FEven => (Complex::with_val(prec, -1) / Complex::with_val(prec, lam.square_ref()), 2),
            ProductKind::LEven => (mp::cone(prec) / Complex::with_val(prec, lam.square_ref()), 2),
        };
        for _ in 0..*mu {
            for i in (s..=m).rev() {
                let t = Complex::with_val(prec, &c[i - s] * &a);
                c[i] += t;
            }
        }
    }
    Ok(c)
}

/// Horner evaluation of a coefficient list.
pub fn eval_poly(coeffs: &[Complex], z: &Complex) -> Complex {
    let prec = coeffs.first().map(mp::prec_of).unwrap_or(mp::prec_of(z));
    let mut acc = mp::czero(prec);
    for c in coeffs.iter().rev() {
        acc *= z;
        acc += c;
    }
    acc
}

/// Cosine-factor widths `ε_1 > ε_2 > …` summing to at most `τ`.
pub trait EpsSchedule {
    fn epsilons(&self, tau: &Float, k: usize) -> Vec<Float>;
}

/// `ε_k = τ·2^{−k}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct GeometricSchedule;

impl EpsSchedule for GeometricSchedule {
    fn epsilons(&self, tau: &Float, k: usize) -> Vec<Float> {
        (1..=k as i32).map(|j| Float::with_val(tau.prec(), tau >> j)).collect()
    }
}

pub fn lk_schedule(prec: u32, interval: &Interval, k: usize) -> Vec<Float> {
    GeometricSchedule.epsilons(&mp::float(prec, interval.tau()), k)
}

/// `G(z) = e^{−iσz} ∏_{n≤N} (1 + z²/λ_n²)^{μ_n} ∏_{k≤K} cos(ε_k z)`.
#[derive(Clone, Debug)]
pub struct LKFunction {
    seq: MultiplicitySequence,
    interval: Interval,
    epsilons: Vec<Float>,
}

impl LKFunction {
    pub fn new(seq: &MultiplicitySequence, interval: Interval, trunc_n: usize, cos_k: usize) -> Result<Self> {
        Self::with_schedule(seq, interval, trunc_n, cos_k, &GeometricSchedule)
    }

    pub fn with_schedule(
        seq: &MultiplicitySequence,
        interval: Interval,
        trunc_n: usize,
        cos_k: usize,
        schedule: &dyn EpsSchedule,
    ) -> Result<Self> {
        let seq = seq.prefix(trunc_n)?;
        let prec = seq.prec();
        let tau = mp::float(prec, interval.tau());
        let epsilons = schedule.epsilons(&tau, cos_k);
        if epsilons.windows(2).any(|w| w[1] >= w[0]) || epsilons.iter().any(|e| *e <= 0) {
            return Err(Error::invalid("cosine widths must be positive and strictly decreasing"));
        }
        let mut sum = mp::float(prec, 0.0);
        for e in &epsilons {
            sum += e;
        }
        if sum > tau {
            return Err(Error::invalid("cosine widths sum beyond τ"));
        }
        Ok(LKFunction { seq, interval, epsilons })
    }

    pub fn seq(&self) -> &MultiplicitySequence {
        &self.seq
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn epsilons(&self) -> &[Float] {
        &self.epsilons
    }

    pub fn prec(&self) -> u32 {
        self.seq.prec()
    }

    pub fn trunc_n(&self) -> usize {
        self.seq.len()
    }

    /// `iλ_n`, exact.
    pub fn zero(&self, n: usize) -> Complex {
        self.seq.lambda(n).clone().mul_i(false)
    }

    fn outer(&self, z: &Complex) -> Complex {
        let prec = self.prec();
        let sigma = mp::float(prec, self.interval.sigma());
        let mut v = (Complex::with_val(prec, z * &sigma).mul_i(true)).exp();
        for e in &self.epsilons {
            v *= Complex::with_val(prec, z * e).cos();
        }
        v
    }

    pub fn eval(&self, z: &Complex) -> Complex {
        let z = mp::cwith(self.prec(), z);
        let l = product_over(ProductKind::LEven, &self.seq, self.seq.len(), None, &z);
        if mp::is_zero(&l) {
            return l;
        }
        l * self.outer(&z)
    }

    /// `G^{(μ_n)}(iλ_n)/μ_n! = (2i/λ_n)^{μ_n} · (G with the n-th factor removed)(iλ_n)`.
    pub fn removed_factor(&self, n: usize) -> Complex {
        let prec = self.prec();
        let c = self.zero(n);
        let lead = Complex::with_val(prec, (0, 2)) / self.seq.lambda(n);
        let rest = product_over(ProductKind::LEven, &self.seq, self.seq.len(), Some(n), &c);
        mp::cpow(&lead, self.seq.mu(n)) * rest * self.outer(&c)
    }

    /// Points `c + r e^{2πiq/Q}`.
    pub fn circle(&self, center: &Complex, radius: &Float, q: usize) -> Vec<Complex> {
        circle_nodes(center, radius, q)
    }
}

/// `Q` equispaced points on the circle `|z − center| = radius`.
pub fn circle_nodes(center: &Complex, radius: &Float, q: usize) -> Vec<Complex> {
    let prec = mp::prec_of(center);
    let two_pi = mp::pi(prec) * 2u32;
    (0..q)
        .map(|j| {
            let theta = Float::with_val(prec, &two_pi * j as u32) / q as u32;
            let u = Complex::with_val(prec, (theta.clone().cos(), theta.sin()));
            Complex::with_val(prec, center + u * radius)
        })
        .collect()
}

pub fn lk_eval(lk: &LKFunction, z: &Complex) -> Complex {
    lk.eval(z)
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundRow {
    pub n: usize,
    pub radius: Real,
    pub min_abs: Real,
    /// `min_{∂P} |G| · e^{−(β−ε)Re λ_n}`
    pub constant: Real,
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundReport {
    pub eps: f64,
    pub rows: Vec<LowerBoundRow>,
    pub min_constant: Real,
    pub max_constant: Real,
    /// `max / min` of the fitted constants.
    pub spread: Real,
}

/// Minimal `|G|` over `q` nodes of each circle `∂P_{n,ε}`, `n ≤ nmax`.
pub fn lk_lowerbound(lk: &LKFunction, radii: &[Float], eps: f64, nmax: usize, q: usize) -> Result<LowerBoundReport> {
    if nmax == 0 || nmax > lk.trunc_n() || radii.len() < nmax {
        return Err(Error::OutOfRange(format!("nmax = {nmax} with N = {}", lk.trunc_n())));
    }
    let prec = lk.prec();
    let beta = lk.interval().beta();
    let mut rows = Vec::with_capacity(nmax);
    for n in 1..=nmax {
        let c = lk.zero(n);
        let mut best: Option<Float> = None;
        for z in lk.circle(&c, &radii[n - 1], q) {
            let a = mp::abs(&lk.eval(&z));
            if best.as_ref().is_none_or(|b| a < *b) {
                best = Some(a);
            }
        }
        let min_abs = best.expect("q ≥ 1");
        let w = Float::with_val(prec, lk.seq().lambda(n).real() * (eps - beta)).exp();
        rows.push(LowerBoundRow {
            n,
            radius: Real(radii[n - 1].clone()),
            constant: Real(Float::with_val(prec, &min_abs * &w)),
            min_abs: Real(min_abs),
        });
    }
    let min_c = rows.iter().map(|r| r.constant.0.clone()).min_by(|a, b| a.partial_cmp(b).unwrap()).unwrap();
    let max_c = rows.iter().map(|r| r.constant.0.clone()).max_by(|a, b| a.partial_cmp(b).unwrap()).unwrap();
    let spread = if min_c.is_zero() {
        Float::with_val(prec, rug::float::Special::Infinity)
    } else {
        Float::with_val(prec, &max_c / &min_c)
    };
    Ok(LowerBoundReport {
        eps,
        rows,
        min_constant: Real(min_c),
        max_constant: Real(max_c),
        spread: Real(spread),
    })
}

/// Coefficients `A_{n,1..J}` of the principal part of `1/G` at `iλ_n`.
#[derive(Clone, Debug, Serialize)]
pub struct LaurentCoeffs {
    pub n: usize,
    pub values: Vec<Cplx>,
    pub eps: f64,
    pub quad_q: usize,
    pub radius: Real,
    /// Largest relative change between `Q` and `2Q` nodes.
    pub change: Real,
}

/// Trapezoidal rule on `∂P_{n,ε}`: `A_j = (1/Q) Σ_q (r e^{iθ_q})^j / G(c + r e^{iθ_q})`,
/// checked against `2Q` nodes. The returned values use `2Q` nodes.
pub fn laurent_coeffs(
    lk: &LKFunction,
    n: usize,
    eps: f64,
    radius: &Float,
    j_max: usize,
    quad_q: usize,
    tol: &Float,
) -> Result<LaurentCoeffs> {
    if n == 0 || n > lk.trunc_n() {
        return Err(Error::OutOfRange(format!("frequency {n} outside 1..={}", lk.trunc_n())));
    }
    if j_max == 0 || j_max > lk.seq().mu(n) as usize {
        return Err(Error::invalid(format!("J = {j_max} must lie in 1..=μ_n = {}", lk.seq().mu(n))));
    }
    if quad_q < 2 {
        return Err(Error::invalid("quad_Q must be at least 2"));
    }
    let prec = lk.prec();
    let c = lk.zero(n);
    let nodes = lk.circle(&c, radius, 2 * quad_q);
    let mut fine = vec![mp::czero(prec); j_max];
    let mut coarse = vec![mp::czero(prec); j_max];
    for (q, z) in nodes.iter().enumerate() {
        let g = lk.eval(z);
        if mp::is_zero(&g) {
            return Err(Error::invalid(format!("G vanishes on the circle around iλ_{n}")));
        }
        let d = Complex::with_val(prec, z - &c);
        let mut p = Complex::with_val(prec, &d / &g);
        for j in 0..j_max {
            if q % 2 == 0 {
                coarse[j] += &p;
            }
            fine[j] += &p;
            p *= &d;
        }
    }
    let mut scale = mp::float(prec, 0.0);
    for j in 0..j_max {
        fine[j] /= (2 * quad_q) as u32;
        coarse[j] /= quad_q as u32;
        scale = scale.max(&mp::abs(&fine[j]));
    }
    let mut change = mp::float(prec, 0.0);
    if !scale.is_zero() {
        for j in 0..j_max {
            let d = mp::abs(&Complex::with_val(prec, &fine[j] - &coarse[j])) / &scale;
            change = change.max(&d);
        }
    }
    if change > *tol {
        return Err(Error::QuadratureNotConverged {
            change: mp::fmt(&change, 6),
            tol: mp::fmt(tol, 6),
        });
    }
    Ok(LaurentCoeffs {
        n,
        values: mp::cplxs(fine),
        eps,
        quad_q,
        radius: Real(radius.clone()),
        change: Real(change),
    })
}

/// `G_{n,k}(z) = (G(z)/k!) Σ_{l=1}^{μ_n−k} A_{n,k+l}/(z−iλ_n)^l`, for `z`
/// outside the disk `P_{n,ε}`.
pub fn gnk_eval(lk: &LKFunction, laurent: &LaurentCoeffs, k: u32, z: &Complex) -> Result<Complex> {
    let n = laurent.n;
    let mu = lk.seq().mu(n);
    check_gnk(laurent, mu, k)?;
    let prec = lk.prec();
    let z = mp::cwith(prec, z);
    let c = lk.zero(n);
    let d = Complex::with_val(prec, &z - &c);
    if mp::abs(&d) < laurent.radius.0 {
        return Err(Error::invalid(format!(
            "z lies inside P_{{{n},ε}}; use the regular-part form"
        )));
    }
    let mut sum = mp::czero(prec);
    let mut dl = mp::cone(prec);
    for l in 1..=(mu - k) as usize {
        dl *= &d;
        sum += Complex::with_val(prec, &laurent.values[k as usize + l - 1].0 / &dl);
    }
    Ok(lk.eval(&z) * sum / mp::factorial(prec, k))
}

/// Regular part `p_n(z) = (1/2πi)∮ 1/(G(w)(w−z)) dw` of `1/G` around `iλ_n`,
/// for `z` strictly inside the circle.
pub fn regular_part(lk: &LKFunction, laurent: &LaurentCoeffs, z: &Complex) -> Complex {
    let prec = lk.prec();
    let c = lk.zero(laurent.n);
    let q = 2 * laurent.quad_q;
    let mut acc = mp::czero(prec);
    for w in lk.circle(&c, &laurent.radius.0, q) {
        let num = Complex::with_val(prec, &w - &c);
        let den = lk.eval(&w) * Complex::with_val(prec, &w - z);
        acc += num / den;
    }
    acc / q as u32
}

/// `G_{n,k}` inside `P_{n,ε}` via
/// `(z−c)^k/k! − G(z)(z−c)^k p_n(z)/k! − (G(z)/k!) Σ_{j≤k} A_{n,j}(z−c)^{k−j}`.
pub fn gnk_eval_regular(lk: &LKFunction, laurent: &LaurentCoeffs, k: u32, z: &Complex) -> Result<Complex> {
    let n = laurent.n;
    check_gnk(laurent, lk.seq().mu(n), k)?;
    let prec = lk.prec();
    let z = mp::cwith(prec, z);
    let c = lk.zero(n);
    let d = Complex::with_val(prec, &z - &c);
    if mp::abs(&d) >= laurent.radius.0 {
        return Err(Error::invalid("the regular-part form needs z inside P_{n,ε}"));
    }
    let g = lk.eval(&z);
    let dk = mp::cpow(&d, k);
    let p = regular_part(lk, laurent, &z);
    let mut tail = mp::czero(prec);
    for j in 1..=k {
        tail += Complex::with_val(prec, &laurent.values[j as usize - 1].0 * mp::cpow(&d, k - j));
    }
    let v = Complex::with_val(prec, &dk - Complex::with_val(prec, &g * &dk) * p) - Complex::with_val(prec, &g * &tail);
    Ok(v / mp::factorial(prec, k))
}

fn check_gnk(laurent: &LaurentCoeffs, mu: u32, k: u32) -> Result<()> {
    if k >= mu {
        return Err(Error::invalid(format!("k = {k} must be below μ_n = {mu}")));
    }
    if laurent.values.len() < mu as usize {
        return Err(Error::invalid("G_{n,k} needs all μ_n Laurent coefficients"));
    }
    Ok(())
}

/// `f(z) = (4+z)^{−2} ∏_{n≤N} ((1 − z/λ_n)/(1 + z/(conj λ_n + 4)))^{μ_n}`, for `Re z > −4`.
pub fn blaschke_eval(seq: &MultiplicitySequence, n: usize, z: &Complex) -> Result<Complex> {
    check_n(seq, n)?;
    if *z.real() <= -4 {
        return Err(Error::invalid("blaschke_eval needs Re z > −4"));
    }
    let prec = seq.prec().max(mp::prec_of(z));
    let z = mp::cwith(prec, z);
    let base = Complex::with_val(prec, &z + 4u32);
    let mut acc = mp::cone(prec) / Complex::with_val(prec, base.square_ref());
    for (lam, mu) in &seq.entries()[..n] {
        let num = Complex::with_val(prec, lam - &z) / lam;
        if mp::is_zero(&num) {
            return Ok(mp::czero(prec));
        }
        let shifted = mp::conj(lam) + 4u32;
        let den = Complex::with_val(prec, &shifted + &z) / &shifted;
        acc *= mp::cpow(&(num / den), *mu);
    }
    Ok(acc)
}
