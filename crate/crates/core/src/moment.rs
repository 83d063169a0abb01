//! Moment problem `⟨U, e_{n,k}⟩ = d_{n,k}` on `(γ, β)`.
//!
//! The series solution `U = Σ d_{n,k} r_{n,k}` and the scaled-family
//! diagnostics reduce to one linear solve against the Gram system at
//! truncation.

use std::collections::BTreeMap;

use rug::{Complex, Float};
use serde::Serialize;

use crate::domain::{check_n, FlatIndex, Interval, MultiplicitySequence, PrecisionContext, Sector};
use crate::error::{Error, Result};
use crate::gram::{biorthogonal, gram_matrix, BiorthogonalFamily, DomainSpec, GramSystem};
use crate::mp::{self, Real};
use crate::series::TaylorDirichletSeries;

/// Ratios below this are reported as `≤ −LARGE`.
const LARGE: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct MomentData {
    values: BTreeMap<FlatIndex, Complex>,
}

impl MomentData {
    pub fn new(values: BTreeMap<FlatIndex, Complex>) -> Self {
        MomentData { values }
    }

    /// Data on every index of `seq` up to `n` from `f(λ_n, n, k)`.
    pub fn from_fn(seq: &MultiplicitySequence, n: usize, f: impl Fn(&Complex, usize, u32) -> Complex) -> Result<Self> {
        let idx = crate::domain::flatten(seq, n)?;
        Ok(MomentData {
            values: idx.into_iter().map(|i| (i, f(seq.lambda(i.n), i.n, i.k))).collect(),
        })
    }

    pub fn values(&self) -> &BTreeMap<FlatIndex, Complex> {
        &self.values
    }

    pub fn get(&self, idx: FlatIndex, prec: u32) -> Complex {
        self.values.get(&idx).map(|v| mp::cwith(prec, v)).unwrap_or_else(|| mp::czero(prec))
    }

    /// Frequencies carrying data, ascending.
    pub fn frequencies(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.values.keys().map(|i| i.n).collect();
        f.dedup();
        f
    }

    /// `A_n = max_k |d_{n,k}|`.
    pub fn amplitude(&self, n: usize, prec: u32) -> Float {
        let mut m = mp::float(prec, 0.0);
        for (_, v) in self.values.range(FlatIndex::new(n, 0)..=FlatIndex::new(n, u32::MAX)) {
            m = m.max(&mp::abs(v));
        }
        m
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    /// `(n, log A_n / Re λ_n)`; `None` where `A_n = 0`.
    pub ratios: Vec<(usize, Option<Real>)>,
    /// Max over the last half of the frequencies; `None` when every ratio
    /// there is below `−10` (reported as `≤ −LARGE`).
    pub a: Option<Real>,
    pub a_display: String,
    pub limit: f64,
    pub pass: bool,
}

/// Passes iff the fitted `a = limsup log A_n / Re λ_n` is below `β − slack`.
pub fn growth_check(d: &MomentData, seq: &MultiplicitySequence, beta: f64, slack: f64) -> Result<GrowthReport> {
    let freqs = d.frequencies();
    if freqs.len() < 4 {
        return Err(Error::invalid(format!("growth check needs data on 4 frequencies, got {}", freqs.len())));
    }
    let prec = seq.prec();
    let mut ratios = Vec::with_capacity(freqs.len());
    for &n in &freqs {
        check_n(seq, n)?;
        let a = d.amplitude(n, prec);
        let r = if a.is_zero() { None } else { Some(a.ln() / seq.lambda(n).real()) };
        ratios.push((n, r));
    }
    let tail = &ratios[freqs.len() / 2..];
    let a = tail
        .iter()
        .filter_map(|(_, r)| r.as_ref())
        .max_by(|x, y| x.partial_cmp(y).unwrap())
        .filter(|m| m.to_f64() >= -LARGE)
        .cloned();
    let limit = beta - slack;
    let pass = a.as_ref().is_none_or(|a| a.to_f64() < limit);
    let a_display = match &a {
        Some(v) => mp::fmt(v, 20),
        None => "≤ −LARGE".to_string(),
    };
    Ok(GrowthReport {
        ratios: ratios.into_iter().map(|(n, r)| (n, r.map(Real))).collect(),
        a: a.map(Real),
        a_display,
        limit,
        pass,
    })
}

pub fn default_slack(interval: &Interval) -> f64 {
    0.05 * interval.length()
}

#[derive(Clone, Debug)]
pub struct MomentSolution {
    pub gram: GramSystem,
    pub family: BiorthogonalFamily,
    /// Coefficients of `U` in the `e_{n,k}` basis, flattened order.
    pub coeffs: Vec<Complex>,
    pub series: TaylorDirichletSeries,
    /// `max |⟨U, e_{n,k}⟩ − d_{n,k}|`.
    pub residual: Float,
    pub growth: GrowthReport,
    /// Set when the growth gate failed and the solve was forced.
    pub forced: bool,
}

/// Solves the truncated moment problem; `c = Cᵀ d` with `C = G^{−1}`, which
/// is `Σ_a d_a · (row a of C)`.
pub fn solve(
    d: &MomentData,
    seq: &MultiplicitySequence,
    n: usize,
    interval: Interval,
    ctx: &PrecisionContext,
    max_dim: usize,
    force: bool,
) -> Result<MomentSolution> {
    check_n(seq, n)?;
    if let Some(bad) = d.values.keys().find(|i| i.n > n || i.k >= seq.mu(i.n)) {
        return Err(Error::OutOfRange(format!("moment index {bad} outside the truncated system")));
    }
    let growth = growth_check(d, seq, interval.beta(), default_slack(&interval))?;
    if !growth.pass && !force {
        return Err(Error::GrowthGate {
            a: growth.a_display.clone(),
            limit: format!("{}", growth.limit),
        });
    }
    let gram = gram_matrix(seq, n, &DomainSpec::Bounded(interval), ctx, max_dim)?;
    let family = biorthogonal(&gram);
    let prec = gram.prec();
    let data: Vec<Complex> = gram.indices().iter().map(|i| d.get(*i, prec)).collect();
    let coeffs = solve_coeffs(&family, &data);
    let check = gram.moments_of(&coeffs)?;
    let mut residual = mp::float(prec, 0.0);
    let mut scale = mp::float(prec, 1.0);
    for (m, want) in check.iter().zip(&data) {
        residual = residual.max(&mp::abs(&Complex::with_val(prec, m - want)));
        scale = scale.max(&mp::abs(want));
    }
    let floor = mp::tol_digits(prec, gram.digits(), 3) * &scale;
    if residual > floor {
        return Err(Error::ResidualFloor {
            residual: mp::fmt(&residual, 6),
            floor: mp::fmt(&floor, 6),
        });
    }
    let series = TaylorDirichletSeries::from_dense(
        gram.seq().clone(),
        gram.indices(),
        &coeffs,
        Sector::half_plane(interval.beta()),
    )?;
    Ok(MomentSolution {
        forced: !growth.pass,
        gram,
        family,
        coeffs,
        series,
        residual,
        growth,
    })
}

/// `c_j = Σ_a d_a C_aj`.
pub fn solve_coeffs(fam: &BiorthogonalFamily, data: &[Complex]) -> Vec<Complex> {
    let dim = data.len();
    let prec = fam.coeffs.prec();
    let mut c = vec![mp::czero(prec); dim];
    for (a, da) in data.iter().enumerate() {
        if mp::is_zero(da) {
            continue;
        }
        for (j, cj) in c.iter_mut().enumerate() {
            *cj += Complex::with_val(prec, da * &fam.coeffs[(a, j)]);
        }
    }
    c
}

#[derive(Clone, Debug, Serialize)]
pub struct BesselReport {
    /// `Σ_b |⟨U_a, U_b⟩|` for `U_a = λ_{n_a} d_a r_a`.
    pub row_sums: Vec<Real>,
    pub total: Real,
    /// `max |⟨U_a, V_b⟩ − δ_ab|` with `V_b = e_b / (conj λ_b · conj d_b)`;
    /// `None` when some `d_b = 0`.
    pub scaled_biorthogonality: Option<Real>,
}

pub fn bessel_diagnostic(d: &MomentData, g: &GramSystem, fam: &BiorthogonalFamily) -> BesselReport {
    let prec = g.prec();
    let dim = g.dim();
    let w: Vec<Complex> = g
        .indices()
        .iter()
        .map(|i| Complex::with_val(prec, g.seq().lambda(i.n) * d.get(*i, prec)))
        .collect();
    let mut row_sums = Vec::with_capacity(dim);
    let mut total = mp::float(prec, 0.0);
    for a in 0..dim {
        let mut s = mp::float(prec, 0.0);
        for b in 0..dim {
            // ⟨r_a, r_b⟩ = C_ab
            let v = Complex::with_val(prec, &w[a] * &mp::conj(&w[b])) * &fam.coeffs[(a, b)];
            s += mp::abs(&v);
        }
        total += &s;
        row_sums.push(s);
    }
    let scaled = if w.iter().any(mp::is_zero) {
        None
    } else {
        let mut worst = mp::float(prec, 0.0);
        for a in 0..dim {
            let u: Vec<Complex> = fam.coeffs.row(a).iter().map(|c| Complex::with_val(prec, c * &w[a])).collect();
            for b in 0..dim {
                let mut v = vec![mp::czero(prec); dim];
                v[b] = mp::cone(prec) / mp::conj(&w[b]);
                let ip = g.form(&u, &v);
                let target = if a == b { mp::cone(prec) } else { mp::czero(prec) };
                worst = worst.max(&mp::abs(&Complex::with_val(prec, &ip - &target)));
            }
        }
        Some(Real(worst))
    };
    BesselReport {
        row_sums: mp::reals(row_sums),
        total: Real(total),
        scaled_biorthogonality: scaled,
    }
}
