//! Report builders shared by the subcommands and the batch runner.

use expspan_core::carleson::{self, apply_to_exponential, residual_on_span, CarlesonOperator};
use expspan_core::domain::flatten;
use expspan_core::gram::{self, BiorthogonalFamily, GramSystem};
use expspan_core::lambda_analysis::{analyze as class_report, gap_check, TrendEvidence};
use expspan_core::linalg::CMatrix;
use expspan_core::moment::{bessel_diagnostic, solve, MomentData};
use expspan_core::products::{eval_product, lk_lowerbound, LKFunction, ProductKind};
use expspan_core::series::{bound_check, star_abscissa, td_eval, SeriesFile, TaylorDirichletSeries};
use expspan_core::source::{fixtures, SequenceSpec};
use expspan_core::{mp, FlatIndex, Interval, MultiplicitySequence};
use mp::{Cplx, Real};
use rug::{Complex, Float};
use serde_json::json;

use crate::bundle::{Bundle, Table};
use crate::error::{CliError, CliResult};
use crate::input::Settings;

fn full(x: &Float) -> String {
    mp::fmt(x, mp::digits_for_bits(x.prec()))
}

fn pair(z: &Complex) -> [String; 2] {
    mp::fmt_pair(z, mp::digits_for_bits(mp::prec_of(z)))
}

fn matrix(m: &CMatrix) -> Vec<Vec<Cplx>> {
    (0..m.rows()).map(|i| m.row(i).iter().cloned().map(Cplx).collect()).collect()
}

fn index_pairs(idx: &[FlatIndex]) -> Vec<[usize; 2]> {
    idx.iter().map(|i| [i.n, i.k as usize]).collect()
}

pub fn fixture_list(b: &mut Bundle) -> CliResult<()> {
    b.report("fixtures", "Built-in sequences", fixtures())?;
    let mut t = Table::new(
        "fixtures",
        "Built-in sequences",
        &[("name", "fixture name, usable as --seq fixture:NAME"), ("description", "definition of λ_n and μ_n")],
    );
    for f in fixtures() {
        t.push(vec![f.name.into(), f.description.into()]);
    }
    b.table(t);
    Ok(())
}

fn push_trend(t: &mut Table, quantity: &str, ev: &TrendEvidence) {
    for (i, r) in ev.ratios.iter().enumerate() {
        t.push(vec![quantity.into(), (i + 1).to_string(), full(&r.0)]);
    }
}

pub fn analyze(b: &mut Bundle, seq: &MultiplicitySequence, n: usize, eps: f64) -> CliResult<()> {
    let r = class_report(seq, n, eps)?;
    let mut data = serde_json::to_value(&r)?;
    data["all_pass"] = json!(r.all_pass());
    b.report("class_report", "Conditions A and B, geometric conditions, separation, gaps, condensation", data)?;
    let mut t = Table::new(
        "analyze_ratios",
        "Ratio sequences behind each verdict, in long format",
        &[
            ("quantity", "partial_sum_a | condition_i | condition_ii | necessary | density | gap | condensation"),
            ("n", "index within the prefix"),
            ("value", "decimal value at full precision"),
        ],
    );
    for (i, p) in r.condition_a.partials.iter().enumerate() {
        t.push(vec!["partial_sum_a".into(), (i + 1).to_string(), full(&p.0)]);
    }
    push_trend(&mut t, "condition_i", &r.geometric.condition_i);
    push_trend(&mut t, "condition_ii", &r.geometric.condition_ii);
    push_trend(&mut t, "necessary", &r.necessary);
    push_trend(&mut t, "density", &r.separation.density);
    for (i, g) in r.gap.gaps.iter().enumerate() {
        t.push(vec!["gap".into(), (i + 1).to_string(), full(&g.0)]);
    }
    if let Ok(c) = &r.condensation {
        for (i, x) in c.ratios.iter().enumerate() {
            t.push(vec!["condensation".into(), (i + 1).to_string(), full(&x.0)]);
        }
    }
    b.table(t);
    Ok(())
}

pub fn product_eval(b: &mut Bundle, kind: ProductKind, seq: &MultiplicitySequence, n: usize, z: &Complex) -> CliResult<()> {
    let v = eval_product(kind, seq, n, z)?;
    let [re, im] = pair(&v);
    b.report(
        "product",
        "Truncated canonical product at z",
        json!({"kind": kind, "N": n, "z": Cplx(z.clone()), "value_re": re, "value_im": im}),
    )
}

pub fn lk_eval(b: &mut Bundle, lk: &LKFunction, z: &Complex) -> CliResult<()> {
    let v = lk.eval(z);
    let [re, im] = pair(&v);
    b.report(
        "lk",
        "Truncated LK function at z",
        json!({
            "N": lk.trunc_n(),
            "interval": lk.interval(),
            "cos_factors": lk.epsilons().len(),
            "z": Cplx(z.clone()),
            "value_re": re,
            "value_im": im,
        }),
    )
}

pub fn lk_bound(b: &mut Bundle, lk: &LKFunction, eps: f64, nmax: usize, nodes: usize) -> CliResult<()> {
    let radii = gap_check(lk.seq(), lk.trunc_n(), eps)?.radii_p();
    let r = lk_lowerbound(lk, &radii, eps, nmax, nodes)?;
    let mut t = Table::new(
        "lk_lowerbound",
        "Minimum of |G| on the circles around iλ_n",
        &[
            ("n", "frequency index"),
            ("radius", "circle radius"),
            ("min_abs", "min |G| over the circle nodes"),
            ("constant", "min_abs · exp(−(β−ε) Re λ_n)"),
        ],
    );
    for row in &r.rows {
        t.push(vec![row.n.to_string(), full(&row.radius.0), full(&row.min_abs.0), full(&row.constant.0)]);
    }
    b.report("lk_lowerbound", "Fitted lower-bound constants of the LK function", &r)?;
    b.table(t);
    Ok(())
}

pub fn gram_build(b: &mut Bundle, g: &GramSystem, requested: u32) -> CliResult<()> {
    b.report(
        "gram",
        "Gram matrix, row-major [re, im] pairs",
        json!({
            "domain": g.domain(),
            "dim": g.dim(),
            "digits_requested": requested,
            "digits_used": g.digits(),
            "condition": Real(g.condition().clone()),
            "indices": index_pairs(g.indices()),
            "matrix": matrix(g.matrix()),
        }),
    )
}

pub fn distance_trend(b: &mut Bundle, g: &GramSystem) -> CliResult<()> {
    let d = gram::distances_all(g);
    let seq = g.seq();
    let prec = g.prec();
    let mut trend = Table::new(
        "distance_trend",
        "Distance of e_{n,0} to the span of the other exponentials",
        &[
            ("n", "frequency index"),
            ("Re λ_n", "real part of λ_n"),
            ("D_n", "distance of e_{n,0} to the closed span of the others"),
            ("log D_n/Re λ_n", "distance exponent"),
        ],
    );
    let mut all = Table::new(
        "distances",
        "Distance of every e_{n,k} to the span of the others",
        &[("n", "frequency index"), ("k", "power of t"), ("D", "distance")],
    );
    for (idx, dist) in g.indices().iter().zip(&d) {
        all.push(vec![idx.n.to_string(), idx.k.to_string(), full(dist)]);
        if idx.k == 0 {
            let re = seq.lambda(idx.n).real().clone();
            let ratio = Float::with_val(prec, dist.ln_ref()) / &re;
            trend.push(vec![idx.n.to_string(), full(&re), full(dist), full(&ratio)]);
        }
    }
    b.report(
        "distances",
        "Distances to the span of the remaining exponentials",
        json!({"indices": index_pairs(g.indices()), "distances": mp::reals(d), "digits_used": g.digits()}),
    )?;
    b.table(trend);
    b.table(all);
    Ok(())
}

pub fn biorthogonal_report(b: &mut Bundle, g: &GramSystem, fam: &BiorthogonalFamily) -> CliResult<()> {
    let residual = fam.residual(g);
    let defect = fam.norm_distance_defect();
    let mut t = Table::new(
        "biorthogonal_norms",
        "Norms of the biorthogonal family against distances",
        &[
            ("n", "frequency index"),
            ("k", "power of t"),
            ("norm", "‖r_{n,k}‖"),
            ("distance", "D_{n,k}"),
            ("norm_times_distance", "‖r‖·D, equal to 1"),
        ],
    );
    for (i, idx) in g.indices().iter().enumerate() {
        let prod = Float::with_val(g.prec(), &fam.norms[i] * &fam.distances[i]);
        t.push(vec![
            idx.n.to_string(),
            idx.k.to_string(),
            full(&fam.norms[i]),
            full(&fam.distances[i]),
            full(&prod),
        ]);
    }
    b.report(
        "biorthogonal",
        "Coefficients of r_a in the e_j basis (row a), with identity and norm-distance checks",
        json!({
            "indices": index_pairs(g.indices()),
            "digits_used": g.digits(),
            "identity_residual": Real(residual),
            "norm_distance_defect": Real(defect),
            "norms": mp::reals(fam.norms.clone()),
            "distances": mp::reals(fam.distances.clone()),
            "coefficients": matrix(&fam.coeffs),
        }),
    )?;
    b.table(t);
    Ok(())
}

pub fn mixed(b: &mut Bundle, g: &GramSystem, fam: &BiorthogonalFamily, n2: &[FlatIndex]) -> CliResult<()> {
    let n1: Vec<FlatIndex> = g.indices().iter().filter(|i| !n2.contains(i)).copied().collect();
    let r = gram::mixed_completeness(g, fam, &n1, n2)?;
    b.report("mixed", "Extreme singular values of the mixed system", &r)
}

pub fn series_eval(b: &mut Bundle, s: &TaylorDirichletSeries, zs: &[Complex], n: usize) -> CliResult<()> {
    let values = zs
        .iter()
        .map(|z| Ok(json!({"z": Cplx(z.clone()), "result": td_eval(s, z, n)?})))
        .collect::<CliResult<Vec<_>>>()?;
    b.report("series_eval", "Partial sums with tail bounds", json!({"N": n, "points": values}))
}

pub fn series_abscissa(b: &mut Bundle, s: &TaylorDirichletSeries, n: usize) -> CliResult<()> {
    let r = star_abscissa(s, n)?;
    let mut t = Table::new(
        "abscissa_ratios",
        "log c*_n / Re λ_n per frequency",
        &[("n", "frequency index"), ("ratio", "empty where c*_n = 0")],
    );
    for (i, x) in r.ratios.iter().enumerate() {
        t.push(vec![(i + 1).to_string(), x.as_ref().map(|x| full(&x.0)).unwrap_or_default()]);
    }
    b.report("abscissa", "Fitted abscissa of the series", &r)?;
    b.table(t);
    Ok(())
}

pub fn series_bound(b: &mut Bundle, s: &TaylorDirichletSeries, beta: f64, eps: f64) -> CliResult<()> {
    b.report("bound", "Coefficient bound check", bound_check(s, beta, eps)?)
}

#[allow(clippy::too_many_arguments)]
pub fn moment_solve(
    b: &mut Bundle,
    spec: &SequenceSpec,
    d: &MomentData,
    seq: &MultiplicitySequence,
    n: usize,
    interval: Interval,
    s: &Settings,
    force: bool,
) -> CliResult<()> {
    let sol = solve(d, seq, n, interval, &s.ctx(n)?, s.max_dim, force)?;
    let bessel = bessel_diagnostic(d, &sol.gram, &sol.family);
    let mut t = Table::new(
        "growth",
        "Growth ratios of the moment data",
        &[("n", "frequency index"), ("ratio", "log A_n / Re λ_n, empty where A_n = 0")],
    );
    for (n, r) in &sol.growth.ratios {
        t.push(vec![n.to_string(), r.as_ref().map(|x| full(&x.0)).unwrap_or_default()]);
    }
    b.report(
        "moment_solution",
        "Solution series, residual and diagnostics",
        json!({
            "series": SeriesFile::from_series(spec.clone(), &sol.series),
            "residual": Real(sol.residual.clone()),
            "growth": sol.growth,
            "forced": sol.forced,
            "digits_used": sol.gram.digits(),
            "bessel": bessel,
        }),
    )?;
    b.table(t);
    Ok(())
}

pub fn carleson_apply(b: &mut Bundle, op: &CarlesonOperator, lam: &Complex, k: u32, grid: &[f64]) -> CliResult<()> {
    let prec = op.prec();
    let mut t = Table::new(
        "carleson_apply",
        "F(D) applied to x^k e^{λx}",
        &[("x", "grid point"), ("re", "real part"), ("im", "imaginary part")],
    );
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid {
        let v = apply_to_exponential(op, lam, k, &mp::float(prec, x))?;
        let [re, im] = pair(&v);
        t.push(vec![x.to_string(), re, im]);
        values.push(json!({"x": x, "value": Cplx(v)}));
    }
    b.report(
        "carleson_apply",
        "Operator coefficients and values on the grid",
        json!({
            "degree": op.degree(),
            "fcoeffs": mp::cplxs(op.fcoeffs().to_vec()),
            "lambda": Cplx(lam.clone()),
            "k": k,
            "values": values,
        }),
    )?;
    b.table(t);
    Ok(())
}

/// `F(D) e_{n,k}` for every truncated index on the grid.
pub fn carleson_annihilation(b: &mut Bundle, op: &CarlesonOperator, seq: &MultiplicitySequence, n: usize, grid: &[f64]) -> CliResult<()> {
    let prec = op.prec();
    let mut t = Table::new(
        "carleson_annihilation",
        "|F(D) e_{n,k}(x)| on the grid",
        &[("n", "frequency index"), ("k", "power of t"), ("x", "grid point"), ("abs", "modulus")],
    );
    let mut worst = mp::float(prec, 0.0);
    for idx in flatten(seq, n)? {
        for &x in grid {
            let v = mp::abs(&apply_to_exponential(op, seq.lambda(idx.n), idx.k, &mp::float(prec, x))?);
            t.push(vec![idx.n.to_string(), idx.k.to_string(), x.to_string(), full(&v)]);
            worst = worst.max(&v);
        }
    }
    b.report(
        "carleson_annihilation",
        "Largest |F(D) e_{n,k}| over the truncated indices and the grid",
        json!({"degree": op.degree(), "grid": grid, "max_abs": Real(worst)}),
    )?;
    b.table(t);
    Ok(())
}

pub fn carleson_residual(b: &mut Bundle, op: &CarlesonOperator, s: &TaylorDirichletSeries, grid: &[f64]) -> CliResult<()> {
    b.report("carleson_residual", "sup of |F(D)s| over the grid", residual_on_span(op, s, grid)?)
}

pub fn counterexample(b: &mut Bundle, nmax: u32, digits: Option<u32>, zs: &[String]) -> CliResult<()> {
    let digits = digits.unwrap_or_else(|| carleson::counterexample_digits(nmax));
    let prec = mp::bits_for_digits(digits);
    let points = zs
        .iter()
        .map(|z| crate::input::parse_complex(z, prec))
        .collect::<CliResult<Vec<_>>>()?;
    if points.is_empty() {
        return Err(CliError::invalid("counterexample needs at least one point"));
    }
    let r = carleson::counterexample(nmax, digits, &points)?;
    let mut t = Table::new(
        "counterexample",
        "Grouped against ungrouped terms of the counterexample series",
        &[
            ("point", "index of the evaluation point"),
            ("re_z", "real part of z"),
            ("im_z", "imaginary part of z"),
            ("n", "group index"),
            ("grouped", "modulus of the grouped pair"),
            ("grouped_bound", "analytic bound for the grouped pair"),
            ("ungrouped", "modulus of the first term of the pair"),
            ("ungrouped_pair", "modulus of the second term of the pair"),
        ],
    );
    for (i, p) in r.points.iter().enumerate() {
        let [re, im] = pair(&p.z.0);
        for row in &p.rows {
            t.push(vec![
                i.to_string(),
                re.clone(),
                im.clone(),
                row.n.to_string(),
                full(&row.grouped.0),
                full(&row.grouped_bound.0),
                full(&row.ungrouped.0),
                full(&row.ungrouped_pair.0),
            ]);
        }
    }
    b.report("counterexample", "Grouped convergence against ungrouped divergence", &r)?;
    b.table(t);
    Ok(())
}
