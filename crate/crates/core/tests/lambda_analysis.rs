mod common;

use expspan_core::lambda_analysis::{
    condensation_index, counting, geometric_conditions, integrated_about,
};
use expspan_core::source::fixture;
use expspan_core::{mp, MultiplicitySequence};
use proptest::prelude::*;
use rug::{Complex, Float};

const DIGITS: u32 = 60;

fn complex_seq(pts: &[(f64, f64, u32)]) -> MultiplicitySequence {
    // order by modulus, then argument
    let mut v: Vec<(f64, f64, u32)> = pts.to_vec();
    v.sort_by(|a, b| {
        let ma = a.0.hypot(a.1);
        let mb = b.0.hypot(b.1);
        ma.partial_cmp(&mb).unwrap().then(a.1.atan2(a.0).partial_cmp(&b.1.atan2(b.0)).unwrap())
    });
    v.dedup_by(|a, b| (a.0.hypot(a.1) - b.0.hypot(b.1)).abs() < 1e-6);
    let prec = mp::bits_for_digits(DIGITS);
    let e = v.iter().map(|&(re, im, m)| (mp::complex(prec, re, im), m)).collect();
    MultiplicitySequence::from_entries(e, "random")
}

fn points() -> impl Strategy<Value = Vec<(f64, f64, u32)>> {
    prop::collection::vec((0.5f64..30.0, -10.0f64..10.0, 1u32..4), 3..9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn counting_steps_by_multiplicity(pts in points()) {
        let s = complex_seq(&pts);
        let prec = s.prec();
        let n = s.len();
        for i in 1..=n {
            let r = mp::abs(s.lambda(i));
            let below = Float::with_val(prec, &r * (1.0 - 1e-9));
            let at = counting(&s, n, &r).unwrap();
            let before = counting(&s, n, &below).unwrap();
            prop_assert_eq!(at - before, u64::from(s.mu(i)));
        }
    }
}

/// `∫_0^{|λ_n|} (n(t, λ_n) − μ_n)/t dt + μ_n log|λ_n|`, integrating `1/t`
/// piecewise between the jumps of the step function.
fn integrated_about_by_quadrature(s: &MultiplicitySequence, n_trunc: usize, n: usize) -> Float {
    let prec = s.prec();
    let lam = s.lambda(n);
    let r = mp::abs(lam);
    let mut jumps: Vec<(Float, u32)> = (1..=n_trunc)
        .filter(|&j| j != n)
        .map(|j| (mp::abs(&Complex::with_val(prec, lam - s.lambda(j))), s.mu(j)))
        .filter(|(d, _)| *d <= r)
        .collect();
    jumps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut total = Float::with_val(prec, r.ln_ref()) * s.mu(n);
    let mut height = 0u32;
    for (i, (d, m)) in jumps.iter().enumerate() {
        height += m;
        let end = jumps.get(i + 1).map(|j| j.0.clone()).unwrap_or_else(|| r.clone());
        if end > *d {
            let piece = common::tanh_sinh(|t| mp::from_real(&Float::with_val(t.prec(), t.recip_ref())), d, &end, prec);
            total += Float::with_val(prec, piece.real()) * height;
        }
    }
    total
}

#[test]
fn integrated_about_matches_quadrature() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let tol = mp::pow10(mp::bits_for_digits(DIGITS), -(DIGITS as i32) / 2);
    for _ in 0..5 {
        let pts: Vec<(f64, f64, u32)> = (0..rng.gen_range(4..9))
            .map(|_| (rng.gen_range(0.5..20.0), rng.gen_range(-6.0..6.0), rng.gen_range(1..3)))
            .collect();
        let s = complex_seq(&pts);
        let n = s.len();
        for i in 1..=n {
            let got = integrated_about(&s, n, i).unwrap();
            let want = integrated_about_by_quadrature(&s, n, i);
            let err = Float::with_val(s.prec(), &got - &want).abs();
            assert!(err < tol, "n = {i}: {got} vs {want}");
        }
    }
}

#[test]
fn example_iv_meets_the_geometric_conditions() {
    let s = fixture("example_iv").unwrap().spec().materialize(24, mp::bits_for_digits(DIGITS)).unwrap();
    let g = geometric_conditions(&s, 24).unwrap();
    assert!(g.condition_i.consistent && g.condition_ii.consistent);
}

#[test]
fn condensation_agrees_with_geometric_verdicts() {
    let n = 24;
    let prec = mp::bits_for_digits(120);
    for (name, interpolating) in [("example_i", true), ("example_ii", true), ("example_iii", false)] {
        let s = fixture(name).unwrap().spec().materialize(n, prec).unwrap();
        let c = condensation_index(&s, n).unwrap();
        let g = geometric_conditions(&s, n).unwrap();
        let small = c.estimate.0 <= 0.2;
        let geo = g.condition_i.consistent && g.condition_ii.consistent;
        assert_eq!(small, interpolating, "{name}: ĉ = {}", c.estimate.0.to_f64());
        assert_eq!(geo, interpolating, "{name}: geometric verdicts");
    }
}
