use expspan_core::domain::{flatten, position, sector_contains, validate_sequence};
use expspan_core::source::fixtures;
use expspan_core::{mp, FlatIndex, MultiplicitySequence, Sector};
use proptest::prelude::*;
use rug::Complex;

fn seq_from(steps: &[(f64, u32)]) -> MultiplicitySequence {
    let mut x = 0.0;
    let e: Vec<(f64, u32)> = steps
        .iter()
        .map(|&(d, m)| {
            x += d;
            (x, m)
        })
        .collect();
    MultiplicitySequence::real(128, &e, "random")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flatten_is_a_bijection(steps in prop::collection::vec((0.1f64..5.0, 1u32..4), 1..12), cut in 0usize..12) {
        let s = seq_from(&steps);
        let n = 1 + cut % s.len();
        let flat = flatten(&s, n).unwrap();
        prop_assert_eq!(flat.len(), s.dimension(n));
        let mut want = Vec::new();
        for i in 1..=n {
            for k in 0..s.mu(i) {
                want.push(FlatIndex::new(i, k));
            }
        }
        prop_assert_eq!(&flat, &want);
        for (p, idx) in flat.iter().enumerate() {
            prop_assert_eq!(position(&s, *idx), Some(p));
        }
        prop_assert_eq!(position(&s, FlatIndex::new(1, s.mu(1))), None);
    }

    #[test]
    fn sector_is_closed_under_left_shifts(
        eta in 0.0f64..1.5,
        beta in -3.0f64..3.0,
        re in -10.0f64..3.0,
        im in -10.0f64..10.0,
        t in 0.001f64..20.0,
    ) {
        let sec = Sector::new(eta, beta).unwrap();
        let z = mp::complex(128, re, im);
        if sector_contains(&sec, &z) {
            let w = Complex::with_val(128, &z - t);
            prop_assert!(sector_contains(&sec, &w));
        }
    }
}

#[test]
fn fixtures_validate() {
    for f in fixtures() {
        let len = f.spec().natural_len().unwrap_or(8).min(8);
        let s = f.spec().materialize(len, mp::bits_for_digits(1800)).unwrap();
        assert!(validate_sequence(&s).is_empty(), "{}", f.name);
    }
}
