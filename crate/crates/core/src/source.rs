//! Sequence spec files, named generators and the built-in fixture library.
//!
//! A spec is either an explicit finite list or a generator; generators are
//! infinite and get materialized to a requested length at a requested
//! precision.

use rug::ops::Pow;
use rug::{Complex, Float};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::domain::MultiplicitySequence;
use crate::error::{Error, Result};
use crate::mp;

/// A real number in a spec file: a JSON number (taken at its exact binary
/// value) or a decimal string (parsed at the working precision).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Text(String),
}

impl Scalar {
    pub fn to_float(&self, prec: u32) -> Result<Float> {
        match self {
            Scalar::Num(x) if x.is_finite() => Ok(mp::float(prec, *x)),
            Scalar::Num(x) => Err(Error::Parse(format!("non-finite number {x}"))),
            Scalar::Text(s) => mp::parse_float(prec, s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    Explicit {
        entries: Vec<(Scalar, Scalar, u32)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Generator {
        name: String,
        #[serde(default)]
        params: Map<String, Value>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Generator {
    /// `λ_n = n²`, constant multiplicity.
    Squares { mu: u32 },
    /// `λ_n = n`, constant multiplicity.
    Linear { mu: u32 },
    /// `λ_n = n^p · base^n`, `μ_n = mu · mu_base^n`.
    PolyPower { p: u32, base: f64, mu: u32, mu_base: u32 },
    /// `λ_{2n−1} = n²`, `λ_{2n} = n² + e^{−n^q}`.
    PairedSquares { q: u32 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MuParams {
    #[serde(default = "one")]
    mu: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyPowerParams {
    #[serde(default)]
    p: u32,
    base: f64,
    #[serde(default = "one")]
    mu: u32,
    #[serde(default = "one")]
    mu_base: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairedParams {
    q: u32,
}

fn one() -> u32 {
    1
}

fn params<T: serde::de::DeserializeOwned>(name: &str, p: &Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(p.clone()))
        .map_err(|e| Error::Parse(format!("bad params for generator {name:?}: {e}")))
}

fn generator(name: &str, p: &Map<String, Value>) -> Result<Generator> {
    if let Some(f) = FIXTURES.iter().find(|f| f.name == name) {
        if !p.is_empty() {
            return Err(Error::Parse(format!("fixture {name:?} takes no params")));
        }
        return Ok(f.generator);
    }
    let g = match name {
        "squares" => Generator::Squares { mu: params::<MuParams>(name, p)?.mu },
        "linear" => Generator::Linear { mu: params::<MuParams>(name, p)?.mu },
        "poly_power" => {
            let pp: PolyPowerParams = params(name, p)?;
            if !(pp.base.is_finite() && pp.base >= 1.0) {
                return Err(Error::invalid(format!("poly_power needs base ≥ 1, got {}", pp.base)));
            }
            Generator::PolyPower {
                p: pp.p,
                base: pp.base,
                mu: pp.mu,
                mu_base: pp.mu_base,
            }
        }
        "paired_squares" => Generator::PairedSquares { q: params::<PairedParams>(name, p)?.q },
        other => return Err(Error::Parse(format!("unknown generator {other:?}"))),
    };
    Ok(g)
}

impl Generator {
    fn entry(self, n: u32, prec: u32) -> Result<(Complex, u32)> {
        let (lam, mu) = match self {
            Generator::Squares { mu } => (Float::with_val(prec, n) * n, mu),
            Generator::Linear { mu } => (Float::with_val(prec, n), mu),
            Generator::PolyPower { p, base, mu, mu_base } => {
                let lam = Float::with_val(prec, n).pow(p) * Float::with_val(prec, base).pow(n);
                let m = u64::from(mu_base)
                    .checked_pow(n)
                    .and_then(|x| x.checked_mul(u64::from(mu)))
                    .and_then(|x| u32::try_from(x).ok())
                    .ok_or_else(|| Error::invalid(format!("multiplicity of entry {n} overflows")))?;
                (lam, m)
            }
            Generator::PairedSquares { q } => {
                let j = n.div_ceil(2);
                let base = Float::with_val(prec, j) * j;
                if n % 2 == 1 {
                    (base, 1)
                } else {
                    let e = Float::with_val(prec, j).pow(q);
                    (base + (-e).exp(), 1)
                }
            }
        };
        if mu == 0 {
            return Err(Error::invalid("multiplicity 0"));
        }
        Ok((mp::from_real(&lam), mu))
    }
}

impl SequenceSpec {
    pub fn explicit_real(entries: &[(f64, u32)]) -> Self {
        SequenceSpec::Explicit {
            entries: entries.iter().map(|(x, m)| (Scalar::Num(*x), Scalar::Num(0.0), *m)).collect(),
            label: None,
        }
    }

    pub fn generator(name: &str) -> Self {
        SequenceSpec::Generator {
            name: name.to_string(),
            params: Map::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let spec: SequenceSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("sequence spec: {e}")))?;
        if let SequenceSpec::Generator { name, params } = &spec {
            generator(name, params)?;
        }
        Ok(spec)
    }

    /// Number of entries for explicit specs; `None` for generators.
    pub fn natural_len(&self) -> Option<usize> {
        match self {
            SequenceSpec::Explicit { entries, .. } => Some(entries.len()),
            SequenceSpec::Generator { .. } => None,
        }
    }

    fn label(&self) -> String {
        match self {
            SequenceSpec::Explicit { label, .. } => label.clone().unwrap_or_else(|| "explicit".into()),
            SequenceSpec::Generator { name, .. } => name.clone(),
        }
    }

    pub fn materialize(&self, len: usize, prec: u32) -> Result<MultiplicitySequence> {
        if len == 0 {
            return Err(Error::OutOfRange("sequence length 0".into()));
        }
        let entries = match self {
            SequenceSpec::Explicit { entries, .. } => {
                if len > entries.len() {
                    return Err(Error::OutOfRange(format!(
                        "requested {len} entries, the explicit list has {}",
                        entries.len()
                    )));
                }
                entries[..len]
                    .iter()
                    .map(|(re, im, mu)| {
                        let z = Complex::with_val(prec, (re.to_float(prec)?, im.to_float(prec)?));
                        Ok((z, *mu))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            SequenceSpec::Generator { name, params } => {
                let g = generator(name, params)?;
                let len = u32::try_from(len).map_err(|_| Error::OutOfRange(format!("length {len}")))?;
                (1..=len).map(|n| g.entry(n, prec)).collect::<Result<Vec<_>>>()?
            }
        };
        Ok(MultiplicitySequence::from_spec(entries, self.label(), self.clone(), prec))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    #[serde(skip)]
    generator: Generator,
}

impl Fixture {
    pub fn spec(&self) -> SequenceSpec {
        SequenceSpec::generator(self.name)
    }
}

const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "example_i",
        description: "λ_n = n², μ_n = 1 (separated positive reals with Σ 1/λ_n < ∞)",
        generator: Generator::Squares { mu: 1 },
    },
    Fixture {
        name: "example_ii",
        description: "λ_{2n−1} = n², λ_{2n} = n² + e^{−n}, μ_n = 1",
        generator: Generator::PairedSquares { q: 1 },
    },
    Fixture {
        name: "example_iii",
        description: "λ_{2n−1} = n², λ_{2n} = n² + e^{−n²}, μ_n = 1",
        generator: Generator::PairedSquares { q: 2 },
    },
    Fixture {
        name: "example_iv",
        description: "λ_n = n², μ_n = 2 (bounded multiplicities)",
        generator: Generator::Squares { mu: 2 },
    },
    Fixture {
        name: "example_v",
        description: "λ_n = 3^n, μ_n = 2^n",
        generator: Generator::PolyPower { p: 0, base: 3.0, mu: 1, mu_base: 2 },
    },
    Fixture {
        name: "example_vi",
        description: "λ_n = n²·10^n, μ_n = 10^n",
        generator: Generator::PolyPower { p: 2, base: 10.0, mu: 1, mu_base: 10 },
    },
    Fixture {
        name: "carleson_counterexample",
        description: "λ_{2n−1} = n², λ_{2n} = n² + e^{−n⁴}, μ_n = 1",
        generator: Generator::PairedSquares { q: 4 },
    },
];

pub fn fixtures() -> &'static [Fixture] {
    FIXTURES
}

pub fn fixture(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::validate_sequence;

    const P: u32 = 256;

    #[test]
    fn parses_explicit_spec_with_strings() {
        let s = SequenceSpec::parse(r#"{"kind":"explicit","entries":[[3,0,2],["9","0",4]]}"#).unwrap();
        let q = s.materialize(2, P).unwrap();
        assert_eq!(q.mu(2), 4);
        assert_eq!(*q.lambda(2), mp::complex(P, 9.0, 0.0));
        assert!(s.materialize(3, P).is_err());
    }

    #[test]
    fn rejects_malformed_specs() {
        assert!(matches!(SequenceSpec::parse("{"), Err(Error::Parse(_))));
        assert!(matches!(SequenceSpec::parse(r#"{"kind":"generator","name":"nope"}"#), Err(Error::Parse(_))));
        assert!(matches!(
            SequenceSpec::parse(r#"{"kind":"generator","name":"squares","params":{"zz":1}}"#),
            Err(Error::Parse(_))
        ));
        let bad = SequenceSpec::parse(r#"{"kind":"explicit","entries":[["x",0,1]]}"#).unwrap();
        assert!(matches!(bad.materialize(1, P), Err(Error::Parse(_))));
    }

    #[test]
    fn example_v_is_three_to_the_n() {
        let s = fixture("example_v").unwrap().spec().materialize(4, P).unwrap();
        assert_eq!(*s.lambda(4), mp::complex(P, 81.0, 0.0));
        assert_eq!(s.mu(4), 16);
    }

    #[test]
    fn example_ii_pairs() {
        let s = fixture("example_ii").unwrap().spec().materialize(4, P).unwrap();
        assert_eq!(*s.lambda(3), mp::complex(P, 4.0, 0.0));
        let d = Float::with_val(P, s.lambda(4).real() - 4u32);
        let expect = Float::with_val(P, -2).exp();
        assert!(Float::with_val(P, &d - &expect).abs() < mp::pow10(P, -70));
    }

    #[test]
    fn fixture_sequences_validate() {
        for f in fixtures() {
            if f.name == "carleson_counterexample" {
                continue;
            }
            let n = if f.name == "example_vi" { 5 } else { 12 };
            let s = f.spec().materialize(n, P).unwrap();
            assert!(validate_sequence(&s).is_empty(), "{}", f.name);
        }
        // e^{-n^4} needs n^4/ln 10 digits to stay distinct from n^2
        let c = fixture("carleson_counterexample").unwrap().spec().materialize(8, mp::bits_for_digits(1800)).unwrap();
        assert!(validate_sequence(&c).is_empty());
    }

    #[test]
    fn rematerializes_at_higher_precision() {
        let s = fixture("example_iii").unwrap().spec().materialize(6, 128).unwrap();
        let t = s.with_prec(512);
        assert_eq!(t.prec(), 512);
        let exact = Float::with_val(512, -9).exp() + 9u32;
        assert_eq!(*t.lambda(6).real(), exact);
    }
}
