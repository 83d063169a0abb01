//! Reading sequence, series and moment files and parsing option values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use expspan_core::gram::{DomainSpec, DEFAULT_MAX_DIM};
use expspan_core::moment::MomentData;
use expspan_core::series::SeriesFile;
use expspan_core::source::{fixture, fixtures, Scalar, SequenceSpec};
use expspan_core::{mp, FlatIndex, Interval, MultiplicitySequence, PrecisionContext};
use rug::Complex;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const DEFAULT_DIGITS: u32 = 50;
pub const DEFAULT_N: usize = 8;
pub const DEFAULT_EPS: f64 = 0.1;

/// Resolved numeric settings shared by every command.
#[derive(Clone, Debug)]
pub struct Settings {
    pub digits: u32,
    pub n: Option<usize>,
    pub eps: f64,
    pub max_dim: usize,
}

impl Settings {
    pub fn prec(&self) -> u32 {
        mp::bits_for_digits(self.digits)
    }

    /// `N` for a sequence: the flag, else the length of an explicit list,
    /// else the generator default.
    pub fn n_for(&self, spec: &SequenceSpec) -> usize {
        self.n.or(spec.natural_len()).unwrap_or(DEFAULT_N)
    }

    pub fn ctx(&self, n: usize) -> CliResult<PrecisionContext> {
        Ok(PrecisionContext::new(self.digits, n)?)
    }
}

pub fn max_dim_from_env() -> CliResult<usize> {
    match std::env::var("EXPSPAN_MAX_DIM") {
        Err(_) => Ok(DEFAULT_MAX_DIM),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(d) if d > 0 => Ok(d),
            _ => Err(CliError::invalid(format!("EXPSPAN_MAX_DIM must be a positive integer, got {v:?}"))),
        },
    }
}

pub fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))
}

/// `fixture:NAME` or a path to a sequence spec file.
pub fn load_spec(arg: &str) -> CliResult<SequenceSpec> {
    if let Some(name) = arg.strip_prefix("fixture:") {
        return fixture(name).map(|f| f.spec()).ok_or_else(|| {
            let names: Vec<&str> = fixtures().iter().map(|f| f.name).collect();
            CliError::invalid(format!("unknown fixture {name:?}; known: {}", names.join(", ")))
        });
    }
    Ok(SequenceSpec::parse(&read_file(Path::new(arg))?)?)
}

pub struct LoadedSeq {
    pub spec: SequenceSpec,
    pub seq: MultiplicitySequence,
    pub n: usize,
}

pub fn load_seq(arg: &str, s: &Settings) -> CliResult<LoadedSeq> {
    let spec = load_spec(arg)?;
    materialize(spec, s)
}

pub fn materialize(spec: SequenceSpec, s: &Settings) -> CliResult<LoadedSeq> {
    let n = s.n_for(&spec);
    let seq = spec.materialize(n, s.prec())?;
    Ok(LoadedSeq { spec, seq, n })
}

/// `γ,β` for a bounded interval.
pub fn parse_interval(s: &str) -> CliResult<Interval> {
    let (g, b) = s
        .split_once(',')
        .ok_or_else(|| CliError::parse(format!("interval must be `γ,β`, got {s:?}")))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::parse(format!("invalid interval endpoint {t:?}")))
    };
    Ok(Interval::new(num(g)?, num(b)?)?)
}

/// `γ,β`, or `half-line` for `(−∞, 0)`.
pub fn parse_domain(s: &str) -> CliResult<DomainSpec> {
    if s.trim() == "half-line" {
        return Ok(DomainSpec::HalfLineNeg);
    }
    Ok(DomainSpec::Bounded(parse_interval(s)?))
}

/// `start:end:steps`, `steps` equispaced points including both ends.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::parse(format!("grid must be `start:end:steps`, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !a.is_finite() || !b.is_finite() || steps == 0 || (steps > 1 && a >= b) {
        return Err(CliError::invalid(format!("grid {s:?} needs finite start < end and steps ≥ 1")));
    }
    if steps == 1 {
        return Ok(vec![a]);
    }
    Ok((0..steps).map(|i| a + (b - a) * i as f64 / (steps - 1) as f64).collect())
}

pub fn parse_complex(s: &str, prec: u32) -> CliResult<Complex> {
    Ok(mp::parse_complex(prec, s)?)
}

/// `n:k,n:k,…` (a bare `n` means `k = 0`).
pub fn parse_indices(s: &str) -> CliResult<Vec<FlatIndex>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|item| {
            let item = item.trim();
            let (n, k) = item.split_once(':').unwrap_or((item, "0"));
            let n: usize = n.parse().map_err(|_| CliError::parse(format!("invalid index {item:?}")))?;
            let k: u32 = k.parse().map_err(|_| CliError::parse(format!("invalid index {item:?}")))?;
            if n == 0 {
                return Err(CliError::parse(format!("indices start at 1, got {item:?}")));
            }
            Ok(FlatIndex::new(n, k))
        })
        .collect()
}

pub fn load_series_file(path: &Path) -> CliResult<SeriesFile> {
    Ok(SeriesFile::parse(&read_file(path)?)?)
}

/// `{"moments": [[n, k, re, im], …]}`, the coefficient layout of series files.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentFile {
    moments: Vec<(usize, u32, Scalar, Scalar)>,
}

pub fn load_moments(path: &Path, prec: u32) -> CliResult<MomentData> {
    let text = read_file(path)?;
    let file: MomentFile =
        serde_json::from_str(&text).map_err(|e| CliError::parse(format!("moment file {}: {e}", path.display())))?;
    let mut values = BTreeMap::new();
    for (n, k, re, im) in file.moments {
        if n == 0 {
            return Err(CliError::parse("moment indices start at n = 1"));
        }
        let v = Complex::with_val(prec, (re.to_float(prec)?, im.to_float(prec)?));
        if values.insert(FlatIndex::new(n, k), v).is_some() {
            return Err(CliError::parse(format!("moment ({n},{k}) given twice")));
        }
    }
    Ok(MomentData::new(values))
}
