//! `expspan run <config.json>`: several experiments on one sequence, one bundle.
//!
//! ```json
//! {
//!   "sequence": {"fixture": "example_i"},
//!   "interval": "0,1",
//!   "digits": 100, "N": 6, "eps": 0.1,
//!   "experiments": ["analyze", "biorthogonal", "distance-trend"],
//!   "out": "report"
//! }
//! ```
//!
//! `sequence` is `{"fixture": NAME}`, `{"file": PATH}` or `{"spec": {…}}`.
//! Optional inputs: `series` (file, for `series` and `carleson`), `moments`
//! (file, for `moment`), `grid` (`start:end:steps`), `z` (points for `series`),
//! `counterexample` (`{"nmax": 5, "z": ["-1"]}`). Relative paths are taken
//! from the config's directory. Command-line flags override config values.

use std::path::{Path, PathBuf};

use expspan_core::carleson::CarlesonOperator;
use expspan_core::gram::{biorthogonal, gram_matrix, DomainSpec};
use expspan_core::source::SequenceSpec;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bundle::Bundle;
use crate::error::{CliError, CliResult};
use crate::experiments;
use crate::input::{self, Settings, DEFAULT_DIGITS, DEFAULT_EPS};

pub const DEFAULT_GRID: &str = "0.05:0.95:19";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Analyze,
    Gram,
    Biorthogonal,
    DistanceTrend,
    Series,
    Moment,
    Carleson,
    Counterexample,
    FullReport,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceRef {
    Fixture(String),
    File(PathBuf),
    Spec(SequenceSpec),
}

fn default_nmax() -> u32 {
    5
}

fn default_points() -> Vec<String> {
    vec!["-1".into()]
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    #[serde(default = "default_nmax")]
    pub nmax: u32,
    #[serde(default = "default_points")]
    pub z: Vec<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sequence: SequenceRef,
    #[serde(default)]
    pub interval: Option<String>,
    #[serde(default)]
    pub digits: Option<u32>,
    #[serde(default, rename = "N")]
    pub n: Option<usize>,
    #[serde(default)]
    pub eps: Option<f64>,
    pub experiments: Vec<Kind>,
    #[serde(default)]
    pub series: Option<PathBuf>,
    #[serde(default)]
    pub moments: Option<PathBuf>,
    #[serde(default)]
    pub grid: Option<String>,
    #[serde(default)]
    pub z: Vec<String>,
    #[serde(default)]
    pub counterexample: Option<CounterexampleConfig>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// The experiment list with `full-report` expanded and duplicates dropped.
fn expand(cfg: &ExperimentConfig) -> Vec<Kind> {
    let mut out = Vec::new();
    for k in &cfg.experiments {
        let ks: Vec<Kind> = if *k == Kind::FullReport {
            let mut v = vec![Kind::Analyze, Kind::Gram, Kind::Biorthogonal, Kind::DistanceTrend];
            if cfg.series.is_some() {
                v.push(Kind::Series);
            }
            if cfg.moments.is_some() {
                v.push(Kind::Moment);
            }
            v.push(Kind::Carleson);
            v
        } else {
            vec![*k]
        };
        for k in ks {
            if !out.contains(&k) {
                out.push(k);
            }
        }
    }
    out
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn must_exist(p: &Path, what: &str) -> CliResult<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::io(format!("{what} file {} does not exist", p.display())))
    }
}

pub fn run(
    path: &Path,
    digits: Option<u32>,
    n: Option<usize>,
    eps: Option<f64>,
    out: Option<PathBuf>,
) -> CliResult<(Bundle, Option<PathBuf>)> {
    let text = input::read_file(path)?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::parse(format!("config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));

    // everything is validated before the first computation
    let kinds = expand(&cfg);
    if kinds.is_empty() {
        return Err(CliError::invalid("config lists no experiments; refusing an empty run"));
    }
    let s = Settings {
        digits: digits.or(cfg.digits).unwrap_or(DEFAULT_DIGITS),
        n: n.or(cfg.n),
        eps: eps.or(cfg.eps).unwrap_or(DEFAULT_EPS),
        max_dim: input::max_dim_from_env()?,
    };
    if !(s.eps > 0.0 && s.eps.is_finite()) {
        return Err(CliError::invalid(format!("eps must be positive, got {}", s.eps)));
    }
    let spec = match &cfg.sequence {
        SequenceRef::Fixture(name) => input::load_spec(&format!("fixture:{name}"))?,
        SequenceRef::File(p) => {
            let p = resolve(base, p);
            must_exist(&p, "sequence")?;
            input::load_spec(&p.to_string_lossy())?
        }
        SequenceRef::Spec(spec) => spec.clone(),
    };
    let dom = input::parse_domain(cfg.interval.as_deref().unwrap_or("0,1"))?;
    let grid = input::parse_grid(cfg.grid.as_deref().unwrap_or(DEFAULT_GRID))?;
    let series_path = cfg.series.as_ref().map(|p| resolve(base, p));
    let moments_path = cfg.moments.as_ref().map(|p| resolve(base, p));
    for k in &kinds {
        match k {
            Kind::Series if series_path.is_none() => {
                return Err(CliError::invalid("experiment `series` needs a `series` file"));
            }
            Kind::Moment if moments_path.is_none() => {
                return Err(CliError::invalid("experiment `moment` needs a `moments` file"));
            }
            Kind::Moment if !matches!(dom, DomainSpec::Bounded(_)) => {
                return Err(CliError::invalid("experiment `moment` needs a bounded interval"));
            }
            _ => {}
        }
    }
    if let Some(p) = &series_path {
        must_exist(p, "series")?;
    }
    if let Some(p) = &moments_path {
        must_exist(p, "moments")?;
    }
    let points = cfg
        .z
        .iter()
        .map(|z| input::parse_complex(z, s.prec()))
        .collect::<CliResult<Vec<_>>>()?;

    let mut echo = serde_json::to_value(&cfg)?;
    echo["digits"] = json!(s.digits);
    echo["N"] = json!(s.n);
    echo["eps"] = json!(s.eps);
    echo["max_dim"] = json!(s.max_dim);
    echo["experiments"] = json!(kinds);
    echo.as_object_mut().map(|m| m.remove("out"));
    let mut b = Bundle::new("run", echo);

    let ls = input::materialize(spec, &s)?;
    let needs_gram = kinds.iter().any(|k| matches!(k, Kind::Gram | Kind::Biorthogonal | Kind::DistanceTrend));
    let gs = if needs_gram {
        Some(gram_matrix(&ls.seq, ls.n, &dom, &s.ctx(ls.n)?, s.max_dim)?)
    } else {
        None
    };
    let series = match &series_path {
        Some(p) => Some(input::load_series_file(p)?.build(s.n, s.prec())?),
        None => None,
    };
    for k in &kinds {
        match k {
            Kind::Analyze => experiments::analyze(&mut b, &ls.seq, ls.n, s.eps)?,
            Kind::Gram => experiments::gram_build(&mut b, gs.as_ref().unwrap(), s.digits)?,
            Kind::Biorthogonal => {
                let g = gs.as_ref().unwrap();
                experiments::biorthogonal_report(&mut b, g, &biorthogonal(g))?
            }
            Kind::DistanceTrend => experiments::distance_trend(&mut b, gs.as_ref().unwrap())?,
            Kind::Series => {
                let sr = series.as_ref().unwrap();
                let n = s.n.unwrap_or(sr.seq().len());
                experiments::series_abscissa(&mut b, sr, n)?;
                experiments::series_bound(&mut b, sr, sr.sector().beta, s.eps)?;
                if !points.is_empty() {
                    experiments::series_eval(&mut b, sr, &points, n)?;
                }
            }
            Kind::Moment => {
                let DomainSpec::Bounded(iv) = dom else { unreachable!() };
                let d = input::load_moments(moments_path.as_ref().unwrap(), s.prec())?;
                experiments::moment_solve(&mut b, &ls.spec, &d, &ls.seq, ls.n, iv, &s, false)?;
            }
            Kind::Carleson => {
                let op = CarlesonOperator::new(&ls.seq, ls.n)?;
                experiments::carleson_annihilation(&mut b, &op, &ls.seq, ls.n, &grid)?;
                if let Some(sr) = &series {
                    let sop = CarlesonOperator::new(sr.seq(), s.n.unwrap_or(sr.seq().len()))?;
                    experiments::carleson_residual(&mut b, &sop, sr, &grid)?;
                }
            }
            Kind::Counterexample => {
                let c = cfg.counterexample.clone().unwrap_or(CounterexampleConfig {
                    nmax: default_nmax(),
                    z: default_points(),
                });
                experiments::counterexample(&mut b, c.nmax, digits.or(cfg.digits), &c.z)?;
            }
            Kind::FullReport => unreachable!("expanded above"),
        }
    }
    let out = out.or_else(|| cfg.out.as_ref().map(|p| resolve(base, p)));
    Ok((b, out))
}
