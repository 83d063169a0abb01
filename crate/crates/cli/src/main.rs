mod bundle;
mod error;
mod experiments;
mod input;
mod run;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use expspan_core::carleson::CarlesonOperator;
use expspan_core::gram::{biorthogonal, gram_matrix};
use expspan_core::products::{LKFunction, ProductKind};
use serde_json::json;

use bundle::Bundle;
use error::{CliError, CliResult};
use input::{Settings, DEFAULT_DIGITS, DEFAULT_EPS};

/// High-precision analysis of exponential systems `t^k e^{λ_n t}`.
///
/// Exit codes: 0 success, 2 usage, 3 parse, 4 invalid input, 5 precision,
/// 6 dimension cap, 7 numerical failure, 8 I/O.
#[derive(Parser)]
#[command(name = "expspan", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
struct Global {
    /// Working precision in decimal digits [default: 50]
    #[arg(long, global = true)]
    digits: Option<u32>,
    /// Truncation order [default: list length, or 8 for generators]
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// ε for gap radii and bound checks [default: 0.1]
    #[arg(long, global = true, allow_hyphen_values = true)]
    eps: Option<f64>,
    /// Write a report bundle into this directory instead of printing JSON
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the CSV tables instead of the JSON document
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Class report for a sequence (`fixture:NAME` or a spec file)
    Analyze { seq: String },
    /// List the built-in sequences
    Fixtures,
    /// Truncated canonical products
    #[command(subcommand)]
    Product(ProductCmd),
    /// The LK function
    #[command(subcommand)]
    Lk(LkCmd),
    /// Gram systems, distances and biorthogonal families
    #[command(subcommand)]
    Gram(GramCmd),
    /// Taylor–Dirichlet series files
    #[command(subcommand)]
    Series(SeriesCmd),
    /// Truncated moment problems
    #[command(subcommand)]
    Moment(MomentCmd),
    /// The operator F(D) and the counterexample series
    #[command(subcommand)]
    Carleson(CarlesonCmd),
    /// Run the experiments listed in a JSON config
    Run { config: PathBuf },
}

#[derive(Subcommand)]
enum ProductCmd {
    /// Evaluate a truncated canonical product
    Eval {
        /// F, G, F_EVEN or L
        #[arg(long)]
        kind: String,
        #[arg(long)]
        seq: String,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
}

#[derive(Args)]
struct LkArgs {
    #[arg(long)]
    seq: String,
    #[arg(long, allow_hyphen_values = true, default_value = "0,1")]
    interval: String,
    /// Number of cosine factors
    #[arg(long, default_value_t = 8)]
    cos_k: usize,
}

#[derive(Subcommand)]
enum LkCmd {
    /// Evaluate the LK function at z
    Eval {
        #[command(flatten)]
        lk: LkArgs,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// Lower-bound constants on the circles around its zeros
    Lowerbound {
        #[command(flatten)]
        lk: LkArgs,
        #[arg(long, default_value_t = 4)]
        nmax: usize,
        /// Quadrature nodes per circle
        #[arg(long, default_value_t = 64)]
        nodes: usize,
    },
}

#[derive(Args)]
struct GramArgs {
    #[arg(long)]
    seq: String,
    /// `γ,β` or `half-line`
    #[arg(long, allow_hyphen_values = true, default_value = "0,1")]
    interval: String,
}

#[derive(Subcommand)]
enum GramCmd {
    /// Gram matrix
    Build(GramArgs),
    /// Distances and the distance-exponent trend
    Distance(GramArgs),
    /// Biorthogonal family
    Biorthogonal(GramArgs),
    /// Mixed system: E_Λ on the complement of --n2, r on --n2
    Mixed {
        #[command(flatten)]
        g: GramArgs,
        /// Indices `n:k,…` taken from the biorthogonal family
        #[arg(long)]
        n2: String,
    },
}

#[derive(Subcommand)]
enum SeriesCmd {
    /// Partial sum and tail bound at one or more points
    Eval {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true, required = true)]
        z: Vec<String>,
    },
    /// Fitted abscissa
    Abscissa { file: PathBuf },
    /// Coefficient bound check
    Bound {
        file: PathBuf,
        /// Defaults to the sector's β
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
    },
}

#[derive(Subcommand)]
enum MomentCmd {
    /// Solve the truncated moment problem
    Solve {
        #[arg(long)]
        seq: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0,1")]
        interval: String,
        /// `{"moments": [[n, k, re, im], …]}`
        #[arg(long)]
        data: PathBuf,
        /// Solve even when the growth gate fails
        #[arg(long)]
        force: bool,
    },
}

#[derive(Subcommand)]
enum CarlesonCmd {
    /// Apply F(D) to x^k e^{λx}
    Apply {
        #[arg(long)]
        seq: String,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, default_value_t = 0)]
        k: u32,
        #[arg(long, allow_hyphen_values = true, default_value = run::DEFAULT_GRID)]
        grid: String,
    },
    /// sup |F(D)s| over the grid for a series file
    Residual {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, allow_hyphen_values = true, default_value = run::DEFAULT_GRID)]
        grid: String,
    },
    /// The grouped/ungrouped counterexample series
    Counterexample {
        #[arg(long, default_value_t = 5)]
        nmax: u32,
        /// Evaluation points (repeatable)
        #[arg(long, allow_hyphen_values = true, default_values_t = vec!["-1".to_string()])]
        z: Vec<String>,
    },
}

fn settings(g: &Global) -> CliResult<Settings> {
    let s = Settings {
        digits: g.digits.unwrap_or(DEFAULT_DIGITS),
        n: g.n,
        eps: g.eps.unwrap_or(DEFAULT_EPS),
        max_dim: input::max_dim_from_env()?,
    };
    if !(s.eps > 0.0 && s.eps.is_finite()) {
        return Err(CliError::invalid(format!("--eps must be positive, got {}", s.eps)));
    }
    Ok(s)
}

fn config_echo(s: &Settings, extra: serde_json::Value) -> serde_json::Value {
    let mut v = json!({"digits": s.digits, "N": s.n, "eps": s.eps, "max_dim": s.max_dim});
    if let (Some(map), serde_json::Value::Object(extra)) = (v.as_object_mut(), extra) {
        map.extend(extra);
    }
    v
}

fn series_from(path: &Path, s: &Settings) -> CliResult<expspan_core::series::TaylorDirichletSeries> {
    input::load_series_file(path)?.build(s.n, s.prec()).map_err(Into::into)
}

fn execute(cli: &Cli) -> CliResult<(Bundle, Option<PathBuf>)> {
    let g = &cli.global;
    if let Command::Run { config } = &cli.command {
        return run::run(config, g.digits, g.n, g.eps, g.out.clone());
    }
    let s = settings(g)?;
    let bundle = match &cli.command {
        Command::Run { .. } => unreachable!(),
        Command::Fixtures => {
            let mut b = Bundle::new("fixtures", json!({}));
            experiments::fixture_list(&mut b)?;
            b
        }
        Command::Analyze { seq } => {
            let ls = input::load_seq(seq, &s)?;
            let mut b = Bundle::new("analyze", config_echo(&s, json!({"seq": seq})));
            experiments::analyze(&mut b, &ls.seq, ls.n, s.eps)?;
            b
        }
        Command::Product(ProductCmd::Eval { kind, seq, z }) => {
            let kind: ProductKind = kind.parse()?;
            let ls = input::load_seq(seq, &s)?;
            let z = input::parse_complex(z, s.prec())?;
            let mut b = Bundle::new("product eval", config_echo(&s, json!({"seq": seq, "kind": kind})));
            experiments::product_eval(&mut b, kind, &ls.seq, ls.n, &z)?;
            b
        }
        Command::Lk(cmd) => {
            let (args, name) = match cmd {
                LkCmd::Eval { lk, .. } => (lk, "lk eval"),
                LkCmd::Lowerbound { lk, .. } => (lk, "lk lowerbound"),
            };
            let interval = input::parse_interval(&args.interval)?;
            let ls = input::load_seq(&args.seq, &s)?;
            let lk = LKFunction::new(&ls.seq, interval, ls.n, args.cos_k)?;
            let mut b = Bundle::new(
                name,
                config_echo(&s, json!({"seq": args.seq, "interval": args.interval, "cos_k": args.cos_k})),
            );
            match cmd {
                LkCmd::Eval { z, .. } => experiments::lk_eval(&mut b, &lk, &input::parse_complex(z, s.prec())?)?,
                LkCmd::Lowerbound { nmax, nodes, .. } => experiments::lk_bound(&mut b, &lk, s.eps, *nmax, *nodes)?,
            }
            b
        }
        Command::Gram(cmd) => {
            let (args, name) = match cmd {
                GramCmd::Build(a) => (a, "gram build"),
                GramCmd::Distance(a) => (a, "gram distance"),
                GramCmd::Biorthogonal(a) => (a, "gram biorthogonal"),
                GramCmd::Mixed { g, .. } => (g, "gram mixed"),
            };
            let dom = input::parse_domain(&args.interval)?;
            let n2 = match cmd {
                GramCmd::Mixed { n2, .. } => Some(input::parse_indices(n2)?),
                _ => None,
            };
            let ls = input::load_seq(&args.seq, &s)?;
            let gs = gram_matrix(&ls.seq, ls.n, &dom, &s.ctx(ls.n)?, s.max_dim)?;
            let mut extra = json!({"seq": args.seq, "interval": args.interval});
            if let GramCmd::Mixed { n2, .. } = cmd {
                extra["n2"] = json!(n2);
            }
            let mut b = Bundle::new(name, config_echo(&s, extra));
            match cmd {
                GramCmd::Build(_) => experiments::gram_build(&mut b, &gs, s.digits)?,
                GramCmd::Distance(_) => experiments::distance_trend(&mut b, &gs)?,
                GramCmd::Biorthogonal(_) => experiments::biorthogonal_report(&mut b, &gs, &biorthogonal(&gs))?,
                GramCmd::Mixed { .. } => {
                    experiments::mixed(&mut b, &gs, &biorthogonal(&gs), n2.as_deref().unwrap_or_default())?
                }
            }
            b
        }
        Command::Series(cmd) => {
            let (file, name) = match cmd {
                SeriesCmd::Eval { file, .. } => (file, "series eval"),
                SeriesCmd::Abscissa { file } => (file, "series abscissa"),
                SeriesCmd::Bound { file, .. } => (file, "series bound"),
            };
            let series = series_from(file, &s)?;
            let n = s.n.unwrap_or(series.seq().len());
            let mut b = Bundle::new(name, config_echo(&s, json!({"series": file})));
            match cmd {
                SeriesCmd::Eval { z, .. } => {
                    let zs = z.iter().map(|z| input::parse_complex(z, s.prec())).collect::<CliResult<Vec<_>>>()?;
                    experiments::series_eval(&mut b, &series, &zs, n)?
                }
                SeriesCmd::Abscissa { .. } => experiments::series_abscissa(&mut b, &series, n)?,
                SeriesCmd::Bound { beta, .. } => {
                    let beta = beta.unwrap_or(series.sector().beta);
                    experiments::series_bound(&mut b, &series, beta, s.eps)?
                }
            }
            b
        }
        Command::Moment(MomentCmd::Solve { seq, interval, data, force }) => {
            let interval_v = input::parse_interval(interval)?;
            let ls = input::load_seq(seq, &s)?;
            let d = input::load_moments(data, s.prec())?;
            let mut b = Bundle::new(
                "moment solve",
                config_echo(&s, json!({"seq": seq, "interval": interval, "data": data, "force": force})),
            );
            experiments::moment_solve(&mut b, &ls.spec, &d, &ls.seq, ls.n, interval_v, &s, *force)?;
            b
        }
        Command::Carleson(CarlesonCmd::Apply { seq, lambda, k, grid }) => {
            let grid_v = input::parse_grid(grid)?;
            let ls = input::load_seq(seq, &s)?;
            let op = CarlesonOperator::new(&ls.seq, ls.n)?;
            let lam = input::parse_complex(lambda, op.prec())?;
            let mut b = Bundle::new(
                "carleson apply",
                config_echo(&s, json!({"seq": seq, "lambda": lambda, "k": k, "grid": grid})),
            );
            experiments::carleson_apply(&mut b, &op, &lam, *k, &grid_v)?;
            b
        }
        Command::Carleson(CarlesonCmd::Residual { series, grid }) => {
            let grid_v = input::parse_grid(grid)?;
            let sr = series_from(series, &s)?;
            let n = s.n.unwrap_or(sr.seq().len());
            let op = CarlesonOperator::new(sr.seq(), n)?;
            let mut b = Bundle::new("carleson residual", config_echo(&s, json!({"series": series, "grid": grid})));
            experiments::carleson_residual(&mut b, &op, &sr, &grid_v)?;
            b
        }
        Command::Carleson(CarlesonCmd::Counterexample { nmax, z }) => {
            let mut b = Bundle::new("carleson counterexample", config_echo(&s, json!({"nmax": nmax, "z": z})));
            experiments::counterexample(&mut b, *nmax, g.digits, z)?;
            b
        }
    };
    Ok((bundle, g.out.clone()))
}

fn emit(bundle: &Bundle, out: Option<&Path>, csv: bool) -> CliResult<()> {
    match out {
        Some(dir) => bundle.write_dir(dir),
        None => {
            let text = if csv { bundle.to_csv()? } else { bundle.to_document()? };
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(format!("cannot write to stdout: {e}")))
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = execute(&cli).and_then(|(bundle, out)| emit(&bundle, out.as_deref(), cli.global.csv));
    if let Err(e) = result {
        eprintln!("expspan: {e} [{}, exit {}]", e.label(), e.code());
        std::process::exit(e.code());
    }
}
