//! `prokrast`: command-line front end.
//!
//! Exit status is 0 on success, 1 when a checked property is violated and
//! 2 on invalid input.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use prokrast::agent::{exact_ratio, simulate, write_trajectories_csv, RatioReport, SimConfig};
use prokrast::bias::BiasDistribution;
use prokrast::bounds::{
    check_claim1, check_theorem6, linear_fit, theorem5_growth, theorem5_params, write_bound_csv, BoundRow, BoundsError,
    Theorem5Params,
};
use prokrast::graph::{RawGraph, TaskGraph};
use prokrast::pricing::{optimal_capped_menu, optimal_posted_price, LinearObjective};
use prokrast::report::fmt_num;
use prokrast::scenarios::ExampleSpec;
use prokrast::worstcase::{synthesize, theorem3_bound, theorem4_graph};
use serde::Serialize;

/// Environment variable capping simulation worker threads.
const THREADS_VAR: &str = "PROKRAST_THREADS";

#[derive(Parser, Debug)]
#[command(name = "prokrast", version, about = "Present-biased agents on layered task graphs")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write the main output here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Check {
    /// Ratio at most n on a bounded-distance graph.
    Claim1,
    /// Worst-case ratio against the geometric bound, for every horizon up to n.
    Thm3,
    /// Growth graph at a fixed threshold b0.
    Thm4,
    /// Linear growth on the index-walk graph.
    Thm5,
    /// Constant bound on a monotone-distance graph.
    Thm6,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scenario {
    Homework,
    Marathon,
    Ski,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact procrastination ratio.
    Ratio {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        dist: PathBuf,
    },
    /// Monte Carlo estimate of the ratio.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write every trajectory as CSV to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// z = sup b·Pr[B >= b] and where it is attained.
    Zvalue {
        #[arg(long)]
        dist: PathBuf,
    },
    /// Worst-case graph for a distribution.
    Worstcase {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        n: usize,
        /// Write the graph as JSON to this file.
        #[arg(long)]
        emit_graph: Option<PathBuf>,
    },
    /// Checks one of the bound regimes.
    Bounds {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        check: Check,
        /// Graph for claim1 (required) and thm6 (defaults to the ski graph).
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Threshold for thm4; defaults to the maximizer of b·Pr[B >= b].
        #[arg(long)]
        b0: Option<f64>,
        #[arg(long, default_value_t = 1_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The worked scenarios: graph plus exact cost table.
    Examples {
        #[arg(long, value_enum)]
        scenario: Scenario,
        #[arg(long)]
        n: usize,
        /// Marathon levels; defaults to ceil(log2 n), at least 2.
        #[arg(long)]
        m: Option<usize>,
        /// Marathon upkeep at level 0; defaults to 1/(3m).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Ski rent per day.
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Bias distribution; defaults to {1: 1/3, 3: 2/3}.
        #[arg(long)]
        dist: Option<PathBuf>,
        #[arg(long)]
        emit_graph: Option<PathBuf>,
    },
    /// Optimal posted price (or capped menu) for alpha·E[x] + beta·E[p].
    Pricing {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        /// Cap the price at 1 and optimize the allocation instead.
        #[arg(long)]
        cap: bool,
    },
}

enum Failure {
    Invalid(anyhow::Error),
    Violation(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Invalid(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("property violated: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_graph(path: &Path) -> anyhow::Result<TaskGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw = RawGraph::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    raw.build().with_context(|| format!("validating {}", path.display()))
}

fn read_dist(path: &Path) -> anyhow::Result<BiasDistribution> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    BiasDistribution::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn default_dist() -> BiasDistribution {
    BiasDistribution::finite(&[(1.0, 1.0 / 3.0), (3.0, 2.0 / 3.0)]).expect("valid atoms")
}

fn threads_from_env() -> anyhow::Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => {
            let k: usize = v.trim().parse().with_context(|| format!("{THREADS_VAR}={v:?}"))?;
            if k == 0 {
                bail!("{THREADS_VAR} must be positive");
            }
            Ok(Some(k))
        }
        Err(_) => Ok(None),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn emit(cli: &Cli, bytes: Vec<u8>) -> anyhow::Result<()> {
    match &cli.output {
        Some(path) => write_file(path, &bytes),
        None => io::stdout().write_all(&bytes).context("writing standard output"),
    }
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

fn csv_lines(header: &str, rows: impl IntoIterator<Item = String>) -> Vec<u8> {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out.into_bytes()
}

fn report_out(cli: &Cli, r: &RatioReport) -> Vec<u8> {
    match cli.format {
        Format::Json => json(r),
        Format::Csv => csv_lines(RatioReport::CSV_HEADER, [r.csv_row()]),
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Ratio { graph, dist } => {
            let g = read_graph(graph)?;
            let d = read_dist(dist)?;
            let r = exact_ratio(&g, &d).map_err(|e| anyhow!(e))?;
            emit(cli, report_out(cli, &r))?;
        }
        Command::Simulate {
            graph,
            dist,
            trials,
            seed,
            trace,
        } => {
            let g = read_graph(graph)?;
            let d = read_dist(dist)?;
            let cfg = SimConfig {
                seed: *seed,
                trials: *trials,
                keep_trajectories: trace.is_some(),
                threads: threads_from_env()?,
            };
            let sim = simulate(&g, &d, &cfg).map_err(|e| anyhow!(e))?;
            if let (Some(path), Some(ts)) = (trace, &sim.trajectories) {
                let mut buf = Vec::new();
                write_trajectories_csv(&mut buf, &g, ts).context("formatting trajectories")?;
                write_file(path, &buf)?;
            }
            emit(cli, report_out(cli, &sim.report))?;
        }
        Command::Zvalue { dist } => {
            let z = read_dist(dist)?.z_value();
            let out = match cli.format {
                Format::Json => json(&z),
                Format::Csv => csv_lines(
                    "z,argmax_b,exact",
                    [format!("{},{},{}", fmt_num(z.z), fmt_num(z.argmax_b), z.exact)],
                ),
            };
            emit(cli, out)?;
        }
        Command::Worstcase { dist, n, emit_graph } => {
            let d = read_dist(dist)?;
            let (spec, g) = synthesize(&d, *n).map_err(|e| anyhow!(e))?;
            if let Some(path) = emit_graph {
                write_file(path, g.to_json().as_bytes())?;
            }
            let out = match cli.format {
                Format::Json => json(&spec),
                Format::Csv => {
                    let mut buf = Vec::new();
                    spec.write_csv(&mut buf).context("formatting spec")?;
                    buf
                }
            };
            emit(cli, out)?;
        }
        Command::Bounds {
            dist,
            n,
            check,
            graph,
            b0,
            trials,
            seed,
        } => {
            let d = read_dist(dist)?;
            let rows = run_bounds(&d, *n, *check, graph.as_deref(), *b0, *trials, *seed)?;
            let out = match cli.format {
                Format::Json => json(&rows),
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_bound_csv(&mut buf, &rows).context("formatting rows")?;
                    buf
                }
            };
            emit(cli, out)?;
            if let Some(bad) = rows.iter().find(|r| !r.pass) {
                return Err(Failure::Violation(format!(
                    "{} at n={}: ratio {} vs bound {}",
                    bad.test,
                    bad.n,
                    fmt_num(bad.ratio),
                    fmt_num(bad.bound)
                )));
            }
        }
        Command::Examples {
            scenario,
            n,
            m,
            epsilon,
            delta,
            dist,
            emit_graph,
        } => {
            let d = match dist {
                Some(p) => read_dist(p)?,
                None => default_dist(),
            };
            let m = m.unwrap_or_else(|| ((*n as f64).log2().ceil() as usize).max(2));
            let spec_for = |k: usize| match scenario {
                Scenario::Homework => ExampleSpec::Homework { n: k },
                Scenario::Marathon => ExampleSpec::Marathon {
                    n: k,
                    m,
                    epsilon: epsilon.unwrap_or(1.0 / (3.0 * m as f64)),
                },
                Scenario::Ski => ExampleSpec::Ski { n: k, delta: *delta },
            };
            let g = spec_for(*n).build().map_err(|e| anyhow!(e))?;
            if let Some(path) = emit_graph {
                write_file(path, g.to_json().as_bytes())?;
            }
            let mut rows = Vec::with_capacity(*n);
            for k in 1..=*n {
                let spec = spec_for(k);
                let r = exact_ratio(&spec.build().map_err(|e| anyhow!(e))?, &d).map_err(|e| anyhow!(e))?;
                rows.push(ExampleRow {
                    scenario: spec.name(),
                    n: k,
                    d_start: r.d_start,
                    expected_cost: r.expected_cost,
                    ratio: r.ratio,
                });
            }
            let out = match cli.format {
                Format::Json => json(&rows),
                Format::Csv => csv_lines(
                    "scenario,n,d_start,expected_cost,ratio",
                    rows.iter().map(|r| {
                        format!(
                            "{},{},{},{},{}",
                            r.scenario,
                            r.n,
                            fmt_num(r.d_start),
                            fmt_num(r.expected_cost),
                            fmt_num(r.ratio)
                        )
                    }),
                ),
            };
            emit(cli, out)?;
        }
        Command::Pricing { dist, alpha, beta, cap } => {
            let d = read_dist(dist)?;
            let obj = LinearObjective::new(*alpha, *beta);
            let row = if *cap {
                let m = optimal_capped_menu(&d, obj).map_err(|e| anyhow!(e))?;
                PricingRow {
                    menu: "capped",
                    x: m.x,
                    price: 1.0,
                    value: m.value,
                }
            } else {
                let p = optimal_posted_price(&d, obj).map_err(|e| anyhow!(e))?;
                PricingRow {
                    menu: "posted",
                    x: 1.0,
                    price: p.price,
                    value: p.value,
                }
            };
            let out = match cli.format {
                Format::Json => json(&row),
                Format::Csv => csv_lines(
                    "menu,x,price,value",
                    [format!(
                        "{},{},{},{}",
                        row.menu,
                        fmt_num(row.x),
                        fmt_num(row.price),
                        fmt_num(row.value)
                    )],
                ),
            };
            emit(cli, out)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ExampleRow {
    scenario: &'static str,
    n: usize,
    d_start: f64,
    expected_cost: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct PricingRow {
    menu: &'static str,
    x: f64,
    /// Serialized as a string so `inf` survives JSON.
    #[serde(serialize_with = "num_string")]
    price: f64,
    value: f64,
}

fn num_string<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&fmt_num(*x))
    }
}

fn bounds_err(e: BoundsError) -> Failure {
    match e {
        BoundsError::PropertyViolation(msg) => Failure::Violation(msg),
        other => Failure::Invalid(anyhow!(other)),
    }
}

fn run_bounds(
    d: &BiasDistribution,
    n: usize,
    check: Check,
    graph: Option<&Path>,
    b0: Option<f64>,
    trials: u64,
    seed: u64,
) -> Result<Vec<BoundRow>, Failure> {
    let row = |test: &str, n: usize, ratio: f64, bound: f64, pass: bool| BoundRow {
        test: test.to_string(),
        n,
        ratio,
        bound,
        pass,
    };
    match check {
        Check::Claim1 => {
            let path = graph.ok_or_else(|| anyhow!("--check claim1 needs --graph"))?;
            let g = read_graph(path)?;
            let r = check_claim1(&g, d, trials, seed).map_err(bounds_err)?;
            Ok(vec![row("claim1", g.n(), r.max_ratio, g.n() as f64, true)])
        }
        Check::Thm3 => {
            let z = d.z_value().z;
            (1..=n)
                .map(|k| {
                    let (spec, _) = synthesize(d, k).map_err(|e| anyhow!(e))?;
                    let bound = theorem3_bound(z, k);
                    Ok(row(
                        "thm3",
                        k,
                        spec.ratio(),
                        bound,
                        spec.ratio() <= bound * (1.0 + 1e-9),
                    ))
                })
                .collect()
        }
        Check::Thm4 => {
            let b0 = b0.unwrap_or_else(|| d.z_value().argmax_b);
            let r = theorem4_graph(d, b0, n).map_err(|e| anyhow!(e))?;
            if r.has_gap() {
                eprintln!(
                    "note: the closed form with step 1 - 1/b0 gives {}, the graph gives {} (step 1 - z0/b0 gives {})",
                    fmt_num(r.stated_formula),
                    fmt_num(r.derived),
                    fmt_num(r.derived_formula)
                );
            }
            let close = (r.derived - r.derived_formula).abs() <= 1e-9 * r.derived_formula.abs();
            Ok(vec![row("thm4", n, r.derived, r.derived_formula, close)])
        }
        Check::Thm5 => {
            let p: Theorem5Params = theorem5_params(d).map_err(bounds_err)?;
            let mut horizons: Vec<usize> = [n / 8, n / 4, n / 2, n].into_iter().filter(|&k| k >= 2).collect();
            horizons.dedup();
            if horizons.len() < 2 {
                return Err(Failure::Invalid(anyhow!("--check thm5 needs n >= 4")));
            }
            let rows = theorem5_growth(&p, d, &horizons, trials, seed).map_err(bounds_err)?;
            let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r.mean_ratio).collect();
            let fit = linear_fit(&xs, &ys);
            let pass = fit.slope > 0.0 && fit.r_squared >= 0.95;
            eprintln!(
                "b*={} alpha={} beta={} delta={} gamma={}; slope {} R^2 {}",
                fmt_num(p.b_star),
                p.alpha,
                p.beta,
                fmt_num(p.delta),
                fmt_num(p.gamma),
                fmt_num(fit.slope),
                fmt_num(fit.r_squared)
            );
            Ok(rows
                .iter()
                .map(|r| row("thm5", r.n, r.mean_ratio, fit.intercept + fit.slope * r.n as f64, pass))
                .collect())
        }
        Check::Thm6 => {
            let g = match graph {
                Some(path) => read_graph(path)?,
                None => ExampleSpec::Ski { n, delta: 0.5 }.build().map_err(|e| anyhow!(e))?,
            };
            match check_theorem6(&g, d) {
                Ok(r) => Ok(vec![row("thm6", g.n(), r.ratio, r.condition.bound, true)]),
                Err(BoundsError::PropertyViolation(msg)) => Err(Failure::Violation(msg)),
                Err(e) => Err(Failure::Invalid(anyhow!(e))),
            }
        }
    }
}
