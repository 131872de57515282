use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use polyriesz::derivatives::{fd_gradient_check, fd_hessian_check, random_direction};
use polyriesz::energy::{j, perimeter_r};
use polyriesz::experiments::{self, Experiment, ExperimentOptions, ExperimentResult, ExperimentRun};
use polyriesz::geometry::{random_polygon, Point, RandomMode};
use polyriesz::io::{self, Disc};
use polyriesz::optimize::{optimize_pr_derivative_free, optimize_restarts, Direction, Objective, OptimizationConfig, OptimizationTrace};
use polyriesz::spectral::{lagrangian_spectrum, scale_invariant_spectrum, unit_diameter_ngon, DEFAULT_ZERO_TOL};
use polyriesz::{Error, Kernel};

const GRAD_TOL: f64 = 1e-6;
const HESS_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-5;

#[derive(Parser)]
#[command(name = "polyriesz", version, about = "Nonlocal energies of polygons")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Quadrature degree (1..=30); kernel default when omitted.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..=30))]
    degree: Option<u32>,
    /// Output directory for result files; POLYRIESZ_OUT takes precedence.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write SVG snapshots.
    #[arg(long, global = true)]
    svg: bool,
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    /// Fixed file stamps and zeroed timings, for byte-identical output.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Min,
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Convex,
    StarShaped,
}

#[derive(Subcommand)]
enum Command {
    /// Double-integral energy of a polygon file.
    Energy {
        #[arg(long)]
        polygon: PathBuf,
        #[arg(long)]
        kernel: Kernel,
    },
    /// Exact nonlocal r-perimeter.
    PerimeterR {
        #[arg(long)]
        polygon: PathBuf,
        #[arg(long)]
        r: f64,
    },
    /// Finite-difference check of the vertex gradient and Hessian.
    GradCheck {
        #[arg(long)]
        polygon: PathBuf,
        #[arg(long)]
        kernel: Kernel,
    },
    /// Hessian spectrum at the unit-diameter regular N-gon.
    Spectrum {
        #[arg(long, value_parser = clap::value_parser!(u32).range(3..=64))]
        ngon: u32,
        #[arg(long)]
        kernel: Kernel,
        /// Heat kernel Lagrangian on the area-tangent space instead of the
        /// scale-invariant power energy.
        #[arg(long)]
        lagrangian: bool,
    },
    /// Area-constrained optimization from random starts.
    Optimize {
        #[arg(long, value_parser = clap::value_parser!(u32).range(3..=64))]
        n: u32,
        #[arg(long)]
        kernel: Kernel,
        #[arg(long, value_enum, default_value_t = DirectionArg::Min)]
        direction: DirectionArg,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=10_000))]
        restarts: u32,
        #[arg(long, value_enum, default_value_t = ModeArg::StarShaped)]
        start: ModeArg,
    },
    /// Run a scripted experiment, or all of them.
    Experiment {
        name: String,
        /// Random polygons per vertex count for the sampled experiments.
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(1..=100_000))]
        samples: u32,
    },
    /// Render a polygon file as SVG.
    EmitSvg {
        #[arg(long)]
        polygon: PathBuf,
        /// Disc overlay `x,y,r`.
        #[arg(long, value_parser = parse_disc)]
        disc: Option<Disc>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_disc(s: &str) -> Result<Disc, String> {
    let parts: Vec<f64> = s.split(',').map(|v| v.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| format!("{s:?}: {e}"))?;
    match parts[..] {
        [x, y, r] if r > 0.0 && x.is_finite() && y.is_finite() && r.is_finite() => Ok(Disc { center: Point::new(x, y), radius: r }),
        _ => Err(format!("{s:?}: expected x,y,r with r > 0")),
    }
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::PolygonFile { .. } | Error::KernelSpec(..) | Error::InvalidArgument(_) | Error::NotDifferentiable(_) | Error::Io(_) => 2,
            Error::TooFewVertices(_)
            | Error::NonFiniteVertex(_)
            | Error::RepeatedVertex(..)
            | Error::ZeroLengthEdge(_)
            | Error::NotCounterclockwise(_)
            | Error::SelfIntersection(..)
            | Error::NotStarShaped(..) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

struct Ctx {
    global: Global,
    out: PathBuf,
}

impl Ctx {
    fn degree(&self, kernel: &Kernel) -> u32 {
        self.global.degree.unwrap_or_else(|| kernel.default_degree())
    }

    fn stamp(&self) -> String {
        if self.global.deterministic {
            return "run".into();
        }
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs().to_string()).unwrap_or_else(|_| "run".into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = std::env::var_os("POLYRIESZ_OUT").map(PathBuf::from).unwrap_or_else(|| cli.global.out.clone());
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = Ctx { global: cli.global, out };
    match run(&ctx, cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message.lines().next().unwrap_or_default());
            ExitCode::from(f.code)
        }
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(v).map_err(Error::from)?);
    Ok(())
}

fn run(ctx: &Ctx, command: Command) -> Result<u8, Failure> {
    match command {
        Command::Energy { polygon, kernel } => {
            let p = io::read_polygon(&polygon)?;
            let report = j(&p, &kernel, ctx.degree(&kernel))?;
            match ctx.global.format {
                Format::Json => print_json(&report)?,
                Format::Csv => println!("kernel,degree,value\n{},{},{:.17e}", kernel, report.quadrature_degree, report.value),
            }
            Ok(0)
        }
        Command::PerimeterR { polygon, r } => {
            let p = io::read_polygon(&polygon)?;
            let v = perimeter_r(&p, r)?;
            match ctx.global.format {
                Format::Json => print_json(&json!({ "r": r, "area": p.area(), "perimeter_r": v }))?,
                Format::Csv => println!("r,area,perimeter_r\n{r},{:.17e},{v:.17e}", p.area()),
            }
            Ok(0)
        }
        Command::GradCheck { polygon, kernel } => {
            let p = io::read_polygon(&polygon)?;
            let degree = ctx.degree(&kernel);
            let theta = random_direction(p.len(), ctx.global.seed);
            let g = fd_gradient_check(&p, &kernel, degree, &theta, FD_STEP)?;
            let h = fd_hessian_check(&p, &kernel, degree, &theta, FD_STEP)?;
            let pass = g.relative_error < GRAD_TOL && h.relative_error < HESS_TOL;
            match ctx.global.format {
                Format::Json => print_json(&json!({ "kernel": kernel.to_string(), "degree": degree, "gradient": g, "hessian": h, "pass": pass }))?,
                Format::Csv => println!(
                    "kernel,degree,gradient_error,hessian_error,asymmetry,pass\n{kernel},{degree},{:.3e},{:.3e},{:.3e},{pass}",
                    g.relative_error, h.relative_error, h.asymmetry
                ),
            }
            Ok(if pass { 0 } else { 1 })
        }
        Command::Spectrum { ngon, kernel, lagrangian } => {
            let p = unit_diameter_ngon(ngon as usize)?;
            let report = match (lagrangian, kernel) {
                (true, Kernel::TruncatedHeat { q, t }) => lagrangian_spectrum(&p, q, t, ctx.global.degree.unwrap_or(2 * q + 2), DEFAULT_ZERO_TOL)?,
                (false, Kernel::Power { k }) if kernel.is_even_power() => {
                    scale_invariant_spectrum(&p, k as u32, ctx.degree(&kernel), DEFAULT_ZERO_TOL)?
                }
                (true, _) => return Err(usage("--lagrangian needs a heat:Q=..,t=.. kernel")),
                (false, _) => return Err(usage("the scale-invariant spectrum needs an even power kernel")),
            };
            match ctx.global.format {
                Format::Json => print_json(&report)?,
                Format::Csv => print!("{}", report.to_csv()),
            }
            Ok(0)
        }
        Command::Optimize { n, kernel, direction, restarts, start } => optimize_cmd(ctx, n as usize, kernel, direction, restarts as u64, start),
        Command::Experiment { name, samples } => {
            let list: Vec<Experiment> = if name == "all" { Experiment::ALL.to_vec() } else { vec![name.parse::<Experiment>()?] };
            let opts = ExperimentOptions { samples: samples as usize, seed: ctx.global.seed };
            let stamp = ctx.stamp();
            let mut all_pass = true;
            let mut results: Vec<ExperimentResult> = Vec::new();
            for e in list {
                let mut run: ExperimentRun = experiments::run(e, &opts)?;
                if ctx.global.deterministic {
                    run.runtime_s = 0.0;
                    run.results.iter_mut().for_each(|r| r.runtime_s = 0.0);
                }
                experiments::write_run(&ctx.out, &run, &stamp, ctx.global.svg)?;
                all_pass &= run.passed();
                results.extend(run.results);
            }
            match ctx.global.format {
                Format::Json => print_json(&results)?,
                Format::Csv => print!("{}", experiments::summary_csv(&results)),
            }
            Ok(if all_pass { 0 } else { 1 })
        }
        Command::EmitSvg { polygon, disc, output } => {
            let p = io::read_polygon(&polygon)?;
            let s = io::svg(&[&p], disc);
            match output {
                Some(path) => io::write_atomic(&path, s.as_bytes())?,
                None => print!("{s}"),
            }
            Ok(0)
        }
    }
}

fn optimize_cmd(ctx: &Ctx, n: usize, kernel: Kernel, direction: DirectionArg, restarts: u64, start: ModeArg) -> Result<u8, Failure> {
    let mode = match start {
        ModeArg::Convex => RandomMode::Convex,
        ModeArg::StarShaped => RandomMode::StarShaped,
    };
    let seeds: Vec<u64> = (0..restarts).map(|i| ctx.global.seed.wrapping_add(i)).collect();
    let traces: Vec<OptimizationTrace> = match (kernel, direction) {
        // maximizing J_r is minimizing P_r
        (Kernel::Characteristic { r }, DirectionArg::Max) => {
            let cfg = OptimizationConfig::new(Objective::PerimeterR { r });
            seeds
                .iter()
                .map(|&s| optimize_pr_derivative_free(&random_polygon(n, s, mode)?, r, &OptimizationConfig { seed: s, ..cfg.clone() }))
                .collect::<Result<_, _>>()?
        }
        (Kernel::Characteristic { .. }, DirectionArg::Min) => {
            return Err(usage("the characteristic kernel is only optimized with --direction max"));
        }
        _ => {
            let direction = match direction {
                DirectionArg::Min => Direction::Min,
                DirectionArg::Max => Direction::Max,
            };
            let mut cfg = OptimizationConfig::new(Objective::Energy { kernel, direction });
            cfg.degree = ctx.global.degree;
            cfg.area_target = PI;
            optimize_restarts(n, &cfg, &seeds, mode)?
        }
    };
    let dir = ctx.out.join("optimize").join(ctx.stamp());
    let mut summary = Vec::new();
    for (seed, t) in seeds.iter().zip(&traces) {
        write(&dir.join(format!("trace_{seed}.csv")), t.to_csv().as_bytes())?;
        write(&dir.join(format!("polygon_{seed}.json")), io::polygon_json(&t.final_polygon).as_bytes())?;
        if ctx.global.svg {
            write(&dir.join(format!("polygon_{seed}.svg")), io::svg(&[&t.final_polygon], None).as_bytes())?;
        }
        summary.push(json!({
            "seed": seed,
            "final_objective": t.final_objective,
            "final_violation": t.final_violation,
            "converged": t.converged,
            "iterations": t.rows.last().map(|r| r.iteration).unwrap_or(0),
            "remeshes": t.remeshes,
            "shape_distance_to_regular": t.shape_distance_to_regular,
            "final_polygon": t.final_polygon,
        }));
    }
    match ctx.global.format {
        Format::Json => print_json(&summary)?,
        Format::Csv => {
            println!("seed,final_objective,final_violation,converged,remeshes,shape_distance_to_regular");
            for (seed, t) in seeds.iter().zip(&traces) {
                println!(
                    "{seed},{:.17e},{:.3e},{},{},{:.6e}",
                    t.final_objective, t.final_violation, t.converged, t.remeshes, t.shape_distance_to_regular
                );
            }
        }
    }
    Ok(if traces.iter().all(|t| t.converged) { 0 } else { 1 })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    Ok(io::write_atomic(path, bytes)?)
}
