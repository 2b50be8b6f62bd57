//! Batch front end: analyze systems, tabulate half-maps, sample trajectories,
//! and run randomized sweeps. JSON reports go to stdout; CSV goes to `--out`
//! or stdout. Exit codes: 0 success, 1 malformed config, 2 non-sewing input,
//! 3 numerical failure.

mod config;

use clap::{Parser, Subcommand, ValueEnum};
use config::Config;
use pwlcycle_core::cycles::{self, CycleError};
use pwlcycle_core::flow_oracle::{self, FlowState, Zone};
use pwlcycle_core::halfmap::{HalfMapError, HalfMapSpec, Side};
use pwlcycle_core::sweep::{self, SweepRecord};
use pwlcycle_core::Stability;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "pwlcycle",
    about = "Limit cycle analysis for planar two-zone piecewise linear systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

#[derive(Subcommand)]
enum Command {
    /// Full analysis: sewing gate, half-map domains, classification
    /// coefficients, and the limit cycle (JSON on stdout).
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tabulate one half-map over a y0 grid (CSV: y0, y1, d1, d2, residual).
    Halfmap {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        side: SideArg,
        /// Grid as lo:hi:n (n points, inclusive endpoints).
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the sewn flow (CSV: t, x, y, side).
    Trajectory {
        #[arg(long)]
        config: PathBuf,
        /// Initial point as x,y.
        #[arg(long)]
        start: String,
        #[arg(long)]
        tspan: f64,
        #[arg(long, default_value_t = 256)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized parameter sweep (JSON summary on stdout, CSV verdicts to
    /// --out or stdout).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed from the config's sweep block.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    Config(String),
    NotSewing(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::NotSewing(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::NotSewing(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<CycleError> for CliError {
    fn from(e: CycleError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("pwlcycle: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}

/// Serialize one float with 17 significant digits so CSV round-trips exactly.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout()
                .write_all(content.as_bytes())
                .map_err(|e| CliError::Config(format!("stdout: {e}")))?;
            Ok(())
        }
    }
}

fn load(path: &PathBuf) -> Result<(Config, pwlcycle_core::Tolerances), CliError> {
    let config = Config::load(path).map_err(CliError::Config)?;
    let tol = config.tolerances().map_err(CliError::Config)?;
    Ok((config, tol))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze { config } => cmd_analyze(&config),
        Command::Halfmap {
            config,
            side,
            grid,
            out,
        } => cmd_halfmap(&config, side, &grid, &out),
        Command::Trajectory {
            config,
            start,
            tspan,
            points,
            out,
        } => cmd_trajectory(&config, &start, tspan, points, &out),
        Command::Sweep { config, seed, out } => cmd_sweep(&config, seed, &out),
    }
}

fn cmd_analyze(path: &PathBuf) -> Result<(), CliError> {
    let (config, tol) = load(path)?;
    let system = config
        .resolve(&tol)
        .map_err(|v| CliError::NotSewing(format!("{:?}: {}", v.status, v.detail)))?;
    let report = cycles::analyze(&system.params, system.verdict, &tol)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Numerical(format!("serialization: {e}")))?;
    println!("{json}");
    Ok(())
}

fn parse_grid(grid: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = grid.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(CliError::Config(format!(
            "grid must be lo:hi:n, got {grid:?}"
        )));
    };
    let lo: f64 = lo
        .parse()
        .map_err(|_| CliError::Config(format!("bad grid lower bound {lo:?}")))?;
    let hi: f64 = hi
        .parse()
        .map_err(|_| CliError::Config(format!("bad grid upper bound {hi:?}")))?;
    let n: usize = n
        .parse()
        .map_err(|_| CliError::Config(format!("bad grid count {n:?}")))?;
    Ok(match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    })
}

fn cmd_halfmap(
    path: &PathBuf,
    side: SideArg,
    grid: &str,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let (config, tol) = load(path)?;
    let system = config
        .resolve(&tol)
        .map_err(|v| CliError::NotSewing(format!("{:?}: {}", v.status, v.detail)))?;
    let p = system.params;
    let (a, t, d, side) = match side {
        SideArg::Left => (p.a_l, p.t_l, p.d_l, Side::LeftForward),
        SideArg::Right => (p.a_r, p.t_r, p.d_r, Side::RightBackward),
    };
    let spec = HalfMapSpec::build(a, t, d, side, tol)
        .map_err(|e| CliError::Numerical(format!("half-map not available: {e}")))?;
    let grid = parse_grid(grid)?;

    let mut csv = String::from("y0,y1,d1,d2,residual\n");
    let mut omitted = 0usize;
    for y0 in grid {
        if !spec.domain.contains(y0) {
            omitted += 1;
            continue;
        }
        let eval = spec
            .eval(y0)
            .map_err(|e| CliError::Numerical(format!("eval at y0 = {y0}: {e}")))?;
        let (d1, d2) = derivatives_or_limits(&spec, eval.y0, eval.y1);
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(y0),
            fmt(eval.y1),
            fmt(d1),
            fmt(d2),
            fmt(eval.residual)
        ));
    }
    csv.push_str(&format!("# omitted_out_of_domain: {omitted}\n"));
    write_output(out, &csv)
}

/// Derivatives with the endpoint limits filled in: at a fixed origin the map
/// behaves like `-y0 + c y0^2`, while at a positive left endpoint the slope
/// diverges.
fn derivatives_or_limits(spec: &HalfMapSpec, y0: f64, y1: f64) -> (f64, f64) {
    match spec.derivatives(y0, y1) {
        Ok(pair) => pair,
        Err(_) => match spec.taylor_quadratic_coeff() {
            Ok(c) => (-1.0, 2.0 * c),
            Err(_) => (f64::NEG_INFINITY, f64::INFINITY),
        },
    }
}

fn parse_start(start: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = start.split(',').collect();
    let [x, y] = parts.as_slice() else {
        return Err(CliError::Config(format!("start must be x,y, got {start:?}")));
    };
    let x: f64 = x
        .parse()
        .map_err(|_| CliError::Config(format!("bad start x {x:?}")))?;
    let y: f64 = y
        .parse()
        .map_err(|_| CliError::Config(format!("bad start y {y:?}")))?;
    Ok((x, y))
}

fn cmd_trajectory(
    path: &PathBuf,
    start: &str,
    tspan: f64,
    points: usize,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let (config, tol) = load(path)?;
    let system = config
        .resolve(&tol)
        .map_err(|v| CliError::NotSewing(format!("{:?}: {}", v.status, v.detail)))?;
    let (x, y) = parse_start(start)?;
    if points < 2 {
        return Err(CliError::Config("trajectory needs --points >= 2".into()));
    }
    let rows = flow_oracle::sample_trajectory(
        &system.params,
        FlowState::new(x, y, 0.0),
        tspan,
        points,
        &tol,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut csv = String::from("t,x,y,side\n");
    for r in rows {
        let side = match r.side {
            Zone::L => "L",
            Zone::R => "R",
        };
        csv.push_str(&format!(
            "{},{},{},{side}\n",
            fmt(r.t),
            fmt(r.x),
            fmt(r.y)
        ));
    }
    write_output(out, &csv)
}

fn sweep_record_row(r: &SweepRecord) -> String {
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    let stab = match r.stability {
        Some(Stability::Attracting) => "attracting",
        Some(Stability::Repelling) => "repelling",
        None => "",
    };
    let contraction = match r.contraction_ok {
        Some(true) => "true",
        Some(false) => "false",
        None => "",
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{:?},{},{stab},{},{contraction}\n",
        r.index,
        fmt(r.params.a_l),
        fmt(r.params.a_r),
        fmt(r.params.t_l),
        fmt(r.params.t_r),
        fmt(r.params.d_l),
        fmt(r.params.d_r),
        r.maps_defined,
        fmt(r.xi),
        r.outcome,
        opt(r.y0_star),
        opt(r.oracle_residual),
    )
}

fn cmd_sweep(path: &PathBuf, seed: Option<u64>, out: &Option<PathBuf>) -> Result<(), CliError> {
    let (config, tol) = load(path)?;
    let mut sweep_config = config
        .sweep
        .ok_or_else(|| CliError::Config("config has no `sweep` block".into()))?;
    if let Some(seed) = seed {
        sweep_config.seed = seed;
    }
    let (summary, records) = sweep::run_sweep(&sweep_config, &tol);
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Numerical(format!("serialization: {e}")))?;
    println!("{json}");

    let mut csv = String::from(
        "index,a_l,a_r,t_l,t_r,d_l,d_r,maps_defined,xi,outcome,y0_star,oracle_residual,stability,contraction_ok\n",
    );
    for r in &records {
        csv.push_str(&sweep_record_row(r));
    }
    write_output(out, &csv)
}
