use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use delegation_core::harness::{
    compare_golden, emit_paths, rows_to_csv, run_design, Config, DesignRow, GoldenTable, GoldenTolerances, SHAPES,
};
use delegation_core::separating::SeparatingPath;
use delegation_core::surplus::{pi_s, pi_w};
use delegation_core::thresholds::{invert_cap, invert_floor};
use delegation_core::{optimize, Error};

#[derive(Parser)]
#[command(name = "delegate-opt", version, about = "Optimal delegation intervals for signaling markets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium induced by the configured reaction interval.
    Solve(RunArgs),
    /// Surplus-maximizing delegation interval for one configuration.
    Optimize(RunArgs),
    /// Run a design sweep and write its table as CSV.
    Design(DesignArgs),
    /// Run design sweeps and compare them with the golden tables.
    Verify(VerifyArgs),
    /// Write plot-path CSVs for a design sweep.
    Paths(DesignArgs),
    /// Dump the full-delegation separating path (z, action, wage, rents) as CSV.
    Profile(ProfileArgs),
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    design: u8,
    /// Restrict to one Beta shape, written `alpha,beta`.
    #[arg(long, value_parser = parse_shape)]
    dist: Option<(f64, f64)>,
    /// Optimizer settings are read from this file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; stdout when omitted (design only).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Design to verify; all five when omitted.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    design: Option<u8>,
    #[arg(long, value_parser = parse_shape)]
    dist: Option<(f64, f64)>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Golden CSV; the embedded reference tables when omitted.
    #[arg(long)]
    golden: Option<PathBuf>,
    /// Directory for the computed tables and the deviation report.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_shape(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => {
            let a: f64 = a.parse().map_err(|e| format!("alpha: {e}"))?;
            let b: f64 = b.parse().map_err(|e| format!("beta: {e}"))?;
            if a > 0.0 && b > 0.0 {
                Ok((a, b))
            } else {
                Err("shape parameters must be positive".into())
            }
        }
        _ => Err(format!("expected `alpha,beta`, got `{s}`")),
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, Error> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, text)?;
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn pretty(value: &impl serde::Serialize) -> Result<String, Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn solve(args: &RunArgs) -> Result<i32, Error> {
    let cfg = load_config(args.config.as_deref())?;
    let (p, d) = (&cfg.params, &cfg.dist);
    let full = SeparatingPath::new(p, d, 0.0)?;
    let (t_l, t_h) = match cfg.interval {
        Some([lo, hi]) => (lo, hi),
        None => (0.0, f64::INFINITY),
    };
    let z_l = invert_floor(p, d, t_l)?;
    let path = SeparatingPath::new(p, d, z_l)?;
    let thresholds = invert_cap(p, d, &path, t_h.max(path.t_l()))?;
    let surplus = pi_w(p, d, &path, thresholds.z_h)?;
    let report = json!({
        "interval": [t_l, if t_h.is_finite() { json!(t_h) } else { json!(null) }],
        "thresholds": thresholds,
        "surplus": surplus,
        "pi_s": pi_s(p, d, &full)?,
        "percentile_zh": d.cdf(thresholds.z_h),
    });
    emit(args.out.as_deref(), &pretty(&report)?)?;
    Ok(0)
}

fn run_optimize(args: &RunArgs) -> Result<i32, Error> {
    let cfg = load_config(args.config.as_deref())?;
    let outcome = optimize(&cfg.params, &cfg.dist, &cfg.optimizer)?;
    if outcome.diagnostics.flat_objective {
        eprintln!("warning: objective is flat across non-adjacent grid cells");
    }
    emit(args.out.as_deref(), &pretty(&outcome)?)?;
    Ok(0)
}

fn shapes(dist: Option<(f64, f64)>) -> Vec<(f64, f64)> {
    dist.map_or_else(|| SHAPES.to_vec(), |s| vec![s])
}

fn table_name(design: u8, dist: Option<(f64, f64)>) -> String {
    match dist {
        Some((a, b)) if design != 5 => format!("design{design}_beta{a}_{b}.csv"),
        _ => format!("design{design}.csv"),
    }
}

fn design(args: &DesignArgs) -> Result<i32, Error> {
    let cfg = load_config(args.config.as_deref())?;
    let rows = run_design(args.design, &shapes(args.dist), &cfg.optimizer)?;
    let csv = rows_to_csv(&rows)?;
    let out = args.out.as_ref().map(|dir| dir.join(table_name(args.design, args.dist)));
    emit(out.as_deref(), &csv)?;
    Ok(0)
}

fn paths(args: &DesignArgs) -> Result<i32, Error> {
    let cfg = load_config(args.config.as_deref())?;
    let dir = args
        .out
        .clone()
        .ok_or_else(|| Error::Config("paths needs --out <dir>".into()))?;
    let rows = run_design(args.design, &shapes(args.dist), &cfg.optimizer)?;
    for file in emit_paths(&rows, &dir)? {
        println!("{}", file.display());
    }
    Ok(0)
}

fn verify(args: &VerifyArgs) -> Result<i32, Error> {
    let cfg = load_config(args.config.as_deref())?;
    let golden = match &args.golden {
        Some(path) => GoldenTable::load(path)?,
        None => match args.design {
            Some(id) => GoldenTable::embedded(id)?,
            None => GoldenTable::embedded_all()?,
        },
    };
    let designs: Vec<u8> = match args.design {
        Some(id) => vec![id],
        None => (1..=5).collect(),
    };
    let mut rows: Vec<DesignRow> = Vec::new();
    for id in designs {
        let table = run_design(id, &shapes(args.dist), &cfg.optimizer)?;
        if let Some(dir) = &args.out {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(table_name(id, args.dist)), rows_to_csv(&table)?)?;
        }
        rows.extend(table);
    }
    let report = compare_golden(&rows, &golden, &GoldenTolerances::default())?;
    if let Some(dir) = &args.out {
        report.write_csv(fs::File::create(dir.join("deviations.csv"))?)?;
    }
    let failures = report.failures();
    let informational = report.deviations().len() - failures.len();
    for cell in &failures {
        eprintln!(
            "FAIL design {} Beta({},{}) q={} k={} a={} zbar={}: {} expected {} got {:.4} (tol {})",
            cell.design,
            cell.alpha,
            cell.beta_shape,
            cell.q,
            cell.k,
            cell.a,
            cell.zbar,
            cell.column,
            cell.expected,
            cell.actual,
            cell.tolerance
        );
    }
    println!(
        "{}: {} rows, {} enforced failures, {} informational deviations",
        report.source,
        report.rows_compared,
        failures.len(),
        informational
    );
    Ok(report.exit_code())
}

fn profile(args: &ProfileArgs) -> Result<i32, Error> {
    let cfg = load_config(args.config.as_deref())?;
    let path = SeparatingPath::new(&cfg.params, &cfg.dist, 0.0)?;
    let mut text = String::from("z,action,wage,sender_rent,receiver_rent\n");
    for pt in path.profile(args.points)? {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            pt.z, pt.action, pt.wage, pt.sender_rent, pt.receiver_rent
        ));
    }
    emit(args.out.as_deref(), &text)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Optimize(a) => run_optimize(a),
        Command::Design(a) => design(a),
        Command::Verify(a) => verify(a),
        Command::Paths(a) => paths(a),
        Command::Profile(a) => profile(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
