//! Command-line front end: fixed-pair simulation, the offline design
//! pipeline, the online adaptive run, and the strategy benchmark.
//!
//! Exit codes: 0 success, 1 config/input error, 2 infeasible run,
//! 3 empty feasible set.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use groundgen::compare::run_compare;
use groundgen::control::ManifoldModel;
use groundgen::cycle::{run_cycles, MetricsRow, ReelCommand, RunOutcome, RunRequest};
use groundgen::pipeline::{read_optima_csv, run_design, write_design_outputs};
use groundgen::{Error, RunConfig};

#[derive(Parser)]
#[command(name = "groundgen", version, about = "Pumping-kite ground-generation simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run pumping cycles at one fixed reeling-speed pair until periodic.
    Simulate {
        /// Config file (TOML); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for trace.csv and metrics.csv.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Wind speed at reference height [m/s].
        #[arg(long)]
        wind: f64,
        /// Traction reel-out speed [m/s], positive.
        #[arg(long)]
        vtrac: f64,
        /// Retraction reel-in speed [m/s], negative.
        #[arg(long)]
        vretr: f64,
    },
    /// Sweep the speed grid, fit surfaces, certify optima, fit the manifold.
    Design {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for dataset/surface/optima/manifold CSVs.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the adaptive reeling law against a wind schedule.
    Online {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Manifold coefficients CSV produced by `design`.
        #[arg(long)]
        manifold: PathBuf,
        /// Per-cycle wind speed [m/s]; repeat for a schedule, last value
        /// holds. Overrides the config schedule when given.
        #[arg(long = "wind")]
        winds: Vec<f64>,
    },
    /// Benchmark the adaptive law against fixed-speed strategies.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        manifold: PathBuf,
        /// Certified optima CSV; defaults to <out>/optima.csv.
        #[arg(long)]
        optima: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => RunConfig::load(p),
        None => {
            let mut cfg = RunConfig::default();
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

/// Settled cycles (warmup excluded) tagged with the operating point.
fn metrics_rows(out: &RunOutcome, v_w: f64, fixed: Option<(f64, f64)>) -> Vec<MetricsRow> {
    out.settled()
        .iter()
        .map(|m| {
            let (v_trac, v_retr) = fixed.unwrap_or((m.v_trac_avg, m.v_retr_avg));
            MetricsRow {
                v_w,
                v_trac,
                v_retr,
                metrics: m.clone(),
            }
        })
        .collect()
}

fn write_run(out_dir: &Path, out: &RunOutcome, rows: &[MetricsRow]) -> Result<(), Error> {
    std::fs::create_dir_all(out_dir)?;
    out.trace.write_csv(&out_dir.join("trace.csv"))?;
    groundgen::cycle::write_metrics_csv(&out_dir.join("metrics.csv"), rows)?;
    Ok(())
}

fn cmd_simulate(
    config: &Option<PathBuf>,
    out_dir: &Path,
    wind: f64,
    vtrac: f64,
    vretr: f64,
) -> Result<u8, Error> {
    let cfg = load_config(config)?;
    let winds = [wind];
    let req = RunRequest {
        command: ReelCommand::Fixed {
            v_trac: vtrac,
            v_retr: vretr,
        },
        winds: &winds,
        max_cycles: cfg.sim.max_cycles,
        stop_when_periodic: true,
    };
    let run = run_cycles(&cfg, &req)?;
    let rows = metrics_rows(&run, wind, Some((vtrac, vretr)));
    write_run(out_dir, &run, &rows)?;
    if run.feasible {
        println!(
            "periodic cycle reached: P_cycle = {:.1} W over {} settled cycles",
            run.final_metrics().map_or(f64::NAN, |m| m.p_cycle),
            run.settled().len()
        );
        Ok(0)
    } else {
        match &run.violation {
            Some(v) => eprintln!(
                "infeasible: {} violated at t = {:.2} s (value {:.4})",
                v.constraint, v.time, v.value
            ),
            None => eprintln!("infeasible: no periodic cycle within the cycle budget"),
        }
        Ok(2)
    }
}

fn cmd_design(config: &Option<PathBuf>, out_dir: &Path) -> Result<u8, Error> {
    let cfg = load_config(config)?;
    let artifacts = run_design(&cfg)?;
    std::fs::create_dir_all(out_dir)?;
    write_design_outputs(&artifacts, out_dir)?;
    let m = &artifacts.manifold;
    println!(
        "manifold: K_trac = {:.2} N·s²/m² (R² = {:.4}), K_retr = {:.2} N·s²/m² (R² = {:.4})",
        m.k_trac, m.r2_trac, m.k_retr, m.r2_retr
    );
    println!(
        "certified optima: {} of {} wind speeds",
        artifacts.optima.iter().filter(|p| p.verified).count(),
        cfg.sweep.winds.len()
    );
    Ok(0)
}

fn cmd_online(
    config: &Option<PathBuf>,
    out_dir: &Path,
    manifold_path: &Path,
    winds: &[f64],
) -> Result<u8, Error> {
    let cfg = load_config(config)?;
    let manifold = ManifoldModel::read_csv(manifold_path)?;
    let schedule: Vec<f64> = if winds.is_empty() {
        cfg.online.winds.clone()
    } else {
        winds.to_vec()
    };
    let req = RunRequest {
        command: ReelCommand::Online {
            manifold: &manifold,
        },
        winds: &schedule,
        max_cycles: cfg.online.cycles,
        stop_when_periodic: false,
    };
    let run = run_cycles(&cfg, &req)?;
    let rows = metrics_rows(&run, schedule[0], None);
    write_run(out_dir, &run, &rows)?;
    // a varying schedule is not expected to end periodic; only a constraint
    // violation makes the run infeasible here
    match &run.violation {
        None => {
            if let Some(m) = run.final_metrics() {
                println!(
                    "final cycle: P_cycle = {:.1} W at v_trac = {:.2} m/s, v_retr = {:.2} m/s",
                    m.p_cycle, m.v_trac_avg, m.v_retr_avg
                );
            }
            Ok(0)
        }
        Some(v) => {
            eprintln!(
                "infeasible: {} violated at t = {:.2} s (value {:.4})",
                v.constraint, v.time, v.value
            );
            Ok(2)
        }
    }
}

fn cmd_compare(
    config: &Option<PathBuf>,
    out_dir: &Path,
    manifold_path: &Path,
    optima_path: &Option<PathBuf>,
) -> Result<u8, Error> {
    let cfg = load_config(config)?;
    let manifold = ManifoldModel::read_csv(manifold_path)?;
    let optima_path = optima_path
        .clone()
        .unwrap_or_else(|| out_dir.join("optima.csv"));
    let optima = read_optima_csv(&optima_path)?;
    let report = run_compare(&cfg, &manifold, &optima)?;
    std::fs::create_dir_all(out_dir)?;
    report.write_csv(&out_dir.join("comparison.csv"))?;
    print!("{}", report.table());
    Ok(0)
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::NoFeasibleRegion(_) | Error::EmptyFeasibleSet(_) | Error::TooFewOptima(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Simulate {
            config,
            out,
            wind,
            vtrac,
            vretr,
        } => cmd_simulate(config, out, *wind, *vtrac, *vretr),
        Cmd::Design { config, out } => cmd_design(config, out),
        Cmd::Online {
            config,
            out,
            manifold,
            winds,
        } => cmd_online(config, out, manifold, winds),
        Cmd::Compare {
            config,
            out,
            manifold,
            optima,
        } => cmd_compare(config, out, manifold, optima),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
