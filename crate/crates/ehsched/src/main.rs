use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ehsched::harness::discretization_csv;
use ehsched::{
    competitive_report, discretization_study, offline_completion_time_with, parse_scenario,
    property_sweep, simulate_alg1, simulate_alg2, PolicyTrajectory, Result, Scenario,
    ScenarioFamily,
};

#[derive(Parser)]
#[command(name = "ehsched", version, about = "Energy-harvesting transmission scheduling")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Overrides {
    /// Integration step in seconds (default: 1e-4 of the horizon)
    #[arg(long)]
    step: Option<f64>,
    /// Grid cells for the offline throughput program
    #[arg(long, default_value_t = ehsched::offline::DEFAULT_N_GRID)]
    grid: usize,
    /// Bits tolerance override
    #[arg(long)]
    tol_bits: Option<f64>,
    /// Joules tolerance override
    #[arg(long)]
    tol_energy: Option<f64>,
    /// Directory for CSV artifacts (created if missing)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the offline optimum completion time T_off
    SolveOffline {
        scenario: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Run one online policy and report its completion time
    RunOnline {
        scenario: PathBuf,
        /// Which policy: 1 (eager) or 2 (wait for all data)
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        alg: u8,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Offline optimum plus both online policies and their ratios
    Compare {
        scenario: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Randomized property sweep over generated scenarios
    Sweep {
        /// Base RNG seed for the scenario family
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of generated scenarios (the ratio-2 witness is always added)
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Discretization study: recompute T_off and T_on2 on staircase curves
    Discretize {
        scenario: PathBuf,
        /// Comma-separated staircase periods in seconds
        #[arg(long, default_value = "0.5,0.25,0.1", value_delimiter = ',')]
        periods: Vec<f64>,
        #[command(flatten)]
        opts: Overrides,
    },
}

/// Four significant digits, plain decimal notation.
fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (3 - x.abs().log10().floor() as i64).max(0) as usize;
    format!("{x:.decimals$}")
}

fn load_scenario(path: &Path, opts: &Overrides) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let mut s = parse_scenario(&text)?;
    if let Some(step) = opts.step {
        s.step = step;
    }
    if let Some(t) = opts.tol_bits {
        s.tol_bits = t;
    }
    if let Some(t) = opts.tol_energy {
        s.tol_energy = t;
    }
    // re-validate after overrides
    Scenario::new(s.b0, s.energy, s.data, s.rate, s.horizon, s.step, s.tol_bits, s.tol_energy)
}

fn write_artifact(opts: &Overrides, name: &str, content: &str) -> Result<()> {
    let Some(dir) = &opts.out else { return Ok(()) };
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), content)?;
    Ok(())
}

fn write_trajectory(opts: &Overrides, name: &str, traj: &PolicyTrajectory) -> Result<()> {
    if opts.out.is_some() {
        let mut buf = Vec::new();
        traj.write_csv(&mut buf)?;
        write_artifact(opts, name, std::str::from_utf8(&buf).expect("csv is utf-8"))?;
    }
    Ok(())
}

fn completion_str(t: Option<f64>) -> String {
    t.map_or_else(|| "not completed".into(), sig4)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::SolveOffline { scenario, opts } => {
            let s = load_scenario(&scenario, &opts)?;
            let sol = offline_completion_time_with(&s, opts.grid)?;
            println!("T_off={}", sig4(sol.completion_time));
            write_trajectory(&opts, "offline.csv", &sol.trajectory)?;
        }
        Cmd::RunOnline { scenario, alg, opts } => {
            let s = load_scenario(&scenario, &opts)?;
            let traj = if alg == 1 { simulate_alg1(&s)? } else { simulate_alg2(&s)? };
            println!("T_s{alg}={}", sig4(traj.waiting_end));
            println!("T_on{alg}={}", completion_str(traj.completion_time));
            write_trajectory(&opts, &format!("alg{alg}.csv"), &traj)?;
        }
        Cmd::Compare { scenario, opts } => {
            let s = load_scenario(&scenario, &opts)?;
            let r = competitive_report(&s, opts.grid)?;
            println!("T_off={}", sig4(r.t_off));
            println!("T_s1={} T_on1={} ratio1={}", sig4(r.t_s1), sig4(r.t_on1), sig4(r.ratio1));
            println!("T_s2={} T_on2={} ratio2={}", sig4(r.t_s2), sig4(r.t_on2), sig4(r.ratio2));
            for v in &r.verdicts {
                println!("check {}: {} (slack {:.3e})", v.name, if v.pass { "ok" } else { "FAIL" }, v.slack);
            }
            write_trajectory(&opts, "offline.csv", &r.offline.trajectory)?;
            write_trajectory(&opts, "alg1.csv", &r.alg1)?;
            write_trajectory(&opts, "alg2.csv", &r.alg2)?;
            if !r.all_pass() {
                return Err(ehsched::Error::Infeasible("invariant checks failed".into()));
            }
        }
        Cmd::Sweep { seed, count, opts } => {
            let family = ScenarioFamily::new(seed, count);
            let summary = property_sweep(&family, opts.grid);
            println!("{}", summary.verdict_line());
            write_artifact(&opts, "sweep.csv", &summary.to_csv())?;
            if !summary.pass() {
                return Err(ehsched::Error::Infeasible("property sweep failed".into()));
            }
        }
        Cmd::Discretize { scenario, periods, opts } => {
            let s = load_scenario(&scenario, &opts)?;
            let rows = discretization_study(&s, &periods, opts.grid);
            for row in &rows {
                match &row.outcome {
                    Ok((t_off, t_on2)) => println!(
                        "delta={} T_off={} T_on2={}",
                        sig4(row.delta),
                        sig4(*t_off),
                        sig4(*t_on2)
                    ),
                    Err(e) => println!("delta={} error: {e}", sig4(row.delta)),
                }
            }
            write_artifact(&opts, "discretize.csv", &discretization_csv(&rows))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
