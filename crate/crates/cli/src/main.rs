//! Command-line frontend: solve regularized LQR instances from JSON, run
//! built-in optimal-control benchmarks, and generate random instances.
//!
//! Exit codes: 0 on success, 2 on input/parse errors, 3 on solver failures.

mod files;
mod gen;

use clap::{Parser, Subcommand};
use files::{byte_offset, solution_file, trajectory_csv, LqInstanceFile, SCHEMA_FORMAT};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use trajopt::ipm::IpmSettings;
use trajopt::models::{double_integrator, Unicycle};
use trajopt::ocp::solve_ocp;
use trajopt::oracle::{assemble_reglqr, oracle_solve_reglqr, pack_reglqr_solution};
use trajopt::reglqr;

const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "trajopt", version, about = "Trajectory optimization solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a regularized LQR instance loaded from a JSON file.
    SolveLqr {
        /// Instance file (see README for the schema).
        #[arg(long)]
        input: PathBuf,
        /// Override the instance's dual regularization (must be >= 0).
        #[arg(long)]
        delta: Option<f64>,
        /// Also solve the assembled dense KKT system and compare.
        #[arg(long)]
        check: bool,
        /// Write the solution JSON here (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write the trajectory as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve a built-in nonlinear benchmark with the interior point method.
    SolveOcp {
        /// One of: double-integrator, unicycle.
        #[arg(long)]
        problem: String,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        /// Comma-separated initial state, e.g. "5,0".
        #[arg(long)]
        x0: Option<String>,
        #[arg(long)]
        mu0: Option<f64>,
        #[arg(long)]
        eta0: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Trajectory CSV path.
        #[arg(long, default_value = "trajectory.csv")]
        csv: PathBuf,
        /// Solve report JSON path.
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
    },
    /// Generate a random instance with the required definiteness properties.
    Gen {
        /// Horizon length (number of stages).
        #[arg(long)]
        n: usize,
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        nu: usize,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long)]
        seed: u64,
        /// Output path (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn solver(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_SOLVER,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SolveLqr {
            input,
            delta,
            check,
            output,
            csv,
        } => cmd_solve_lqr(&input, delta, check, output.as_deref(), csv.as_deref()),
        Command::SolveOcp {
            problem,
            horizon,
            dt,
            x0,
            mu0,
            eta0,
            tol,
            max_iters,
            csv,
            report,
        } => cmd_solve_ocp(
            &problem, horizon, dt, x0, mu0, eta0, tol, max_iters, &csv, &report,
        ),
        Command::Gen {
            n,
            nx,
            nu,
            delta,
            seed,
            output,
        } => cmd_gen(n, nx, nu, delta, seed, output.as_deref()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_solve_lqr(
    input: &Path,
    delta_override: Option<f64>,
    check: bool,
    output: Option<&Path>,
    csv: Option<&Path>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", input.display())))?;
    let file: LqInstanceFile = serde_json::from_str(&text).map_err(|e| {
        CliError::input(format!(
            "malformed JSON in {} at line {}, column {} (byte offset {}): {e}",
            input.display(),
            e.line(),
            e.column(),
            byte_offset(&text, e.line(), e.column()),
        ))
    })?;
    let mut problem = file.to_problem().map_err(CliError::input)?;
    if let Some(d) = delta_override {
        if !d.is_finite() || d < 0.0 {
            return Err(CliError::input(format!("--delta must be >= 0, got {d}")));
        }
        problem.delta = d;
    }

    let sol = reglqr::solve(&problem).map_err(|e| CliError::solver(e.to_string()))?;
    let sys = assemble_reglqr(&problem);
    let packed = pack_reglqr_solution(&problem, &sol);
    let kkt_residual = sys.residual_inf(&packed) / (1.0 + sys.rhs.norm_inf());

    let oracle_err = if check {
        let dense = oracle_solve_reglqr(&problem).map_err(|e| CliError::solver(e.to_string()))?;
        let dense_packed = pack_reglqr_solution(&problem, &dense);
        let rel = (&packed - &dense_packed).norm_inf() / (1.0 + dense_packed.norm_inf());
        println!("oracle check: max relative discrepancy {rel:e}");
        if rel > 1e-8 {
            return Err(CliError::solver(format!(
                "oracle check failed: discrepancy {rel:e} exceeds 1e-8"
            )));
        }
        Some(rel)
    } else {
        None
    };

    let out = solution_file(&sol, kkt_residual, oracle_err);
    let json = to_pretty_json(&out)?;
    match output {
        Some(path) => write_text(path, &json)?,
        None => print!("{json}"),
    }
    if let Some(path) = csv {
        write_text(path, &trajectory_csv(&sol.x, &sol.u, &sol.y))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportFile {
    format: u32,
    status: String,
    iterations: usize,
    kkt_residual: f64,
    stationarity: f64,
    eq: f64,
    ineq: f64,
    complementarity: f64,
    mu: f64,
    eta: f64,
    history: Vec<ReportRow>,
}

#[derive(Serialize)]
struct ReportRow {
    iter: usize,
    merit: f64,
    alpha_primal: f64,
    alpha_dual: f64,
    backtracks: usize,
    stationarity: f64,
    eq: f64,
    ineq: f64,
    complementarity: f64,
    mu: f64,
    eta: f64,
}

fn parse_state(text: &str, expected: usize) -> Result<Vec<f64>, CliError> {
    let parts: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let parts = parts.map_err(|e| CliError::input(format!("cannot parse --x0 \"{text}\": {e}")))?;
    if parts.len() != expected {
        return Err(CliError::input(format!(
            "--x0 has {} entries, expected {expected}",
            parts.len()
        )));
    }
    Ok(parts)
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve_ocp(
    problem: &str,
    horizon: Option<usize>,
    dt: Option<f64>,
    x0: Option<String>,
    mu0: Option<f64>,
    eta0: Option<f64>,
    tol: Option<f64>,
    max_iters: Option<usize>,
    csv: &Path,
    report_path: &Path,
) -> Result<(), CliError> {
    let mut settings = IpmSettings::default();
    if let Some(v) = mu0 {
        settings.mu0 = v;
    }
    if let Some(v) = eta0 {
        settings.eta0 = v;
    }
    if let Some(v) = tol {
        settings.tol_kkt = v;
    }
    if let Some(v) = max_iters {
        settings.max_iters = v;
    }

    let (solution, report) = match problem {
        "double-integrator" => {
            let n = horizon.unwrap_or(20);
            let h = dt.unwrap_or(0.1);
            let state = match x0 {
                Some(s) => parse_state(&s, 2)?,
                None => vec![5.0, 0.0],
            };
            let model = double_integrator(
                n,
                h,
                [state[0], state[1]],
                1.0,
                [1.0, 0.1],
                0.1,
                [10.0, 10.0],
            );
            solve_ocp(&model, &settings).map_err(|e| CliError::solver(e.to_string()))?
        }
        "unicycle" => {
            let n = horizon.unwrap_or(30);
            let h = dt.unwrap_or(0.1);
            let state = match x0 {
                Some(s) => parse_state(&s, 3)?,
                None => vec![0.0, 0.0, 0.0],
            };
            let model = Unicycle::new(n, h, [state[0], state[1], state[2]], [1.0, 0.5, 0.0]);
            solve_ocp(&model, &settings).map_err(|e| CliError::solver(e.to_string()))?
        }
        other => {
            return Err(CliError::input(format!(
                "unknown problem \"{other}\" (expected double-integrator or unicycle)"
            )));
        }
    };

    let report_file = ReportFile {
        format: SCHEMA_FORMAT,
        status: report.status.as_str().to_string(),
        iterations: report.iterations,
        kkt_residual: report.kkt.max_overall(),
        stationarity: report.kkt.stationarity,
        eq: report.kkt.eq,
        ineq: report.kkt.ineq,
        complementarity: report.kkt.complementarity,
        mu: report.mu,
        eta: report.eta,
        history: report
            .history
            .iter()
            .map(|rec| ReportRow {
                iter: rec.iter,
                merit: rec.merit,
                alpha_primal: rec.alpha_primal,
                alpha_dual: rec.alpha_dual,
                backtracks: rec.backtracks,
                stationarity: rec.stationarity,
                eq: rec.eq,
                ineq: rec.ineq,
                complementarity: rec.complementarity,
                mu: rec.mu,
                eta: rec.eta,
            })
            .collect(),
    };
    write_text(report_path, &to_pretty_json(&report_file)?)?;
    write_text(
        csv,
        &trajectory_csv(&solution.xs, &solution.us, &solution.dyn_duals),
    )?;

    println!(
        "{}: {} iterations, kkt residual {:e}",
        report.status.as_str(),
        report.iterations,
        report.kkt.max_overall()
    );
    if !report.status.is_success() {
        return Err(CliError::solver(format!(
            "solve finished with status {}",
            report.status.as_str()
        )));
    }
    Ok(())
}

fn cmd_gen(
    n: usize,
    nx: usize,
    nu: usize,
    delta: f64,
    seed: u64,
    output: Option<&Path>,
) -> Result<(), CliError> {
    if nx == 0 || (n > 0 && nu == 0) {
        return Err(CliError::input(
            "dimensions must be positive (nx >= 1, and nu >= 1 when n > 0)",
        ));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(CliError::input(format!(
            "--delta must be >= 0, got {delta}"
        )));
    }
    let problem = gen::generate(seed, n, nx, nu, delta);
    let file = LqInstanceFile::from(&problem);
    let json = to_pretty_json(&file)?;
    match output {
        Some(path) => write_text(path, &json)?,
        None => print!("{json}"),
    }
    Ok(())
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::input(format!("serialization failed: {e}")))
}

/// Re-exported for integration tests.
#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x0_parsing() {
        assert_eq!(parse_state("5,0", 2).unwrap(), vec![5.0, 0.0]);
        assert_eq!(parse_state(" 1.5 , -2 ", 2).unwrap(), vec![1.5, -2.0]);
        assert!(parse_state("1,2,3", 2).is_err());
        assert!(parse_state("abc", 1).is_err());
    }
}
