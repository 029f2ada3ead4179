//! Batch driver behind the `ocm` binary.
//!
//! Exit codes: 0 success, 1 usage or input errors, 2 a certified inequality
//! (or the range condition) failed.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::baire::{discontinuity_report, graph_completion, is_h_continuous, BaireError};
use crate::grid::{GridError, GridIntervalFunction};
use crate::macneille::{macneille_complete, FinitePoset, PosetError};
use crate::pde::{check_condition_23, probe_lattice, PdeError, PdeProblem};
use crate::solver::{assemble_global, refine, verify_certificate, PiecewiseSolution, RefineOptions, Side, SolverError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Problem { path: PathBuf, source: PdeError },
    #[error("{path}: {source}")]
    Poset { path: PathBuf, source: PosetError },
    #[error("{path}: {source}")]
    Grid { path: PathBuf, source: GridError },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Baire(#[from] BaireError),
    #[error("{0}")]
    Usage(String),
    #[error("writing output: {0}")]
    Output(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A certificate or condition check failed.
    Violated,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Violated => 2,
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        1
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "ocm", version, about = "Order completion toolkit for nonlinear PDEs")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Build and audit a one-sided approximate solution.
    Solve(SolveArgs),
    /// Lower and upper solutions for a halving ε sequence, as CSV.
    Refine(RefineArgs),
    /// Audit a solution file against its problem.
    Verify(VerifyArgs),
    /// Graph completion and discontinuity report of a grid function.
    Baire(BaireArgs),
    /// Dedekind-MacNeille completion of a finite poset.
    Macneille(MacneilleArgs),
    /// Check that f(x) lies inside the range of F(x, .) on a probe lattice.
    Check23(Check23Args),
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value = "lower")]
    pub side: Side,
    #[arg(long, default_value_t = 1000)]
    pub samples_per_box: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Directory for solution.txt and certificate.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RefineArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub eps0: f64,
    #[arg(long)]
    pub levels: usize,
    #[arg(long, default_value_t = 64)]
    pub samples_per_box: usize,
    /// Grid points per axis for assimilation (default depends on dimension).
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Directory for refinement.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub samples_per_box: usize,
    #[arg(long, default_value_t = 2)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BaireArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub eps_list: Vec<f64>,
    /// Directory for completion.txt and discontinuity.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MacneilleArgs {
    #[arg(long)]
    pub poset: PathBuf,
    /// Directory for lattice.dot.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Check23Args {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 9)]
    pub points_per_axis: usize,
    #[arg(long, default_value_t = crate::pde::DEFAULT_PROBE_BUDGET)]
    pub budget: usize,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_artifact(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(|source| CliError::Io { path, source })
}

fn load_problem(path: &Path) -> Result<PdeProblem, CliError> {
    PdeProblem::from_text(&read(path)?).map_err(|source| CliError::Problem { path: path.to_path_buf(), source })
}

/// Execute one subcommand, writing human-readable output to `out`.
pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    match &config.command {
        Command::Solve(a) => {
            let problem = load_problem(&a.problem)?;
            let sol = assemble_global(&problem, a.eps, a.side)?;
            let report = verify_certificate(&sol, a.samples_per_box, a.seed);
            writeln!(out, "side {} eps {:?} boxes {} skeleton_faces {}", a.side, a.eps, sol.boxes().len(), sol.skeleton().len())?;
            writeln!(out, "audit samples {} min_residual {:?} max_residual {:?}", report.samples, report.min_residual, report.max_residual)?;
            if let Some(dir) = &a.out {
                write_artifact(dir, "solution.txt", &sol.to_text())?;
                write_artifact(dir, "certificate.txt", &report.to_text())?;
            }
            finish_report(out, &report)
        }
        Command::Refine(a) => {
            let problem = load_problem(&a.problem)?;
            let mut opts = RefineOptions::for_dims(problem.dims());
            opts.samples_per_box = a.samples_per_box;
            opts.seed = a.seed;
            if let Some(g) = a.grid_points {
                opts.grid_points_per_axis = g;
            }
            let run = refine(&problem, a.eps0, a.levels, &opts)?;
            let csv = run.to_csv();
            out.write_all(csv.as_bytes())?;
            if let Some(dir) = &a.out {
                write_artifact(dir, "refinement.csv", &csv)?;
            }
            let ok = run.levels.iter().all(|l| {
                [&l.lower, &l.upper].iter().all(|s| s.report.passed() && s.report.sup_abs_residual() <= l.eps && s.residual_h_continuous)
            });
            Ok(if ok { Status::Ok } else { Status::Violated })
        }
        Command::Verify(a) => {
            let problem = load_problem(&a.problem)?;
            let sol = PiecewiseSolution::from_text(&read(&a.solution)?, &problem)?;
            let report = verify_certificate(&sol, a.samples_per_box, a.seed);
            out.write_all(report.to_text().as_bytes())?;
            if let Some(dir) = &a.out {
                write_artifact(dir, "certificate.txt", &report.to_text())?;
            }
            finish_report(out, &report)
        }
        Command::Baire(a) => {
            let f = GridIntervalFunction::from_text(&read(&a.grid)?).map_err(|source| CliError::Grid { path: a.grid.clone(), source })?;
            let completed = graph_completion(&f, f.mask())?;
            let report = discontinuity_report(&completed, &a.eps_list);
            writeln!(out, "nodes {} h_continuous {}", completed.domain().node_count(), is_h_continuous(&completed))?;
            out.write_all(report.to_text().as_bytes())?;
            if let Some(dir) = &a.out {
                write_artifact(dir, "completion.txt", &completed.to_text())?;
                write_artifact(dir, "discontinuity.txt", &report.to_text())?;
            }
            Ok(Status::Ok)
        }
        Command::Macneille(a) => {
            let poset = FinitePoset::from_text(&read(&a.poset)?).map_err(|source| CliError::Poset { path: a.poset.clone(), source })?;
            let lattice = macneille_complete(&poset).map_err(|source| CliError::Poset { path: a.poset.clone(), source })?;
            writeln!(out, "elements {} cuts {}", poset.len(), lattice.len())?;
            let dot = lattice.to_dot();
            out.write_all(dot.as_bytes())?;
            if let Some(dir) = &a.out {
                write_artifact(dir, "lattice.dot", &dot)?;
            }
            Ok(Status::Ok)
        }
        Command::Check23(a) => {
            if a.points_per_axis == 0 {
                return Err(CliError::Usage("--points-per-axis must be positive".into()));
            }
            let problem = load_problem(&a.problem)?;
            let pts = probe_lattice(problem.domain(), a.points_per_axis);
            let verdicts = check_condition_23(&problem, &pts, a.budget).map_err(SolverError::from)?;
            let mut failed = 0;
            for v in &verdicts {
                let x = v.point.iter().map(|c| format!("{c:?}")).collect::<Vec<_>>().join(" ");
                writeln!(out, "x {x} f {:?} range [{}, {}] {}", v.rhs, v.range.lo(), v.range.hi(), if v.holds { "holds" } else { "fails" })?;
                failed += usize::from(!v.holds);
            }
            writeln!(out, "points {} failed {}", verdicts.len(), failed)?;
            Ok(if failed == 0 { Status::Ok } else { Status::Violated })
        }
    }
}

fn finish_report(out: &mut dyn Write, report: &crate::solver::CertificateReport) -> Result<Status, CliError> {
    if report.passed() {
        writeln!(out, "certificate ok")?;
        Ok(Status::Ok)
    } else {
        let v = &report.violations[0];
        writeln!(out, "certificate violated: {} violations, first in box {} at {:?} residual {:?}", report.violations.len(), v.box_index, v.point, v.residual)?;
        Ok(Status::Violated)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let c = RunConfig::try_parse_from(["ocm", "solve", "--problem", "p.txt", "--eps", "0.1", "--side", "upper"]).unwrap();
        match c.command {
            Command::Solve(a) => {
                assert_eq!(a.side, Side::Upper);
                assert_eq!(a.samples_per_box, 1000);
            }
            _ => panic!("wrong subcommand"),
        }
        let c = RunConfig::try_parse_from(["ocm", "baire", "--grid", "g.txt", "--eps-list", "1,0.5"]).unwrap();
        assert!(matches!(c.command, Command::Baire(ref a) if a.eps_list == vec![1.0, 0.5]));
        assert!(RunConfig::try_parse_from(["ocm", "solve", "--problem", "p.txt"]).is_err());
        assert!(RunConfig::try_parse_from(["ocm", "frobnicate"]).is_err());
        assert!(RunConfig::try_parse_from(["ocm", "solve", "--problem", "p", "--eps", "1", "--side", "middle"]).is_err());
    }

    #[test]
    fn missing_file_is_an_input_error() {
        let c = RunConfig::try_parse_from(["ocm", "macneille", "--poset", "/nonexistent/poset.txt"]).unwrap();
        let err = run(&c, &mut Vec::new()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("/nonexistent/poset.txt"));
    }
}
