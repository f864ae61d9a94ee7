//! Command-line harness: instance feasibility checks, method dispatch,
//! certificate verification, instance generation, and Monte Carlo
//! validation. Exit codes: 0 success/PASS, 1 input error, 2 infeasible,
//! 3 verification FAIL.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use udisc::closed_form;
use udisc::ensemble::{check_feasibility, signal_spaces, StateEnsemble};
use udisc::error::Error;
use udisc::gen;
use udisc::hermitian::{default_rank_tol, max_abs};
use udisc::io::{
    self, InstanceFile, ParsedInstance, SimulationReport, SolutionReport,
};
use udisc::sdp::SdpOptions;
use udisc::sim;
use udisc::solver::{self, Solution};
use udisc::symmetry;

#[derive(Parser)]
#[command(name = "udisc", about = "Optimal unambiguous discrimination of mixed quantum states", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Auto,
    Sdp,
    Orthogonal,
    Pair,
    Gu,
    Cgu,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Random,
    Pair,
    Orthogonal,
    Gu,
    Cgu,
}

#[derive(Subcommand)]
enum Command {
    /// Report per-state signal-space dimensions and detectability
    Check { file: PathBuf },
    /// Compute the optimal measurement and its dual certificate
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        /// Relative duality-gap tolerance for the iterative solver
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Write the solution report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a solution report against its instance
    Verify {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Generate a random feasible instance
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long)]
        dim: usize,
        /// Number of states (group order for gu/cgu)
        #[arg(long, default_value_t = 2)]
        states: usize,
        /// Comma-separated state ranks (random kind only)
        #[arg(long, value_delimiter = ',')]
        ranks: Option<Vec<usize>>,
        /// Number of generators (cgu kind only)
        #[arg(long, default_value_t = 2)]
        generators: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw measurement outcomes from a solved instance
    Simulate {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Simulate even if the solution fails certificate verification
        #[arg(long)]
        force: bool,
    },
}

const EXIT_INPUT: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_FAIL: u8 = 3;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn log_level() -> u8 {
    match std::env::var("UDISC_LOG").as_deref() {
        Ok("debug") => 2,
        Ok("info") => 1,
        _ => 0,
    }
}

fn log_solution(method: &str, sol: &Solution) {
    let level = log_level();
    if level >= 2 {
        for rec in &sol.log {
            eprintln!(
                "iter {:3}  mu {:.3e}  primal {:.9}  dual {:.9}",
                rec.iteration, rec.mu, rec.primal_value, rec.dual_value
            );
        }
    }
    if level >= 1 {
        eprintln!(
            "method {method}: p_detect {:.9}, gap {:.3e}, {} iterations",
            sol.measurement.p_detect, sol.gap, sol.iterations
        );
    }
}

fn read_instance(path: &Path) -> Result<(InstanceFile, ParsedInstance), Error> {
    let file: InstanceFile = io::read_json(path)?;
    let parsed = file.parse()?;
    Ok((file, parsed))
}

fn cmd_check(file: &Path) -> ExitCode {
    let (_, parsed) = match read_instance(file) {
        Ok(x) => x,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    let e = match parsed.ensemble() {
        Ok(e) => e,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    let rep = match check_feasibility(&e) {
        Ok(r) => r,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    for (i, s) in rep.per_state.iter().enumerate() {
        println!(
            "state {i}: signal dim {}, detectable {}, max eta {:.6}",
            s.signal_dim, s.detectable, s.max_eta
        );
    }
    if rep.overall {
        println!("feasible: at least one state is detectable");
        ExitCode::SUCCESS
    } else {
        println!("infeasible: no state is detectable");
        ExitCode::from(EXIT_INFEASIBLE)
    }
}

fn route_auto(parsed: &ParsedInstance, e: &StateEnsemble) -> Result<Method, Error> {
    match parsed {
        ParsedInstance::Gu(_) => return Ok(Method::Gu),
        ParsedInstance::Cgu(_) => return Ok(Method::Cgu),
        ParsedInstance::Plain(_) => {}
    }
    let spaces = signal_spaces(e, default_rank_tol(e.working_dim()))?;
    if e.len() == 2
        && spaces.iter().all(|s| s.theta.dim() == 1 && s.detectable)
    {
        return Ok(Method::Pair);
    }
    let orthogonal = spaces.iter().enumerate().all(|(i, a)| {
        spaces.iter().skip(i + 1).all(|b| {
            max_abs(&(a.projector.matrix() * b.projector.matrix())) <= udisc::hermitian::ORTHO_TOL
        })
    });
    if orthogonal {
        return Ok(Method::Orthogonal);
    }
    Ok(Method::Sdp)
}

fn solve_dispatch(
    parsed: &ParsedInstance,
    e: &StateEnsemble,
    method: Method,
    opts: &SdpOptions,
) -> Result<(String, Solution), Error> {
    let method = if method == Method::Auto {
        route_auto(parsed, e)?
    } else {
        method
    };
    match method {
        Method::Auto => unreachable!(),
        Method::Sdp => Ok(("sdp".into(), solver::solve(e, opts)?)),
        Method::Orthogonal => {
            let spaces = signal_spaces(e, default_rank_tol(e.working_dim()))?;
            Ok(("orthogonal".into(), closed_form::solve_orthogonal(e, &spaces)?))
        }
        Method::Pair => {
            let spaces = signal_spaces(e, default_rank_tol(e.working_dim()))?;
            Ok(("pair".into(), closed_form::solve_rank1_pair(e, &spaces)?))
        }
        Method::Gu => match parsed {
            ParsedInstance::Gu(g) => Ok(("gu".into(), symmetry::solve_gu(g, opts)?.solution)),
            _ => Err(Error::InvalidInstance(
                "method gu requires a symmetry block of kind \"gu\"".into(),
            )),
        },
        Method::Cgu => match parsed {
            ParsedInstance::Cgu(c) => Ok(("cgu".into(), symmetry::solve_cgu(c, opts)?.solution)),
            _ => Err(Error::InvalidInstance(
                "method cgu requires a symmetry block of kind \"cgu\"".into(),
            )),
        },
    }
}

fn cmd_solve(file: &Path, method: Method, tol: f64, out: Option<&Path>) -> ExitCode {
    let (_, parsed) = match read_instance(file) {
        Ok(x) => x,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    let e = match parsed.ensemble() {
        Ok(e) => e,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    let opts = SdpOptions {
        gap_tol: tol,
        ..SdpOptions::default()
    };
    let (method_name, sol) = match solve_dispatch(&parsed, &e, method, &opts) {
        Ok(x) => x,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    log_solution(&method_name, &sol);
    let rep = match solver::verify_optimality(&e, &sol.measurement, &sol.certificate, 1e-6) {
        Ok(r) => r,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    let mut report = SolutionReport::new(&method_name, &sol, &rep);
    let infeasible = sol.note.is_some();
    if infeasible {
        report.status = "infeasible".into();
    }
    let text = match io::to_canonical_json(&report) {
        Ok(t) => t,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    if let Some(path) = out {
        if let Err(err) = std::fs::write(path, &text) {
            return fail(EXIT_INPUT, err);
        }
    } else {
        print!("{text}");
    }
    if infeasible {
        ExitCode::from(EXIT_INFEASIBLE)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_verify(instance: &Path, solution: &Path, tol: f64) -> ExitCode {
    let (_, parsed) = match read_instance(instance) {
        Ok(x) => x,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    let e = match parsed.ensemble() {
        Ok(e) => e,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    let report: SolutionReport = match io::read_json(solution) {
        Ok(r) => r,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    let (m, c) = match report.to_measurement() {
        Ok(x) => x,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    let rep = match solver::verify_optimality(&e, &m, &c, tol) {
        Ok(r) => r,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    println!("z min eigenvalue:              {:.6e}", rep.z_psd);
    for (i, v) in rep.dual_feas.iter().enumerate() {
        println!("dual feasibility (state {i}):   {v:.6e}");
    }
    println!("inconclusive slack |Z Pi_0|:   {:.6e}", rep.slack_residual);
    for (i, v) in rep.block_residuals.iter().enumerate() {
        println!("block slackness (state {i}):    {v:.6e}");
    }
    println!("trace gap |Tr Z - P_D|:        {:.6e}", rep.gap_residual);
    println!("completeness |sum Pi - I|:     {:.6e}", rep.completeness_residual);
    println!("cross traces max |Tr rho Pi|:  {:.6e}", rep.cross_trace_residual);
    if rep.pass {
        println!("PASS");
        ExitCode::SUCCESS
    } else {
        println!("FAIL");
        ExitCode::from(EXIT_FAIL)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    kind: GenKind,
    dim: usize,
    states: usize,
    ranks: Option<&[usize]>,
    generators: usize,
    seed: u64,
    out: &Path,
) -> ExitCode {
    let file = match kind {
        GenKind::Random => {
            let ranks: Vec<usize> = match ranks {
                Some(r) => r.to_vec(),
                None => vec![1; states],
            };
            gen::gen_random(dim, states, &ranks, seed).map(|e| InstanceFile::from_ensemble(&e))
        }
        GenKind::Pair => gen::gen_pair(dim, seed).map(|e| InstanceFile::from_ensemble(&e)),
        GenKind::Orthogonal => {
            gen::gen_orthogonal(dim, states, seed).map(|e| InstanceFile::from_ensemble(&e))
        }
        GenKind::Gu => gen::gen_gu(dim, states, seed).and_then(|g| InstanceFile::from_gu(&g)),
        GenKind::Cgu => {
            gen::gen_cgu(dim, states, generators, seed).and_then(|c| InstanceFile::from_cgu(&c))
        }
    };
    let file = match file {
        Ok(f) => f,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    match io::write_json(out, &file) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => fail(EXIT_INPUT, err),
    }
}

fn cmd_simulate(
    instance: &Path,
    solution: &Path,
    shots: u64,
    seed: u64,
    force: bool,
) -> ExitCode {
    let (_, parsed) = match read_instance(instance) {
        Ok(x) => x,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    let e = match parsed.ensemble() {
        Ok(e) => e,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    let report: SolutionReport = match io::read_json(solution) {
        Ok(r) => r,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    let (m, c) = match report.to_measurement() {
        Ok(x) => x,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    if !force {
        let rep = match solver::verify_optimality(&e, &m, &c, 1e-6) {
            Ok(r) => r,
            Err(err) => return fail(EXIT_INPUT, err),
        };
        if !rep.pass {
            return fail(
                EXIT_FAIL,
                "solution fails certificate verification; pass --force to simulate anyway",
            );
        }
    }
    let run = match sim::simulate(&e, &m, shots, seed) {
        Ok(r) => r,
        Err(err) => return fail(EXIT_INPUT, err),
    };
    match io::to_canonical_json(&SimulationReport::new(&run)) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => fail(EXIT_INPUT, err),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check { file } => cmd_check(&file),
        Command::Solve {
            file,
            method,
            tol,
            out,
        } => cmd_solve(&file, method, tol, out.as_deref()),
        Command::Verify {
            instance,
            solution,
            tol,
        } => cmd_verify(&instance, &solution, tol),
        Command::Gen {
            kind,
            dim,
            states,
            ranks,
            generators,
            seed,
            out,
        } => cmd_gen(kind, dim, states, ranks.as_deref(), generators, seed, &out),
        Command::Simulate {
            instance,
            solution,
            shots,
            seed,
            force,
        } => cmd_simulate(&instance, &solution, shots, seed, force),
    }
}
