use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cutfem::io::{
    convergence_csv, export_vtk, render_pretty, write_convergence_csv, ConfigFile, ExampleId, MeshSizes, RunConfig,
};
use cutfem::verification::study::RowFailure;
use cutfem::verification::{compute_norms, run_convergence_study, solve_case, CaseSolution, COLUMNS, ERROR_DEGREE};
use cutfem::Result;

#[derive(Parser)]
#[command(name = "cutfem", version, about = "Unfitted Nitsche FEM for optimal control of elliptic interface problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and print J_h, iterations and error norms.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write the fields as legacy VTK.
        #[arg(long)]
        export_vtk: bool,
    },
    /// Run a mesh-refinement study and write the convergence CSV.
    Convergence {
        #[command(flatten)]
        common: Common,
    },
    /// Solve one configuration and write the fields as legacy VTK.
    Export {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Example id: 5.1, 5.2 or 5.3.
    #[arg(long)]
    example: Option<String>,
    /// Mesh size (cells per side).
    #[arg(long = "N")]
    n: Option<usize>,
    /// Comma-separated mesh sizes.
    #[arg(long = "Ns", value_delimiter = ',', conflicts_with = "n")]
    ns: Option<Vec<usize>>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    ctilde: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    damping: Option<f64>,
    /// Fixed-point tolerance on max |Δu|.
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Linear solver: cholesky or cg.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    solver_tol: Option<f64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Exit 0 even if the fixed point did not converge.
    #[arg(long)]
    allow_nonconverged: bool,
    /// Print aligned text instead of CSV.
    #[arg(long)]
    pretty: bool,
}

impl Common {
    fn resolve(&self, vtk: Option<bool>) -> Result<RunConfig> {
        let flags = ConfigFile {
            example: self.example.clone().map(ExampleId::Text),
            n: self.n.map(MeshSizes::One),
            ns: self.ns.clone(),
            alpha: self.alpha,
            ctilde: self.ctilde,
            solver: self.solver.clone(),
            solver_tol: self.solver_tol,
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            output_dir: self.output_dir.clone(),
            vtk,
            ..Default::default()
        };
        RunConfig::resolve(self.config.as_deref(), flags)
    }
}

enum Outcome {
    Done,
    NotConverged(String),
    Failed(Vec<RowFailure>),
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn solve_one(config: &RunConfig) -> Result<(CaseSolution, usize)> {
    let n = config.single_n()?;
    let case = config.case()?;
    Ok((solve_case(&case, n, &config.study_settings())?, n))
}

fn vtk_path(config: &RunConfig, n: usize) -> PathBuf {
    let id = config.problem_id().replace('.', "_");
    config.output_dir.join(format!("example_{id}_N{n}_C{}.vtk", config.ctilde))
}

fn write_vtk(config: &RunConfig, solution: &CaseSolution, n: usize) -> Result<()> {
    config.prepare_output_dir()?;
    let path = vtk_path(config, n);
    let summary = export_vtk(&solution.space, &solution.triple.y, &solution.triple.p, &path)?;
    println!("vtk={} points={} cells={}", path.display(), summary.points, summary.cells);
    Ok(())
}

fn run(config: &RunConfig, export: bool) -> Result<Outcome> {
    let case = config.case()?;
    let (solution, n) = solve_one(config)?;
    let t = &solution.triple;
    println!("example={} N={} alpha={:e} ctilde={}", config.problem_id(), n, case.alpha, config.ctilde);
    println!("h={:.6e} dofs={} cut_cells={}", solution.space.h(), solution.space.n_dofs(), solution.space.cuts.len());
    println!("J_h={:.10e}", t.objective);
    println!("iterations={} converged={} update_norm={:.3e}", t.iterations, t.converged, t.update_norm);
    println!("max_relative_residual={:.3e} max_backward_error={:.3e}", t.max_relative_residual, t.max_backward_error);
    if let Some(norms) = compute_norms(&case, &solution, ERROR_DEGREE)? {
        for (name, value) in COLUMNS.iter().zip(norms.values()) {
            println!("{name}={value:.4e}");
        }
    }
    if export || config.vtk {
        write_vtk(config, &solution, n)?;
    }
    Ok(if t.converged {
        Outcome::Done
    } else {
        Outcome::NotConverged(format!("N={n} iterations={} update_norm={:.3e}", t.iterations, t.update_norm))
    })
}

fn convergence(config: &RunConfig, pretty: bool) -> Result<Outcome> {
    let case = config.case()?;
    let ns = config.study_ns();
    let report = run_convergence_study(&case, &ns, &config.study_settings())?;
    if !report.failures.is_empty() {
        return Ok(Outcome::Failed(report.failures));
    }
    if pretty {
        print!("{}", render_pretty(&report));
    } else {
        print!("{}", convergence_csv(&report)?);
    }
    if config.csv {
        config.prepare_output_dir()?;
        let id = config.problem_id().replace('.', "_");
        let path = config.output_dir.join(format!("convergence_{id}.csv"));
        write_convergence_csv(&report, &path)?;
        eprintln!("csv={}", path.display());
    }
    let stalled: Vec<String> = report.rows.iter().filter(|r| !r.converged).map(|r| format!("N={}", r.n)).collect();
    Ok(if stalled.is_empty() { Outcome::Done } else { Outcome::NotConverged(stalled.join(",")) })
}

fn export(config: &RunConfig) -> Result<Outcome> {
    let (solution, n) = solve_one(config)?;
    write_vtk(config, &solution, n)?;
    let t = &solution.triple;
    Ok(if t.converged { Outcome::Done } else { Outcome::NotConverged(format!("N={n} iterations={}", t.iterations)) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, result) = match &cli.command {
        Command::Run { common, export_vtk } => (common, common.resolve(None).and_then(|c| run(&c, *export_vtk))),
        Command::Convergence { common } => (common, common.resolve(None).and_then(|c| convergence(&c, common.pretty))),
        Command::Export { common } => (common, common.resolve(Some(true)).and_then(|c| export(&c))),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged(detail)) if common.allow_nonconverged => {
            eprintln!("warning: kind=nonconverged detail={}", quote(&detail));
            ExitCode::SUCCESS
        }
        Ok(Outcome::NotConverged(detail)) => {
            eprintln!("error: kind=nonconverged detail={}", quote(&detail));
            ExitCode::from(3)
        }
        Ok(Outcome::Failed(failures)) => {
            for f in failures {
                eprintln!("error: kind={} N={} message={}", f.kind, f.n, quote(&f.message));
            }
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: kind={} message={}", e.kind(), quote(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
