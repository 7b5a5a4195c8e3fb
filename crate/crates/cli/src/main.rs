//! `robsched`: exact robust parallel-machine scheduling from the command
//! line. `gen` and `solve` handle single instances; `ablate`, `compare`,
//! and `bench` sweep seeded grids; `verify` cross-checks a schedule's
//! stated service level by simulation.

mod config;
mod experiments;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use robsched_core::{monte_carlo_service_level, solve, Instance64, Schedule64};

use crate::config::{load_file, merge_grid, merge_solver, ExperimentGrid, FileConfig};
use crate::experiments::Feature;
use crate::report::MetricTable;

#[derive(Parser)]
#[command(
    name = "robsched",
    version,
    about = "Exact solver and experiment harness for robust parallel-machine scheduling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance file
    Gen(GenArgs),
    /// Solve one instance and print the schedule found
    Solve(SolveArgs),
    /// Gap tables for one solver feature on vs off over a grid
    Ablate(AblateArgs),
    /// Lower-bound quality and robust-vs-deterministic tables over a grid
    Compare(GridCmd),
    /// Check a schedule's stated service level by simulation
    Verify(VerifyArgs),
    /// CPU time and node count summary over a grid
    Bench(GridCmd),
}

#[derive(Args)]
struct GenArgs {
    /// Number of jobs
    #[arg(long)]
    n: usize,
    /// Number of machines
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; omitted prints the instance to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolverFlags {
    /// Branching scheme: new or naive
    #[arg(long)]
    scheme: Option<String>,
    /// Enabled upper bounds, e.g. "1,2,3" or "none"
    #[arg(long)]
    ub: Option<String>,
    /// Enabled dominance rules, e.g. "1,2" or "none"
    #[arg(long)]
    dom: Option<String>,
    /// TOML config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file produced by gen
    instance: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    /// CPU seconds before returning the best schedule so far unproven
    #[arg(long)]
    time_limit: Option<f64>,
    /// Explored-node cap, same unproven semantics
    #[arg(long)]
    node_limit: Option<u64>,
    /// Write the schedule here in addition to printing it
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridFlags {
    /// Comma-separated job counts, e.g. --n 8,10
    #[arg(long = "n", value_delimiter = ',')]
    n_values: Vec<usize>,
    /// Comma-separated machine counts, e.g. --m 2,3
    #[arg(long = "m", value_delimiter = ',')]
    m_values: Vec<usize>,
    /// Seeded instances per (n, m) cell
    #[arg(long)]
    replications: Option<u64>,
    /// First seed; replication r uses base_seed + r
    #[arg(long, alias = "seed")]
    base_seed: Option<u64>,
    /// Per-solve CPU budget in seconds
    #[arg(long)]
    time_limit: Option<f64>,
    /// TOML config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the CSV tables; omitted prints text tables only
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    /// Solver ingredient to switch off in the treatment runs
    #[arg(long, value_enum)]
    feature: FeatureArg,
    #[command(flatten)]
    grid: GridFlags,
}

#[derive(Args)]
struct GridCmd {
    #[command(flatten)]
    grid: GridFlags,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instance file the schedule refers to
    instance: PathBuf,
    /// Schedule file produced by solve --out
    schedule: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureArg {
    Scheme,
    Ub1,
    Ub2,
    Ub3,
    Dom1,
    Dom2,
}

impl From<FeatureArg> for Feature {
    fn from(arg: FeatureArg) -> Feature {
        match arg {
            FeatureArg::Scheme => Feature::Scheme,
            FeatureArg::Ub1 => Feature::Ub1,
            FeatureArg::Ub2 => Feature::Ub2,
            FeatureArg::Ub3 => Feature::Ub3,
            FeatureArg::Dom1 => Feature::Dom1,
            FeatureArg::Dom2 => Feature::Dom2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Ablate(args) => cmd_ablate(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn load_optional(path: Option<&Path>) -> Result<FileConfig, String> {
    match path {
        Some(path) => load_file(path),
        None => Ok(FileConfig::default()),
    }
}

fn grid_from(flags: &GridFlags) -> Result<ExperimentGrid, String> {
    let file = load_optional(flags.config.as_deref())?;
    merge_grid(
        &file.grid,
        &flags.n_values,
        &flags.m_values,
        flags.replications,
        flags.base_seed,
        flags.time_limit,
    )
}

fn cmd_gen(args: &GenArgs) -> Result<(), String> {
    let instance = Instance64::generate(args.n, args.m, args.seed).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => {
            instance
                .save(path)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            println!(
                "wrote {} (n={} m={} seed={})",
                path.display(),
                args.n,
                args.m,
                args.seed
            );
        }
        None => print!("{}", instance.to_text()),
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<(), String> {
    let instance = Instance64::load(&args.instance)
        .map_err(|e| format!("cannot load {}: {e}", args.instance.display()))?;
    let file = load_optional(args.solver.config.as_deref())?;
    let mut solver = merge_solver(
        &file.solver,
        args.solver.scheme.as_deref(),
        args.solver.ub.as_deref(),
        args.solver.dom.as_deref(),
    )?;
    if let Some(limit) = args.time_limit {
        solver.time_limit = Some(limit);
    }
    if let Some(limit) = args.node_limit {
        solver.node_limit = Some(limit);
    }
    let result = solve(&instance, &solver).map_err(|e| e.to_string())?;

    let due = instance.due_date();
    // the printed objective must be exactly what the printed schedule earns
    let recheck = result.schedule.objective(due).map_err(|e| e.to_string())?;
    if (recheck - result.objective).abs() > 1e-9 {
        return Err(format!(
            "internal check failed: reported objective {} but the schedule evaluates to {}",
            result.objective, recheck
        ));
    }

    let seed_text = instance
        .seed()
        .map_or_else(|| "-".to_string(), |s| s.to_string());
    println!(
        "instance {}: n={} m={} due={:.6} seed={}",
        args.instance.display(),
        instance.n(),
        instance.machines(),
        due,
        seed_text
    );
    println!("solver {}", config::describe_solver(&solver));
    println!(
        "objective {:.12} proven={}",
        result.objective, result.proven_optimal
    );
    println!(
        "nodes generated={} explored={} pruned_bound={} pruned_dominance={}",
        result.nodes_generated, result.nodes_explored, result.pruned_bound, result.pruned_dominance
    );
    println!("cpu_seconds {:.3}", result.cpu_seconds);
    for (i, machine) in result.schedule.machines().iter().enumerate() {
        let jobs: Vec<String> = machine.sequence().iter().map(|j| j.to_string()).collect();
        println!("machine {}: {}", i + 1, jobs.join(" "));
    }
    if let Some(path) = &args.out {
        result
            .schedule
            .save(&instance, path)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        println!("schedule written to {}", path.display());
    }
    println!("row n,m,seed,objective,proven,explored,generated,cpu_seconds");
    println!(
        "row {},{},{},{:.12},{},{},{},{:.3}",
        instance.n(),
        instance.machines(),
        seed_text,
        result.objective,
        result.proven_optimal,
        result.nodes_explored,
        result.nodes_generated,
        result.cpu_seconds
    );
    Ok(())
}

fn emit_tables(tables: &[(&MetricTable, &str)], out: Option<&Path>) -> Result<(), String> {
    for (table, _) in tables {
        println!("{}", table.render());
    }
    if let Some(dir) = out {
        for (table, name) in tables {
            let path = table
                .write_csv(dir, name)
                .map_err(|e| format!("cannot write {name}: {e}"))?;
            println!("csv written to {}", path.display());
        }
    }
    Ok(())
}

fn cmd_ablate(args: &AblateArgs) -> Result<(), String> {
    let grid = grid_from(&args.grid)?;
    let feature = Feature::from(args.feature);
    let report = experiments::ablate(&grid, feature)?;
    let cpu_name = format!("ablate_{}_cpu_time.csv", feature.label());
    let nodes_name = format!("ablate_{}_nodes.csv", feature.label());
    emit_tables(
        &[(&report.cpu, &cpu_name), (&report.nodes, &nodes_name)],
        args.grid.out.as_deref(),
    )
}

fn cmd_compare(args: &GridCmd) -> Result<(), String> {
    let grid = grid_from(&args.grid)?;
    let report = experiments::compare(&grid)?;
    emit_tables(
        &[
            (&report.lb, "compare_lb_quality.csv"),
            (&report.robust, "compare_robust_vs_det.csv"),
        ],
        args.grid.out.as_deref(),
    )
}

fn cmd_bench(args: &GridCmd) -> Result<(), String> {
    let grid = grid_from(&args.grid)?;
    let report = experiments::bench(&grid)?;
    emit_tables(
        &[
            (&report.cpu, "bench_cpu_time.csv"),
            (&report.nodes, "bench_nodes.csv"),
            (&report.solved, "bench_solved.csv"),
        ],
        args.grid.out.as_deref(),
    )
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), String> {
    let instance = Instance64::load(&args.instance)
        .map_err(|e| format!("cannot load {}: {e}", args.instance.display()))?;
    let schedule = Schedule64::load(&instance, &args.schedule)
        .map_err(|e| format!("cannot load {}: {e}", args.schedule.display()))?;
    let analytic = schedule
        .objective(instance.due_date())
        .map_err(|e| e.to_string())?;
    let mc = monte_carlo_service_level(&instance, &schedule, args.samples, args.seed);
    let difference = (analytic - mc.estimate).abs();
    // 3 sigma agreement; a degenerate zero-variance estimate must match
    // outright
    let agree = if mc.std_error == 0.0 {
        difference <= 1e-9
    } else {
        difference <= 3.0 * mc.std_error
    };
    println!("analytic  {analytic:.9}");
    println!(
        "simulated {:.9} (std error {:.9}, {} samples, seed {})",
        mc.estimate, mc.std_error, mc.samples, args.seed
    );
    println!("difference {difference:.9}");
    println!("verdict {}", if agree { "AGREE" } else { "DISAGREE" });
    Ok(())
}
