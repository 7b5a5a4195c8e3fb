//! Drivers behind the `ablate`, `compare`, and `bench` subcommands. Every
//! solve in a run is an independent job; jobs execute across worker slots
//! and are reduced per cell in a fixed order, so repeated runs agree bit
//! for bit except for the measured CPU times.

use rayon::prelude::*;
use robsched_core::{
    deterministic_baseline_solve, heuristic_lower_bound, solve, BranchScheme, Instance64,
    SolverConfig,
};

use crate::config::ExperimentGrid;
use crate::report::{gap_percent, mean_gap, CellValue, MetricTable};

/// One switchable ingredient of the solver, compared against the
/// all-features-on baseline by `ablate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    Scheme,
    Ub1,
    Ub2,
    Ub3,
    Dom1,
    Dom2,
}

impl Feature {
    pub fn label(self) -> &'static str {
        match self {
            Feature::Scheme => "scheme",
            Feature::Ub1 => "ub1",
            Feature::Ub2 => "ub2",
            Feature::Ub3 => "ub3",
            Feature::Dom1 => "dom1",
            Feature::Dom2 => "dom2",
        }
    }

    /// Turning the branching scheme "off" means falling back to the naive
    /// scheme; everything else is a plain disable.
    fn disable(self, config: &mut SolverConfig) {
        match self {
            Feature::Scheme => config.scheme = BranchScheme::Naive,
            Feature::Ub1 => config.bounds.ub1 = false,
            Feature::Ub2 => config.bounds.ub2 = false,
            Feature::Ub3 => config.bounds.ub3 = false,
            Feature::Dom1 => config.dominance1 = false,
            Feature::Dom2 => config.dominance2 = false,
        }
    }
}

fn base_config(time_limit: f64) -> SolverConfig {
    SolverConfig {
        time_limit: Some(time_limit),
        ..SolverConfig::default()
    }
}

struct SolveJob {
    n: usize,
    m: usize,
    seed: u64,
    config: SolverConfig,
}

struct SolveOutcome {
    proven: bool,
    cpu_seconds: f64,
    explored: u64,
}

fn run_jobs(jobs: &[SolveJob]) -> Result<Vec<SolveOutcome>, String> {
    jobs.par_iter()
        .map(|job| {
            let instance =
                Instance64::generate(job.n, job.m, job.seed).map_err(|e| e.to_string())?;
            let result = solve(&instance, &job.config).map_err(|e| e.to_string())?;
            Ok(SolveOutcome {
                proven: result.proven_optimal,
                cpu_seconds: result.cpu_seconds,
                explored: result.nodes_explored,
            })
        })
        .collect()
}

fn cell_from(value: Option<f64>) -> CellValue {
    match value {
        Some(v) => CellValue::Value(v),
        None => CellValue::Missing,
    }
}

pub struct AblateReport {
    pub cpu: MetricTable,
    pub nodes: MetricTable,
}

/// Per-cell average of (cost without the feature - cost with it) relative
/// to the cost without it, in percent, over replications where both runs
/// finished proven; otherwise the missing marker.
pub fn ablate(grid: &ExperimentGrid, feature: Feature) -> Result<AblateReport, String> {
    let cells = grid.cells();
    let seeds = grid.seeds();
    let on_config = base_config(grid.time_limit);
    let mut off_config = on_config.clone();
    feature.disable(&mut off_config);

    let mut jobs = Vec::new();
    for &(n, m) in &cells {
        for &seed in &seeds {
            for config in [&on_config, &off_config] {
                jobs.push(SolveJob {
                    n,
                    m,
                    seed,
                    config: config.clone(),
                });
            }
        }
    }
    let outcomes = run_jobs(&jobs)?;

    let mut cpu = MetricTable::new(
        &format!("cpu time saving from {} (%)", feature.label()),
        "cpu_time",
        &grid.n_values,
        &grid.m_values,
    );
    let mut nodes = MetricTable::new(
        &format!("explored node saving from {} (%)", feature.label()),
        "nodes",
        &grid.n_values,
        &grid.m_values,
    );
    let per_cell = seeds.len() * 2;
    for (ci, &(n, m)) in cells.iter().enumerate() {
        let mut cpu_pairs = Vec::new();
        let mut node_pairs = Vec::new();
        for si in 0..seeds.len() {
            let on_out = &outcomes[ci * per_cell + si * 2];
            let off_out = &outcomes[ci * per_cell + si * 2 + 1];
            if on_out.proven && off_out.proven {
                cpu_pairs.push((off_out.cpu_seconds, on_out.cpu_seconds));
                node_pairs.push((off_out.explored as f64, on_out.explored as f64));
            }
        }
        cpu.set(n, m, cell_from(mean_gap(&cpu_pairs)));
        nodes.set(n, m, cell_from(mean_gap(&node_pairs)));
    }
    Ok(AblateReport { cpu, nodes })
}

pub struct CompareReport {
    pub lb: MetricTable,
    pub robust: MetricTable,
}

/// Initial-lower-bound quality and robust-over-deterministic improvement,
/// both as per-cell average percentages over the solved replications.
pub fn compare(grid: &ExperimentGrid) -> Result<CompareReport, String> {
    let cells = grid.cells();
    let seeds = grid.seeds();
    let time_limit = grid.time_limit;

    let mut jobs = Vec::new();
    for &(n, m) in &cells {
        for &seed in &seeds {
            jobs.push((n, m, seed));
        }
    }
    struct Outcome {
        robust_proven: bool,
        optimum: f64,
        lower_bound: f64,
        det_proven: bool,
        det_objective: f64,
    }
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|&(n, m, seed)| {
            let instance = Instance64::generate(n, m, seed).map_err(|e| e.to_string())?;
            let (_, lower_bound) = heuristic_lower_bound(&instance);
            let robust = solve(&instance, &base_config(time_limit)).map_err(|e| e.to_string())?;
            let det = deterministic_baseline_solve(&instance, Some(time_limit))
                .map_err(|e| e.to_string())?;
            Ok(Outcome {
                robust_proven: robust.proven_optimal,
                optimum: robust.objective,
                lower_bound,
                det_proven: det.proven_optimal,
                det_objective: det.objective,
            })
        })
        .collect::<Result<_, String>>()?;

    let mut lb = MetricTable::new(
        "initial lower bound gap to optimum (%)",
        "lb_quality",
        &grid.n_values,
        &grid.m_values,
    );
    let mut robust = MetricTable::new(
        "robust objective over deterministic baseline (%)",
        "robust_vs_det",
        &grid.n_values,
        &grid.m_values,
    );
    let reps = seeds.len();
    for (ci, &(n, m)) in cells.iter().enumerate() {
        let mut lb_gaps = Vec::new();
        let mut robust_gaps = Vec::new();
        for outcome in &outcomes[ci * reps..(ci + 1) * reps] {
            if !outcome.robust_proven {
                continue;
            }
            if let Some(gap) = gap_percent(outcome.optimum, outcome.lower_bound) {
                // reported as a magnitude; the lower bound never exceeds
                // the optimum, so the sign carries no information
                lb_gaps.push(gap.abs());
            }
            if outcome.det_proven {
                if let Some(gap) = gap_percent(outcome.det_objective, outcome.optimum) {
                    // both solvers are exact, so the true gap is >= 0; the
                    // clamp only absorbs evaluation rounding
                    robust_gaps.push((-gap).max(0.0));
                }
            }
        }
        lb.set(n, m, cell_from(mean(&lb_gaps)));
        robust.set(n, m, cell_from(mean(&robust_gaps)));
    }
    Ok(CompareReport { lb, robust })
}

pub struct BenchReport {
    pub cpu: MetricTable,
    pub nodes: MetricTable,
    pub solved: MetricTable,
}

/// Scaling summary: per-cell average CPU seconds and explored nodes over
/// the replications proven within the limit, plus how many were.
pub fn bench(grid: &ExperimentGrid) -> Result<BenchReport, String> {
    let cells = grid.cells();
    let seeds = grid.seeds();
    let config = base_config(grid.time_limit);

    let mut jobs = Vec::new();
    for &(n, m) in &cells {
        for &seed in &seeds {
            jobs.push(SolveJob {
                n,
                m,
                seed,
                config: config.clone(),
            });
        }
    }
    let outcomes = run_jobs(&jobs)?;

    let mut cpu = MetricTable::new(
        "average cpu seconds (solved replications)",
        "cpu_time",
        &grid.n_values,
        &grid.m_values,
    );
    cpu.decimals = 3;
    let mut nodes = MetricTable::new(
        "average explored nodes (solved replications)",
        "nodes",
        &grid.n_values,
        &grid.m_values,
    );
    nodes.decimals = 0;
    let mut solved = MetricTable::new(
        &format!("replications solved within limit (of {})", seeds.len()),
        "solved",
        &grid.n_values,
        &grid.m_values,
    );
    solved.decimals = 0;

    let reps = seeds.len();
    for (ci, &(n, m)) in cells.iter().enumerate() {
        let proven: Vec<&SolveOutcome> = outcomes[ci * reps..(ci + 1) * reps]
            .iter()
            .filter(|o| o.proven)
            .collect();
        let cpu_values: Vec<f64> = proven.iter().map(|o| o.cpu_seconds).collect();
        let node_values: Vec<f64> = proven.iter().map(|o| o.explored as f64).collect();
        cpu.set(n, m, cell_from(mean(&cpu_values)));
        nodes.set(n, m, cell_from(mean(&node_values)));
        solved.set(n, m, CellValue::Value(proven.len() as f64));
    }
    Ok(BenchReport { cpu, nodes, solved })
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}
