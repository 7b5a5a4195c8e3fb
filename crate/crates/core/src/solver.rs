//! Exact best-first branch and bound.
//!
//! A schedule must use every machine (with `m <= n` that is always
//! possible), so the search space is the set of complete schedules with no
//! idle machine. Nodes carry partial schedules; children append one
//! unassigned job to one machine. The frontier is a max-heap on the upper
//! bound, with deeper nodes first and then FIFO order among ties, which
//! makes every run fully deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::HashMap;
use std::sync::Arc;

use crate::bounds::{
    heuristic_lower_bound, ln_ub1, ln_ub2, ln_ub3, BoundCtx, BoundSet, Ub3Scratch, UnassignedStats,
};
use crate::error::SolveError;
use crate::instance::{Instance, JobId};
use crate::real::Real;
use crate::schedule::{ln_level, PartialSchedule, Schedule};

/// Job bitmasks are `u64`.
pub const MAX_JOBS: usize = 64;

/// Log-space slack for incumbent comparisons; bounds within this of the
/// incumbent are explored rather than pruned.
const LN_EPS: f64 = 1e-12;

/// How children are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchScheme {
    /// Append only to the last machine in use or open the next empty one,
    /// and drop children that leave fewer jobs than still-idle machines.
    /// Each reachable assignment is generated exactly once.
    #[default]
    New,
    /// Try every machine for every unassigned job. Symmetric duplicates
    /// and dead ends are generated and later discarded; this exists as the
    /// baseline the structured scheme is measured against.
    Naive,
}

/// Feature switches and limits for [`solve`].
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub scheme: BranchScheme,
    pub bounds: BoundSet,
    /// Prune nodes whose upper bound cannot beat the incumbent.
    pub dominance1: bool,
    /// Prune nodes dominated by an already-seen node with the same
    /// structure (same job sets and same last job on the open machine) but
    /// no-worse loads and objective.
    pub dominance2: bool,
    /// Thread CPU seconds; exceeded means the incumbent is returned
    /// unproven.
    pub time_limit: Option<f64>,
    /// Maximum explored nodes.
    pub node_limit: Option<u64>,
    /// Frontier size at which the search gives up rather than thrash.
    pub frontier_cap: usize,
    /// Maximum records held for dominance pruning; past it, no new records
    /// are stored (checks continue).
    pub dominance_store_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: BranchScheme::New,
            bounds: BoundSet::all(),
            dominance1: true,
            dominance2: true,
            time_limit: None,
            node_limit: None,
            frontier_cap: 2_000_000,
            dominance_store_cap: 4_000_000,
        }
    }
}

/// Outcome of a solve: the best schedule found plus search statistics.
#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub schedule: Schedule<T>,
    pub objective: T,
    /// True when the frontier was exhausted, i.e. `schedule` is exactly
    /// optimal; false when a limit cut the search short.
    pub proven_optimal: bool,
    pub nodes_generated: u64,
    pub nodes_explored: u64,
    pub pruned_bound: u64,
    pub pruned_dominance: u64,
    pub cpu_seconds: f64,
}

/// One link of the move chain leading from the root to a node. Frontier
/// nodes share their ancestors' links, so a retained node costs a few
/// machine words instead of a full partial-schedule clone; the schedule is
/// rebuilt only when the node is popped.
struct PathNode {
    machine: u8,
    job: u8,
    parent: Option<Arc<PathNode>>,
}

fn rebuild_partial<T: Real>(
    instance: &Instance<T>,
    path: &Option<Arc<PathNode>>,
) -> PartialSchedule<T> {
    let mut moves = Vec::new();
    let mut cursor = path;
    while let Some(link) = cursor {
        moves.push((link.machine as usize, JobId(link.job as usize)));
        cursor = &link.parent;
    }
    let mut partial = PartialSchedule::empty(instance);
    for &(machine, job) in moves.iter().rev() {
        partial.append_unchecked(instance, machine, job);
    }
    partial
}

struct FrontierNode<T> {
    ln_bound: T,
    id: u64,
    level: usize,
    active: usize,
    unassigned: u64,
    ln_objective: T,
    within_due: bool,
    path: Option<Arc<PathNode>>,
}

impl<T: Real> FrontierNode<T> {
    fn priority(&self, other: &Self) -> Ordering {
        self.ln_bound
            .partial_cmp(&other.ln_bound)
            .expect("bounds are never NaN")
            .then(self.level.cmp(&other.level))
            .then(other.id.cmp(&self.id))
    }
}

impl<T: Real> PartialEq for FrontierNode<T> {
    fn eq(&self, other: &Self) -> bool {
        self.priority(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for FrontierNode<T> {}

impl<T: Real> PartialOrd for FrontierNode<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for FrontierNode<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority(other)
    }
}

/// Moves available from `partial` under `scheme`, as (machine, job) pairs
/// in deterministic order: jobs ascending, machines ascending.
pub fn child_moves<T: Real>(
    instance: &Instance<T>,
    partial: &PartialSchedule<T>,
    scheme: BranchScheme,
) -> Vec<(usize, JobId)> {
    let n = instance.n();
    let m = instance.machines();
    let mut moves = Vec::new();
    match scheme {
        BranchScheme::Naive => {
            for job in instance.job_ids() {
                if partial.is_assigned(job) {
                    continue;
                }
                for machine in 0..m {
                    moves.push((machine, job));
                }
            }
        }
        BranchScheme::New => {
            let active = partial
                .machines()
                .iter()
                .filter(|ms| !ms.is_empty())
                .count();
            let remaining_after = n - (partial.assigned_count() + 1);
            for job in instance.job_ids() {
                if partial.is_assigned(job) {
                    continue;
                }
                // still-idle machines must each get one of the remaining jobs
                if active >= 1 && remaining_after >= m - active {
                    moves.push((active - 1, job));
                }
                if active < m && remaining_after >= m - (active + 1) {
                    moves.push((active, job));
                }
            }
        }
    }
    moves
}

/// Structural identity for dominance pruning. Nodes with equal keys reach
/// the same completions move-for-move, because the job set (hence
/// variance) of every machine matches and the open machine continues from
/// the same last job (hence identical future setups).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum DomKey {
    /// Closed machines as sorted job masks, then the open machine's mask
    /// and last job.
    New {
        closed: Vec<u64>,
        open_mask: u64,
        open_last: u8,
    },
    /// Every machine as a (mask, last job) pair, as a sorted multiset;
    /// empty machines are (0, NO_JOB).
    Naive { machines: Vec<(u64, u8)> },
}

const NO_JOB: u8 = u8::MAX;

struct DomRecord<T> {
    loads: Vec<T>,
    ln_objective: T,
}

struct DominanceStore<T> {
    map: HashMap<DomKey, Vec<DomRecord<T>>>,
    records: usize,
    cap: usize,
}

impl<T: Real> DominanceStore<T> {
    fn new(cap: usize) -> Self {
        DominanceStore {
            map: HashMap::new(),
            records: 0,
            cap,
        }
    }

    /// True if an existing record dominates (no-larger loads, no-smaller
    /// objective, at least one strict); otherwise records the newcomer,
    /// evicting records it dominates. At capacity nothing new is stored,
    /// which only weakens pruning, never correctness.
    fn check_and_insert(&mut self, key: DomKey, loads: Vec<T>, ln_objective: T) -> bool {
        let slot = self.map.entry(key).or_default();
        for record in slot.iter() {
            if dominates(&record.loads, record.ln_objective, &loads, ln_objective) {
                return true;
            }
            if record.loads == loads && record.ln_objective == ln_objective {
                // identical record already stored; keep one copy
                return false;
            }
        }
        if self.records >= self.cap {
            return false;
        }
        let before = slot.len();
        slot.retain(|record| !dominates(&loads, ln_objective, &record.loads, record.ln_objective));
        self.records -= before - slot.len();
        slot.push(DomRecord {
            loads,
            ln_objective,
        });
        self.records += 1;
        false
    }
}

/// `a` dominates `b`: every load no larger, objective no smaller, and at
/// least one inequality strict.
fn dominates<T: Real>(a_loads: &[T], a_obj: T, b_loads: &[T], b_obj: T) -> bool {
    let mut strict = a_obj > b_obj;
    if a_obj < b_obj {
        return false;
    }
    for (&a, &b) in a_loads.iter().zip(b_loads) {
        if a > b {
            return false;
        }
        if a < b {
            strict = true;
        }
    }
    strict
}

fn dom_key<T: Real>(partial: &PartialSchedule<T>, active: usize, scheme: BranchScheme) -> DomKey {
    let masks_and_lasts = |ms: &crate::schedule::MachineState<T>| {
        let mask = ms
            .sequence()
            .iter()
            .fold(0u64, |acc, job| acc | 1u64 << job.0);
        let last = ms.last_job().map_or(NO_JOB, |j| j.0 as u8);
        (mask, last)
    };
    match scheme {
        BranchScheme::New => {
            let open = active.max(1) - 1;
            let mut closed: Vec<u64> = partial.machines()[..open]
                .iter()
                .map(|ms| masks_and_lasts(ms).0)
                .collect();
            closed.sort_unstable();
            let (open_mask, open_last) = masks_and_lasts(partial.machine(open));
            DomKey::New {
                closed,
                open_mask,
                open_last,
            }
        }
        BranchScheme::Naive => {
            let mut machines: Vec<(u64, u8)> =
                partial.machines().iter().map(masks_and_lasts).collect();
            machines.sort_unstable();
            DomKey::Naive { machines }
        }
    }
}

/// Loads listed in the same canonical order as the key's machines.
fn dom_loads<T: Real>(partial: &PartialSchedule<T>, active: usize, scheme: BranchScheme) -> Vec<T> {
    let mask_of = |ms: &crate::schedule::MachineState<T>| {
        ms.sequence()
            .iter()
            .fold(0u64, |acc, job| acc | 1u64 << job.0)
    };
    match scheme {
        BranchScheme::New => {
            let open = active.max(1) - 1;
            let mut closed: Vec<(u64, T)> = partial.machines()[..open]
                .iter()
                .map(|ms| (mask_of(ms), ms.mean_load()))
                .collect();
            closed.sort_unstable_by_key(|entry| entry.0);
            let mut loads: Vec<T> = closed.into_iter().map(|(_, load)| load).collect();
            loads.push(partial.machine(open).mean_load());
            loads
        }
        BranchScheme::Naive => {
            let mut machines: Vec<(u64, u8, T)> = partial
                .machines()
                .iter()
                .map(|ms| {
                    let (mask, last) = (mask_of(ms), ms.last_job().map_or(NO_JOB, |j| j.0 as u8));
                    (mask, last, ms.mean_load())
                })
                .collect();
            machines.sort_unstable_by_key(|entry| (entry.0, entry.1));
            machines.into_iter().map(|(_, _, load)| load).collect()
        }
    }
}

pub(crate) fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc == 0 {
        ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
    } else {
        0.0
    }
}

/// Finds a schedule maximizing the probability that every machine meets
/// the due date. With no limits set, the result is exactly optimal.
pub fn solve<T: Real>(
    instance: &Instance<T>,
    config: &SolverConfig,
) -> Result<SolveResult<T>, SolveError> {
    let n = instance.n();
    if n > MAX_JOBS {
        return Err(SolveError::TooManyJobs {
            got: n,
            max: MAX_JOBS,
        });
    }
    let start = thread_cpu_seconds();
    let due = instance.due_date();
    let eps = T::cast(LN_EPS);
    let ctx = BoundCtx::new(instance);
    let mut scratch = Ub3Scratch::new();

    let (mut best_schedule, _) = heuristic_lower_bound(instance);
    let mut ln_incumbent = best_schedule.ln_objective_raw(due);

    let full_mask = u64::MAX >> (MAX_JOBS - n);
    let mut frontier: BinaryHeap<FrontierNode<T>> = BinaryHeap::new();
    let mut store: DominanceStore<T> = DominanceStore::new(config.dominance_store_cap);

    let mut generated: u64 = 0;
    let mut explored: u64 = 0;
    let mut pruned_bound: u64 = 0;
    let mut pruned_dominance: u64 = 0;
    let mut proven = true;
    let mut next_id: u64 = 0;

    let root = {
        let root_partial = PartialSchedule::empty(instance);
        let un = UnassignedStats::from_mask(instance, full_mask);
        let mut ln_bound = T::zero();
        if config.bounds.ub1 {
            ln_bound = ln_bound.min(ln_ub1(T::zero(), true, n == 0));
        }
        if config.bounds.ub2 {
            ln_bound = ln_bound.min(ln_ub2(instance, &ctx, &root_partial, &un));
        }
        if config.bounds.ub3 {
            ln_bound = ln_bound.min(ln_ub3(instance, &ctx, &root_partial, &un, &mut scratch));
        }
        FrontierNode {
            ln_bound,
            id: next_id,
            level: 0,
            active: 0,
            unassigned: full_mask,
            ln_objective: T::zero(),
            within_due: true,
            path: None,
        }
    };
    next_id += 1;
    generated += 1;
    frontier.push(root);

    'search: while let Some(node) = frontier.pop() {
        if let Some(limit) = config.time_limit {
            if thread_cpu_seconds() - start >= limit {
                proven = false;
                break;
            }
        }
        if let Some(limit) = config.node_limit {
            if explored >= limit {
                proven = false;
                break;
            }
        }
        // the incumbent may have improved since this node was pushed
        if config.dominance1 && node.ln_bound < ln_incumbent - eps {
            pruned_bound += 1;
            continue;
        }
        explored += 1;

        let parent_partial = rebuild_partial(instance, &node.path);
        let parent_empty = instance.machines() - node.active;
        for (machine, job) in child_moves(instance, &parent_partial, config.scheme) {
            generated += 1;

            let ms = parent_partial.machine(machine);
            let setup = ms
                .last_job()
                .map_or_else(T::zero, |last| instance.setup(last, job));
            let j = instance.job(job);
            let new_mean = ms.mean_load() + setup + j.mean;
            let new_variance = ms.variance() + j.variance;
            let old_ln = ln_level(ms.mean_load(), ms.variance(), due);
            let new_ln = ln_level(new_mean, new_variance, due);
            let child_ln_obj = if old_ln.is_infinite() || node.ln_objective.is_infinite() {
                // avoid inf - inf: rebuild the sum with the appended
                // machine's level replaced
                parent_partial
                    .machines()
                    .iter()
                    .enumerate()
                    .map(|(i, msi)| {
                        if i == machine {
                            new_ln
                        } else {
                            ln_level(msi.mean_load(), msi.variance(), due)
                        }
                    })
                    .fold(T::zero(), |a, b| a + b)
            } else {
                node.ln_objective - old_ln + new_ln
            };

            if node.level + 1 == n {
                explored += 1;
                // complete schedules must keep no machine idle; the
                // structured scheme guarantees that, the naive one must
                // check
                let eligible = match config.scheme {
                    BranchScheme::New => true,
                    BranchScheme::Naive => {
                        parent_empty == 0 || (parent_empty == 1 && ms.is_empty())
                    }
                };
                if eligible && child_ln_obj > ln_incumbent + eps {
                    let child = parent_partial
                        .append_job(instance, machine, job)
                        .expect("move is valid");
                    let schedule = Schedule::from_partial(child).expect("complete");
                    ln_incumbent = schedule.ln_objective_raw(due);
                    best_schedule = schedule;
                }
                continue;
            }

            let child_partial = parent_partial
                .append_job(instance, machine, job)
                .expect("move is valid");
            let child_active = node.active + usize::from(ms.is_empty());
            let child_within_due = node.within_due && new_mean <= due;
            let child_unassigned = node.unassigned & !(1u64 << job.0);

            let un = UnassignedStats::from_mask(instance, child_unassigned);
            let mut ln_bound = T::zero();
            if config.bounds.ub1 {
                ln_bound = ln_bound.min(ln_ub1(child_ln_obj, child_within_due, false));
            }
            if config.bounds.ub2 {
                ln_bound = ln_bound.min(ln_ub2(instance, &ctx, &child_partial, &un));
            }
            // the cheap bounds may already decide the fate of this child
            let settled = config.dominance1 && ln_bound < ln_incumbent - eps;
            if config.bounds.ub3 && !settled {
                ln_bound = ln_bound.min(ln_ub3(instance, &ctx, &child_partial, &un, &mut scratch));
            }
            if config.dominance1 && ln_bound < ln_incumbent - eps {
                pruned_bound += 1;
                continue;
            }
            if config.dominance2 {
                let key = dom_key(&child_partial, child_active, config.scheme);
                let loads = dom_loads(&child_partial, child_active, config.scheme);
                if store.check_and_insert(key, loads, child_ln_obj) {
                    pruned_dominance += 1;
                    continue;
                }
            }

            let child = FrontierNode {
                ln_bound,
                id: next_id,
                level: node.level + 1,
                active: child_active,
                unassigned: child_unassigned,
                ln_objective: child_ln_obj,
                within_due: child_within_due,
                path: Some(Arc::new(PathNode {
                    machine: machine as u8,
                    job: job.0 as u8,
                    parent: node.path.clone(),
                })),
            };
            next_id += 1;
            frontier.push(child);
            if frontier.len() > config.frontier_cap {
                proven = false;
                break 'search;
            }
        }
    }

    let objective = best_schedule.objective_raw(due);
    Ok(SolveResult {
        schedule: best_schedule,
        objective,
        proven_optimal: proven,
        nodes_generated: generated,
        nodes_explored: explored,
        pruned_bound,
        pruned_dominance,
        cpu_seconds: thread_cpu_seconds() - start,
    })
}
