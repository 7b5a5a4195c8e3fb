//! Independent reference solvers used to validate the branch and bound:
//! exhaustive enumeration, Monte Carlo evaluation of a fixed schedule, and
//! a deterministic mean-makespan baseline.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bounds::UnassignedStats;
use crate::error::SolveError;
use crate::instance::{Instance, JobId};
use crate::real::Real;
use crate::schedule::{PartialSchedule, Schedule};
use crate::solver::{child_moves, thread_cpu_seconds, BranchScheme, MAX_JOBS};

/// Default job limit for [`brute_force_solve`]; enumeration is factorial.
pub const BRUTE_FORCE_CAP: usize = 7;

/// Visits every complete, no-idle-machine schedule exactly once up to
/// machine relabeling: the first block holds the smallest job id, the next
/// block the smallest remaining one, and so on, with every internal order
/// of every block enumerated.
pub fn for_each_canonical_schedule<T: Real>(
    instance: &Instance<T>,
    mut f: impl FnMut(&Schedule<T>),
) -> Result<(), SolveError> {
    let n = instance.n();
    if n > MAX_JOBS {
        return Err(SolveError::TooManyJobs {
            got: n,
            max: MAX_JOBS,
        });
    }
    let full = u64::MAX >> (MAX_JOBS - n);
    let mut sequences: Vec<Vec<JobId>> = Vec::with_capacity(instance.machines());
    recurse(instance, full, instance.machines(), &mut sequences, &mut f);
    Ok(())
}

fn recurse<T: Real>(
    instance: &Instance<T>,
    remaining: u64,
    machines_left: usize,
    sequences: &mut Vec<Vec<JobId>>,
    f: &mut impl FnMut(&Schedule<T>),
) {
    if machines_left == 0 {
        debug_assert_eq!(remaining, 0);
        let schedule =
            Schedule::from_sequences(instance, sequences).expect("canonical enumeration is valid");
        f(&schedule);
        return;
    }
    let anchor = 1u64 << remaining.trailing_zeros();
    let rest = remaining & !anchor;
    // every subset of `rest` joins the anchor, as long as enough jobs are
    // left for the remaining machines; the last machine takes everything
    let mut sub = rest;
    loop {
        let leftover = (rest ^ sub).count_ones() as usize;
        let feasible = if machines_left == 1 {
            leftover == 0
        } else {
            leftover >= machines_left - 1
        };
        if feasible {
            let block = sub | anchor;
            let mut jobs: Vec<JobId> = Vec::with_capacity(block.count_ones() as usize);
            let mut bits = block;
            while bits != 0 {
                jobs.push(JobId(bits.trailing_zeros() as usize));
                bits &= bits - 1;
            }
            for_each_permutation(&mut jobs, 0, &mut |perm| {
                sequences.push(perm.to_vec());
                recurse(instance, rest ^ sub, machines_left - 1, sequences, f);
                sequences.pop();
            });
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
}

fn for_each_permutation(items: &mut Vec<JobId>, k: usize, f: &mut impl FnMut(&[JobId])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        for_each_permutation(items, k + 1, f);
        items.swap(k, i);
    }
}

/// Exhaustive optimum; errors above [`BRUTE_FORCE_CAP`] jobs.
pub fn brute_force_solve<T: Real>(instance: &Instance<T>) -> Result<(Schedule<T>, T), SolveError> {
    brute_force_solve_with_cap(instance, BRUTE_FORCE_CAP)
}

pub fn brute_force_solve_with_cap<T: Real>(
    instance: &Instance<T>,
    cap: usize,
) -> Result<(Schedule<T>, T), SolveError> {
    if instance.n() > cap {
        return Err(SolveError::OverBruteForceCap {
            got: instance.n(),
            cap,
        });
    }
    let due = instance.due_date();
    let mut best: Option<(Schedule<T>, T)> = None;
    for_each_canonical_schedule(instance, |schedule| {
        let objective = schedule.objective_raw(due);
        let better = match &best {
            None => true,
            Some((_, incumbent)) => objective > *incumbent,
        };
        if better {
            best = Some((schedule.clone(), objective));
        }
    })?;
    Ok(best.expect("m <= n guarantees at least one schedule"))
}

/// Sample estimate of a schedule's service level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    /// Binomial standard error `sqrt(e(1-e)/samples)`.
    pub std_error: f64,
    pub samples: u64,
}

/// Estimates the probability that every machine meets the due date by
/// simulating processing times. Sampling is batched with one generator
/// stream per batch, so a given `(seed, samples)` pair is reproducible and
/// extending the sample count only appends batches.
pub fn monte_carlo_service_level<T: Real>(
    instance: &Instance<T>,
    schedule: &Schedule<T>,
    samples: u64,
    seed: u64,
) -> MonteCarloEstimate {
    const BATCH: u64 = 1 << 16;
    assert!(samples > 0, "need at least one sample");
    let n = instance.n();
    let due = instance.due_date().to_f64().expect("finite due date");
    let mu: Vec<f64> = instance
        .jobs()
        .iter()
        .map(|j| j.mean.to_f64().expect("finite mean"))
        .collect();
    let sd: Vec<f64> = instance
        .jobs()
        .iter()
        .map(|j| j.variance.to_f64().expect("finite variance").sqrt())
        .collect();
    // per machine: total setup cost plus the member jobs
    let machines: Vec<(f64, Vec<usize>)> = schedule
        .machines()
        .iter()
        .map(|ms| {
            let seq = ms.sequence();
            let setups: f64 = seq
                .windows(2)
                .map(|w| instance.setup(w[0], w[1]).to_f64().expect("finite setup"))
                .sum();
            (setups, seq.iter().map(|j| j.0).collect())
        })
        .collect();

    let mut success = 0u64;
    let mut drawn = 0u64;
    let mut batch_index = 0u64;
    let mut z = vec![0.0f64; n];
    while drawn < samples {
        let this_batch = BATCH.min(samples - drawn);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(batch_index);
        for _ in 0..this_batch {
            for slot in z.iter_mut() {
                *slot = StandardNormal.sample(&mut rng);
            }
            let late = machines.iter().any(|(setups, jobs)| {
                let total: f64 = setups + jobs.iter().map(|&j| mu[j] + sd[j] * z[j]).sum::<f64>();
                total > due
            });
            if !late {
                success += 1;
            }
        }
        drawn += this_batch;
        batch_index += 1;
    }
    let estimate = success as f64 / samples as f64;
    MonteCarloEstimate {
        estimate,
        std_error: (estimate * (1.0 - estimate) / samples as f64).sqrt(),
        samples,
    }
}

/// A schedule optimal for the deterministic problem (minimize the largest
/// mean completion time), evaluated under the stochastic objective.
#[derive(Debug, Clone)]
pub struct DeterministicBaseline<T> {
    pub schedule: Schedule<T>,
    /// Service level of `schedule` under the stochastic objective.
    pub objective: T,
    /// Optimal mean makespan.
    pub makespan: T,
    pub proven_optimal: bool,
}

struct DetNode<T> {
    lower_bound: T,
    id: u64,
    level: usize,
    partial: PartialSchedule<T>,
}

impl<T: Real> DetNode<T> {
    fn priority(&self, other: &Self) -> Ordering {
        // min-heap on the bound, then deeper first, then FIFO
        other
            .lower_bound
            .partial_cmp(&self.lower_bound)
            .expect("bounds are never NaN")
            .then(self.level.cmp(&other.level))
            .then(other.id.cmp(&self.id))
    }
}

impl<T: Real> PartialEq for DetNode<T> {
    fn eq(&self, other: &Self) -> bool {
        self.priority(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for DetNode<T> {}

impl<T: Real> PartialOrd for DetNode<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for DetNode<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority(other)
    }
}

/// Longest-mean-first list schedule used as the initial incumbent.
fn lpt_schedule<T: Real>(instance: &Instance<T>) -> Schedule<T> {
    let mut order: Vec<JobId> = instance.job_ids().collect();
    order.sort_by(|a, b| {
        instance
            .job(*b)
            .mean
            .partial_cmp(&instance.job(*a).mean)
            .expect("means are finite")
            .then(a.cmp(b))
    });
    let mut partial = PartialSchedule::empty(instance);
    for job in order {
        let mut target = 0;
        for i in 1..instance.machines() {
            if partial.machine(i).mean_load() < partial.machine(target).mean_load() {
                target = i;
            }
        }
        partial = partial
            .append_job(instance, target, job)
            .expect("job unassigned");
    }
    Schedule::from_partial(partial).expect("all jobs placed")
}

fn makespan_lower_bound<T: Real>(
    instance: &Instance<T>,
    partial: &PartialSchedule<T>,
    s_min: T,
) -> T {
    let mut max_load = T::zero();
    let mut sum_loads = T::zero();
    let mut empty = 0usize;
    for ms in partial.machines() {
        max_load = max_load.max(ms.mean_load());
        sum_loads += ms.mean_load();
        empty += usize::from(ms.is_empty());
    }
    let un = UnassignedStats::from_partial(instance, partial);
    let paid = un.count.saturating_sub(empty);
    let average = (sum_loads + un.sum_mean + T::cast(paid as f64) * s_min)
        / T::cast(instance.machines() as f64);
    max_load.max(average)
}

/// Exact solver for the deterministic counterpart. Shares the structured
/// branching of the main solver; prunes on a mean-workload lower bound.
pub fn deterministic_baseline_solve<T: Real>(
    instance: &Instance<T>,
    time_limit: Option<f64>,
) -> Result<DeterministicBaseline<T>, SolveError> {
    const FRONTIER_CAP: usize = 2_000_000;
    if instance.n() > MAX_JOBS {
        return Err(SolveError::TooManyJobs {
            got: instance.n(),
            max: MAX_JOBS,
        });
    }
    let start = thread_cpu_seconds();
    let s_min = instance.setups().min_off_diagonal();
    let n = instance.n();

    let mut best_schedule = lpt_schedule(instance);
    let mut best_makespan = best_schedule.makespan_mean();
    let mut proven = true;

    let mut next_id = 0u64;
    let mut frontier: BinaryHeap<DetNode<T>> = BinaryHeap::new();
    let root_partial = PartialSchedule::empty(instance);
    frontier.push(DetNode {
        lower_bound: makespan_lower_bound(instance, &root_partial, s_min),
        id: next_id,
        level: 0,
        partial: root_partial,
    });
    next_id += 1;

    'search: while let Some(node) = frontier.pop() {
        if let Some(limit) = time_limit {
            if thread_cpu_seconds() - start >= limit {
                proven = false;
                break;
            }
        }
        if node.lower_bound >= best_makespan {
            continue;
        }
        for (machine, job) in child_moves(instance, &node.partial, BranchScheme::New) {
            let child_partial = node
                .partial
                .append_job(instance, machine, job)
                .expect("move is valid");
            if node.level + 1 == n {
                let schedule = Schedule::from_partial(child_partial).expect("complete");
                let makespan = schedule.makespan_mean();
                if makespan < best_makespan {
                    best_makespan = makespan;
                    best_schedule = schedule;
                }
                continue;
            }
            let lower_bound = makespan_lower_bound(instance, &child_partial, s_min);
            if lower_bound >= best_makespan {
                continue;
            }
            frontier.push(DetNode {
                lower_bound,
                id: next_id,
                level: node.level + 1,
                partial: child_partial,
            });
            next_id += 1;
            if frontier.len() > FRONTIER_CAP {
                proven = false;
                break 'search;
            }
        }
    }

    let objective = best_schedule.objective_raw(instance.due_date());
    Ok(DeterministicBaseline {
        schedule: best_schedule,
        objective,
        makespan: best_makespan,
        proven_optimal: proven,
    })
}
