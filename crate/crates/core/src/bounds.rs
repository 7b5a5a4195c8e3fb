//! Pruning machinery: a dispatching heuristic that seeds the incumbent,
//! and three upper bounds on the best objective reachable from a partial
//! schedule.
//!
//! All bounds are proved against *completions* of the partial schedule:
//! whatever the remaining jobs do, the true optimum below a node never
//! exceeds the bound, so pruning on `bound <= incumbent` is exact.

use crate::instance::{Instance, JobId};
use crate::real::Real;
use crate::schedule::{ln_level, MachineState, PartialSchedule, Schedule};

/// Which upper bounds the solver evaluates at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundSet {
    /// Partial objective, valid while every machine load is within the due
    /// date.
    pub ub1: bool,
    /// Aggregate single-machine relaxation over the pooled workload.
    pub ub2: bool,
    /// Per-machine relaxation optimized over job-count splits.
    pub ub3: bool,
}

impl BoundSet {
    pub const fn all() -> Self {
        BoundSet {
            ub1: true,
            ub2: true,
            ub3: true,
        }
    }

    pub const fn none() -> Self {
        BoundSet {
            ub1: false,
            ub2: false,
            ub3: false,
        }
    }

    pub fn any(self) -> bool {
        self.ub1 || self.ub2 || self.ub3
    }
}

impl Default for BoundSet {
    fn default() -> Self {
        BoundSet::all()
    }
}

/// Greedy dispatching heuristic: returns a feasible schedule and its
/// objective, used as the initial incumbent.
///
/// Jobs are taken in decreasing order of mean (ties by ascending id). The
/// first `m` seed the machines; each later job goes to the machine with
/// the smallest standardized load `(mean_load - average load) / sd`, ties
/// to the lowest machine index.
pub fn heuristic_lower_bound<T: Real>(instance: &Instance<T>) -> (Schedule<T>, T) {
    let mut order: Vec<JobId> = instance.job_ids().collect();
    order.sort_by(|a, b| {
        let (ja, jb) = (instance.job(*a), instance.job(*b));
        jb.mean
            .partial_cmp(&ja.mean)
            .expect("means are finite")
            .then(a.cmp(b))
    });

    let m = instance.machines();
    let mut partial = PartialSchedule::empty(instance);
    for (machine, &job) in order.iter().take(m).enumerate() {
        partial = partial
            .append_job(instance, machine, job)
            .expect("seeding fresh machines");
    }
    for &job in order.iter().skip(m) {
        let total: T = partial.machines().iter().map(MachineState::mean_load).sum();
        let mu_bar = total / T::cast(m as f64);
        let mut best = 0;
        let mut best_rho = standardized_load(partial.machine(0), mu_bar);
        for i in 1..m {
            let rho = standardized_load(partial.machine(i), mu_bar);
            if rho < best_rho {
                best = i;
                best_rho = rho;
            }
        }
        partial = partial
            .append_job(instance, best, job)
            .expect("job not yet assigned");
    }
    let schedule = Schedule::from_partial(partial).expect("all jobs dispatched");
    let objective = schedule.objective_raw(instance.due_date());
    (schedule, objective)
}

/// `(mean_load - mu_bar) / sd`, with the zero-variance machine resolved to
/// +/-inf by the sign of the deviation rather than NaN.
fn standardized_load<T: Real>(machine: &MachineState<T>, mu_bar: T) -> T {
    let dev = machine.mean_load() - mu_bar;
    let sd = machine.variance().sqrt();
    if sd > T::zero() {
        dev / sd
    } else if dev > T::zero() {
        T::infinity()
    } else if dev < T::zero() {
        T::neg_infinity()
    } else {
        T::zero()
    }
}

/// Instance-wide constants shared by the bound evaluators.
#[derive(Debug, Clone)]
pub(crate) struct BoundCtx<T> {
    /// Smallest off-diagonal setup; every changeover costs at least this.
    pub s_min: T,
    /// Variance of the pooled workload, i.e. the sum over all jobs.
    pub total_variance: T,
}

impl<T: Real> BoundCtx<T> {
    pub fn new(instance: &Instance<T>) -> Self {
        BoundCtx {
            s_min: instance.setups().min_off_diagonal(),
            total_variance: instance.total_variance(),
        }
    }
}

/// Aggregates over the currently unassigned jobs.
#[derive(Debug, Clone, Copy)]
pub(crate) struct UnassignedStats<T> {
    pub count: usize,
    pub sum_mean: T,
    pub min_mean: T,
    pub min_variance: T,
    pub max_variance: T,
}

impl<T: Real> UnassignedStats<T> {
    fn empty() -> Self {
        UnassignedStats {
            count: 0,
            sum_mean: T::zero(),
            min_mean: T::infinity(),
            min_variance: T::infinity(),
            max_variance: T::zero(),
        }
    }

    fn add(&mut self, instance: &Instance<T>, id: JobId) {
        let job = instance.job(id);
        self.count += 1;
        self.sum_mean += job.mean;
        self.min_mean = self.min_mean.min(job.mean);
        self.min_variance = self.min_variance.min(job.variance);
        self.max_variance = self.max_variance.max(job.variance);
    }

    /// Stats over the set bits of `mask` (bit `j` = job `j` unassigned).
    pub fn from_mask(instance: &Instance<T>, mask: u64) -> Self {
        let mut stats = Self::empty();
        let mut rest = mask;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            stats.add(instance, JobId(j));
        }
        stats
    }

    pub fn from_partial(instance: &Instance<T>, partial: &PartialSchedule<T>) -> Self {
        let mut stats = Self::empty();
        for id in instance.job_ids() {
            if !partial.is_assigned(id) {
                stats.add(instance, id);
            }
        }
        stats
    }
}

/// log of bound 1. The partial objective only shrinks as jobs are appended
/// while every machine load stays within the due date (each factor is then
/// at most 1 and existing factors only move left), so under that guard it
/// bounds every completion. Without the guard the trivial bound 1 is
/// returned; at a complete node the value is exact either way.
#[inline]
pub(crate) fn ln_ub1<T: Real>(ln_partial: T, loads_within_due: bool, complete: bool) -> T {
    if complete || loads_within_due {
        ln_partial
    } else {
        T::zero()
    }
}

/// log of bound 2: pool all machines into one. If every machine meets the
/// due date then the summed completion time is at most `m * due_date`, and
/// the summed completion time is normal with mean at least the claimed
/// mean below (every unassigned job contributes its mean, plus one minimum
/// setup for each append that cannot land on an empty machine) and
/// variance equal to the total variance over all jobs.
pub(crate) fn ln_ub2<T: Real>(
    instance: &Instance<T>,
    ctx: &BoundCtx<T>,
    partial: &PartialSchedule<T>,
    un: &UnassignedStats<T>,
) -> T {
    let sum_loads: T = partial.machines().iter().map(MachineState::mean_load).sum();
    let empty = partial.machines().iter().filter(|ms| ms.is_empty()).count();
    let paid_setups = un.count.saturating_sub(empty);
    let claimed = sum_loads + un.sum_mean + T::cast(paid_setups as f64) * ctx.s_min;
    let m = T::cast(instance.machines() as f64);
    ln_level(claimed, ctx.total_variance, m * instance.due_date())
}

/// Reusable buffers for the bound-3 dynamic program.
#[derive(Debug, Default)]
pub(crate) struct Ub3Scratch<T> {
    levels: Vec<T>,
    dp: Vec<T>,
    next: Vec<T>,
}

impl<T: Real> Ub3Scratch<T> {
    pub fn new() -> Self {
        Ub3Scratch {
            levels: Vec::new(),
            dp: Vec::new(),
            next: Vec::new(),
        }
    }
}

/// log of bound 3: bound each machine's level after receiving `k` more
/// jobs, then optimize over how many jobs each machine receives.
///
/// With `k` appends a machine's mean grows by at least `k` times the
/// smallest unassigned mean plus one minimum setup per append (the first
/// append to an empty machine is setup-free), and its added variance lies
/// between `k` times the smallest and `k` times the largest unassigned
/// variance; the level is monotone in the variance on each side of the due
/// date, so checking both endpoints bounds it. A dynamic program over
/// machines then maximizes the product over all splits of the unassigned
/// count, which covers the split the true optimum uses.
pub(crate) fn ln_ub3<T: Real>(
    instance: &Instance<T>,
    ctx: &BoundCtx<T>,
    partial: &PartialSchedule<T>,
    un: &UnassignedStats<T>,
    scratch: &mut Ub3Scratch<T>,
) -> T {
    let u = un.count;
    let m = instance.machines();
    let due = instance.due_date();
    let width = u + 1;

    scratch.levels.clear();
    scratch.levels.reserve(m * width);
    for ms in partial.machines() {
        for k in 0..=u {
            let value = if k == 0 {
                ln_level(ms.mean_load(), ms.variance(), due)
            } else {
                let setups = if ms.is_empty() { k - 1 } else { k };
                let lb_mean = ms.mean_load()
                    + T::cast(k as f64) * un.min_mean
                    + T::cast(setups as f64) * ctx.s_min;
                let kf = T::cast(k as f64);
                let lo = ms.variance() + kf * un.min_variance;
                let hi = ms.variance() + kf * un.max_variance;
                ln_level(lb_mean, lo, due).max(ln_level(lb_mean, hi, due))
            };
            scratch.levels.push(value);
        }
    }

    scratch.dp.clear();
    scratch.dp.resize(width, T::neg_infinity());
    scratch.dp[0] = T::zero();
    for i in 0..m {
        scratch.next.clear();
        scratch.next.resize(width, T::neg_infinity());
        for t in 0..=u {
            let prev = scratch.dp[t];
            if prev == T::neg_infinity() {
                continue;
            }
            for k in 0..=(u - t) {
                let cand = prev + scratch.levels[i * width + k];
                if cand > scratch.next[t + k] {
                    scratch.next[t + k] = cand;
                }
            }
        }
        std::mem::swap(&mut scratch.dp, &mut scratch.next);
    }
    scratch.dp[u]
}

/// Bound 1 in probability space; see [`ln_ub1`].
pub fn upper_bound_1<T: Real>(instance: &Instance<T>, partial: &PartialSchedule<T>) -> T {
    let due = instance.due_date();
    let within = partial.machines().iter().all(|ms| ms.mean_load() <= due);
    ln_ub1(partial.ln_objective_raw(due), within, partial.is_complete()).exp()
}

/// Bound 2 in probability space; see [`ln_ub2`].
pub fn upper_bound_2<T: Real>(instance: &Instance<T>, partial: &PartialSchedule<T>) -> T {
    let ctx = BoundCtx::new(instance);
    let un = UnassignedStats::from_partial(instance, partial);
    ln_ub2(instance, &ctx, partial, &un).exp()
}

/// Bound 3 in probability space; see [`ln_ub3`].
pub fn upper_bound_3<T: Real>(instance: &Instance<T>, partial: &PartialSchedule<T>) -> T {
    let ctx = BoundCtx::new(instance);
    let un = UnassignedStats::from_partial(instance, partial);
    let mut scratch = Ub3Scratch::new();
    ln_ub3(instance, &ctx, partial, &un, &mut scratch).exp()
}

/// Minimum over the bounds enabled in `set`; 1 when none are.
pub fn combined_upper_bound<T: Real>(
    instance: &Instance<T>,
    partial: &PartialSchedule<T>,
    set: BoundSet,
) -> T {
    let mut bound = T::one();
    if set.ub1 {
        bound = bound.min(upper_bound_1(instance, partial));
    }
    if set.ub2 {
        bound = bound.min(upper_bound_2(instance, partial));
    }
    if set.ub3 {
        bound = bound.min(upper_bound_3(instance, partial));
    }
    bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Job, SetupMatrix};

    fn uniform_setups(n: usize, s: f64) -> SetupMatrix<f64> {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { s }).collect())
            .collect();
        SetupMatrix::from_rows(rows).unwrap()
    }

    fn inst(jobs: &[(f64, f64)], m: usize, s: f64, due: f64) -> Instance<f64> {
        let jobs = jobs
            .iter()
            .map(|&(mean, variance)| Job { mean, variance })
            .collect::<Vec<_>>();
        let n = jobs.len();
        Instance::new(jobs, uniform_setups(n, s), m, due).unwrap()
    }

    /// Max objective over all completions of `partial`, by exhaustion.
    fn best_completion(instance: &Instance<f64>, partial: &PartialSchedule<f64>) -> f64 {
        if partial.is_complete() {
            return partial.objective_raw(instance.due_date());
        }
        let mut best = f64::NEG_INFINITY;
        for id in instance.job_ids() {
            if partial.is_assigned(id) {
                continue;
            }
            for machine in 0..instance.machines() {
                let child = partial.append_job(instance, machine, id).unwrap();
                best = best.max(best_completion(instance, &child));
            }
        }
        best
    }

    #[test]
    fn heuristic_traces_the_documented_rule() {
        // Sorted by mean: J1(30) J2(25) J3(20) J4(15). Seeds J1->M1,
        // J2->M2; J3 joins the machine with smaller standardized load
        // (M2), J4 then lands on M1. Both machines end at mean 50, so
        // due = 50 puts each z-score at 0 and the objective at 1/4.
        let instance = inst(
            &[(30.0, 4.0), (25.0, 8.0), (20.0, 6.0), (15.0, 4.0)],
            2,
            5.0,
            50.0,
        );
        let (schedule, objective) = heuristic_lower_bound(&instance);
        assert_eq!(schedule.machine(0).sequence(), &[JobId(0), JobId(3)]);
        assert_eq!(schedule.machine(1).sequence(), &[JobId(1), JobId(2)]);
        assert_eq!(objective, 0.25);
        assert_eq!(objective, schedule.objective(50.0).unwrap());
    }

    #[test]
    fn heuristic_breaks_ties_toward_low_indices() {
        // Equal means sort by id; equal standardized loads pick machine 1.
        let instance = inst(&[(20.0, 4.0), (20.0, 4.0), (10.0, 1.0)], 2, 5.0, 40.0);
        let (schedule, _) = heuristic_lower_bound(&instance);
        assert_eq!(schedule.machine(0).sequence(), &[JobId(0), JobId(2)]);
        assert_eq!(schedule.machine(1).sequence(), &[JobId(1)]);
    }

    #[test]
    fn heuristic_handles_single_machine() {
        let instance = inst(&[(20.0, 4.0), (30.0, 2.0), (25.0, 1.0)], 1, 5.0, 90.0);
        let (schedule, objective) = heuristic_lower_bound(&instance);
        // Decreasing mean order on one machine: J2 J3 J1.
        assert_eq!(
            schedule.machine(0).sequence(),
            &[JobId(1), JobId(2), JobId(0)]
        );
        assert!(objective > 0.0);
    }

    #[test]
    fn standardized_load_avoids_nan() {
        let mut zero_var = MachineState::<f64>::empty();
        let instance = inst(&[(10.0, 0.0)], 1, 5.0, 20.0);
        zero_var = zero_var.appended(&instance, JobId(0));
        assert_eq!(standardized_load(&zero_var, 5.0), f64::INFINITY);
        assert_eq!(standardized_load(&zero_var, 15.0), f64::NEG_INFINITY);
        assert_eq!(standardized_load(&zero_var, 10.0), 0.0);
    }

    #[test]
    fn bound1_guard_and_exactness() {
        let instance = inst(&[(20.0, 4.0), (20.0, 4.0), (20.0, 4.0)], 2, 5.0, 30.0);
        let root = PartialSchedule::empty(&instance);
        assert_eq!(upper_bound_1(&instance, &root), 1.0);

        // One job on machine 1: load 20 <= 30, partial objective applies.
        let p = root.append_job(&instance, 0, JobId(0)).unwrap();
        let want = p.objective_raw(30.0);
        assert!(want < 1.0);
        assert!((upper_bound_1(&instance, &p) - want).abs() <= 1e-15 * want);

        // Two jobs on machine 1: load 45 > 30, guard off, bound falls back
        // to 1 even though the partial objective is tiny.
        let p2 = p.append_job(&instance, 0, JobId(1)).unwrap();
        assert_eq!(upper_bound_1(&instance, &p2), 1.0);

        // Complete schedule: exact objective even with a late machine.
        let complete = p2.append_job(&instance, 1, JobId(2)).unwrap();
        let want = complete.objective_raw(30.0);
        assert!((upper_bound_1(&instance, &complete) - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn bound2_root_value_on_symmetric_instance() {
        // Four identical jobs, two machines. Pooled mean claims
        // 4*20 + 2*5 = 90 against 2*due with total sd 4, and due is picked
        // so the z-score is exactly sqrt(2).
        let due = 45.0 + 2.0 * 2.0f64.sqrt();
        let instance = inst(&[(20.0, 4.0); 4], 2, 5.0, due);
        let root = PartialSchedule::empty(&instance);
        let got = upper_bound_2(&instance, &root);
        assert!((got - 0.9213503964748575).abs() < 1e-12, "ub2 = {got}");

        // ... which indeed sits above the optimum Phi(1)^2.
        let opt = 0.8413447460685429f64.powi(2);
        assert!(got >= opt);
        assert!(got >= best_completion(&instance, &root));
    }

    #[test]
    fn bound2_counts_setups_machines_can_absorb() {
        // Two unassigned jobs, two empty machines: no setup is forced.
        let instance = inst(&[(20.0, 4.0), (20.0, 4.0)], 2, 5.0, 21.0);
        let root = PartialSchedule::empty(&instance);
        // claimed mean 40, m*due 42, sd sqrt(8)
        let want = crate::normal::std_normal_cdf(2.0 / 8.0f64.sqrt()).unwrap();
        assert!((upper_bound_2(&instance, &root) - want).abs() < 1e-15);
    }

    #[test]
    fn bound3_covers_low_variance_completions() {
        // One machine, one near-deterministic and one wide job. The high
        // variance endpoint alone would undercut the true optimum; the
        // two-endpoint maximum stays above it.
        let instance = inst(&[(20.0, 0.1), (20.0, 39.0)], 1, 5.0, 51.25);
        let root = PartialSchedule::empty(&instance);
        let opt = best_completion(&instance, &root);
        assert!((opt - 0.8412).abs() < 1e-3, "opt = {opt}");
        let ub3 = upper_bound_3(&instance, &root);
        assert!(ub3 >= opt, "ub3 = {ub3} < opt = {opt}");
    }

    #[test]
    fn bound3_is_exact_on_complete_schedules() {
        let instance = inst(&[(20.0, 4.0), (22.0, 3.0), (18.0, 6.0)], 2, 5.0, 40.0);
        let mut partial = PartialSchedule::empty(&instance);
        partial = partial.append_job(&instance, 0, JobId(0)).unwrap();
        partial = partial.append_job(&instance, 1, JobId(1)).unwrap();
        partial = partial.append_job(&instance, 0, JobId(2)).unwrap();
        let want = partial.objective_raw(40.0);
        let got = upper_bound_3(&instance, &partial);
        assert!((got - want).abs() <= 1e-15 * want.max(1.0));
    }

    #[test]
    fn all_bounds_dominate_every_completion() {
        // Asymmetric instance, checked from several partials.
        let instance = inst(
            &[(24.0, 10.0), (19.0, 2.0), (21.0, 30.0), (16.0, 7.0)],
            2,
            6.0,
            46.0,
        );
        let mut partials = vec![PartialSchedule::empty(&instance)];
        partials.push(partials[0].append_job(&instance, 0, JobId(2)).unwrap());
        partials.push(partials[1].append_job(&instance, 1, JobId(0)).unwrap());
        partials.push(partials[2].append_job(&instance, 1, JobId(3)).unwrap());
        for partial in &partials {
            let best = best_completion(&instance, partial);
            for (name, bound) in [
                ("ub1", upper_bound_1(&instance, partial)),
                ("ub2", upper_bound_2(&instance, partial)),
                ("ub3", upper_bound_3(&instance, partial)),
            ] {
                assert!(
                    bound >= best - 1e-12,
                    "{name} = {bound} below best completion {best}"
                );
            }
        }
    }

    #[test]
    fn combined_bound_takes_the_minimum() {
        let instance = inst(&[(20.0, 4.0); 4], 2, 5.0, 47.0);
        let root = PartialSchedule::empty(&instance);
        let b1 = upper_bound_1(&instance, &root);
        let b2 = upper_bound_2(&instance, &root);
        let b3 = upper_bound_3(&instance, &root);
        let all = combined_upper_bound(&instance, &root, BoundSet::all());
        assert_eq!(all, b1.min(b2).min(b3));
        assert_eq!(
            combined_upper_bound(&instance, &root, BoundSet::none()),
            1.0
        );
        assert!(!BoundSet::none().any());
        assert!(BoundSet::default().any());
    }
}
