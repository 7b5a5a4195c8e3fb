//! Partial and complete schedules, and the service-level objective.
//!
//! A machine's completion time is normal with mean equal to the summed
//! processing means plus the setups along its sequence, and variance equal
//! to the summed processing variances. The objective of a schedule is the
//! probability that every machine finishes by the due date, i.e. the
//! product over machines of `Φ((d - mean_load) / sqrt(variance))`.
//!
//! All search code works with the logarithm of that product so that deep
//! tails (objectives far below `f64::MIN_POSITIVE`) stay comparable.

use std::fs;
use std::path::Path;

use crate::error::{DomainError, PersistError, ScheduleError};
use crate::instance::{Instance, JobId};
use crate::normal::{ln_phi, phi};
use crate::real::Real;

/// One machine's job sequence with its accumulated load statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineState<T> {
    sequence: Vec<JobId>,
    mean_load: T,
    variance: T,
}

impl<T: Real> MachineState<T> {
    pub fn empty() -> Self {
        MachineState {
            sequence: Vec::new(),
            mean_load: T::zero(),
            variance: T::zero(),
        }
    }

    /// Copy of this state with `job` appended, paying the setup from the
    /// current last job.
    pub fn appended(&self, instance: &Instance<T>, job: JobId) -> Self {
        let mut next = self.clone();
        next.push(instance, job);
        next
    }

    pub(crate) fn push(&mut self, instance: &Instance<T>, job: JobId) {
        if let Some(last) = self.last_job() {
            self.mean_load += instance.setup(last, job);
        }
        let j = instance.job(job);
        self.mean_load += j.mean;
        self.variance += j.variance;
        self.sequence.push(job);
    }

    #[inline]
    pub fn sequence(&self) -> &[JobId] {
        &self.sequence
    }

    #[inline]
    pub fn last_job(&self) -> Option<JobId> {
        self.sequence.last().copied()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Expected completion time: processing means plus setups.
    #[inline]
    pub fn mean_load(&self) -> T {
        self.mean_load
    }

    /// Completion-time variance.
    #[inline]
    pub fn variance(&self) -> T {
        self.variance
    }

    /// Probability this machine finishes by `due_date`. An empty machine
    /// finishes at time zero, so its level is 1.
    pub fn service_level(&self, due_date: T) -> Result<T, DomainError> {
        check_due_date(due_date)?;
        Ok(level(self.mean_load, self.variance, due_date))
    }

    pub fn ln_service_level(&self, due_date: T) -> Result<T, DomainError> {
        check_due_date(due_date)?;
        Ok(ln_level(self.mean_load, self.variance, due_date))
    }
}

/// `Φ((due_date - mean_load)/sqrt(variance))` with the degenerate
/// zero-variance case resolved to an exact 0/1 step at the due date.
#[inline]
pub(crate) fn level<T: Real>(mean_load: T, variance: T, due_date: T) -> T {
    if variance > T::zero() {
        phi((due_date - mean_load) / variance.sqrt())
    } else if mean_load <= due_date {
        T::one()
    } else {
        T::zero()
    }
}

/// Logarithm of [`level`]; `-inf` for the impossible degenerate case.
#[inline]
pub(crate) fn ln_level<T: Real>(mean_load: T, variance: T, due_date: T) -> T {
    if variance > T::zero() {
        ln_phi((due_date - mean_load) / variance.sqrt())
    } else if mean_load <= due_date {
        T::zero()
    } else {
        T::neg_infinity()
    }
}

fn check_due_date<T: Real>(due_date: T) -> Result<(), DomainError> {
    if due_date.is_finite() && due_date > T::zero() {
        Ok(())
    } else {
        Err(DomainError::BadDueDate(
            due_date.to_f64().unwrap_or(f64::NAN),
        ))
    }
}

/// An assignment of a subset of the jobs to ordered machine sequences.
///
/// Values are immutable; [`PartialSchedule::append_job`] returns the
/// extended copy, which is what a branch-and-bound tree wants.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSchedule<T> {
    machines: Vec<MachineState<T>>,
    assigned: Vec<bool>,
    assigned_count: usize,
}

impl<T: Real> PartialSchedule<T> {
    pub fn empty(instance: &Instance<T>) -> Self {
        PartialSchedule {
            machines: vec![MachineState::empty(); instance.machines()],
            assigned: vec![false; instance.n()],
            assigned_count: 0,
        }
    }

    /// New schedule with `job` appended to `machine` (zero-based index).
    pub fn append_job(
        &self,
        instance: &Instance<T>,
        machine: usize,
        job: JobId,
    ) -> Result<Self, ScheduleError> {
        if machine >= self.machines.len() {
            return Err(ScheduleError::MachineOutOfRange {
                machine: machine + 1,
                machines: self.machines.len(),
            });
        }
        if job.0 >= self.assigned.len() {
            return Err(ScheduleError::JobOutOfRange {
                id: job.0 + 1,
                jobs: self.assigned.len(),
            });
        }
        if self.assigned[job.0] {
            return Err(ScheduleError::JobAlreadyAssigned { id: job.0 + 1 });
        }
        let mut next = self.clone();
        next.machines[machine].push(instance, job);
        next.assigned[job.0] = true;
        next.assigned_count += 1;
        Ok(next)
    }

    /// Append without cloning; the caller guarantees the move is valid.
    pub(crate) fn append_unchecked(&mut self, instance: &Instance<T>, machine: usize, job: JobId) {
        debug_assert!(!self.assigned[job.0]);
        self.machines[machine].push(instance, job);
        self.assigned[job.0] = true;
        self.assigned_count += 1;
    }

    #[inline]
    pub fn machines(&self) -> &[MachineState<T>] {
        &self.machines
    }

    #[inline]
    pub fn machine(&self, index: usize) -> &MachineState<T> {
        &self.machines[index]
    }

    #[inline]
    pub fn assigned_count(&self) -> usize {
        self.assigned_count
    }

    #[inline]
    pub fn job_count(&self) -> usize {
        self.assigned.len()
    }

    #[inline]
    pub fn is_assigned(&self, job: JobId) -> bool {
        self.assigned[job.0]
    }

    #[inline]
    pub fn is_complete(&self) -> bool {
        self.assigned_count == self.assigned.len()
    }

    /// Product of machine service levels over the jobs assigned so far.
    pub fn objective(&self, due_date: T) -> Result<T, DomainError> {
        check_due_date(due_date)?;
        Ok(self.objective_raw(due_date))
    }

    pub fn ln_objective(&self, due_date: T) -> Result<T, DomainError> {
        check_due_date(due_date)?;
        Ok(self.ln_objective_raw(due_date))
    }

    pub(crate) fn objective_raw(&self, due_date: T) -> T {
        self.machines
            .iter()
            .map(|m| level(m.mean_load, m.variance, due_date))
            .fold(T::one(), |a, b| a * b)
    }

    pub(crate) fn ln_objective_raw(&self, due_date: T) -> T {
        self.machines
            .iter()
            .map(|m| ln_level(m.mean_load, m.variance, due_date))
            .fold(T::zero(), |a, b| a + b)
    }
}

/// A schedule covering every job exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<T> {
    machines: Vec<MachineState<T>>,
}

impl<T: Real> Schedule<T> {
    pub fn from_partial(partial: PartialSchedule<T>) -> Result<Self, ScheduleError> {
        if !partial.is_complete() {
            return Err(ScheduleError::Incomplete {
                assigned: partial.assigned_count,
                jobs: partial.assigned.len(),
            });
        }
        Ok(Schedule {
            machines: partial.machines,
        })
    }

    /// Builds and validates a schedule from explicit per-machine job
    /// sequences (one entry per machine, possibly empty).
    pub fn from_sequences(
        instance: &Instance<T>,
        sequences: &[Vec<JobId>],
    ) -> Result<Self, ScheduleError> {
        if sequences.len() != instance.machines() {
            return Err(ScheduleError::MachineOutOfRange {
                machine: sequences.len(),
                machines: instance.machines(),
            });
        }
        let mut seen = vec![false; instance.n()];
        let mut machines = Vec::with_capacity(sequences.len());
        for sequence in sequences {
            let mut state = MachineState::empty();
            for &job in sequence {
                if job.0 >= instance.n() {
                    return Err(ScheduleError::JobOutOfRange {
                        id: job.0 + 1,
                        jobs: instance.n(),
                    });
                }
                if seen[job.0] {
                    return Err(ScheduleError::DuplicateJob { id: job.0 + 1 });
                }
                seen[job.0] = true;
                state.push(instance, job);
            }
            machines.push(state);
        }
        let assigned = seen.iter().filter(|&&s| s).count();
        if assigned != instance.n() {
            return Err(ScheduleError::Incomplete {
                assigned,
                jobs: instance.n(),
            });
        }
        Ok(Schedule { machines })
    }

    #[inline]
    pub fn machines(&self) -> &[MachineState<T>] {
        &self.machines
    }

    #[inline]
    pub fn machine(&self, index: usize) -> &MachineState<T> {
        &self.machines[index]
    }

    pub fn has_empty_machine(&self) -> bool {
        self.machines.iter().any(MachineState::is_empty)
    }

    /// Largest expected machine completion time.
    pub fn makespan_mean(&self) -> T {
        self.machines
            .iter()
            .map(MachineState::mean_load)
            .fold(T::zero(), T::max)
    }

    /// Probability every machine finishes by `due_date`.
    pub fn objective(&self, due_date: T) -> Result<T, DomainError> {
        check_due_date(due_date)?;
        Ok(self.objective_raw(due_date))
    }

    pub fn ln_objective(&self, due_date: T) -> Result<T, DomainError> {
        check_due_date(due_date)?;
        Ok(self.ln_objective_raw(due_date))
    }

    pub(crate) fn objective_raw(&self, due_date: T) -> T {
        self.machines
            .iter()
            .map(|m| level(m.mean_load, m.variance, due_date))
            .fold(T::one(), |a, b| a * b)
    }

    pub(crate) fn ln_objective_raw(&self, due_date: T) -> T {
        self.machines
            .iter()
            .map(|m| ln_level(m.mean_load, m.variance, due_date))
            .fold(T::zero(), |a, b| a + b)
    }

    pub fn to_text(&self, instance: &Instance<T>) -> String {
        let mut out = String::new();
        out.push_str("robsched schedule v1\n");
        out.push_str(&format!("m {}\n", self.machines.len()));
        out.push_str(&format!(
            "objective {}\n",
            self.objective_raw(instance.due_date())
        ));
        for (i, machine) in self.machines.iter().enumerate() {
            out.push_str(&format!("machine {}", i + 1));
            for job in machine.sequence() {
                out.push_str(&format!(" {}", job.0 + 1));
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, instance: &Instance<T>, path: impl AsRef<Path>) -> Result<(), PersistError> {
        fs::write(path, self.to_text(instance))?;
        Ok(())
    }

    /// Parses a schedule and checks it against `instance`: every job once,
    /// machine count matching, and the stored objective within 1e-6 of the
    /// recomputed one (which catches pairing a schedule with the wrong
    /// instance).
    pub fn from_text(instance: &Instance<T>, text: &str) -> Result<Self, PersistError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, line)| (i + 1, line.trim()))
            .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'));
        let (line_no, header) = lines
            .next()
            .ok_or_else(|| PersistError::parse(0, "empty input"))?;
        if header != "robsched schedule v1" {
            return Err(PersistError::parse(
                line_no,
                format!("expected header 'robsched schedule v1', got '{header}'"),
            ));
        }
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| PersistError::parse(0, "missing machine count"))?;
        let m: usize = match line.split_once(' ') {
            Some(("m", v)) => v
                .trim()
                .parse()
                .map_err(|_| PersistError::parse(line_no, format!("bad machine count '{v}'")))?,
            _ => return Err(PersistError::parse(line_no, "expected 'm <count>'")),
        };
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| PersistError::parse(0, "missing objective"))?;
        let objective_line = line_no;
        let stored: f64 = match line.split_once(' ') {
            Some(("objective", v)) => v
                .trim()
                .parse()
                .map_err(|_| PersistError::parse(line_no, format!("bad objective '{v}'")))?,
            _ => return Err(PersistError::parse(line_no, "expected 'objective <value>'")),
        };

        let mut sequences = vec![Vec::new(); m];
        for expected in 1..=m {
            let (line_no, line) = lines.next().ok_or_else(|| {
                PersistError::parse(
                    0,
                    format!("expected {m} machine lines, got {}", expected - 1),
                )
            })?;
            let mut tok = line.split_whitespace();
            if tok.next() != Some("machine") {
                return Err(PersistError::parse(
                    line_no,
                    "expected 'machine <index> ...'",
                ));
            }
            let index: usize = tok
                .next()
                .unwrap_or("")
                .parse()
                .map_err(|_| PersistError::parse(line_no, "bad machine index"))?;
            if index != expected {
                return Err(PersistError::parse(
                    line_no,
                    format!("machine lines out of order: expected {expected}, got {index}"),
                ));
            }
            for t in tok {
                let id: usize = t
                    .parse()
                    .map_err(|_| PersistError::parse(line_no, format!("bad job id '{t}'")))?;
                if id == 0 {
                    return Err(PersistError::parse(line_no, "job ids are one-based"));
                }
                sequences[expected - 1].push(JobId(id - 1));
            }
        }
        if let Some((line_no, line)) = lines.next() {
            return Err(PersistError::parse(
                line_no,
                format!("unexpected trailing content '{line}'"),
            ));
        }

        let schedule = Schedule::from_sequences(instance, &sequences)?;
        let recomputed = schedule
            .objective_raw(instance.due_date())
            .to_f64()
            .unwrap_or(f64::NAN);
        if (stored - recomputed).abs() > 1e-6 * stored.abs().max(1.0) {
            return Err(PersistError::parse(
                objective_line,
                format!("stored objective {stored} does not match recomputed {recomputed}"),
            ));
        }
        Ok(schedule)
    }

    pub fn load(instance: &Instance<T>, path: impl AsRef<Path>) -> Result<Self, PersistError> {
        Self::from_text(instance, &fs::read_to_string(path)?)
    }
}
