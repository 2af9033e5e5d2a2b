//! Greedy selection under the partition matroid and knapsacks.
//!
//! Each step adds the feasible element with the largest marginal utility
//! `h(S ∪ {e}) - h(S)` (ties to the lowest element id) and stops once the best
//! marginal is not positive or nothing feasible is left.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::constraints::{ConstraintSystem, FeasibilityState};
use crate::error::Result;
use crate::ground_set::ElementId;
use crate::par::Execution;
use crate::rank::Subset;
use crate::utility::{RateTuple, Utility};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Evaluates every feasible candidate at every step.
    Eager,
    /// Re-evaluates candidates in order of their stale marginals.
    Lazy,
    /// Skips two-chunk candidates whose one-chunk halves are both feasible.
    Pruned,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ScheduleOptions {
    pub execution: Execution,
    /// Also compute the data-dependent upper bound from the greedy trace.
    pub upper_bound: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOutcome {
    pub selected: Subset,
    pub rates: RateTuple,
    pub objective: f64,
    /// Number of `h` evaluations spent by the selection itself.
    pub evaluations: u64,
    pub upper_bound: Option<f64>,
    /// `S_0 = ∅, S_1, ..., S_T`, the selection after each step.
    pub trace: Vec<Subset>,
}

pub fn schedule(
    variant: Variant,
    utility: &Utility<'_>,
    constraints: &ConstraintSystem,
    options: ScheduleOptions,
) -> Result<ScheduleOutcome> {
    let run = match variant {
        Variant::Eager => run_eager(utility, constraints, options.execution, false)?,
        Variant::Pruned => run_eager(utility, constraints, options.execution, true)?,
        Variant::Lazy => run_lazy(utility, constraints)?,
    };
    run.finish(utility, constraints, options)
}

pub fn greedy_schedule(
    utility: &Utility<'_>,
    constraints: &ConstraintSystem,
    options: ScheduleOptions,
) -> Result<ScheduleOutcome> {
    schedule(Variant::Eager, utility, constraints, options)
}

pub fn lazy_greedy_schedule(
    utility: &Utility<'_>,
    constraints: &ConstraintSystem,
    options: ScheduleOptions,
) -> Result<ScheduleOutcome> {
    schedule(Variant::Lazy, utility, constraints, options)
}

pub fn pruned_greedy_schedule(
    utility: &Utility<'_>,
    constraints: &ConstraintSystem,
    options: ScheduleOptions,
) -> Result<ScheduleOutcome> {
    schedule(Variant::Pruned, utility, constraints, options)
}

struct Run {
    selected: Subset,
    objective: f64,
    evaluations: u64,
    trace: Vec<Subset>,
}

impl Run {
    fn new() -> Self {
        Run {
            selected: Subset::empty(),
            objective: 0.0,
            evaluations: 0,
            trace: vec![Subset::empty()],
        }
    }

    fn accept(&mut self, state: &mut FeasibilityState<'_>, id: ElementId, value: f64) {
        state.add(id);
        self.selected = self.selected.with(id);
        self.objective = value;
        self.trace.push(self.selected.clone());
    }

    fn finish(
        self,
        utility: &Utility<'_>,
        constraints: &ConstraintSystem,
        options: ScheduleOptions,
    ) -> Result<ScheduleOutcome> {
        let upper_bound = if options.upper_bound {
            Some(data_dependent_upper_bound(
                utility,
                constraints,
                &self.trace,
                options.execution,
            )?)
        } else {
            None
        };
        Ok(ScheduleOutcome {
            rates: utility.corner_point_rates(&self.selected)?,
            selected: self.selected,
            objective: self.objective,
            evaluations: self.evaluations,
            upper_bound,
            trace: self.trace,
        })
    }
}

/// `a` strictly ahead of `b` in (gain descending, id ascending) order.
fn ahead(a: (f64, ElementId), b: (f64, ElementId)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Greater => true,
        Ordering::Equal => a.1 < b.1,
        Ordering::Less => false,
    }
}

fn run_eager(
    utility: &Utility<'_>,
    constraints: &ConstraintSystem,
    exec: Execution,
    prune: bool,
) -> Result<Run> {
    let ground = utility.ground();
    let mut run = Run::new();
    let mut state = constraints.state();
    let mut alive: Vec<ElementId> = ground.ids().collect();
    loop {
        // Infeasible augmentations stay infeasible as the selection grows.
        alive.retain(|&id| state.can_add(id));
        if alive.is_empty() {
            break;
        }
        let to_evaluate: Vec<ElementId> = if prune {
            // skip two-chunk elements whose halves are both still addable
            alive
                .iter()
                .copied()
                .filter(|&id| match ground.constituents(id) {
                    Some((a, b)) => !(state.can_add(a) && state.can_add(b)),
                    None => true,
                })
                .collect()
        } else {
            alive.clone()
        };
        let values = exec.try_map(&to_evaluate, |&id| utility.value(&run.selected.with(id)))?;
        run.evaluations += to_evaluate.len() as u64;

        let mut best: Option<(f64, ElementId, f64)> = None;
        for (&id, &value) in to_evaluate.iter().zip(&values) {
            let gain = value - run.objective;
            if best.is_none_or(|(g, b, _)| ahead((gain, id), (g, b))) {
                best = Some((gain, id, value));
            }
        }
        match best {
            Some((gain, id, value)) if gain > 0.0 => run.accept(&mut state, id, value),
            _ => break,
        }
    }
    Ok(run)
}

/// Stored heap key: the marginal plus a small relative slack for rounding.
fn inflate(gain: f64) -> f64 {
    gain + 1e-9 * gain.abs().max(1.0)
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    key: f64,
    id: ElementId,
    gain: f64,
    value: f64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn run_lazy(utility: &Utility<'_>, constraints: &ConstraintSystem) -> Result<Run> {
    let ground = utility.ground();
    let mut run = Run::new();
    let mut state = constraints.state();
    let mut heap: BinaryHeap<Entry> = ground
        .ids()
        .map(|id| Entry {
            key: f64::INFINITY,
            id,
            gain: f64::INFINITY,
            value: 0.0,
        })
        .collect();
    loop {
        let mut best: Option<Entry> = None;
        let mut evaluated = Vec::new();
        while let Some(top) = heap.peek() {
            if let Some(b) = best {
                if ahead((b.gain, b.id), (top.key, top.id)) {
                    break;
                }
            }
            let top = heap.pop().expect("peeked");
            if !state.can_add(top.id) {
                continue;
            }
            let value = utility.value(&run.selected.with(top.id))?;
            run.evaluations += 1;
            let gain = value - run.objective;
            let fresh = Entry {
                key: inflate(gain),
                id: top.id,
                gain,
                value,
            };
            match best {
                Some(b) if !ahead((gain, top.id), (b.gain, b.id)) => evaluated.push(fresh),
                _ => {
                    evaluated.extend(best.replace(fresh));
                }
            }
        }
        heap.extend(evaluated);
        match best {
            Some(b) if b.gain > 0.0 => run.accept(&mut state, b.id, b.value),
            _ => break,
        }
    }
    Ok(run)
}

/// An upper bound on the best feasible utility, from any chain of selections.
///
/// For each `S` in `trace`, any feasible `U` satisfies
/// `h(U) <= h(S) + sum_{e in U \ S} (h(S ∪ {e}) - h(S))`. `U` holds at most one
/// element per user and at most [`ConstraintSystem::max_feasible_size`]
/// elements, so the sum is bounded by the largest per-user marginals. The
/// result is the smallest such bound over the trace.
pub fn data_dependent_upper_bound(
    utility: &Utility<'_>,
    constraints: &ConstraintSystem,
    trace: &[Subset],
    exec: Execution,
) -> Result<f64> {
    let ground = utility.ground();
    let budget = constraints.max_feasible_size();
    let singles: Vec<ElementId> = ground
        .ids()
        .filter(|&id| constraints.state().can_add(id))
        .collect();
    let mut bound = f64::INFINITY;
    for s in trace {
        let base = utility.value(s)?;
        let candidates: Vec<ElementId> = singles
            .iter()
            .copied()
            .filter(|&id| !s.contains(id))
            .collect();
        let values = exec.try_map(&candidates, |&id| utility.value(&s.with(id)))?;
        let mut per_user = vec![0.0f64; ground.n_users()];
        for (&id, &v) in candidates.iter().zip(&values) {
            let u = constraints.user_of(id);
            per_user[u] = per_user[u].max(v - base);
        }
        per_user.sort_by(|a, b| b.total_cmp(a));
        let extra: f64 = per_user.iter().take(budget).sum();
        bound = bound.min(base + extra);
    }
    Ok(bound)
}
