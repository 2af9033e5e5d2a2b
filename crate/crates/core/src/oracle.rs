//! Exhaustive solvers and checkers for small instances.
//!
//! Nothing here is meant to scale; every routine checks its budget before
//! entering an exponential loop.

use crate::constraints::{ConstraintSystem, FeasibilityState};
use crate::error::{Error, Result};
use crate::ground_set::ElementId;
use crate::par::Execution;
use crate::rank::{CappedRank, Subset};
use crate::scheduler::ScheduleOutcome;
use crate::utility::{RateTuple, Utility};

/// Absolute slack for every inequality the oracles check.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

/// Largest universe [`verify_submodular`] accepts.
pub const MAX_SUBMODULAR_UNIVERSE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_ground: usize,
    pub max_region_subset: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_ground: 20,
            max_region_subset: 8,
        }
    }
}

/// Best feasible subset by exhaustive enumeration.
///
/// Supersets of infeasible sets are never visited. Ties go to the
/// lexicographically smallest id list, so the empty set wins when nothing
/// has positive utility.
pub fn exact_schedule(
    utility: &Utility<'_>,
    constraints: &ConstraintSystem,
    budget: OracleBudget,
    exec: Execution,
) -> Result<ScheduleOutcome> {
    let ground = utility.ground();
    Error::check_capacity("exact schedule", ground.len(), budget.max_ground)?;
    let firsts: Vec<ElementId> = ground.ids().collect();
    let branches = exec.try_map(&firsts, |&first| {
        let mut state = constraints.state();
        let mut best = None;
        let mut evaluations = 0;
        if state.can_add(first) {
            state.add(first);
            let mut chosen = vec![first];
            search(
                utility,
                state,
                &mut chosen,
                first.index() + 1,
                &mut best,
                &mut evaluations,
            )?;
        }
        Ok((best, evaluations))
    })?;
    let mut best = Best {
        value: 0.0,
        subset: Subset::empty(),
    };
    let mut evaluations = 0;
    for (b, evals) in branches {
        evaluations += evals;
        if let Some(b) = b.filter(|b| b.beats(&best)) {
            best = b;
        }
    }
    Ok(ScheduleOutcome {
        rates: utility.corner_point_rates(&best.subset)?,
        objective: best.value,
        evaluations,
        upper_bound: None,
        trace: Vec::new(),
        selected: best.subset,
    })
}

#[derive(Debug)]
struct Best {
    value: f64,
    subset: Subset,
}

impl Best {
    fn beats(&self, other: &Best) -> bool {
        self.value > other.value || (self.value == other.value && self.subset < other.subset)
    }
}

fn search(
    utility: &Utility<'_>,
    state: FeasibilityState<'_>,
    chosen: &mut Vec<ElementId>,
    next: usize,
    best: &mut Option<Best>,
    evaluations: &mut u64,
) -> Result<()> {
    let subset = Subset::new(chosen.clone());
    let value = utility.value(&subset)?;
    *evaluations += 1;
    let candidate = Best { value, subset };
    if best.as_ref().is_none_or(|b| candidate.beats(b)) {
        *best = Some(candidate);
    }
    for i in next..utility.ground().len() {
        let id = ElementId(i as u32);
        if state.can_add(id) {
            let mut child = state.clone();
            child.add(id);
            chosen.push(id);
            search(utility, child, chosen, i + 1, best, evaluations)?;
            chosen.pop();
        }
    }
    Ok(())
}

/// Checks `rates` against the buffer box and every polymatroid inequality
/// `sum_{e in A} r_e <= rank(A)` of the uncapped base rank.
pub fn verify_rate_region_membership(
    capped: &CappedRank<'_>,
    subset: &Subset,
    rates: &RateTuple,
    budget: OracleBudget,
) -> Result<bool> {
    Error::check_capacity("rate region check", subset.len(), budget.max_region_subset)?;
    if rates.rates.iter().any(|(id, _)| !subset.contains(*id)) {
        return Ok(false);
    }
    let rate = |id: ElementId| rates.get(id).unwrap_or(0.0);
    for id in subset.iter() {
        let r = rate(id);
        if r < -ORACLE_TOLERANCE || capped.queue(id).is_some_and(|q| r > q + ORACLE_TOLERANCE) {
            return Ok(false);
        }
    }
    for mask in 1..(1u64 << subset.len()) {
        let a = subset.select(mask);
        let sum: f64 = a.iter().map(rate).sum();
        if sum > capped.base().value(&a)? + ORACLE_TOLERANCE {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Buffer-capped rank in the complement form `min_R { rank(U \ R) + Q(R) }`.
pub fn capped_rank_via_complement(capped: &CappedRank<'_>, subset: &Subset) -> Result<f64> {
    Error::check_capacity("capped rank oracle", subset.len(), 20)?;
    let mut best = f64::INFINITY;
    for removed_mask in 0..(1u64 << subset.len()) {
        let removed = subset.select(removed_mask);
        // removing an element with an unbounded queue never helps
        let Some(q) = removed
            .iter()
            .map(|id| capped.queue(id))
            .sum::<Option<f64>>()
        else {
            continue;
        };
        let kept = subset.select(!removed_mask);
        best = best.min(capped.base().value(&kept)? + q);
    }
    Ok(best)
}

/// `max sum_e alpha_e r_e` over the polymatroid-and-box region, by visiting
/// the vertex generated by every ordering of `subset`.
///
/// The vertex for an ordering raises each rate as far as the box and every
/// base-rank inequality allow, given the rates already placed.
pub fn max_weighted_rate_by_corners(
    utility: &Utility<'_>,
    capped: &CappedRank<'_>,
    subset: &Subset,
) -> Result<f64> {
    Error::check_capacity("corner-point oracle", subset.len(), 8)?;
    let ids: Vec<ElementId> = subset.iter().collect();
    let mut best = 0.0f64;
    let mut perm: Vec<usize> = (0..ids.len()).collect();
    loop {
        let mut placed: Vec<(ElementId, f64)> = Vec::with_capacity(ids.len());
        let mut total = 0.0;
        for &p in &perm {
            let e = ids[p];
            let mut room = capped.queue(e).unwrap_or(f64::INFINITY);
            for mask in 0..(1u64 << placed.len()) {
                let (mut members, mut used) = (vec![e], 0.0);
                for (i, &(id, r)) in placed.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        members.push(id);
                        used += r;
                    }
                }
                room = room.min(capped.base().value(&Subset::new(members))? - used);
            }
            let r = room.max(0.0);
            placed.push((e, r));
            total += utility.weight(e) * r;
        }
        best = best.max(total);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(best)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len())
        .rev()
        .find(|&j| p[j] > p[i - 1])
        .expect("pivot exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// First failing check found by [`verify_submodular`]. Sets are bitmasks over
/// the universe.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotNormalized {
        value: f64,
    },
    NotMonotone {
        set: u64,
        element: usize,
        before: f64,
        after: f64,
    },
    NotSubmodular {
        small: u64,
        large: u64,
        element: usize,
        small_gain: f64,
        large_gain: f64,
    },
}

/// Exhaustively checks normalization, monotonicity and diminishing returns
/// of a set function on a universe of `n <= 12` items. `Ok(None)` means no
/// violation beyond [`ORACLE_TOLERANCE`].
pub fn verify_submodular<F>(n: usize, f: F) -> Result<Option<Violation>>
where
    F: Fn(u64) -> Result<f64>,
{
    Error::check_capacity("submodularity check", n, MAX_SUBMODULAR_UNIVERSE)?;
    let values: Vec<f64> = (0..1u64 << n).map(&f).collect::<Result<_>>()?;
    if values[0].abs() > ORACLE_TOLERANCE {
        return Ok(Some(Violation::NotNormalized { value: values[0] }));
    }
    for set in 0..(1u64 << n) {
        for e in (0..n).filter(|&e| set >> e & 1 == 0) {
            let (before, after) = (values[set as usize], values[(set | 1 << e) as usize]);
            if after < before - ORACLE_TOLERANCE {
                return Ok(Some(Violation::NotMonotone {
                    set,
                    element: e,
                    before,
                    after,
                }));
            }
        }
    }
    for large in 0..(1u64 << n) {
        for e in (0..n).filter(|&e| large >> e & 1 == 0) {
            let large_gain = values[(large | 1 << e) as usize] - values[large as usize];
            // walk every submask of `large`, itself included
            let mut small = large;
            loop {
                let small_gain = values[(small | 1 << e) as usize] - values[small as usize];
                if small_gain < large_gain - ORACLE_TOLERANCE {
                    return Ok(Some(Violation::NotSubmodular {
                        small,
                        large,
                        element: e,
                        small_gain,
                        large_gain,
                    }));
                }
                if small == 0 {
                    break;
                }
                small = (small - 1) & large;
            }
        }
    }
    Ok(None)
}
