use std::time::Instant;

use serde::Serialize;

use super::channels::{generate_channels, interval_seed};
use super::pf::PfState;
use super::scenario::{Algorithm, Alphabet, Instance, Scenario};
use super::{HarnessError, HarnessResult};
use crate::constraints::ConstraintSystem;
use crate::error::Result;
use crate::oracle::{exact_schedule, OracleBudget};
use crate::par::Execution;
use crate::rank::{CappedRank, FiniteAlphabetRank, GaussianRank, Rank, Subset};
use crate::scheduler::{schedule, ScheduleOptions, ScheduleOutcome, Variant};
use crate::utility::Utility;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub execution: Execution,
    /// Fill `runtime_ms`. Off by default so output files are reproducible.
    pub timing: bool,
}

/// One scheduling decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub snr_db: f64,
    pub interval: usize,
    pub algorithm: Algorithm,
    pub objective: f64,
    /// Sum of the served rates divided by the number of RBs.
    pub spectral_efficiency: f64,
    pub upper_bound: Option<f64>,
    pub ratio: Option<f64>,
    pub h_evaluations: u64,
    pub runtime_ms: Option<f64>,
    pub seed: u64,
    #[serde(skip)]
    pub selected: Subset,
}

/// Averages over the intervals of one (SNR, algorithm) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrSummary {
    pub snr_db: f64,
    pub algorithm: Algorithm,
    pub intervals: usize,
    pub mean_objective: f64,
    pub mean_spectral_efficiency: f64,
    pub mean_ratio: Option<f64>,
}

/// Runs every SNR point of `scenario`. Rows come back ordered by SNR (as
/// listed), then interval, then algorithm (as listed).
pub fn run_experiment(scenario: &Scenario, options: RunOptions) -> HarnessResult<Vec<ResultRow>> {
    scenario.validate()?;
    let instance = scenario.instance()?;
    let per_snr = options.execution.map(&scenario.snr_db, |&snr_db| {
        run_snr_point(scenario, &instance, snr_db, options)
    });
    let mut rows = Vec::new();
    for r in per_snr {
        rows.extend(r?);
    }
    Ok(rows)
}

fn run_snr_point(
    scenario: &Scenario,
    instance: &Instance,
    snr_db: f64,
    options: RunOptions,
) -> HarnessResult<Vec<ResultRow>> {
    let constraints = instance.constraints();
    let snr_linear = 10f64.powf(snr_db / 10.0);
    let mut pf = PfState::new(scenario.initial_weights(), scenario.pf_tau)?;
    let mut rows = Vec::with_capacity(scenario.intervals * scenario.algorithms.len());
    for interval in 0..scenario.intervals {
        let wrap = |source| HarnessError::Run {
            snr_db,
            interval,
            source,
        };
        let outcomes = run_interval(
            scenario,
            instance,
            &constraints,
            snr_linear,
            interval,
            pf.weights(),
            options,
        )
        .map_err(wrap)?;
        let n_rbs = scenario.rbs as f64;
        for (algorithm, outcome, runtime) in &outcomes {
            let spectral_efficiency = outcome.rates.total() / n_rbs;
            let upper_bound = match algorithm {
                Algorithm::Exact => Some(outcome.objective),
                _ => outcome.upper_bound,
            };
            let ratio = upper_bound.map(|b| if b > 0.0 { outcome.objective / b } else { 1.0 });
            rows.push(ResultRow {
                snr_db,
                interval,
                algorithm: *algorithm,
                objective: outcome.objective,
                spectral_efficiency,
                upper_bound,
                ratio,
                h_evaluations: outcome.evaluations,
                runtime_ms: options.timing.then_some(*runtime),
                seed: scenario.seed,
                selected: outcome.selected.clone(),
            });
        }
        let (_, primary, _) = &outcomes[0];
        let mut served = vec![0.0; scenario.users];
        for &(id, r) in &primary.rates.rates {
            served[constraints.user_of(id)] += r / n_rbs;
        }
        pf.update(&served).map_err(wrap)?;
    }
    Ok(rows)
}

fn run_interval(
    scenario: &Scenario,
    instance: &Instance,
    constraints: &ConstraintSystem,
    snr_linear: f64,
    interval: usize,
    weights: &[f64],
    options: RunOptions,
) -> Result<Vec<(Algorithm, ScheduleOutcome, f64)>> {
    let ground = &instance.ground;
    let channels = generate_channels(
        interval_seed(scenario.seed, interval),
        scenario.users,
        scenario.rbs,
        scenario.rx_antennas,
        scenario.tx_antennas,
        snr_linear,
    )?;
    let gaussian;
    let finite;
    let base: &dyn Rank = match scenario.alphabet {
        Alphabet::Gaussian => {
            gaussian = GaussianRank::new(ground, &channels)?;
            &gaussian
        }
        Alphabet::Finite => {
            finite = FiniteAlphabetRank::new(ground, &channels)?;
            &finite
        }
    };
    let capped = CappedRank::new(base)?;
    let utility = Utility::new(&capped, weights.to_vec())?;
    let schedule_options = ScheduleOptions {
        execution: options.execution,
        upper_bound: scenario.upper_bound,
    };
    scenario
        .algorithms
        .iter()
        .map(|&algorithm| {
            let start = Instant::now();
            let outcome = match algorithm {
                Algorithm::Greedy => {
                    schedule(Variant::Eager, &utility, constraints, schedule_options)?
                }
                Algorithm::Lazy => {
                    schedule(Variant::Lazy, &utility, constraints, schedule_options)?
                }
                Algorithm::Pruned => {
                    schedule(Variant::Pruned, &utility, constraints, schedule_options)?
                }
                Algorithm::Exact => exact_schedule(
                    &utility,
                    constraints,
                    OracleBudget::default(),
                    options.execution,
                )?,
            };
            Ok((algorithm, outcome, start.elapsed().as_secs_f64() * 1e3))
        })
        .collect()
}

/// Per (SNR, algorithm) averages, in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SnrSummary> {
    let mut keys: Vec<(f64, Algorithm)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|&(s, a)| s == r.snr_db && a == r.algorithm) {
            keys.push((r.snr_db, r.algorithm));
        }
    }
    keys.into_iter()
        .map(|(snr_db, algorithm)| {
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.snr_db == snr_db && r.algorithm == algorithm)
                .collect();
            let n = group.len() as f64;
            let ratios: Vec<f64> = group.iter().filter_map(|r| r.ratio).collect();
            SnrSummary {
                snr_db,
                algorithm,
                intervals: group.len(),
                mean_objective: group.iter().map(|r| r.objective).sum::<f64>() / n,
                mean_spectral_efficiency: group.iter().map(|r| r.spectral_efficiency).sum::<f64>()
                    / n,
                mean_ratio: (!ratios.is_empty())
                    .then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
            }
        })
        .collect()
}
