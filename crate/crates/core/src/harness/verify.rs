use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::channels::{generate_channels, interval_seed};
use super::experiment::RunOptions;
use super::scenario::{Alphabet, Scenario};
use super::HarnessResult;
use crate::error::Result;
use crate::oracle::{
    exact_schedule, max_weighted_rate_by_corners, verify_rate_region_membership, verify_submodular,
    OracleBudget, ORACLE_TOLERANCE,
};
use crate::rank::{CappedRank, FiniteAlphabetRank, GaussianRank, Rank, Subset};
use crate::scheduler::{schedule, ScheduleOptions, Variant};
use crate::utility::Utility;

/// Largest element sample the set-function checks run on.
pub const VERIFY_UNIVERSE: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub snr_db: f64,
    pub passed: bool,
    pub detail: String,
}

/// Oracle checks on the first interval of every SNR point.
pub fn verify_scenario(
    scenario: &Scenario,
    options: RunOptions,
) -> HarnessResult<Vec<CheckResult>> {
    scenario.validate()?;
    let instance = scenario.instance()?;
    let ground = &instance.ground;
    let constraints = instance.constraints();
    let mut results = Vec::new();
    for &snr_db in &scenario.snr_db {
        let mut check = |name: &str, passed: bool, detail: String| {
            results.push(CheckResult {
                name: name.into(),
                snr_db,
                passed,
                detail,
            })
        };
        let seed = interval_seed(scenario.seed, 0);
        let channels = generate_channels(
            seed,
            scenario.users,
            scenario.rbs,
            scenario.rx_antennas,
            scenario.tx_antennas,
            10f64.powf(snr_db / 10.0),
        )?;
        let f = GaussianRank::new(ground, &channels)?;
        let g = FiniteAlphabetRank::new(ground, &channels)?;
        let f_capped = CappedRank::new(&f)?;
        let g_capped = CappedRank::new(&g)?;
        let capped = match scenario.alphabet {
            Alphabet::Gaussian => &f_capped,
            Alphabet::Finite => &g_capped,
        };
        let utility = Utility::new(capped, scenario.initial_weights())?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = ground.len().min(VERIFY_UNIVERSE);
        let mut picks = rand::seq::index::sample(&mut rng, ground.len(), n).into_vec();
        picks.sort_unstable();
        let universe = Subset::from_indices(picks);
        let ranks: [(&str, &dyn Rank); 4] = [
            ("rank f", &f),
            ("capped rank f'", &f_capped),
            ("rank g", &g),
            ("capped rank g'", &g_capped),
        ];
        for (name, rank) in ranks {
            let v = verify_submodular(n, |m| rank.value(&universe.select(m)))?;
            check(
                name,
                v.is_none(),
                v.map(|v| format!("{v:?}")).unwrap_or_default(),
            );
        }
        let v = verify_submodular(n, |m| utility.value(&universe.select(m)))?;
        check(
            "utility h",
            v.is_none(),
            v.map(|v| format!("{v:?}")).unwrap_or_default(),
        );

        let mut worst = 0.0f64;
        for mask in 0..(1u64 << n) {
            let s = universe.select(mask);
            let bits: f64 = s
                .iter()
                .map(|id| ground.allocation_of(id).size() as f64 * g.alphabet_bits(id))
                .sum();
            worst = worst
                .max(g.value(&s)? - f.value(&s)?)
                .max(g.value(&s)? - bits);
        }
        check(
            "g below f and alphabet bits",
            worst <= ORACLE_TOLERANCE,
            format!("max excess {worst:.3e}"),
        );

        let rates = utility.corner_point_rates(&universe)?;
        let inside =
            verify_rate_region_membership(capped, &universe, &rates, OracleBudget::default())?;
        check("corner rates in region", inside, String::new());
        let h = utility.value(&universe)?;
        let corners = max_weighted_rate_by_corners(&utility, capped, &universe)?;
        check(
            "h equals corner maximum",
            (h - corners).abs() <= ORACLE_TOLERANCE,
            format!("h {h}, corners {corners}"),
        );

        let opts = ScheduleOptions {
            execution: options.execution,
            upper_bound: true,
        };
        let eager = schedule(Variant::Eager, &utility, &constraints, opts)?;
        let lazy = schedule(Variant::Lazy, &utility, &constraints, opts)?;
        let pruned = schedule(Variant::Pruned, &utility, &constraints, opts)?;
        check(
            "lazy equals eager",
            lazy.selected == eager.selected
                && lazy.rates == eager.rates
                && lazy.objective == eager.objective,
            format!("evaluations {} vs {}", lazy.evaluations, eager.evaluations),
        );
        check(
            "pruned keeps half",
            pruned.objective >= 0.5 * eager.objective && pruned.evaluations <= eager.evaluations,
            format!("{} vs {}", pruned.objective, eager.objective),
        );
        let feasible = [&eager, &lazy, &pruned]
            .iter()
            .map(|o| constraints.is_feasible(&o.selected))
            .collect::<Result<Vec<_>>>()?;
        check(
            "greedy selections feasible",
            feasible.iter().all(|&b| b),
            String::new(),
        );
        if ground.len() <= OracleBudget::default().max_ground {
            let exact = exact_schedule(
                &utility,
                &constraints,
                OracleBudget::default(),
                options.execution,
            )?;
            check(
                "exact dominates greedy",
                exact.objective >= eager.objective - ORACLE_TOLERANCE,
                format!("exact {}, greedy {}", exact.objective, eager.objective),
            );
            let bound = eager.upper_bound.unwrap_or(f64::INFINITY);
            check(
                "upper bound covers exact",
                bound >= exact.objective - ORACLE_TOLERANCE,
                format!("bound {bound}, exact {}", exact.objective),
            );
        }
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_scenario_passes_everything() {
        let s = Scenario::from_toml(
            "users = 2\nrbs = 2\nrx_antennas = 2\ntx_antennas = 2\nsnr_db = [0.0, 10.0]\nseed = 5\n\
             [profile]\nqueue = 1.5\nconstellation = 4\n",
        )
        .unwrap();
        let results = verify_scenario(&s, RunOptions::default()).unwrap();
        assert_eq!(results.len(), 2 * 13);
        for r in &results {
            assert!(r.passed, "{r:?}");
        }
    }
}
