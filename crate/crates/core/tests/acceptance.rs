//! Acceptance criteria, one report line each. Runs as a plain binary so the
//! report is always printed; any failing criterion makes the run fail.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{
    arbitrary_knapsacks, masks, rng, sample_universe, small_shape, structured_knapsacks, Fixture,
    Shape,
};
use rand::Rng;
use ulsched::antenna::{antenna_exact, antenna_greedy, AntennaSelectionInstance};
use ulsched::constraints::{ConstraintSystem, KnapsackSystem};
use ulsched::harness::{
    generate_channels, run_experiment, summarize, write_csv, Algorithm, RunOptions, Scenario,
};
use ulsched::oracle::{
    exact_schedule, max_weighted_rate_by_corners, verify_rate_region_membership, verify_submodular,
    OracleBudget, ORACLE_TOLERANCE,
};
use ulsched::par::Execution;
use ulsched::rank::{CappedRank, FiniteAlphabetRank, GaussianRank, Rank};
use ulsched::scheduler::{schedule, ScheduleOptions, Variant};
use ulsched::utility::Utility;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEQ: ScheduleOptions = ScheduleOptions {
    execution: Execution::Sequential,
    upper_bound: false,
};
const WITH_BOUND: ScheduleOptions = ScheduleOptions {
    execution: Execution::Sequential,
    upper_bound: true,
};

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.1?}, limit {limit:?}"))?;
    Ok(t)
}

/// f, f', g, g' and h pass the exhaustive check on 50 instances.
fn submodularity() -> Outcome {
    let start = Instant::now();
    let instances = 50;
    let mut checks = 0;
    for seed in 0..instances {
        let mut r = rng(1000 + seed);
        let shape = Shape {
            users: r.random_range(1..=3),
            rbs: r.random_range(1..=3),
            n_r: r.random_range(1..=3),
            n_t: r.random_range(1..=2),
        };
        let fx = Fixture::random(&mut r, shape, 0.6);
        let universe = sample_universe(&mut r, &fx.ground, 6);
        let f = GaussianRank::new(&fx.ground, &fx.channels).unwrap();
        let g = FiniteAlphabetRank::new(&fx.ground, &fx.channels).unwrap();
        let fc = CappedRank::new(&f).unwrap();
        let gc = CappedRank::new(&g).unwrap();
        let h = Utility::new(&fc, fx.weights.clone()).unwrap();
        let named: [(&str, &dyn Rank); 4] = [("f", &f), ("f'", &fc), ("g", &g), ("g'", &gc)];
        for (name, rank) in named {
            let v = verify_submodular(universe.len(), |m| rank.value(&universe.select(m))).unwrap();
            ensure(v.is_none(), || {
                format!("seed {seed}: {name} violates {v:?}")
            })?;
            checks += 1;
        }
        let v = verify_submodular(universe.len(), |m| h.value(&universe.select(m))).unwrap();
        ensure(v.is_none(), || format!("seed {seed}: h violates {v:?}"))?;
        checks += 1;
    }
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "{instances} instances, {checks} functions, 0 violations, {t:.1?}"
    ))
}

/// h equals the exhaustive corner maximum and its rates lie in the region.
fn corner_points() -> Outcome {
    let start = Instant::now();
    let instances = 100;
    let mut subsets = 0;
    for seed in 0..instances {
        let mut r = rng(2000 + seed);
        let shape = small_shape(&mut r, 30);
        let fx = Fixture::random(&mut r, shape, 0.5);
        let universe = sample_universe(&mut r, &fx.ground, 5);
        let f = GaussianRank::new(&fx.ground, &fx.channels).unwrap();
        let fc = CappedRank::new(&f).unwrap();
        let h = Utility::new(&fc, fx.weights.clone()).unwrap();
        for (_, s) in masks(&universe) {
            let value = h.value(&s).unwrap();
            let corners = max_weighted_rate_by_corners(&h, &fc, &s).unwrap();
            ensure((value - corners).abs() <= ORACLE_TOLERANCE, || {
                format!("seed {seed}: h = {value}, corner maximum = {corners}")
            })?;
            let rates = h.corner_point_rates(&s).unwrap();
            let inside =
                verify_rate_region_membership(&fc, &s, &rates, OracleBudget::default()).unwrap();
            ensure(inside, || {
                format!("seed {seed}: corner rates outside the region")
            })?;
            subsets += 1;
        }
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!("{instances} instances, {subsets} subsets, {t:.1?}"))
}

fn capped_utility_setup(seed: u64, max_elements: usize) -> (Fixture, rand_chacha::ChaCha8Rng) {
    let mut r = rng(seed);
    let shape = small_shape(&mut r, max_elements);
    let fx = Fixture::random(&mut r, shape, 0.4);
    (fx, r)
}

fn ratio(greedy: f64, exact: f64) -> f64 {
    if exact <= 0.0 {
        1.0
    } else {
        greedy / exact
    }
}

/// Greedy keeps 1/(2+M) under the assumptions and 1/K without them.
fn approximation_ratios() -> Outcome {
    let trials = 200;
    let (mut worst_structured, mut worst_general) = (f64::INFINITY, f64::INFINITY);
    for seed in 0..trials {
        let (fx, mut r) = capped_utility_setup(3000 + seed, 20);
        let m = (seed % 3) as usize;
        let structured = structured_knapsacks(&mut r, &fx.ground, m);
        ensure(structured.assumptions_hold(&fx.ground).holds, || {
            format!("seed {seed}: generator broke the assumptions")
        })?;
        let general = arbitrary_knapsacks(&mut r, &fx.ground);
        let f = GaussianRank::new(&fx.ground, &fx.channels).unwrap();
        let fc = CappedRank::new(&f).unwrap();
        let h = Utility::new(&fc, fx.weights.clone()).unwrap();
        let k = fx.ground.n_users() as f64;
        for (knapsacks, floor, worst) in [
            (structured, 1.0 / (2.0 + m as f64), &mut worst_structured),
            (general, 1.0 / k, &mut worst_general),
        ] {
            let c = fx.constraints(knapsacks);
            let greedy = schedule(Variant::Eager, &h, &c, SEQ).unwrap();
            let exact =
                exact_schedule(&h, &c, OracleBudget::default(), Execution::Sequential).unwrap();
            let q = ratio(greedy.objective, exact.objective);
            ensure(q >= floor - 1e-12, || {
                format!("seed {seed}: ratio {q:.4} below {floor:.4}")
            })?;
            *worst = worst.min(q);
        }
    }
    Ok(format!(
        "{trials} trials per family, worst ratio {worst_structured:.4} (assumptions), {worst_general:.4} (general)"
    ))
}

/// Lazy greedy reproduces eager greedy bit for bit with fewer evaluations.
fn lazy_equivalence() -> Outcome {
    let instances = 100;
    let (mut lazy_total, mut eager_total, mut strict) = (0u64, 0u64, 0);
    for seed in 0..instances {
        let mut r = rng(4000 + seed);
        let shape = Shape {
            users: 4,
            rbs: 3,
            n_r: r.random_range(1..=3),
            n_t: r.random_range(1..=2),
        };
        let mut fx = Fixture::random(&mut r, shape, 0.4);
        fx.weights.iter_mut().for_each(|w| *w = w.max(0.05));
        let knapsacks = if seed % 2 == 0 {
            KnapsackSystem::unconstrained(fx.ground.len())
        } else {
            KnapsackSystem::max_scheduled(fx.ground.len(), r.random_range(2..=shape.users as u32))
                .unwrap()
        };
        let c = fx.constraints(knapsacks);
        let f = GaussianRank::new(&fx.ground, &fx.channels).unwrap();
        let fc = CappedRank::new(&f).unwrap();
        let h = Utility::new(&fc, fx.weights.clone()).unwrap();
        let eager = schedule(Variant::Eager, &h, &c, SEQ).unwrap();
        let lazy = schedule(Variant::Lazy, &h, &c, SEQ).unwrap();
        ensure(
            lazy.selected == eager.selected
                && lazy.rates == eager.rates
                && lazy.objective.to_bits() == eager.objective.to_bits(),
            || format!("seed {seed}: lazy outcome differs from eager"),
        )?;
        if fx.ground.len() > 2 * fx.ground.n_users() {
            ensure(lazy.evaluations < eager.evaluations, || {
                format!(
                    "seed {seed}: lazy {} vs eager {} evaluations",
                    lazy.evaluations, eager.evaluations
                )
            })?;
            strict += 1;
        }
        lazy_total += lazy.evaluations;
        eager_total += eager.evaluations;
    }
    Ok(format!(
        "{instances} instances identical, {strict} with |E| > 2K all strictly cheaper, evaluations {lazy_total} vs {eager_total}"
    ))
}

/// Pruned greedy keeps half the eager objective with no more evaluations.
fn pruned_greedy() -> Outcome {
    let instances = 200;
    let (mut worst, mut saved) = (f64::INFINITY, 0u64);
    for seed in 0..instances {
        let mut r = rng(5000 + seed);
        let shape = Shape {
            users: r.random_range(1..=4),
            rbs: r.random_range(1..=5),
            n_r: r.random_range(1..=3),
            n_t: r.random_range(1..=2),
        };
        let fx = Fixture::random(&mut r, shape, 0.4);
        let knapsacks = match seed % 3 {
            0 => KnapsackSystem::unconstrained(fx.ground.len()),
            1 => structured_knapsacks(&mut r, &fx.ground, 1),
            _ => arbitrary_knapsacks(&mut r, &fx.ground),
        };
        let c = fx.constraints(knapsacks);
        let f = GaussianRank::new(&fx.ground, &fx.channels).unwrap();
        let fc = CappedRank::new(&f).unwrap();
        let h = Utility::new(&fc, fx.weights.clone()).unwrap();
        let eager = schedule(Variant::Eager, &h, &c, SEQ).unwrap();
        let pruned = schedule(Variant::Pruned, &h, &c, SEQ).unwrap();
        ensure(pruned.objective >= 0.5 * eager.objective, || {
            format!(
                "seed {seed}: pruned {} vs eager {}",
                pruned.objective, eager.objective
            )
        })?;
        ensure(pruned.evaluations <= eager.evaluations, || {
            format!(
                "seed {seed}: pruned used {} > {} evaluations",
                pruned.evaluations, eager.evaluations
            )
        })?;
        worst = worst.min(ratio(pruned.objective, eager.objective));
        saved += eager.evaluations - pruned.evaluations;
    }
    Ok(format!(
        "{instances} instances, worst pruned/eager {worst:.4}, {saved} evaluations saved"
    ))
}

/// Greedy antenna selection keeps half the optimum and matches the
/// scheduler on the ground-set encoding.
fn antenna_selection() -> Outcome {
    let instances = 100;
    let (mut runs, mut worst) = (0, f64::INFINITY);
    for seed in 0..instances {
        let mut r = rng(6000 + seed);
        let k = r.random_range(1..=10);
        let n_r = r.random_range(1..=k);
        let snr = 10f64.powf(r.random_range(-5.0..20.0) / 10.0);
        let h = generate_channels(r.random(), 1, 1, n_r, k, 1.0)
            .unwrap()
            .get(0, 0)
            .clone();
        for c in 1..=k {
            let inst = AntennaSelectionInstance::new(h.clone(), c, snr).unwrap();
            let greedy = antenna_greedy(&inst).unwrap();
            let exact = antenna_exact(&inst).unwrap();
            ensure(greedy.value >= 0.5 * exact.value, || {
                format!(
                    "seed {seed}, C = {c}: greedy {} vs exact {}",
                    greedy.value, exact.value
                )
            })?;
            worst = worst.min(ratio(greedy.value, exact.value));

            let (ground, channels, knapsacks) = inst.as_scheduling_problem().unwrap();
            let f = GaussianRank::new(&ground, &channels).unwrap();
            let u = Utility::new(&f, vec![1.0; k]).unwrap();
            let cons = ConstraintSystem::new(&ground, knapsacks).unwrap();
            let o = schedule(Variant::Eager, &u, &cons, SEQ).unwrap();
            let users: Vec<usize> = o
                .selected
                .iter()
                .map(|id| ground.element(id).user)
                .collect();
            ensure(
                users == greedy.columns && o.objective == greedy.value,
                || {
                    format!(
                        "seed {seed}, C = {c}: encoding picked {users:?}, greedy {:?}",
                        greedy.columns
                    )
                },
            )?;
            runs += 1;
        }
    }
    Ok(format!(
        "{instances} channels, {runs} (instance, C) runs, worst greedy/exact {worst:.4}"
    ))
}

/// g sits below f and the alphabet ceiling; scheduling on g' never beats f'.
fn finite_alphabet_ordering() -> Outcome {
    let instances = 100;
    let mut subsets = 0;
    for seed in 0..instances {
        let (fx, mut r) = capped_utility_setup(7000 + seed, 20);
        let f = GaussianRank::new(&fx.ground, &fx.channels).unwrap();
        let g = FiniteAlphabetRank::new(&fx.ground, &fx.channels).unwrap();
        let universe = sample_universe(&mut r, &fx.ground, 6);
        for (_, s) in masks(&universe) {
            let gv = g.value(&s).unwrap();
            let ceiling: f64 = s
                .iter()
                .map(|id| fx.ground.allocation_of(id).size() as f64 * g.alphabet_bits(id))
                .sum();
            ensure(
                gv <= f.value(&s).unwrap() + ORACLE_TOLERANCE && gv <= ceiling + ORACLE_TOLERANCE,
                || format!("seed {seed}: g = {gv} above f or ceiling {ceiling}"),
            )?;
            subsets += 1;
        }
        let c = fx.constraints(structured_knapsacks(&mut r, &fx.ground, 1));
        let fc = CappedRank::new(&f).unwrap();
        let gc = CappedRank::new(&g).unwrap();
        let hf = Utility::new(&fc, fx.weights.clone()).unwrap();
        let hg = Utility::new(&gc, fx.weights.clone()).unwrap();
        for v in [Variant::Eager, Variant::Lazy, Variant::Pruned] {
            let (of, og) = (
                schedule(v, &hf, &c, SEQ).unwrap(),
                schedule(v, &hg, &c, SEQ).unwrap(),
            );
            ensure(og.objective <= of.objective + ORACLE_TOLERANCE, || {
                format!(
                    "seed {seed}, {v:?}: g' objective {} above f' objective {}",
                    og.objective, of.objective
                )
            })?;
        }
        let budget = OracleBudget::default();
        let ef = exact_schedule(&hf, &c, budget, Execution::Sequential).unwrap();
        let eg = exact_schedule(&hg, &c, budget, Execution::Sequential).unwrap();
        ensure(eg.objective <= ef.objective + ORACLE_TOLERANCE, || {
            format!("seed {seed}: exact g' above exact f'")
        })?;
    }
    Ok(format!(
        "{instances} instances, {subsets} subsets, schedules ordered"
    ))
}

/// The data-dependent bound never undercuts the exact optimum.
fn upper_bound_soundness() -> Outcome {
    let trials = 200;
    let mut slack = f64::INFINITY;
    for seed in 0..trials {
        let (fx, mut r) = capped_utility_setup(8000 + seed, 20);
        let knapsacks = if seed % 2 == 0 {
            let m = r.random_range(0..=2);
            structured_knapsacks(&mut r, &fx.ground, m)
        } else {
            arbitrary_knapsacks(&mut r, &fx.ground)
        };
        let c = fx.constraints(knapsacks);
        let f = GaussianRank::new(&fx.ground, &fx.channels).unwrap();
        let fc = CappedRank::new(&f).unwrap();
        let h = Utility::new(&fc, fx.weights.clone()).unwrap();
        let exact = exact_schedule(&h, &c, OracleBudget::default(), Execution::Sequential).unwrap();
        for v in [Variant::Eager, Variant::Lazy, Variant::Pruned] {
            let bound = schedule(v, &h, &c, WITH_BOUND)
                .unwrap()
                .upper_bound
                .unwrap();
            ensure(bound >= exact.objective - ORACLE_TOLERANCE, || {
                format!(
                    "seed {seed}, {v:?}: bound {bound} below optimum {}",
                    exact.objective
                )
            })?;
            slack = slack.min(bound - exact.objective);
        }
    }
    Ok(format!(
        "{trials} trials, 0 violations, smallest slack {slack:.3e}"
    ))
}

fn desk_scenario() -> Scenario {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/desk_sweep.toml"
    );
    Scenario::load(std::path::Path::new(path)).unwrap()
}

/// Desk-scale sweep: runtime, monotone spectral efficiency, mean ratio.
fn desk_sweep() -> Outcome {
    let start = Instant::now();
    let s = desk_scenario();
    ensure(
        s.users == 6 && s.rbs == 8 && s.rx_antennas == 4 && s.intervals >= 20,
        || "desk scenario does not have the required shape".into(),
    )?;
    ensure(s.constraints.max_scheduled_users.is_some(), || {
        "no max-scheduled constraint".into()
    })?;
    ensure(
        s.snr_db.first() == Some(&-5.0) && s.snr_db.last() == Some(&20.0),
        || "grid must span -5..20 dB".into(),
    )?;
    let rows = run_experiment(&s, RunOptions::default()).unwrap();
    let t = within(Duration::from_secs(600), start)?;
    let summary: Vec<_> = summarize(&rows)
        .into_iter()
        .filter(|x| x.algorithm == Algorithm::Greedy)
        .collect();
    let se: Vec<f64> = summary.iter().map(|x| x.mean_spectral_efficiency).collect();
    ensure(se.windows(2).all(|w| w[0] < w[1]), || {
        format!("spectral efficiency not monotone: {se:?}")
    })?;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    ensure(mean >= 0.6, || {
        format!("mean greedy/bound ratio {mean:.4} below 0.6")
    })?;
    let se_text: Vec<String> = se.iter().map(|x| format!("{x:.2}")).collect();
    Ok(format!(
        "{} rows in {t:.1?}, SE [{}] bits/RB, mean ratio {mean:.4}",
        rows.len(),
        se_text.join(", ")
    ))
}

/// Same scenario and seed give the same bytes, in either execution mode.
fn determinism() -> Outcome {
    let mut s = desk_scenario();
    s.intervals = 5;
    s.algorithms = vec![Algorithm::Greedy, Algorithm::Lazy, Algorithm::Pruned];
    let render = |execution| {
        let rows = run_experiment(
            &s,
            RunOptions {
                execution,
                timing: false,
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        buf
    };
    let first = render(Execution::Parallel);
    ensure(first == render(Execution::Parallel), || {
        "two parallel runs differ".into()
    })?;
    ensure(first == render(Execution::Sequential), || {
        "parallel and sequential runs differ".into()
    })?;
    Ok(format!("3 runs, {} identical bytes", first.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("submodularity of f, f', g, g', h", submodularity),
        ("corner-point oracle equivalence", corner_points),
        ("greedy approximation ratios", approximation_ratios),
        ("lazy greedy equivalence", lazy_equivalence),
        ("pruned greedy half guarantee", pruned_greedy),
        ("antenna selection", antenna_selection),
        ("finite-alphabet ordering", finite_alphabet_ordering),
        ("upper bound soundness", upper_bound_soundness),
        ("desk-scale sweep", desk_sweep),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
