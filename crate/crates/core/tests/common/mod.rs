//! Random fixtures shared by the integration and acceptance tests.
#![allow(dead_code)]

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ulsched::constraints::{ConstraintSystem, ControlRow, InterferenceRow, KnapsackSystem};
use ulsched::ground_set::{ChannelSet, Codebook, ElementId, GroundSet, UserProfile};
use ulsched::harness::generate_channels;
use ulsched::rank::Subset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub users: usize,
    pub rbs: usize,
    pub n_r: usize,
    /// 1 uses the scalar codebook, anything else antenna selection.
    pub n_t: usize,
}

pub struct Fixture {
    pub ground: GroundSet,
    pub channels: ChannelSet,
    pub weights: Vec<f64>,
}

impl Fixture {
    /// Random powers, weights, constellations and (with probability
    /// `finite_queue`) finite per-user buffers.
    pub fn random(rng: &mut ChaCha8Rng, shape: Shape, finite_queue: f64) -> Fixture {
        let codebook = if shape.n_t == 1 {
            Codebook::scalar()
        } else {
            Codebook::antenna_selection(shape.n_t).unwrap()
        };
        let profiles = (0..shape.users)
            .map(|_| UserProfile {
                queue: if rng.random_bool(finite_queue) {
                    rng.random_range(0.1..4.0)
                } else {
                    f64::INFINITY
                },
                power: rng.random_range(0.2..3.0),
                constellation_size: *[2u32, 4, 16, 64].choose(rng).unwrap(),
                n_t: shape.n_t,
            })
            .collect();
        let ground = GroundSet::build(codebook, shape.rbs, profiles).unwrap();
        let snr = 10f64.powf(rng.random_range(-5.0..20.0) / 10.0);
        let channels = generate_channels(
            rng.random(),
            shape.users,
            shape.rbs,
            shape.n_r,
            shape.n_t,
            snr,
        )
        .unwrap();
        let weights = (0..shape.users)
            .map(|_| {
                if rng.random_bool(0.1) {
                    0.0
                } else {
                    rng.random_range(0.05..2.0)
                }
            })
            .collect();
        Fixture {
            ground,
            channels,
            weights,
        }
    }

    pub fn constraints(&self, knapsacks: KnapsackSystem) -> ConstraintSystem {
        ConstraintSystem::new(&self.ground, knapsacks).unwrap()
    }
}

/// A random shape with at most `max_elements` elements.
pub fn small_shape(rng: &mut ChaCha8Rng, max_elements: usize) -> Shape {
    loop {
        let shape = Shape {
            users: rng.random_range(1..=4),
            rbs: rng.random_range(1..=3),
            n_r: rng.random_range(1..=3),
            n_t: rng.random_range(1..=2),
        };
        let allocs = [1, 3, 7][shape.rbs - 1];
        let w = if shape.n_t == 1 { 1 } else { shape.n_t };
        if shape.users * allocs * w <= max_elements {
            return shape;
        }
    }
}

/// `n` distinct random elements.
pub fn sample_universe(rng: &mut ChaCha8Rng, ground: &GroundSet, n: usize) -> Subset {
    let n = n.min(ground.len());
    Subset::from_indices(rand::seq::index::sample(rng, ground.len(), n))
}

/// Control rows over user-aligned regions with budgets at most the region's
/// user count, plus `m` cardinality interference rows.
pub fn structured_knapsacks(rng: &mut ChaCha8Rng, ground: &GroundSet, m: usize) -> KnapsackSystem {
    let k = ground.n_users();
    let mut users: Vec<usize> = (0..k).collect();
    users.shuffle(rng);
    let n_regions = rng.random_range(1..=k);
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, k - 1, n_regions - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    cuts.insert(0, 0);
    cuts.push(k);
    let control = cuts
        .windows(2)
        .map(|w| {
            let region = &users[w[0]..w[1]];
            ControlRow {
                members: Subset::from_indices(region.iter().flat_map(|&u| ground.user_elements(u))),
                budget: rng.random_range(1..=region.len() as u32),
            }
        })
        .collect();
    let interference = (0..m)
        .map(|_| {
            let a = 1.0 / f64::from(rng.random_range(1..=3u32));
            InterferenceRow {
                coefficients: ground
                    .ids()
                    .filter(|_| rng.random_bool(0.5))
                    .map(|id| (id, a))
                    .collect(),
            }
        })
        .collect();
    KnapsackSystem::new(ground.len(), control, interference).unwrap()
}

/// Arbitrary packing rows: overlapping control rows with random budgets and
/// interference rows with unequal coefficients.
pub fn arbitrary_knapsacks(rng: &mut ChaCha8Rng, ground: &GroundSet) -> KnapsackSystem {
    let n = ground.len();
    let control = (0..rng.random_range(0..=2))
        .map(|_| ControlRow {
            members: Subset::from_indices((0..n).filter(|_| rng.random_bool(0.6))),
            budget: rng.random_range(1..=2),
        })
        .collect();
    let interference = (0..rng.random_range(0..=2))
        .map(|_| InterferenceRow {
            coefficients: (0..n)
                .filter_map(|i| {
                    let keep = rng.random_bool(0.7);
                    keep.then(|| (ElementId(i as u32), rng.random_range(0.05..1.0)))
                })
                .collect(),
        })
        .collect();
    KnapsackSystem::new(n, control, interference).unwrap()
}

/// Subsets of `universe` as bitmask-indexed values.
pub fn masks(universe: &Subset) -> impl Iterator<Item = (u64, Subset)> + '_ {
    (0..1u64 << universe.len()).map(move |m| (m, universe.select(m)))
}
