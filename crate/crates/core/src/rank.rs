//! Rank functions over subsets of the ground set.
//!
//! * [`GaussianRank`]: `f(U) = sum_n log2 det(I + sum_{e in U on n} p_e (H W)(H W)^H)`.
//! * [`FiniteAlphabetRank`]: per RB, the smaller of the Gaussian log-det on a
//!   kept part and `n_t log2 S_e` for every dropped element, minimized over
//!   all splits.
//! * [`CappedRank`]: either of the above intersected with per-element buffer
//!   limits, `Q(U) + min_{R ⊆ U} { rank(R) - Q(R) }`.
//!
//! All rates are bits per `N` RBs.

use std::sync::OnceLock;

use dashmap::DashMap;

use crate::error::{Error, Result};
use crate::ground_set::{ChannelSet, ElementId, GroundSet};
use crate::linalg::{log2_det_hpd, CMat};

/// Largest subset an exhaustive minimization is allowed to enumerate.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 16;

/// A set of element ids, kept sorted and free of duplicates so that equal
/// sets hash, compare and sum identically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Subset(Vec<ElementId>);

impl Subset {
    pub fn empty() -> Self {
        Subset(Vec::new())
    }

    pub fn new(mut ids: Vec<ElementId>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Subset(ids)
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        Self::new(indices.into_iter().map(|i| ElementId(i as u32)).collect())
    }

    pub fn ids(&self) -> &[ElementId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.0.iter().copied()
    }

    /// `self ∪ {id}`.
    pub fn with(&self, id: ElementId) -> Subset {
        let mut ids = self.0.clone();
        if let Err(pos) = ids.binary_search(&id) {
            ids.insert(pos, id);
        }
        Subset(ids)
    }

    /// Members selected by the low bits of `mask` (bit `i` is `self.ids()[i]`).
    pub fn select(&self, mask: u64) -> Subset {
        Subset(
            self.0
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &id)| id)
                .collect(),
        )
    }

    pub fn union(&self, other: &Subset) -> Subset {
        Subset::new(self.0.iter().chain(&other.0).copied().collect())
    }
}

impl FromIterator<ElementId> for Subset {
    fn from_iter<I: IntoIterator<Item = ElementId>>(iter: I) -> Self {
        Subset::new(iter.into_iter().collect())
    }
}

/// A normalized, monotone, submodular set function over a ground set.
pub trait Rank: Send + Sync {
    fn ground(&self) -> &GroundSet;

    fn value(&self, subset: &Subset) -> Result<f64>;

    /// An upper bound on the value of any subset of the ground set.
    fn ceiling(&self) -> Result<f64>;
}

/// `(H W)(H W)^H` for every user, precoder and RB, at unit power.
#[derive(Debug, Clone)]
pub struct LinkGains {
    n_rbs: usize,
    n_precoders: usize,
    n_r: usize,
    grams: Vec<CMat>,
}

impl LinkGains {
    pub fn new(ground: &GroundSet, channels: &ChannelSet) -> Result<Self> {
        let cb = ground.codebook();
        if channels.n_users() != ground.n_users()
            || channels.n_rbs() != ground.n_rbs()
            || channels.n_t() != cb.n_t()
        {
            return Err(Error::invalid(format!(
                "channels are {} users x {} RBs x {} tx antennas, ground set is {} x {} x {}",
                channels.n_users(),
                channels.n_rbs(),
                channels.n_t(),
                ground.n_users(),
                ground.n_rbs(),
                cb.n_t()
            )));
        }
        let mut grams = Vec::with_capacity(ground.n_users() * cb.len() * ground.n_rbs());
        for u in 0..ground.n_users() {
            for w in cb.iter() {
                for n in 0..ground.n_rbs() {
                    grams.push(channels.get(u, n).matmul(w)?.gram());
                }
            }
        }
        Ok(LinkGains {
            n_rbs: ground.n_rbs(),
            n_precoders: cb.len(),
            n_r: channels.n_r(),
            grams,
        })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn gram(&self, user: usize, precoder: usize, rb: usize) -> &CMat {
        &self.grams[(user * self.n_precoders + precoder) * self.n_rbs + rb]
    }
}

/// Gaussian-input sum-capacity rank.
pub struct GaussianRank<'a> {
    ground: &'a GroundSet,
    gains: LinkGains,
    ceiling: OnceLock<f64>,
}

impl<'a> GaussianRank<'a> {
    pub fn new(ground: &'a GroundSet, channels: &ChannelSet) -> Result<Self> {
        Ok(GaussianRank {
            ground,
            gains: LinkGains::new(ground, channels)?,
            ceiling: OnceLock::new(),
        })
    }

    pub fn gains(&self) -> &LinkGains {
        &self.gains
    }

    /// `log2 det(I + sum p_e G_e)` on one RB, summing in the given order.
    pub fn rb_log_det(
        &self,
        rb: usize,
        active: impl IntoIterator<Item = ElementId>,
    ) -> Result<f64> {
        let mut acc: Option<CMat> = None;
        for id in active {
            let e = self.ground.element(id);
            let g = self.gains.gram(e.user, e.precoder, rb);
            acc.get_or_insert_with(|| CMat::identity(self.gains.n_r))
                .add_scaled(g, e.psd);
        }
        match acc {
            None => Ok(0.0),
            Some(m) => log2_det_hpd(&m),
        }
    }

    /// Elements of `subset` occupying `rb`.
    pub(crate) fn active_on<'s>(
        &'s self,
        subset: &'s Subset,
        rb: usize,
    ) -> impl Iterator<Item = ElementId> + 's {
        subset
            .iter()
            .filter(move |&id| self.ground.allocation_of(id).contains(rb))
    }
}

impl Rank for GaussianRank<'_> {
    fn ground(&self) -> &GroundSet {
        self.ground
    }

    fn value(&self, subset: &Subset) -> Result<f64> {
        let mut total = 0.0;
        for rb in 0..self.ground.n_rbs() {
            total += self.rb_log_det(rb, self.active_on(subset, rb))?;
        }
        Ok(total)
    }

    fn ceiling(&self) -> Result<f64> {
        if let Some(&v) = self.ceiling.get() {
            return Ok(v);
        }
        let all = Subset::from_indices(0..self.ground.len());
        let v = self.value(&all)?;
        Ok(*self.ceiling.get_or_init(|| v))
    }
}

/// Rank bound for inputs drawn from finite constellations.
pub struct FiniteAlphabetRank<'a> {
    gaussian: GaussianRank<'a>,
    cap: usize,
    per_rb: DashMap<(usize, Subset), f64>,
}

impl<'a> FiniteAlphabetRank<'a> {
    pub fn new(ground: &'a GroundSet, channels: &ChannelSet) -> Result<Self> {
        Ok(FiniteAlphabetRank {
            gaussian: GaussianRank::new(ground, channels)?,
            cap: DEFAULT_BRUTE_FORCE_CAP,
            per_rb: DashMap::new(),
        })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap.min(63);
        self
    }

    pub fn gaussian(&self) -> &GaussianRank<'a> {
        &self.gaussian
    }

    /// Per-element alphabet ceiling `n_t log2 S_e`.
    pub fn alphabet_bits(&self, id: ElementId) -> f64 {
        let g = self.gaussian.ground;
        let p = &g.profiles()[g.element(id).user];
        p.n_t as f64 * f64::from(p.constellation_size).log2()
    }

    fn rb_value(&self, rb: usize, active: Subset) -> Result<f64> {
        if active.is_empty() {
            return Ok(0.0);
        }
        let key = (rb, active);
        if let Some(v) = self.per_rb.get(&key) {
            return Ok(*v);
        }
        let active = &key.1;
        let m = active.len();
        let mut best = f64::INFINITY;
        for kept_mask in 0..(1u64 << m) {
            let dropped: f64 = active
                .iter()
                .enumerate()
                .filter(|(i, _)| kept_mask >> i & 1 == 0)
                .map(|(_, id)| self.alphabet_bits(id))
                .sum();
            if dropped >= best {
                continue;
            }
            let v = self
                .gaussian
                .rb_log_det(rb, active.select(kept_mask).iter())?
                + dropped;
            best = best.min(v);
        }
        self.per_rb.insert(key, best);
        Ok(best)
    }
}

impl Rank for FiniteAlphabetRank<'_> {
    fn ground(&self) -> &GroundSet {
        self.gaussian.ground
    }

    fn value(&self, subset: &Subset) -> Result<f64> {
        Error::check_capacity("finite-alphabet rank", subset.len(), self.cap)?;
        let mut total = 0.0;
        for rb in 0..self.gaussian.ground.n_rbs() {
            let active: Subset = self.gaussian.active_on(subset, rb).collect();
            total += self.rb_value(rb, active)?;
        }
        Ok(total)
    }

    fn ceiling(&self) -> Result<f64> {
        self.gaussian.ceiling()
    }
}

/// A rank function restricted by per-element buffer sizes.
///
/// Queues at or above twice the base ceiling can never bind and are treated
/// as uncapped; such elements are kept out of the exhaustive search, so
/// infinite queues never enter the arithmetic.
pub struct CappedRank<'r> {
    base: &'r dyn Rank,
    user_queues: Vec<f64>,
    threshold: f64,
    cap: usize,
    memo: DashMap<Subset, f64>,
}

impl<'r> CappedRank<'r> {
    /// Caps using each user's profile queue.
    pub fn new(base: &'r dyn Rank) -> Result<Self> {
        let queues = base.ground().profiles().iter().map(|p| p.queue).collect();
        Self::with_user_queues(base, queues)
    }

    pub fn with_user_queues(base: &'r dyn Rank, user_queues: Vec<f64>) -> Result<Self> {
        if user_queues.len() != base.ground().n_users() {
            return Err(Error::invalid(format!(
                "{} queues for {} users",
                user_queues.len(),
                base.ground().n_users()
            )));
        }
        if user_queues.iter().any(|q| !(*q >= 0.0)) {
            return Err(Error::invalid("queues must be nonnegative"));
        }
        let threshold = 2.0 * base.ceiling()?;
        Ok(CappedRank {
            base,
            user_queues,
            threshold,
            cap: DEFAULT_BRUTE_FORCE_CAP,
            memo: DashMap::new(),
        })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap.min(63);
        self
    }

    pub fn base(&self) -> &dyn Rank {
        self.base
    }

    /// Queue of an element, or `None` when it is too large to ever bind.
    pub fn queue(&self, id: ElementId) -> Option<f64> {
        let q = self.user_queues[self.base.ground().element(id).user];
        (q < self.threshold).then_some(q)
    }

    /// Splits `subset` into (uncapped members, capped members).
    pub(crate) fn split(&self, subset: &Subset) -> (Subset, Subset) {
        let (capped, free): (Vec<_>, Vec<_>) =
            subset.iter().partition(|&id| self.queue(id).is_some());
        (Subset(free), Subset(capped))
    }

    fn compute(&self, subset: &Subset) -> Result<f64> {
        let (free, capped) = self.split(subset);
        if capped.is_empty() {
            return self.base.value(subset);
        }
        let q = |id| self.queue(id).unwrap_or(0.0);
        let total_q: f64 = capped.iter().map(q).sum();
        let mut best = f64::INFINITY;
        for kept_mask in 0..(1u64 << capped.len()) {
            let kept = capped.select(kept_mask);
            let kept_q: f64 = kept.iter().map(q).sum();
            let v = self.base.value(&free.union(&kept))? - kept_q;
            best = best.min(v);
        }
        Ok((total_q + best).max(0.0))
    }
}

impl Rank for CappedRank<'_> {
    fn ground(&self) -> &GroundSet {
        self.base.ground()
    }

    fn value(&self, subset: &Subset) -> Result<f64> {
        Error::check_capacity("queue-capped rank", subset.len(), self.cap)?;
        if let Some(v) = self.memo.get(subset) {
            return Ok(*v);
        }
        let v = self.compute(subset)?;
        self.memo.insert(subset.clone(), v);
        Ok(v)
    }

    fn ceiling(&self) -> Result<f64> {
        self.base.ceiling()
    }
}
