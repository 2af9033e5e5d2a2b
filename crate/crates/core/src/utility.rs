//! Weighted-sum-rate utility over a (capped) polymatroid rate region.
//!
//! The maximum of `sum_e alpha_e r_e` over a polymatroid is attained at the
//! corner point that serves elements in non-increasing weight order, so
//!
//! `h(U) = sum_k (alpha_{o(k)} - alpha_{o(k+1)}) rank'({o(1), .., o(k)})`
//!
//! with `alpha` past the last element taken as zero.

use crate::error::{Error, Result};
use crate::ground_set::{ElementId, GroundSet};
use crate::rank::{Rank, Subset};

/// Per-element rates, in the order of the subset they were computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTuple {
    pub rates: Vec<(ElementId, f64)>,
}

impl RateTuple {
    pub fn zeros(subset: &Subset) -> Self {
        RateTuple {
            rates: subset.iter().map(|id| (id, 0.0)).collect(),
        }
    }

    pub fn get(&self, id: ElementId) -> Option<f64> {
        self.rates.iter().find(|(e, _)| *e == id).map(|&(_, r)| r)
    }

    pub fn total(&self) -> f64 {
        self.rates.iter().map(|&(_, r)| r).sum()
    }
}

/// The set function `h` for fixed user weights and a capped rank.
pub struct Utility<'a> {
    rank: &'a dyn Rank,
    user_weights: Vec<f64>,
}

impl<'a> Utility<'a> {
    pub fn new(rank: &'a dyn Rank, user_weights: Vec<f64>) -> Result<Self> {
        let k = rank.ground().n_users();
        if user_weights.len() != k {
            return Err(Error::invalid(format!(
                "{} weights for {k} users",
                user_weights.len()
            )));
        }
        if user_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        Ok(Utility { rank, user_weights })
    }

    pub fn ground(&self) -> &GroundSet {
        self.rank.ground()
    }

    pub fn rank(&self) -> &'a dyn Rank {
        self.rank
    }

    pub fn user_weights(&self) -> &[f64] {
        &self.user_weights
    }

    pub fn weight(&self, id: ElementId) -> f64 {
        self.user_weights[self.ground().element(id).user]
    }

    /// Members of `subset` by non-increasing weight, ties by ascending id.
    pub fn weighted_order(&self, subset: &Subset) -> Vec<ElementId> {
        let mut order: Vec<ElementId> = subset.iter().collect();
        order.sort_by(|&a, &b| self.weight(b).total_cmp(&self.weight(a)).then(a.cmp(&b)));
        order
    }

    pub fn value(&self, subset: &Subset) -> Result<f64> {
        let order = self.weighted_order(subset);
        let mut total = 0.0;
        for k in 0..order.len() {
            let next = order.get(k + 1).map_or(0.0, |&e| self.weight(e));
            let step = self.weight(order[k]) - next;
            if step > 0.0 {
                total += step * self.rank.value(&Subset::new(order[..=k].to_vec()))?;
            }
        }
        Ok(total)
    }

    /// The corner-point rates attaining [`Utility::value`].
    pub fn corner_point_rates(&self, subset: &Subset) -> Result<RateTuple> {
        let order = self.weighted_order(subset);
        let mut rates = Vec::with_capacity(order.len());
        let mut prev = 0.0;
        for k in 0..order.len() {
            let cur = self.rank.value(&Subset::new(order[..=k].to_vec()))?;
            rates.push((order[k], (cur - prev).max(0.0)));
            prev = cur;
        }
        rates.sort_by_key(|&(id, _)| id);
        Ok(RateTuple { rates })
    }

    pub fn weighted_sum(&self, rates: &RateTuple) -> f64 {
        rates.rates.iter().map(|&(id, r)| self.weight(id) * r).sum()
    }
}
