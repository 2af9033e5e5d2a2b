use crate::error::{Error, Result};

/// Smallest smoothed throughput used when inverting.
pub const THROUGHPUT_FLOOR: f64 = 1e-6;

/// Exponentially averaged throughput and the weights derived from it.
///
/// The initial throughput of each user is the inverse of its starting weight,
/// and weights are rescaled to keep their starting sum, so a round without
/// any service leaves the weights as they were.
#[derive(Debug, Clone, PartialEq)]
pub struct PfState {
    tau: f64,
    throughput: Vec<f64>,
    weights: Vec<f64>,
    total: f64,
}

impl PfState {
    pub fn new(initial_weights: Vec<f64>, tau: f64) -> Result<Self> {
        if !(tau > 1.0) {
            return Err(Error::invalid(format!(
                "pf time constant must exceed 1, got {tau}"
            )));
        }
        if initial_weights
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let throughput = initial_weights
            .iter()
            .map(|w| 1.0 / w.max(THROUGHPUT_FLOOR))
            .collect();
        let total = initial_weights.iter().sum();
        Ok(PfState {
            tau,
            throughput,
            weights: initial_weights,
            total,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn throughput(&self) -> &[f64] {
        &self.throughput
    }

    pub fn update(&mut self, served: &[f64]) -> Result<()> {
        self.weights = update_pf_weights(&mut self.throughput, served, self.tau)?;
        let sum: f64 = self.weights.iter().sum();
        if sum > 0.0 {
            let scale = self.total / sum;
            self.weights.iter_mut().for_each(|w| *w *= scale);
        }
        Ok(())
    }
}

/// `T_k <- (1 - 1/tau) T_k + r_k / tau`, then `alpha_k = 1 / max(T_k, floor)`.
pub fn update_pf_weights(throughput: &mut [f64], served: &[f64], tau: f64) -> Result<Vec<f64>> {
    if served.len() != throughput.len() {
        return Err(Error::invalid(format!(
            "{} served rates for {} users",
            served.len(),
            throughput.len()
        )));
    }
    if !(tau > 1.0) {
        return Err(Error::invalid(format!(
            "pf time constant must exceed 1, got {tau}"
        )));
    }
    for (t, &r) in throughput.iter_mut().zip(served) {
        *t = (1.0 - 1.0 / tau) * *t + r.max(0.0) / tau;
    }
    Ok(throughput
        .iter()
        .map(|t| 1.0 / t.max(THROUGHPUT_FLOOR))
        .collect())
}
