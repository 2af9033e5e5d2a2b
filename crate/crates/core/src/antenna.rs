//! Transmit antenna selection: pick `C` columns of `H` maximizing
//! `log2 det(I + H_S H_S^H)`.
//!
//! This is the scheduler restricted to one RB, one antenna per "user",
//! unit powers and a single cardinality row, so the greedy here carries the
//! same `1/2` guarantee.

use num_complex::Complex64;

use crate::constraints::KnapsackSystem;
use crate::error::{Error, Result};
use crate::ground_set::{ChannelSet, Codebook, GroundSet, UserProfile};
use crate::linalg::{log2_det_hpd, CMat};

pub const MAX_EXACT_ANTENNAS: usize = 20;

#[derive(Debug, Clone)]
pub struct AntennaSelectionInstance {
    channel: CMat,
    max_selected: usize,
    snr: f64,
    scaled: CMat,
}

impl AntennaSelectionInstance {
    /// `channel` is `n_r x K`; the columns are scaled by `sqrt(snr / C)`.
    pub fn new(channel: CMat, max_selected: usize, snr: f64) -> Result<Self> {
        if max_selected == 0 || max_selected > channel.cols() {
            return Err(Error::invalid(format!(
                "cardinality {max_selected} must lie in 1..={}",
                channel.cols()
            )));
        }
        if !(snr > 0.0) || !snr.is_finite() {
            return Err(Error::invalid("snr must be positive"));
        }
        if !channel.is_finite() {
            return Err(Error::Numeric("channel has non-finite entries".into()));
        }
        let scaled = channel.scale((snr / max_selected as f64).sqrt());
        Ok(AntennaSelectionInstance {
            channel,
            max_selected,
            snr,
            scaled,
        })
    }

    pub fn channel(&self) -> &CMat {
        &self.channel
    }

    pub fn scaled_channel(&self) -> &CMat {
        &self.scaled
    }

    pub fn max_selected(&self) -> usize {
        self.max_selected
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    pub fn n_antennas(&self) -> usize {
        self.channel.cols()
    }

    /// `log2 det(I + H_S H_S^H)` on the scaled channel, columns in `selected`
    /// order.
    pub fn value(&self, selected: &[usize]) -> Result<f64> {
        if selected.is_empty() {
            return Ok(0.0);
        }
        let mut m = CMat::identity(self.scaled.rows());
        for &k in selected {
            m.add_scaled(&self.scaled.column(k).gram(), 1.0);
        }
        log2_det_hpd(&m)
    }

    /// The same value through the `|S| x |S|` principal minor of `I + H^H H`.
    pub fn value_by_principal_minor(&self, selected: &[usize]) -> Result<f64> {
        if selected.is_empty() {
            return Ok(0.0);
        }
        let mut gram = self.scaled.adjoint().matmul(&self.scaled)?;
        for i in 0..gram.rows() {
            gram[(i, i)] += Complex64::new(1.0, 0.0);
        }
        log2_det_hpd(&gram.principal_submatrix(selected))
    }

    /// The equivalent scheduling problem: one single-antenna user per column,
    /// one RB, unit power, and at most `C` users scheduled.
    pub fn as_scheduling_problem(&self) -> Result<(GroundSet, ChannelSet, KnapsackSystem)> {
        let k = self.n_antennas();
        let ground = GroundSet::build(
            Codebook::scalar(),
            1,
            vec![UserProfile::backlogged(1.0, 1); k],
        )?;
        let channels = ChannelSet::new(k, 1, (0..k).map(|j| self.scaled.column(j)).collect())?;
        let knapsacks = KnapsackSystem::max_scheduled(ground.len(), self.max_selected as u32)?;
        Ok((ground, channels, knapsacks))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntennaSelection {
    /// Selected column indices, ascending.
    pub columns: Vec<usize>,
    pub value: f64,
}

/// Adds the best column one at a time until `C` are chosen or no column
/// increases the log-determinant.
pub fn antenna_greedy(instance: &AntennaSelectionInstance) -> Result<AntennaSelection> {
    let mut columns: Vec<usize> = Vec::new();
    let mut value = 0.0;
    while columns.len() < instance.max_selected {
        let mut best: Option<(f64, usize, f64)> = None;
        for k in (0..instance.n_antennas()).filter(|k| !columns.contains(k)) {
            let mut trial = columns.clone();
            trial.push(k);
            trial.sort_unstable();
            let v = instance.value(&trial)?;
            let gain = v - value;
            if best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, k, v));
            }
        }
        match best {
            Some((gain, k, v)) if gain > 0.0 => {
                columns.push(k);
                columns.sort_unstable();
                value = v;
            }
            _ => break,
        }
    }
    Ok(AntennaSelection { columns, value })
}

/// Best `C`-subset of columns by exhaustive search over principal minors of
/// `I + H^H H`. Ties go to the lexicographically first subset.
pub fn antenna_exact(instance: &AntennaSelectionInstance) -> Result<AntennaSelection> {
    let k = instance.n_antennas();
    Error::check_capacity("exact antenna selection", k, MAX_EXACT_ANTENNAS)?;
    let c = instance.max_selected;
    let mut comb: Vec<usize> = (0..c).collect();
    let mut best: Option<AntennaSelection> = None;
    loop {
        let v = instance.value_by_principal_minor(&comb)?;
        if best.as_ref().is_none_or(|b| v > b.value) {
            best = Some(AntennaSelection {
                columns: comb.clone(),
                value: v,
            });
        }
        if !next_combination(&mut comb, k) {
            break;
        }
    }
    Ok(best.expect("at least one subset"))
}

fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let c = comb.len();
    let Some(i) = (0..c).rev().find(|&i| comb[i] < n - c + i) else {
        return false;
    };
    comb[i] += 1;
    for j in i + 1..c {
        comb[j] = comb[j - 1] + 1;
    }
    true
}
