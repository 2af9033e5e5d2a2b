use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ground_set::ChannelSet;
use crate::linalg::CMat;

/// Seed for one scheduling interval. Every SNR point of a sweep reuses the
/// same interval seeds.
pub fn interval_seed(seed: u64, interval: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(interval as u64);
    rng.next_u64()
}

/// I.i.d. Rayleigh fading: every entry is CN(0, snr_linear), user-major then
/// RB, each matrix `n_r x n_t`.
pub fn generate_channels(
    seed: u64,
    n_users: usize,
    n_rbs: usize,
    n_r: usize,
    n_t: usize,
    snr_linear: f64,
) -> Result<ChannelSet> {
    if !(snr_linear.is_finite() && snr_linear >= 0.0) {
        return Err(Error::invalid(format!(
            "snr must be finite and nonnegative, got {snr_linear}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amplitude = (snr_linear / 2.0).sqrt();
    let mut draw = || {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * amplitude
    };
    let matrices = (0..n_users * n_rbs)
        .map(|_| CMat::from_row_major(n_r, n_t, (0..n_r * n_t).map(|_| draw()).collect()))
        .collect::<Result<Vec<_>>>()?;
    ChannelSet::new(n_users, n_rbs, matrices)
}
