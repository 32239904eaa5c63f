//! Permutations, draws without replacement, and uniform subset indicators.
//! Each produces a negatively associated vector.

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};

/// Uniformly random permutation of `values`.
pub fn sample_permutation<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> Vec<f64> {
    let mut out = values.to_vec();
    out.shuffle(rng);
    out
}

/// `k` draws without replacement from `bag`, in draw order.
pub fn sample_without_replacement<R: Rng + ?Sized>(
    bag: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if k > bag.len() {
        return Err(Error::domain(format!(
            "cannot draw {k} items from a bag of {}",
            bag.len()
        )));
    }
    let mut scratch = bag.to_vec();
    let mut out = vec![0.0; k];
    draw_without_replacement(rng, &mut scratch, &mut out);
    Ok(out)
}

/// `scratch` holds the bag in any order and is permuted in place.
pub(crate) fn draw_without_replacement<R: Rng + ?Sized>(
    rng: &mut R,
    scratch: &mut [f64],
    out: &mut [f64],
) {
    let (chosen, _) = scratch.partial_shuffle(rng, out.len());
    out.copy_from_slice(chosen);
}

/// Indicator of a uniformly random `m`-subset of `{1,…,K}`.
///
/// This is one ball in each of `m` distinct bins, all `C(K,m)` placements
/// equally likely; it is not the multinomial count vector.
pub fn sample_multinomial_indicator<R: Rng + ?Sized>(
    m: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<u8>> {
    if m > k {
        return Err(Error::domain(format!("m={m} exceeds K={k}")));
    }
    let mut out = vec![0.0; k];
    draw_indicator(rng, m, &mut out);
    Ok(out.iter().map(|&x| x as u8).collect())
}

pub(crate) fn draw_indicator<R: Rng + ?Sized>(rng: &mut R, m: usize, out: &mut [f64]) {
    out.fill(0.0);
    for i in index::sample(rng, out.len(), m) {
        out[i] = 1.0;
    }
}
