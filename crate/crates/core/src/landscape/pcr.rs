use rand::Rng;

use super::sequence::{Alphabet, Sequence};
use super::LandscapeError;
use crate::seed::rng_for;

/// In-silico error-prone PCR: each position of `wt` is independently
/// redrawn uniformly from the whole alphabet with probability `epsilon`
/// (the redraw may return the original symbol).
pub fn error_prone_pcr(
    wt: &Sequence,
    alphabet: &Alphabet,
    epsilon: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<Sequence>, LandscapeError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(LandscapeError::InvalidRate(epsilon));
    }
    wt.check(alphabet, wt.len())?;
    let a = alphabet.len() as u8;
    let mut rng = rng_for(seed, "error-prone-pcr", 0);
    Ok((0..n)
        .map(|_| {
            let mut s = wt.clone();
            for sym in s.indices_mut() {
                if rng.random::<f64>() < epsilon {
                    *sym = rng.random_range(0..a);
                }
            }
            s
        })
        .collect())
}
