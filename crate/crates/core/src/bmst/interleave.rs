use rand::Rng;

use crate::rng::{substream, Purpose};

/// `m` uniformly random permutations of `0..n`.
///
/// Interleaver `i` (1-based) is a Fisher-Yates shuffle of the identity
/// driven by ChaCha8 substream `(seed, Interleaver, i)`, swapping position
/// `j` (from `n - 1` down to 1) with a uniform index in `0..=j`.
pub fn make_interleavers(seed: u64, m: usize, n: usize) -> Vec<Vec<u32>> {
    (1..=m)
        .map(|i| {
            let mut rng = substream(seed, Purpose::Interleaver, i as u64, 0);
            let mut perm: Vec<u32> = (0..n as u32).collect();
            for j in (1..n).rev() {
                let k = rng.random_range(0..=j);
                perm.swap(j, k);
            }
            perm
        })
        .collect()
}
