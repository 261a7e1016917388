//! Epoch shuffling. The order is a pure function of (seed, epoch), so a
//! resumed run replays exactly the same batches.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::train::sub_seed;

pub fn shuffled_indices(n: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 0x5348_5546, epoch));
    indices.shuffle(&mut rng);
    indices
}

pub fn epoch_batches(n: usize, batch: usize, seed: u64, epoch: u64) -> Vec<Vec<usize>> {
    assert!(batch >= 1);
    shuffled_indices(n, seed, epoch)
        .chunks(batch)
        .map(|c| c.to_vec())
        .collect()
}
