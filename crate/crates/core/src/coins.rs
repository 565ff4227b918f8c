//! Replayable randomness for the mechanisms.
//!
//! Every random choice comes from one of six named streams, each an
//! independent ChaCha8 stream keyed by the tape's seed. A stream yields the
//! same sequence for the same seed no matter what bidders report, so a test
//! can fix the coins and vary one report.
//!
//! Consumption order within each stream:
//! - `TopLevelBranch`: one fair coin; heads runs the second-price auction.
//! - `StatSampling`: one fair coin per bidder, in id order; heads puts the
//!   bidder in the statistics group.
//! - `PartitionPermutations`: one Fisher–Yates shuffle of the remaining
//!   bidders per partition round.
//! - `TreeParity`: one fair coin; heads picks the odd-bin tree.
//! - `StopCoin`: one `1/β` coin per learning iteration.
//! - `JStar`: one uniform draw from `0..α` per learning iteration, drawn even
//!   when the stop coin does not fire.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::price_tree::Parity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    TopLevelBranch = 0,
    StatSampling = 1,
    PartitionPermutations = 2,
    TreeParity = 3,
    StopCoin = 4,
    JStar = 5,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CoinTape {
    seed: u64,
}

impl CoinTape {
    pub fn new(seed: u64) -> Self {
        CoinTape { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream as u64);
        rng
    }

    pub fn second_price_branch(&self) -> bool {
        self.stream(Stream::TopLevelBranch).gen_bool(0.5)
    }

    /// Membership of each of `n` bidders in the statistics group.
    pub fn stat_sample(&self, n: usize) -> Vec<bool> {
        let mut rng = self.stream(Stream::StatSampling);
        (0..n).map(|_| rng.gen_bool(0.5)).collect()
    }

    pub fn parity(&self) -> Parity {
        if self.stream(Stream::TreeParity).gen_bool(0.5) {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn partition_rng(&self) -> PartitionCoins {
        PartitionCoins(self.stream(Stream::PartitionPermutations))
    }

    /// `(stop, j*)` for learning iterations `1..=beta`.
    pub fn iteration_coins(&self, beta: usize, alpha: usize) -> Vec<(bool, usize)> {
        let mut stop = self.stream(Stream::StopCoin);
        let mut pick = self.stream(Stream::JStar);
        (0..beta).map(|_| (stop.gen_ratio(1, beta as u32), pick.gen_range(0..alpha))).collect()
    }
}

/// The partition stream, handed out round by round.
pub struct PartitionCoins(ChaCha8Rng);

impl PartitionCoins {
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_replayable_and_distinct() {
        let tape = CoinTape::new(42);
        assert_eq!(tape.stat_sample(32), CoinTape::new(42).stat_sample(32));
        assert_ne!(tape.stat_sample(64), CoinTape::new(43).stat_sample(64));
        let a: u64 = tape.stream(Stream::StopCoin).gen();
        let b: u64 = tape.stream(Stream::JStar).gen();
        assert_ne!(a, b);
    }

    #[test]
    fn iteration_coins_prefix_stable_in_alpha() {
        let tape = CoinTape::new(7);
        let coins = tape.iteration_coins(3, 2);
        assert_eq!(coins.len(), 3);
        assert!(coins.iter().all(|&(_, j)| j < 2));
        assert!(tape.iteration_coins(1, 2).iter().all(|&(stop, _)| stop));
    }
}
