use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Deterministic, seedable random generator.
///
/// Independent child generators are derived from `(seed, label)` so that the
/// learner, memory, and stream never share a draw sequence: each consumer
/// gets its own ChaCha stream and advancing one never perturbs another.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(init: u64, bytes: &[u8]) -> u64 {
    let mut h = init ^ FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            inner,
            seed,
            stream,
        }
    }

    /// Derive an independent generator for `label`. Children start from a
    /// fresh counter, so the parent's position does not leak into them.
    pub fn child(&self, label: &str) -> Self {
        Self::with_stream(self.seed, fnv1a(self.stream, label.as_bytes()))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random()
    }

    /// Uniform draw in (0, 1); redraws the (measure-zero) exact zero.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let x = self.uniform();
            if x > 0.0 {
                return x;
            }
        }
    }

    /// Uniform integer in [1, n]; `n` must be at least 1.
    pub fn uniform_int_inclusive(&mut self, n: u64) -> u64 {
        debug_assert!(n >= 1);
        self.inner.random_range(1..=n)
    }

    /// Uniform index in [0, n).
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n >= 1);
        self.inner.random_range(0..n)
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_seed_and_label_give_equal_prefix() {
        let mut a = Rng::from_seed(42).child("stream");
        let mut b = Rng::from_seed(42).child("stream");
        for _ in 0..1_000_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn children_are_independent_of_parent_position() {
        let parent = Rng::from_seed(7);
        let mut sibling = parent.clone();
        for _ in 0..100 {
            sibling.uniform();
        }
        let mut c1 = parent.child("memory");
        let mut c2 = sibling.child("memory");
        for _ in 0..1000 {
            assert_eq!(c1.next_u64(), c2.next_u64());
        }
    }

    #[test]
    fn distinct_labels_diverge() {
        let root = Rng::from_seed(0);
        let mut a = root.child("a");
        let mut b = root.child("b");
        let equal = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert!(equal < 4);
    }

    #[test]
    fn uniform_open_is_strictly_positive() {
        let mut rng = Rng::from_seed(3);
        for _ in 0..10_000 {
            assert!(rng.uniform_open() > 0.0);
        }
    }
}
