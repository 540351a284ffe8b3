use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives independent, reproducible generator streams from one root seed.
///
/// Each use site (initialization, shuffling, splitting, ...) asks for its own
/// labelled stream, so adding draws in one place never shifts another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    root: u64,
}

impl SeedStream {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn rng(&self, label: &str) -> ChaCha8Rng {
        self.rng_indexed(label, 0)
    }

    pub fn rng_indexed(&self, label: &str, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root);
        rng.set_stream(fnv1a(label.as_bytes()) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        rng
    }

    /// A child stream namespace, e.g. one per domain.
    pub fn derive(&self, label: &str) -> SeedStream {
        SeedStream {
            root: self.root ^ fnv1a(label.as_bytes()).rotate_left(17),
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
