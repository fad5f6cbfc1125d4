//! Seeded label permutations.
//!
//! Every random row draws from its own generator, keyed by `(seed, row)`
//! alone, so rows can be produced in any order or in parallel and still be
//! identical from run to run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::grouping::Grouping;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed ^ stream))
}

/// In-place Fisher–Yates shuffle.
pub fn fisher_yates<T, R: Rng + ?Sized>(values: &mut [T], rng: &mut R) {
    for i in (1..values.len()).rev() {
        let j = rng.gen_range(0..=i);
        values.swap(i, j);
    }
}

/// `n_perms` label rows stored contiguously. Row 0 is the observed grouping.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationBatch {
    n_perms: usize,
    n_dims: usize,
    labels: Vec<u32>,
    source_seed: u64,
}

impl PermutationBatch {
    pub fn n_perms(&self) -> usize {
        self.n_perms
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn source_seed(&self) -> u64 {
        self.source_seed
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn row(&self, p: usize) -> &[u32] {
        &self.labels[p * self.n_dims..(p + 1) * self.n_dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.labels.chunks_exact(self.n_dims)
    }

    /// Builds a batch from explicit rows (each a full label array).
    ///
    /// Used for hand-built workloads; rows are not checked against each
    /// other.
    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R], source_seed: u64) -> Self {
        assert!(!rows.is_empty(), "a batch needs at least the observed row");
        let n_dims = rows[0].as_ref().len();
        let mut labels = Vec::with_capacity(rows.len() * n_dims);
        for r in rows {
            assert_eq!(r.as_ref().len(), n_dims, "all rows must have the same length");
            labels.extend_from_slice(r.as_ref());
        }
        Self { n_perms: rows.len(), n_dims, labels, source_seed }
    }
}

/// Builds a batch of `n_extra + 1` rows: the observed labels followed by
/// `n_extra` uniform shuffles of them.
///
/// Row `i` (for `i >= 1`) is shuffled with [`stream_rng`]`(seed, i)`.
pub fn generate_batch(grouping: &Grouping, n_extra: usize, seed: u64) -> PermutationBatch {
    let observed = grouping.labels();
    let n_dims = observed.len();
    let n_perms = n_extra + 1;
    let mut labels = vec![0u32; n_perms * n_dims];
    labels
        .par_chunks_mut(n_dims)
        .enumerate()
        .for_each(|(row, out)| {
            out.copy_from_slice(observed);
            if row > 0 {
                fisher_yates(out, &mut stream_rng(seed, row as u64));
            }
        });
    PermutationBatch { n_perms, n_dims, labels, source_seed: seed }
}
