//! Feature hashing of n-grams into a power-of-two number of bins.

use xxhash_rust::xxh64::{xxh64, Xxh64};

use crate::corpus::{NgramRange, TokenStream};

/// Seed of the n-gram hash. Part of the on-disk format.
pub const HASH_SEED: u64 = 0x5351_5446_2d31_0001;

pub const MIN_HASH_BITS: u32 = 10;
pub const MAX_HASH_BITS: u32 = 31;
pub const DEFAULT_HASH_BITS: u32 = 24;

/// Bin of one already-joined n-gram string.
pub fn hash_ngram(ngram: &str, mask: u64) -> u32 {
    (xxh64(ngram.as_bytes(), HASH_SEED) & mask) as u32
}

/// Bins of every n-gram of `stream`, in the same order as
/// [`crate::corpus::ngrams`], without materializing the joined strings.
pub fn hashed_ngrams(stream: &TokenStream, range: NgramRange, mask: u64) -> Vec<u32> {
    let stems: Vec<&[u8]> = stream.tokens.iter().map(|t| t.stem.as_bytes()).collect();
    let mut out = Vec::with_capacity(range.count_for(stems.len()));
    for n in range.lo..=range.hi {
        for window in stems.windows(n) {
            let mut h = Xxh64::new(HASH_SEED);
            h.update(window[0]);
            for s in &window[1..] {
                h.update(b" ");
                h.update(s);
            }
            out.push((h.digest() & mask) as u32);
        }
    }
    out
}

/// Sorted `(bin, count)` pairs.
pub fn bin_counts(mut bins: Vec<u32>) -> Vec<(u32, u32)> {
    bins.sort_unstable();
    let mut out: Vec<(u32, u32)> = Vec::new();
    for b in bins {
        match out.last_mut() {
            Some((last, c)) if *last == b => *c += 1,
            _ => out.push((b, 1)),
        }
    }
    out
}
