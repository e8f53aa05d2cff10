//! Stable, seedable 64-bit hashing.
//!
//! `std`'s `DefaultHasher` is not guaranteed to be stable across releases, and
//! feature indices end up inside checkpoints, so the hash is fixed here:
//! FNV-1a over the bytes followed by a splitmix64 finalizer.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of the concatenation of `parts`, each followed by a unit separator.
pub fn hash_parts<'a, I>(seed: u64, parts: I) -> u64
where
    I: IntoIterator<Item = &'a str>,
{
    let mut h = FNV_OFFSET ^ splitmix64(seed);
    for part in parts {
        for &b in part.as_bytes().iter().chain(std::iter::once(&0x1f)) {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    splitmix64(h)
}

/// Derives an independent seed for a numbered sub-stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x5851_f42d_4c95_7f2d)))
}
