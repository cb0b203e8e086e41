//! FNV-1a 64-bit hashing.
//!
//! Used as the block checksum in the block store, the shuffle partitioner
//! in the map/reduce engine, and the cloud object checksum. FNV-1a is fixed
//! here (rather than `std`'s unspecified hasher) so that checksums and
//! partition assignments are identical across platforms and versions.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a 64-bit hash of `data`.
pub fn fnv1a_64(data: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &byte in data {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vectors() {
        // Reference values from the published FNV test suite.
        assert_eq!(fnv1a_64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a_64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a_64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn distinct_inputs_differ() {
        assert_ne!(fnv1a_64(b"block-0"), fnv1a_64(b"block-1"));
    }
}
