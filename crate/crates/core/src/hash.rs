//! Fixed 64-bit hashes shared by the on-disk formats and the mock encoder.
//!
//! All of these are part of file formats (index checksums, cache keys,
//! transcript keys, mock embedding layout) and must never change.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv1a64_extend(FNV_OFFSET, bytes)
}

pub(crate) fn fnv1a64_extend(mut state: u64, bytes: &[u8]) -> u64 {
    for &byte in bytes {
        state ^= u64::from(byte);
        state = state.wrapping_mul(FNV_PRIME);
    }
    state
}

/// Incremental FNV-1a, for checksumming a file while it is written or read.
#[derive(Debug, Clone, Copy)]
pub struct Fnv1a64(u64);

impl Default for Fnv1a64 {
    fn default() -> Self {
        Fnv1a64(FNV_OFFSET)
    }
}

impl Fnv1a64 {
    pub fn update(&mut self, bytes: &[u8]) {
        self.0 = fnv1a64_extend(self.0, bytes);
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}

pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a of `text`, seeded by xor and finalized with splitmix64.
pub(crate) fn seeded_hash(text: &str, seed: u64) -> u64 {
    splitmix64(fnv1a64(text.as_bytes()) ^ seed)
}

/// Key of a chat request in a transcript: FNV-1a over `system ‖ 0x00 ‖ user`.
pub fn request_hash(system: &str, user: &str) -> u64 {
    let state = fnv1a64(system.as_bytes());
    let state = fnv1a64_extend(state, &[0]);
    fnv1a64_extend(state, user.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn incremental_matches_one_shot() {
        let mut h = Fnv1a64::default();
        h.update(b"foo");
        h.update(b"bar");
        assert_eq!(h.finish(), fnv1a64(b"foobar"));
    }

    #[test]
    fn request_hash_separates_fields() {
        assert_ne!(request_hash("ab", "c"), request_hash("a", "bc"));
        assert_eq!(request_hash("a", "b"), fnv1a64(b"a\0b"));
    }
}
