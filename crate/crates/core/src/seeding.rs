//! Counter-based seed derivation. Per-sample randomness is keyed by a
//! master seed plus a stable string tag (sample id, stream name), never by
//! draw order, so parallel and serial runs consume identical streams.

use sha2::{Digest, Sha256};

/// A 64-bit stream seed derived from the master seed and a stable tag.
pub(crate) fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_tags_give_distinct_streams() {
        let a = derive_seed(42, "s-0001/l2");
        let b = derive_seed(42, "s-0002/l2");
        let c = derive_seed(43, "s-0001/l2");
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn derivation_is_stable() {
        assert_eq!(derive_seed(7, "x"), derive_seed(7, "x"));
    }
}
