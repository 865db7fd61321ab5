//! Stable hashing used to derive RNG seeds from strings.
//!
//! SHA-256 keeps the mapping identical across platforms, Rust releases, and
//! process runs, unlike `std`'s `DefaultHasher`.

use sha2::{Digest, Sha256};

pub(crate) fn sha256_digest(bytes: &[u8]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().into()
}

/// First eight little-endian bytes of the SHA-256 digest.
pub(crate) fn stable_hash64(s: &str) -> u64 {
    let digest = sha256_digest(s.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Lowercase hex of the SHA-256 digest.
pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    sha256_digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
