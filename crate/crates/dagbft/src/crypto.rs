//! Pluggable block signing.
//!
//! The protocol only needs "sign bytes" and "verify bytes"; the scheme is
//! injected so the simulator can run a cheap deterministic keyed-hash
//! stand-in while production code would plug in real asymmetric signatures.

use sha2::{Digest as _, Sha256};

use crate::committee::AuthorityIndex;

pub trait BlockSigner {
    fn sign(&self, author: AuthorityIndex, bytes: &[u8]) -> Vec<u8>;
}

pub trait BlockVerifier {
    fn verify(&self, author: AuthorityIndex, bytes: &[u8], signature: &[u8]) -> bool;
}

/// Deterministic keyed-hash stand-in for a signature scheme.
///
/// Each authority's "key" is derived from a shared master secret; signing is
/// a single hash, so simulated runs are fast and byte-reproducible. This is
/// not a real signature scheme and must never leave test/simulation code.
#[derive(Clone, Debug)]
pub struct KeyedHashScheme {
    master: u64,
}

impl KeyedHashScheme {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    fn key(&self, author: AuthorityIndex) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"dagbft-key");
        h.update(self.master.to_le_bytes());
        h.update(author.0.to_le_bytes());
        h.finalize().into()
    }
}

impl Default for KeyedHashScheme {
    fn default() -> Self {
        Self::new(0)
    }
}

impl BlockSigner for KeyedHashScheme {
    fn sign(&self, author: AuthorityIndex, bytes: &[u8]) -> Vec<u8> {
        let mut h = Sha256::new();
        h.update(self.key(author));
        h.update(bytes);
        h.finalize().to_vec()
    }
}

impl BlockVerifier for KeyedHashScheme {
    fn verify(&self, author: AuthorityIndex, bytes: &[u8], signature: &[u8]) -> bool {
        self.sign(author, bytes) == signature
    }
}

/// Accepts anything; for unit tests that do not care about signatures.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoopVerifier;

impl BlockVerifier for NoopVerifier {
    fn verify(&self, _: AuthorityIndex, _: &[u8], _: &[u8]) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_hash_round_trip() {
        let scheme = KeyedHashScheme::new(7);
        let sig = scheme.sign(AuthorityIndex(2), b"payload");
        assert!(scheme.verify(AuthorityIndex(2), b"payload", &sig));
        assert!(!scheme.verify(AuthorityIndex(1), b"payload", &sig));
        assert!(!scheme.verify(AuthorityIndex(2), b"payloae", &sig));
    }
}
