//! Committee membership and quorum arithmetic.
//!
//! All authorities carry equal voting power. The committee size is pinned to
//! `n = 3f + 1`: this is the one place where the fault bound, the quorum
//! threshold (`2f + 1`) and the validity threshold (`f + 1`) are derived, so
//! it is deliberately small and heavily asserted.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Index of an authority within the committee, `0..n`.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize, Debug,
)]
pub struct AuthorityIndex(pub u32);

impl AuthorityIndex {
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AuthorityIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.0)
    }
}

/// A committee of `n = 3f + 1` equally weighted authorities.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Committee {
    size: usize,
}

impl Committee {
    /// Builds a committee of `size` authorities. Sizes that are not of the
    /// form `3f + 1` (with `f >= 1`) are rejected.
    pub fn new(size: usize) -> Result<Self, ConfigError> {
        if size < 4 || size % 3 != 1 {
            return Err(ConfigError::BadCommitteeSize(size));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Maximum number of Byzantine authorities tolerated.
    pub fn f(&self) -> usize {
        (self.size - 1) / 3
    }

    /// Quorum threshold `2f + 1`.
    pub fn quorum_threshold(&self) -> usize {
        2 * self.f() + 1
    }

    /// Validity threshold `f + 1`.
    pub fn validity_threshold(&self) -> usize {
        self.f() + 1
    }

    pub fn contains(&self, authority: AuthorityIndex) -> bool {
        authority.as_usize() < self.size
    }

    pub fn authorities(&self) -> impl Iterator<Item = AuthorityIndex> {
        (0..self.size as u32).map(AuthorityIndex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        let c = Committee::new(4).unwrap();
        assert_eq!(c.f(), 1);
        assert_eq!(c.quorum_threshold(), 3);
        assert_eq!(c.validity_threshold(), 2);

        let c = Committee::new(7).unwrap();
        assert_eq!(c.f(), 2);
        assert_eq!(c.quorum_threshold(), 5);
        assert_eq!(c.validity_threshold(), 3);

        let c = Committee::new(10).unwrap();
        assert_eq!(c.f(), 3);
        assert_eq!(c.quorum_threshold(), 7);
        assert_eq!(c.validity_threshold(), 4);
    }

    #[test]
    fn rejects_sizes_not_3f_plus_1() {
        for bad in [0, 1, 2, 3, 5, 6, 8, 9, 11, 12] {
            assert!(Committee::new(bad).is_err(), "size {bad} must be rejected");
        }
        for good in [4, 7, 10, 13, 100] {
            assert!(Committee::new(good).is_ok(), "size {good} must be accepted");
        }
    }
}
