//! An uncertified-DAG Byzantine consensus kernel with an owned-object fast
//! path, exercised through a deterministic discrete-event network simulator,
//! a DAG-scenario DSL, and safety-fuzzing utilities.
//!
//! The building blocks, bottom up:
//!
//! - [`block`] / [`dag`]: the single protocol message, its canonical byte
//!   encoding, the DAG store, and the structural patterns (support, votes,
//!   certificates, skips, links) every decision interprets.
//! - [`committer`]: the universal decision machinery — direct and indirect
//!   decision rules over proposer slots, commit-sequence extraction,
//!   deterministic linearization and commit timestamps.
//! - [`validator`] / [`wal`]: the per-validator event-driven state machine
//!   with threshold-clock round advancement, liveness timeouts, and
//!   append-only persistence with crash recovery.
//! - [`fastpath`]: consensusless finality for owned-object transactions
//!   woven into the same DAG, with epoch-change handling.
//! - [`sim`]: the deterministic virtual-time simulator, fault injection and
//!   the cross-validator safety checker.
//! - [`scenario`]: a line-oriented DSL to construct DAGs directly in tests.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod block;
pub mod committee;
pub mod crypto;
pub mod committer;
pub mod dag;
pub mod error;
pub mod test_support;

pub use block::{Block, BlockRef, Digest, Round, Transaction, TxPosition, TxVote};
pub use committee::{AuthorityIndex, Committee};
pub use dag::{BlockStore, DagState, PatternMemo, VerifyOutcome};
pub use error::{ConfigError, ParseError, RejectReason, WalError};
