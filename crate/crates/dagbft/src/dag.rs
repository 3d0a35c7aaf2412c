//! The DAG store and the structural pattern primitives every other module
//! interprets: support, votes, certificates, skip patterns and causal links.
//!
//! Pattern results are pure functions of a block's immutable causal history,
//! so they never change as the DAG grows. [`PatternMemo`] exploits that to
//! cache them across repeated queries; the public one-shot functions pass a
//! throwaway memo.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::block::{Block, BlockRef, Round};
use crate::committee::{AuthorityIndex, Committee};
use crate::error::RejectReason;

/// Read access to a set of blocks closed under parents.
///
/// Implemented by the concrete [`DagState`] and by filtered sub-views used
/// to replay decisions from another validator's perspective.
pub trait BlockStore {
    fn get(&self, reference: &BlockRef) -> Option<&Block>;
    /// References of all stored blocks of a round, in `BlockRef` order.
    fn round_refs(&self, round: Round) -> Vec<BlockRef>;
    /// References stored for one `(authority, round)` slot, in order.
    /// More than one entry means a recorded equivocation.
    fn slot_refs(&self, authority: AuthorityIndex, round: Round) -> Vec<BlockRef>;
    fn highest_round(&self) -> Round;

    fn contains(&self, reference: &BlockRef) -> bool {
        self.get(reference).is_some()
    }
}

/// Store of all accepted blocks, indexed for pattern queries and causal
/// traversal. Closed under parents and append-only: buffering of incomplete
/// blocks happens in the validator, never here.
#[derive(Clone, Debug)]
pub struct DagState {
    blocks: BTreeMap<BlockRef, Block>,
    by_round: BTreeMap<Round, BTreeSet<BlockRef>>,
    by_slot: BTreeMap<(AuthorityIndex, Round), BTreeSet<BlockRef>>,
    highest_accepted_round: Round,
}

impl DagState {
    /// Creates a store pre-seeded with the implicit genesis block of every
    /// authority in the committee.
    pub fn new(committee: &Committee) -> Self {
        let mut dag = Self {
            blocks: BTreeMap::new(),
            by_round: BTreeMap::new(),
            by_slot: BTreeMap::new(),
            highest_accepted_round: 0,
        };
        for authority in committee.authorities() {
            dag.insert_unchecked(Block::genesis(authority));
        }
        dag
    }

    /// Inserts a block whose parents are all present. Panics otherwise:
    /// parent-completeness is the caller's (validator's) contract.
    pub fn insert(&mut self, block: Block) {
        for parent in block.parents() {
            assert!(
                self.blocks.contains_key(parent),
                "dag must stay closed under parents: {:?} missing {:?}",
                block.reference(),
                parent,
            );
        }
        self.insert_unchecked(block);
    }

    fn insert_unchecked(&mut self, block: Block) {
        let reference = block.reference();
        if self.blocks.insert(reference, block).is_some() {
            return; // duplicate accept, idempotent
        }
        self.by_round.entry(reference.round).or_default().insert(reference);
        self.by_slot.entry((reference.author, reference.round)).or_default().insert(reference);
        self.highest_accepted_round = self.highest_accepted_round.max(reference.round);
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.values()
    }

    pub fn refs(&self) -> impl Iterator<Item = &BlockRef> {
        self.blocks.keys()
    }

    /// Blocks with no accepted children, in reference order.
    pub fn tips(&self) -> Vec<BlockRef> {
        let mut referenced: HashSet<BlockRef> = HashSet::new();
        for block in self.blocks.values() {
            referenced.extend(block.parents().iter().copied());
        }
        self.blocks.keys().filter(|r| !referenced.contains(r)).copied().collect()
    }

    /// Number of distinct authors with an accepted block at `round`.
    pub fn distinct_authors_at_round(&self, round: Round) -> usize {
        self.by_round
            .get(&round)
            .map(|refs| refs.iter().map(|r| r.author).collect::<BTreeSet<_>>().len())
            .unwrap_or(0)
    }
}

impl BlockStore for DagState {
    fn get(&self, reference: &BlockRef) -> Option<&Block> {
        self.blocks.get(reference)
    }

    fn round_refs(&self, round: Round) -> Vec<BlockRef> {
        self.by_round.get(&round).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    fn slot_refs(&self, authority: AuthorityIndex, round: Round) -> Vec<BlockRef> {
        self.by_slot
            .get(&(authority, round))
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    fn highest_round(&self) -> Round {
        self.highest_accepted_round
    }
}

/// A causally-restricted view over a base store: only blocks whose reference
/// is in `included` are visible. Used by the brute-force view-enumeration
/// oracle and the multi-view checker.
pub struct DagView<'a, S: BlockStore> {
    base: &'a S,
    included: &'a BTreeSet<BlockRef>,
}

impl<'a, S: BlockStore> DagView<'a, S> {
    /// `included` must be closed under parents with respect to `base`.
    pub fn new(base: &'a S, included: &'a BTreeSet<BlockRef>) -> Self {
        Self { base, included }
    }
}

impl<S: BlockStore> BlockStore for DagView<'_, S> {
    fn get(&self, reference: &BlockRef) -> Option<&Block> {
        self.included.contains(reference).then(|| self.base.get(reference)).flatten()
    }

    fn round_refs(&self, round: Round) -> Vec<BlockRef> {
        self.base.round_refs(round).into_iter().filter(|r| self.included.contains(r)).collect()
    }

    fn slot_refs(&self, authority: AuthorityIndex, round: Round) -> Vec<BlockRef> {
        self.base
            .slot_refs(authority, round)
            .into_iter()
            .filter(|r| self.included.contains(r))
            .collect()
    }

    fn highest_round(&self) -> Round {
        self.included.iter().next_back().map(|r| r.round).unwrap_or(0)
    }
}

/// Outcome of block verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyOutcome {
    Accept,
    Reject(RejectReason),
    /// Timestamp is slightly in the future; retry at the given virtual time.
    Suspend { until: u64 },
}

/// Timestamp tolerances for block verification, in virtual milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimestampConfig {
    /// Future skew accepted outright.
    pub drift_tolerance: u64,
    /// Future skew beyond which a block is rejected rather than suspended.
    pub max_suspend: u64,
}

impl Default for TimestampConfig {
    fn default() -> Self {
        Self { drift_tolerance: 500, max_suspend: 5000 }
    }
}

/// Structural and timestamp validity of a block against a parent-complete
/// store. The signature is the caller's responsibility; `expected_epoch` is
/// the local epoch (blocks one epoch ahead or behind are tolerated across
/// the reconfiguration boundary).
pub fn verify_block(
    block: &Block,
    committee: &Committee,
    dag: &impl BlockStore,
    now: u64,
    ts_config: &TimestampConfig,
    expected_epoch: u64,
) -> VerifyOutcome {
    use VerifyOutcome::*;

    if block.epoch().abs_diff(expected_epoch) > 1 {
        return Reject(RejectReason::WrongEpoch);
    }

    if block.is_genesis() {
        // Genesis blocks are implicit; an incoming one is accepted only if
        // it is byte-identical to the locally derived block.
        return if *block == Block::genesis(block.author()) {
            Accept
        } else {
            Reject(RejectReason::MissingOwnParentFirst)
        };
    }

    let Some(first) = block.parents().first() else {
        return Reject(RejectReason::MissingOwnParentFirst);
    };
    if first.author != block.author() || first.round >= block.round() {
        return Reject(RejectReason::MissingOwnParentFirst);
    }

    let mut seen = HashSet::with_capacity(block.parents().len());
    let mut previous_round_authors = BTreeSet::new();
    let mut max_parent_timestamp = 0;
    for parent in block.parents() {
        if parent.round >= block.round() {
            return Reject(RejectReason::ParentRoundNotLower);
        }
        if !seen.insert(*parent) {
            return Reject(RejectReason::DuplicateParents);
        }
        if parent.round + 1 == block.round() {
            previous_round_authors.insert(parent.author);
        }
        if let Some(parent_block) = dag.get(parent) {
            max_parent_timestamp = max_parent_timestamp.max(parent_block.timestamp());
        }
    }
    if previous_round_authors.len() < committee.quorum_threshold() {
        return Reject(RejectReason::InsufficientPreviousRoundParents);
    }

    if block.timestamp() < max_parent_timestamp {
        return Reject(RejectReason::TimestampBelowParent);
    }
    if block.timestamp() > now + ts_config.drift_tolerance {
        return if block.timestamp() <= now + ts_config.max_suspend {
            Suspend { until: block.timestamp() - ts_config.drift_tolerance }
        } else {
            Reject(RejectReason::TimestampTooFarFuture)
        };
    }

    Accept
}

/// Memoized pattern results. Sound because every cached relation is a pure
/// function of immutable causal history (pattern monotonicity).
#[derive(Default, Debug)]
pub struct PatternMemo {
    votes: HashMap<(BlockRef, BlockRef), bool>,
    certificates: HashMap<(BlockRef, BlockRef), bool>,
    links: HashMap<(BlockRef, BlockRef), bool>,
}

impl PatternMemo {
    pub fn is_vote(&mut self, dag: &impl BlockStore, voter: &BlockRef, candidate: &Block) -> bool {
        if let Some(&cached) = self.votes.get(&(*voter, candidate.reference())) {
            return cached;
        }
        let result = supported_block(dag, *voter, candidate.author(), candidate.round())
            == Some(candidate.reference());
        self.votes.insert((*voter, candidate.reference()), result);
        result
    }

    pub fn is_certificate(
        &mut self,
        dag: &impl BlockStore,
        cert: &Block,
        candidate: &Block,
        committee: &Committee,
    ) -> bool {
        let key = (cert.reference(), candidate.reference());
        if let Some(&cached) = self.certificates.get(&key) {
            return cached;
        }
        let mut voting_authors = BTreeSet::new();
        for parent in cert.parents() {
            if self.is_vote(dag, parent, candidate) {
                voting_authors.insert(parent.author);
            }
        }
        let result = voting_authors.len() >= committee.quorum_threshold();
        self.certificates.insert(key, result);
        result
    }

    pub fn linked(&mut self, dag: &impl BlockStore, old: &BlockRef, new: &BlockRef) -> bool {
        let key = (*old, *new);
        if let Some(&cached) = self.links.get(&key) {
            return cached;
        }
        let result = linked_uncached(dag, old, new);
        self.links.insert(key, result);
        result
    }
}

/// The unique block of `(target_author, target_round)` reached first by the
/// depth-first search starting at `start` that visits parents in their
/// stored list order, or `None` if no such block is reachable.
///
/// The parent list order is authoritative: with equivocating ancestors the
/// result depends on it, and every honest replica must walk the same order.
pub fn supported_block(
    dag: &impl BlockStore,
    start: BlockRef,
    target_author: AuthorityIndex,
    target_round: Round,
) -> Option<BlockRef> {
    if target_round >= start.round {
        return None;
    }
    // Iterative preorder DFS with an explicit stack. A node's identity is
    // checked when first reached as a parent; exploring an already-visited
    // subtree can only repeat an unsuccessful search, so it is skipped.
    let mut visited: HashSet<BlockRef> = HashSet::new();
    let mut stack: Vec<BlockRef> = vec![start];
    while let Some(current) = stack.pop() {
        let block = dag.get(&current)?;
        // Parents are pushed in reverse so the leftmost parent is explored
        // first, matching the recursive order.
        for parent in block.parents().iter().rev() {
            if parent.author == target_author && parent.round == target_round {
                return Some(*parent);
            }
        }
        for parent in block.parents().iter().rev() {
            // A subtree rooted at or below the target round cannot contain
            // a block of the target round in its strict ancestry.
            if parent.round > target_round && visited.insert(*parent) {
                stack.push(*parent);
            }
        }
    }
    None
}

/// True iff `voter` supports exactly `candidate` at the candidate's slot.
pub fn is_vote(dag: &impl BlockStore, voter: &Block, candidate: &Block) -> bool {
    PatternMemo::default().is_vote(dag, &voter.reference(), candidate)
}

/// True iff at least `2f+1` distinct authors among `cert`'s parents vote
/// for `candidate`.
pub fn is_certificate(
    dag: &impl BlockStore,
    cert: &Block,
    candidate: &Block,
    committee: &Committee,
) -> bool {
    PatternMemo::default().is_certificate(dag, cert, candidate, committee)
}

/// True iff `old` is in the reflexive transitive parent closure of `new`.
pub fn linked(dag: &impl BlockStore, old: &BlockRef, new: &BlockRef) -> bool {
    linked_uncached(dag, old, new)
}

fn linked_uncached(dag: &impl BlockStore, old: &BlockRef, new: &BlockRef) -> bool {
    if old == new {
        return true;
    }
    if old.round >= new.round {
        return false;
    }
    let mut frontier = vec![*new];
    let mut visited: HashSet<BlockRef> = HashSet::new();
    while let Some(current) = frontier.pop() {
        let Some(block) = dag.get(&current) else { continue };
        for parent in block.parents() {
            if parent == old {
                return true;
            }
            if parent.round > old.round && visited.insert(*parent) {
                frontier.push(*parent);
            }
        }
    }
    false
}

/// The reflexive causal history of `start`, as a set of references.
pub fn causal_history(dag: &impl BlockStore, start: BlockRef) -> BTreeSet<BlockRef> {
    let mut history = BTreeSet::new();
    let mut frontier = vec![start];
    while let Some(current) = frontier.pop() {
        if !history.insert(current) {
            continue;
        }
        if let Some(block) = dag.get(&current) {
            frontier.extend(block.parents().iter().copied());
        }
    }
    history
}
