//! The universal decision machinery: direct and indirect decision rules over
//! proposer slots, commit-sequence extraction, deterministic linearization
//! and commit timestamps.
//!
//! Every round carries `num_of_proposers` slots in a deterministic total
//! order (ascending round, then ascending proposer offset, offset 0 being
//! the primary). A slot is decided `ToCommit` by the direct rule when `2f+1`
//! distinct authors produce certificates for its proposal at the decision
//! round, `ToSkip` when `2f+1` distinct authors' voting-round blocks ignore
//! the proposer, and otherwise falls back to the indirect rule through the
//! first later slot — the anchor — that is not already skipped. The
//! committable prefix is everything decided below the first undecided slot.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::block::{Block, BlockRef, Round};
use crate::committee::{AuthorityIndex, Committee};
use crate::dag::{causal_history, BlockStore, PatternMemo};
use crate::error::ConfigError;

/// A proposer slot: one authority's chance to have a block committed at a
/// round.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Slot {
    pub round: Round,
    pub authority: AuthorityIndex,
}

impl Slot {
    pub fn new(round: Round, authority: AuthorityIndex) -> Self {
        Self { round, authority }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.authority, self.round)
    }
}

/// Decision state of a proposer slot. Once a slot leaves `Undecided` in a
/// validator's view it never changes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SlotStatus {
    Undecided,
    ToCommit(BlockRef),
    ToSkip(Slot),
}

impl SlotStatus {
    pub fn is_decided(&self) -> bool {
        !matches!(self, SlotStatus::Undecided)
    }
}

/// Deterministic map from `(round, proposer offset)` to an authority.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeaderSchedule {
    /// The primary rotates every round: `(round + offset) mod n`.
    RoundRobin { n: usize },
    /// Slot order is the same every round: `offset mod n`.
    Fixed { n: usize },
}

impl LeaderSchedule {
    pub fn round_robin(committee: &Committee) -> Self {
        Self::RoundRobin { n: committee.size() }
    }

    pub fn fixed(committee: &Committee) -> Self {
        Self::Fixed { n: committee.size() }
    }

    pub fn proposer(&self, round: Round, offset: usize) -> AuthorityIndex {
        match self {
            Self::RoundRobin { n } => {
                AuthorityIndex(((round + offset as u64) % *n as u64) as u32)
            }
            Self::Fixed { n } => AuthorityIndex((offset % n) as u32),
        }
    }

    /// The authority of the first slot of a round.
    pub fn primary(&self, round: Round) -> AuthorityIndex {
        self.proposer(round, 0)
    }
}

/// Committer parameters: rounds per wave and slots per round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommitterConfig {
    pub wave_length: u64,
    pub num_of_proposers: usize,
}

impl Default for CommitterConfig {
    fn default() -> Self {
        Self { wave_length: 3, num_of_proposers: 2 }
    }
}

impl CommitterConfig {
    pub fn validate(&self, committee: &Committee) -> Result<(), ConfigError> {
        if self.wave_length < 3 {
            return Err(ConfigError::BadWaveLength(self.wave_length));
        }
        if self.num_of_proposers < 1 || self.num_of_proposers > committee.size() {
            return Err(ConfigError::BadProposerCount {
                got: self.num_of_proposers,
                max: committee.size(),
            });
        }
        Ok(())
    }
}

/// Wave arithmetic for one proposer-slot instance, parameterized by the
/// round offset within the wave and the proposer offset within the round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeciderConfig {
    pub wave_length: u64,
    pub round_offset: u64,
    pub proposer_offset: usize,
}

impl DeciderConfig {
    pub fn wave_number(&self, round: Round) -> u64 {
        (round - self.round_offset) / self.wave_length
    }

    pub fn proposer_round(&self, wave: u64) -> Round {
        wave * self.wave_length + self.round_offset
    }

    pub fn decision_round(&self, wave: u64) -> Round {
        wave * self.wave_length + self.wave_length - 1 + self.round_offset
    }
}

/// True iff `2f+1` distinct authors' blocks at the slot's voting round have
/// no parent authored by the slot's proposer, and thus support no proposal
/// for the slot.
pub fn skipped_proposer(dag: &impl BlockStore, committee: &Committee, slot: Slot) -> bool {
    let mut blaming = BTreeSet::new();
    for reference in dag.round_refs(slot.round + 1) {
        let Some(block) = dag.get(&reference) else { continue };
        if block.parents().iter().all(|p| p.author != slot.authority) {
            blaming.insert(reference.author);
        }
    }
    blaming.len() >= committee.quorum_threshold()
}

/// The slot's certified proposal, if `2f+1` distinct authors' blocks at the
/// decision round are certificates for it. Evaluates every observed
/// proposal; at most one can ever be certified.
pub fn supported_proposer(
    dag: &impl BlockStore,
    committee: &Committee,
    slot: Slot,
    wave_length: u64,
    memo: &mut PatternMemo,
) -> Option<BlockRef> {
    let decision_round = slot.round + wave_length - 1;
    let decision_refs = dag.round_refs(decision_round);
    for proposal_ref in dag.slot_refs(slot.authority, slot.round) {
        let Some(proposal) = dag.get(&proposal_ref) else { continue };
        let mut certifying = BTreeSet::new();
        for cert_ref in &decision_refs {
            let Some(cert) = dag.get(cert_ref) else { continue };
            if memo.is_certificate(dag, cert, proposal, committee) {
                certifying.insert(cert_ref.author);
            }
        }
        if certifying.len() >= committee.quorum_threshold() {
            return Some(proposal_ref);
        }
    }
    None
}

/// The direct decision rule. The skip check precedes the commit check.
pub fn try_direct_decide(
    dag: &impl BlockStore,
    committee: &Committee,
    slot: Slot,
    wave_length: u64,
    memo: &mut PatternMemo,
) -> SlotStatus {
    if skipped_proposer(dag, committee, slot) {
        return SlotStatus::ToSkip(slot);
    }
    match supported_proposer(dag, committee, slot, wave_length, memo) {
        Some(proposal) => SlotStatus::ToCommit(proposal),
        None => SlotStatus::Undecided,
    }
}

/// The slot's proposal that has a certificate at its decision round inside
/// the anchor's causal history, if any.
pub fn certified_link(
    dag: &impl BlockStore,
    committee: &Committee,
    anchor: BlockRef,
    slot: Slot,
    wave_length: u64,
    memo: &mut PatternMemo,
) -> Option<BlockRef> {
    let decision_round = slot.round + wave_length - 1;
    let decision_refs = dag.round_refs(decision_round);
    for proposal_ref in dag.slot_refs(slot.authority, slot.round) {
        let Some(proposal) = dag.get(&proposal_ref) else { continue };
        for cert_ref in &decision_refs {
            let Some(cert) = dag.get(cert_ref) else { continue };
            if memo.is_certificate(dag, cert, proposal, committee)
                && memo.linked(dag, cert_ref, &anchor)
            {
                return Some(proposal_ref);
            }
        }
    }
    None
}

/// The indirect decision rule: scan the already-evaluated later slots (in
/// ascending total order) for the anchor — the first slot beyond this
/// slot's decision round that is `Undecided` or `ToCommit`. Skipped slots
/// are passed over.
pub fn try_indirect_decide<'a>(
    dag: &impl BlockStore,
    committee: &Committee,
    slot: Slot,
    later: impl Iterator<Item = &'a SlotDecision>,
    wave_length: u64,
    memo: &mut PatternMemo,
) -> SlotStatus {
    let decision_round = slot.round + wave_length - 1;
    for anchor in later.filter(|d| d.slot.round > decision_round) {
        match anchor.status {
            SlotStatus::Undecided => return SlotStatus::Undecided,
            SlotStatus::ToCommit(anchor_ref) => {
                return match certified_link(dag, committee, anchor_ref, slot, wave_length, memo) {
                    Some(proposal) => SlotStatus::ToCommit(proposal),
                    None => SlotStatus::ToSkip(slot),
                };
            }
            SlotStatus::ToSkip(_) => continue,
        }
    }
    SlotStatus::Undecided
}

/// One evaluated slot, with how it was decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotDecision {
    pub slot: Slot,
    pub offset: usize,
    pub status: SlotStatus,
    /// True when the direct rule produced the status.
    pub direct: bool,
}

/// The universal committer. Holds memoized pattern results and the statuses
/// of slots that have already left `Undecided`; both caches are pure
/// optimizations — `try_decide` is a pure function of the DAG contents,
/// the configuration and the schedule.
pub struct Committer {
    committee: Committee,
    config: CommitterConfig,
    schedule: LeaderSchedule,
    memo: PatternMemo,
    decided: BTreeMap<(Round, usize), SlotDecision>,
    decided_log: Vec<SlotDecision>,
}

impl Committer {
    pub fn new(
        committee: Committee,
        config: CommitterConfig,
        schedule: LeaderSchedule,
    ) -> Result<Self, ConfigError> {
        config.validate(&committee)?;
        Ok(Self {
            committee,
            config,
            schedule,
            memo: PatternMemo::default(),
            decided: BTreeMap::new(),
            decided_log: Vec::new(),
        })
    }

    pub fn config(&self) -> &CommitterConfig {
        &self.config
    }

    pub fn schedule(&self) -> &LeaderSchedule {
        &self.schedule
    }

    pub fn slot_at(&self, round: Round, offset: usize) -> Slot {
        Slot::new(round, self.schedule.proposer(round, offset))
    }

    /// Evaluates every slot in rounds `(last_committed_round, highest_round]`
    /// high-to-low with the direct rule and the indirect fallback, and
    /// returns all statuses in ascending total slot order.
    pub fn try_decide(
        &mut self,
        dag: &impl BlockStore,
        last_committed_round: Round,
        highest_round: Round,
    ) -> Vec<SlotDecision> {
        let mut sequence: VecDeque<SlotDecision> = VecDeque::new();
        let mut round = highest_round;
        while round > last_committed_round {
            for offset in (0..self.config.num_of_proposers).rev() {
                let decision = self.decide_slot(dag, round, offset, sequence.iter());
                sequence.push_front(decision);
            }
            round -= 1;
        }
        sequence.into()
    }

    fn decide_slot<'a>(
        &mut self,
        dag: &impl BlockStore,
        round: Round,
        offset: usize,
        later: impl Iterator<Item = &'a SlotDecision>,
    ) -> SlotDecision {
        if let Some(cached) = self.decided.get(&(round, offset)) {
            return *cached;
        }
        let slot = self.slot_at(round, offset);
        let wave_length = self.config.wave_length;
        let mut decision = SlotDecision {
            slot,
            offset,
            status: try_direct_decide(dag, &self.committee, slot, wave_length, &mut self.memo),
            direct: true,
        };
        if !decision.status.is_decided() {
            decision.direct = false;
            decision.status = try_indirect_decide(
                dag,
                &self.committee,
                slot,
                later,
                wave_length,
                &mut self.memo,
            );
        }
        if decision.status.is_decided() {
            self.decided.insert((round, offset), decision);
            self.decided_log.push(decision);
        }
        decision
    }

    /// The committable prefix: `try_decide` truncated at the first
    /// undecided slot.
    pub fn committable_prefix(
        &mut self,
        dag: &impl BlockStore,
        last_committed_round: Round,
        highest_round: Round,
    ) -> Vec<SlotDecision> {
        let mut decisions = self.try_decide(dag, last_committed_round, highest_round);
        let cut =
            decisions.iter().position(|d| !d.status.is_decided()).unwrap_or(decisions.len());
        decisions.truncate(cut);
        decisions
    }

    /// Slots that left `Undecided`, in the order they were first decided.
    /// `from` is a cursor into this append-only log.
    pub fn decided_since(&self, from: usize) -> &[SlotDecision] {
        &self.decided_log[from..]
    }

    pub fn decided_len(&self) -> usize {
        self.decided_log.len()
    }

    /// All decided slots, keyed by `(round, offset)`.
    pub fn decided_slots(&self) -> &BTreeMap<(Round, usize), SlotDecision> {
        &self.decided
    }
}

/// Deterministic topological order of the leader's causal history minus
/// `already_delivered`: ascending round, ties by authority index then digest
/// bytes, the leader last. The emitted blocks are added to
/// `already_delivered`.
pub fn linearize(
    dag: &impl BlockStore,
    leader: BlockRef,
    already_delivered: &mut BTreeSet<BlockRef>,
) -> Vec<BlockRef> {
    let mut new_blocks: BTreeSet<BlockRef> = BTreeSet::new();
    let mut frontier = vec![leader];
    while let Some(current) = frontier.pop() {
        if already_delivered.contains(&current) || !new_blocks.insert(current) {
            continue;
        }
        if let Some(block) = dag.get(&current) {
            frontier.extend(block.parents().iter().copied());
        }
    }
    already_delivered.extend(new_blocks.iter().copied());
    // BTreeSet iteration order is exactly (round, authority, digest); the
    // leader is the unique round maximum of its own history.
    let ordered: Vec<BlockRef> = new_blocks.into_iter().collect();
    debug_assert_eq!(ordered.last(), Some(&leader));
    ordered
}

/// `max(previous, max over leader timestamps)`; `previous` when no leaders.
pub fn commit_timestamp(leader_blocks: &[&Block], previous: u64) -> u64 {
    leader_blocks.iter().map(|b| b.timestamp()).fold(previous, u64::max)
}

/// One entry of the commit sequence: a committed leader and the newly
/// linearized sub-DAG below it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitRecord {
    pub index: u64,
    pub leader: BlockRef,
    pub committed_blocks: Vec<BlockRef>,
    pub commit_timestamp: u64,
}

impl CommitRecord {
    /// Stable line format for the commit-log export:
    /// `<index>|<timestamp>|<leader>|<ref>,<ref>,...` with refs in
    /// `A<author>@<round>:<hex digest>` form.
    pub fn to_line(&self) -> String {
        let blocks: Vec<String> =
            self.committed_blocks.iter().map(|r| r.to_full_string()).collect();
        format!(
            "{}|{}|{}|{}",
            self.index,
            self.commit_timestamp,
            self.leader.to_full_string(),
            blocks.join(",")
        )
    }

    pub fn parse_line(line: &str) -> Option<Self> {
        let mut parts = line.splitn(4, '|');
        let index = parts.next()?.parse().ok()?;
        let commit_timestamp = parts.next()?.parse().ok()?;
        let leader = BlockRef::parse(parts.next()?)?;
        let blocks = parts.next()?;
        let committed_blocks = if blocks.is_empty() {
            Vec::new()
        } else {
            blocks.split(',').map(BlockRef::parse).collect::<Option<Vec<_>>>()?
        };
        Some(Self { index, leader, committed_blocks, commit_timestamp })
    }
}

/// Extracts commit records from a committable prefix, linearizing each
/// committed leader against the shared delivered set. Skipped slots advance
/// the sequence without emitting a record.
pub fn extract_commits(
    dag: &impl BlockStore,
    prefix: &[SlotDecision],
    next_index: u64,
    previous_timestamp: u64,
    already_delivered: &mut BTreeSet<BlockRef>,
) -> Vec<CommitRecord> {
    let mut records = Vec::new();
    let mut index = next_index;
    let mut previous = previous_timestamp;
    for decision in prefix {
        let SlotStatus::ToCommit(leader) = decision.status else { continue };
        let committed_blocks = linearize(dag, leader, already_delivered);
        let timestamp = match dag.get(&leader) {
            Some(block) => commit_timestamp(&[block], previous),
            None => previous,
        };
        previous = timestamp;
        records.push(CommitRecord {
            index,
            leader,
            committed_blocks,
            commit_timestamp: timestamp,
        });
        index += 1;
    }
    records
}
