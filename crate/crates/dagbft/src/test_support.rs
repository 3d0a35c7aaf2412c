//! Programmatic DAG construction helpers for tests, examples and fuzzing:
//! hand-wired blocks, fully-connected rounds, seeded random DAGs, and the
//! brute-force enumeration of causally-closed sub-views used as an oracle
//! against the committer.

use std::collections::BTreeSet;

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::block::{Block, BlockRef, Round, Transaction, TxVote};
use crate::committee::{AuthorityIndex, Committee};
use crate::crypto::KeyedHashScheme;
use crate::dag::{BlockStore, DagState};

/// A standalone block built with the default keyed-hash signer. The block is
/// not inserted anywhere; useful for feeding pattern queries directly.
pub fn simple_block(author: u32, round: Round, parents: Vec<BlockRef>) -> Block {
    Block::new(
        AuthorityIndex(author),
        0,
        round,
        parents,
        Vec::new(),
        Vec::new(),
        false,
        0,
        &KeyedHashScheme::default(),
    )
}

/// A mutable DAG under construction. Blocks are inserted without validity
/// checks so tests can build adversarial structures.
pub struct TestDag {
    dag: DagState,
    committee: Committee,
    signer: KeyedHashScheme,
}

impl TestDag {
    pub fn new(committee: &Committee) -> Self {
        Self { dag: DagState::new(committee), committee: *committee, signer: KeyedHashScheme::default() }
    }

    pub fn committee(&self) -> &Committee {
        &self.committee
    }

    pub fn genesis_refs(&self) -> Vec<BlockRef> {
        self.dag.round_refs(0)
    }

    pub fn store(&self) -> &DagState {
        &self.dag
    }

    pub fn take(self) -> DagState {
        self.dag
    }

    pub fn add_block(&mut self, author: u32, round: Round, parents: Vec<BlockRef>) -> BlockRef {
        self.add_block_full(author, round, parents, Vec::new(), Vec::new(), false, 0)
    }

    /// Payload differentiates equivocating variants of one slot.
    pub fn add_block_with_payload(
        &mut self,
        author: u32,
        round: Round,
        parents: Vec<BlockRef>,
        payload: &[u8],
    ) -> BlockRef {
        self.add_block_full(
            author,
            round,
            parents,
            vec![Transaction::new(Vec::new(), false, payload.to_vec())],
            Vec::new(),
            false,
            0,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn add_block_full(
        &mut self,
        author: u32,
        round: Round,
        parents: Vec<BlockRef>,
        transactions: Vec<Transaction>,
        votes: Vec<TxVote>,
        epoch_change_bit: bool,
        timestamp: u64,
    ) -> BlockRef {
        let block = Block::new(
            AuthorityIndex(author),
            0,
            round,
            parents,
            transactions,
            votes,
            epoch_change_bit,
            timestamp,
            &self.signer,
        );
        let reference = block.reference();
        self.dag.insert(block);
        reference
    }

    /// Adds one block per authority at `round`, each referencing its own
    /// previous block first and then every other block of the previous round.
    pub fn fill_round(&mut self, round: Round) {
        self.fill_round_at(round, 0);
    }

    pub fn fill_round_at(&mut self, round: Round, timestamp: u64) {
        let previous = self.dag.round_refs(round - 1);
        for authority in self.committee.authorities() {
            let mut parents: Vec<BlockRef> =
                previous.iter().filter(|r| r.author == authority).copied().collect();
            parents.extend(previous.iter().filter(|r| r.author != authority).copied());
            self.add_block_full(
                authority.0,
                round,
                parents,
                Vec::new(),
                Vec::new(),
                false,
                timestamp,
            );
        }
    }

    /// The single stored reference of a slot; panics on empty or equivocated
    /// slots, which keeps accidental misuse loud.
    pub fn slot_ref(&self, author: u32, round: Round) -> BlockRef {
        let refs = self.dag.slot_refs(AuthorityIndex(author), round);
        assert_eq!(refs.len(), 1, "slot A{author}@{round} has {} blocks", refs.len());
        refs[0]
    }

    pub fn block_of(&self, reference: BlockRef) -> Block {
        self.dag.get(&reference).expect("block must be stored").clone()
    }

    pub fn block_at(&self, author: u32, round: Round) -> Block {
        self.block_of(self.slot_ref(author, round))
    }
}

/// Parameters for seeded random DAG generation.
#[derive(Clone, Copy, Debug)]
pub struct RandomDagConfig {
    pub rounds: Round,
    /// Probability (percent) that an authority skips a round entirely.
    pub skip_percent: u32,
    /// Probability (percent) that an authority equivocates in a round.
    pub equivocate_percent: u32,
}

impl Default for RandomDagConfig {
    fn default() -> Self {
        Self { rounds: 6, skip_percent: 12, equivocate_percent: 8 }
    }
}

/// Builds a random but structurally valid DAG: every block references its
/// author's most recent block first and at least a quorum of distinct
/// previous-round blocks. At most `f` authorities misbehave (skip or
/// equivocate) so the generated runs stay within the fault model.
pub fn random_dag(committee: &Committee, seed: u64, config: RandomDagConfig) -> DagState {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut dag = TestDag::new(committee);
    let n = committee.size();

    // Pick up to f authorities allowed to misbehave for the whole run.
    let faulty_count = (rng.next_u64() % (committee.f() as u64 + 1)) as usize;
    let mut faulty: BTreeSet<u32> = BTreeSet::new();
    while faulty.len() < faulty_count {
        faulty.insert((rng.next_u64() % n as u64) as u32);
    }

    let mut last_own: Vec<BlockRef> = dag.genesis_refs();
    for round in 1..=config.rounds {
        let previous = dag.store().round_refs(round - 1);
        let prev_authors: BTreeSet<AuthorityIndex> = previous.iter().map(|r| r.author).collect();
        if prev_authors.len() < committee.quorum_threshold() {
            break;
        }
        let mut new_own = last_own.clone();
        for authority in 0..n as u32 {
            let is_faulty = faulty.contains(&authority);
            if is_faulty && (rng.next_u64() % 100) < config.skip_percent as u64 {
                continue;
            }
            let variants =
                if is_faulty && (rng.next_u64() % 100) < config.equivocate_percent as u64 {
                    2
                } else {
                    1
                };
            let mut first_variant = None;
            for variant in 0..variants {
                let parents =
                    random_parents(&mut rng, committee, &previous, last_own[authority as usize]);
                let reference = dag.add_block_with_payload(
                    authority,
                    round,
                    parents,
                    format!("r{round}v{variant}").as_bytes(),
                );
                first_variant.get_or_insert(reference);
            }
            new_own[authority as usize] = first_variant.unwrap();
        }
        last_own = new_own;
    }
    dag.take()
}

fn random_parents(
    rng: &mut ChaCha12Rng,
    committee: &Committee,
    previous: &[BlockRef],
    own_previous: BlockRef,
) -> Vec<BlockRef> {
    let prev_round = previous[0].round;
    let mut parents = vec![own_previous];
    let mut prev_round_authors: BTreeSet<AuthorityIndex> = BTreeSet::new();
    if own_previous.round == prev_round {
        prev_round_authors.insert(own_previous.author);
    }
    let mut authors: Vec<AuthorityIndex> = previous
        .iter()
        .map(|r| r.author)
        .filter(|a| *a != own_previous.author)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    // Shuffle author order so DFS support order varies between blocks.
    for i in (1..authors.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        authors.swap(i, j);
    }
    let quorum = committee.quorum_threshold();
    for author in authors {
        // One reference per previous-round author, chosen at random among
        // equivocating variants; drop some once a quorum is guaranteed.
        let choices: Vec<BlockRef> =
            previous.iter().filter(|r| r.author == author).copied().collect();
        let pick = choices[(rng.next_u64() % choices.len() as u64) as usize];
        if prev_round_authors.len() >= quorum && (rng.next_u64() % 100) < 25 {
            continue;
        }
        parents.push(pick);
        prev_round_authors.insert(author);
    }
    parents
}

/// Enumerates every causally-closed sub-view of `dag` that contains all the
/// genesis blocks, as sets of references. Exponential in the worst case;
/// intended for the small DAGs produced by [`random_dag`].
pub fn enumerate_views(dag: &DagState, cap: usize) -> Vec<BTreeSet<BlockRef>> {
    let mut blocks: Vec<BlockRef> = dag.refs().copied().filter(|r| r.round > 0).collect();
    blocks.sort();
    let genesis: BTreeSet<BlockRef> = dag.round_refs(0).into_iter().collect();
    assert!(blocks.len() <= 64, "view enumeration supports at most 64 non-genesis blocks");

    let parent_masks: Vec<u64> = blocks
        .iter()
        .map(|r| {
            let block = dag.get(r).expect("stored");
            let mut mask = 0u64;
            for parent in block.parents() {
                if parent.round == 0 {
                    continue;
                }
                let idx = blocks.binary_search(parent).expect("parent stored");
                mask |= 1 << idx;
            }
            mask
        })
        .collect();

    let mut views = Vec::new();
    let mut stack: Vec<(usize, u64)> = vec![(0, 0)];
    while let Some((i, mask)) = stack.pop() {
        if views.len() >= cap {
            break;
        }
        if i == blocks.len() {
            let mut view = genesis.clone();
            view.extend(
                blocks.iter().enumerate().filter(|(idx, _)| mask & (1 << idx) != 0).map(|(_, r)| *r),
            );
            views.push(view);
            continue;
        }
        stack.push((i + 1, mask));
        if parent_masks[i] & mask == parent_masks[i] {
            stack.push((i + 1, mask | (1 << i)));
        }
    }
    views
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_dag_is_reproducible_and_valid() {
        let committee = Committee::new(4).unwrap();
        let a = random_dag(&committee, 7, RandomDagConfig::default());
        let b = random_dag(&committee, 7, RandomDagConfig::default());
        let refs_a: Vec<_> = a.refs().copied().collect();
        let refs_b: Vec<_> = b.refs().copied().collect();
        assert_eq!(refs_a, refs_b);

        for block in a.blocks().filter(|b| !b.is_genesis()) {
            assert_eq!(block.parents()[0].author, block.author());
            let prev: BTreeSet<_> = block
                .parents()
                .iter()
                .filter(|p| p.round + 1 == block.round())
                .map(|p| p.author)
                .collect();
            assert!(prev.len() >= committee.quorum_threshold(), "{:?}", block.reference());
        }
    }

    #[test]
    fn enumerated_views_are_causally_closed() {
        let committee = Committee::new(4).unwrap();
        let dag = random_dag(&committee, 3, RandomDagConfig { rounds: 3, ..Default::default() });
        let views = enumerate_views(&dag, 100_000);
        assert!(!views.is_empty());
        // The full dag itself must be among the views.
        let all: BTreeSet<_> = dag.refs().copied().collect();
        assert!(views.contains(&all));
        for view in &views {
            for reference in view {
                if let Some(block) = dag.get(reference) {
                    for parent in block.parents() {
                        assert!(view.contains(parent), "view not closed under parents");
                    }
                }
            }
        }
    }
}
