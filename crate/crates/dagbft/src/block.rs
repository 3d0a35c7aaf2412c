//! Blocks, block references, transactions and fast-path votes, plus the
//! canonical byte encoding that digests and persistence are computed over.
//!
//! Canonical block encoding (all integers little-endian):
//!
//! ```text
//! version            u8    (0x01)
//! epoch              u64
//! author             u32
//! round              u64
//! parent count       u32
//!   parents          author u32, round u64, digest 32B
//! epoch_change_bit   u8    (0 or 1)
//! timestamp          u64   (milliseconds)
//! transaction count  u32
//!   transactions     length u32, opaque bytes
//! vote count         u32
//!   votes            block author u32, round u64, digest 32B, tx index u32, accept u8
//! ```
//!
//! The block digest is the SHA-256 of this encoding; signatures are computed
//! over the same bytes and are not part of the digest.

use std::cmp::Ordering;
use std::fmt;

use sha2::{Digest as _, Sha256};

use crate::committee::AuthorityIndex;
use crate::crypto::BlockSigner;

pub type Round = u64;
pub type Epoch = u64;

pub const ENCODING_VERSION: u8 = 0x01;

/// 32-byte content hash.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s).ok()?;
        let arr: [u8; 32] = bytes.try_into().ok()?;
        Some(Self(arr))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", hex::encode(&self.0[..4]))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", hex::encode(&self.0[..4]))
    }
}

/// Unique block identity: `(author, round, digest)`.
///
/// Equivocating blocks share `(author, round)` but differ in digest. The
/// derived ordering is `(round, author, digest)`, the deterministic
/// tie-break used by linearization.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockRef {
    pub author: AuthorityIndex,
    pub round: Round,
    pub digest: Digest,
}

impl BlockRef {
    pub fn new(author: AuthorityIndex, round: Round, digest: Digest) -> Self {
        Self { author, round, digest }
    }

    /// Full stable text form, `A<author>@<round>:<64 hex digits>`; used by
    /// the commit-log export. [`BlockRef::parse`] is its inverse.
    pub fn to_full_string(&self) -> String {
        format!("A{}@{}:{}", self.author.0, self.round, self.digest.hex())
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.strip_prefix('A')?;
        let (author, rest) = s.split_once('@')?;
        let (round, digest) = rest.split_once(':')?;
        Some(Self {
            author: AuthorityIndex(author.parse().ok()?),
            round: round.parse().ok()?,
            digest: Digest::from_hex(digest)?,
        })
    }
}

impl Ord for BlockRef {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.round, self.author, self.digest).cmp(&(other.round, other.author, other.digest))
    }
}

impl PartialOrd for BlockRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for BlockRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}({})", self.author, self.round, self.digest)
    }
}

impl fmt::Display for BlockRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.author, self.round)
    }
}

/// Identity of an owned object at a specific version.
pub type ObjectId = u64;
pub type Version = u64;
pub type ObjectRef = (ObjectId, Version);

/// 32-byte transaction identity.
pub type TxId = Digest;

/// A client transaction. Two transactions conflict iff they share an owned
/// `(object, version)` input.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transaction {
    pub id: TxId,
    pub owned_inputs: Vec<ObjectRef>,
    pub has_shared_inputs: bool,
    pub payload: Vec<u8>,
}

impl Transaction {
    pub fn new(owned_inputs: Vec<ObjectRef>, has_shared_inputs: bool, payload: Vec<u8>) -> Self {
        let mut tx = Self { id: Digest::default(), owned_inputs, has_shared_inputs, payload };
        tx.id = Digest(Sha256::digest(tx.encode()).into());
        tx
    }

    /// Opaque transaction bytes as embedded in the canonical block encoding.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 16 * self.owned_inputs.len() + self.payload.len());
        out.extend((self.owned_inputs.len() as u32).to_le_bytes());
        for (object, version) in &self.owned_inputs {
            out.extend(object.to_le_bytes());
            out.extend(version.to_le_bytes());
        }
        out.push(self.has_shared_inputs as u8);
        out.extend((self.payload.len() as u32).to_le_bytes());
        out.extend(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        let mut r = Reader::new(bytes);
        let n = r.u32()? as usize;
        let mut owned_inputs = Vec::with_capacity(n);
        for _ in 0..n {
            owned_inputs.push((r.u64()?, r.u64()?));
        }
        let has_shared_inputs = r.u8()? != 0;
        let len = r.u32()? as usize;
        let payload = r.bytes(len)?.to_vec();
        if !r.done() {
            return None;
        }
        Some(Self::new(owned_inputs, has_shared_inputs, payload))
    }

    pub fn conflicts_with(&self, other: &Transaction) -> bool {
        self.owned_inputs.iter().any(|input| other.owned_inputs.contains(input))
    }
}

/// Position of a transaction inside a block: the tuple `(B, i)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TxPosition {
    pub block: BlockRef,
    pub index: u32,
}

/// An explicit fast-path vote carried inside a block.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TxVote {
    pub position: TxPosition,
    pub accept: bool,
}

/// The single protocol message.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Block {
    reference: BlockRef,
    epoch: Epoch,
    parents: Vec<BlockRef>,
    transactions: Vec<Transaction>,
    fastpath_votes: Vec<TxVote>,
    epoch_change_bit: bool,
    timestamp: u64,
    signature: Vec<u8>,
}

impl Block {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        author: AuthorityIndex,
        epoch: Epoch,
        round: Round,
        parents: Vec<BlockRef>,
        transactions: Vec<Transaction>,
        fastpath_votes: Vec<TxVote>,
        epoch_change_bit: bool,
        timestamp: u64,
        signer: &dyn BlockSigner,
    ) -> Self {
        let bytes = canonical_bytes(
            epoch,
            author,
            round,
            &parents,
            epoch_change_bit,
            timestamp,
            &transactions,
            &fastpath_votes,
        );
        let digest = Digest(Sha256::digest(&bytes).into());
        let signature = signer.sign(author, &bytes);
        Self {
            reference: BlockRef::new(author, round, digest),
            epoch,
            parents,
            transactions,
            fastpath_votes,
            epoch_change_bit,
            timestamp,
            signature,
        }
    }

    /// The implicit round-0 block of an authority: no parents, no payload,
    /// timestamp 0, empty signature. Never transmitted, always pre-seeded.
    pub fn genesis(author: AuthorityIndex) -> Self {
        let bytes = canonical_bytes(0, author, 0, &[], false, 0, &[], &[]);
        let digest = Digest(Sha256::digest(&bytes).into());
        Self {
            reference: BlockRef::new(author, 0, digest),
            epoch: 0,
            parents: Vec::new(),
            transactions: Vec::new(),
            fastpath_votes: Vec::new(),
            epoch_change_bit: false,
            timestamp: 0,
            signature: Vec::new(),
        }
    }

    pub fn reference(&self) -> BlockRef {
        self.reference
    }

    pub fn author(&self) -> AuthorityIndex {
        self.reference.author
    }

    pub fn round(&self) -> Round {
        self.reference.round
    }

    pub fn digest(&self) -> Digest {
        self.reference.digest
    }

    pub fn epoch(&self) -> Epoch {
        self.epoch
    }

    pub fn parents(&self) -> &[BlockRef] {
        &self.parents
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn fastpath_votes(&self) -> &[TxVote] {
        &self.fastpath_votes
    }

    pub fn epoch_change_bit(&self) -> bool {
        self.epoch_change_bit
    }

    pub fn timestamp(&self) -> u64 {
        self.timestamp
    }

    pub fn signature(&self) -> &[u8] {
        &self.signature
    }

    pub fn is_genesis(&self) -> bool {
        self.round() == 0
    }

    /// Canonical bytes of this block (digest/signature preimage).
    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical_bytes(
            self.epoch,
            self.author(),
            self.round(),
            &self.parents,
            self.epoch_change_bit,
            self.timestamp,
            &self.transactions,
            &self.fastpath_votes,
        )
    }

    /// Rebuilds a block from canonical bytes plus a detached signature.
    /// The digest is recomputed from the bytes, so a tampered encoding
    /// yields a different reference rather than a forged one.
    pub fn from_canonical_bytes(bytes: &[u8], signature: Vec<u8>) -> Option<Self> {
        let mut r = Reader::new(bytes);
        if r.u8()? != ENCODING_VERSION {
            return None;
        }
        let epoch = r.u64()?;
        let author = AuthorityIndex(r.u32()?);
        let round = r.u64()?;
        let parent_count = r.u32()? as usize;
        let mut parents = Vec::with_capacity(parent_count);
        for _ in 0..parent_count {
            parents.push(r.block_ref()?);
        }
        let epoch_change_bit = r.u8()? != 0;
        let timestamp = r.u64()?;
        let tx_count = r.u32()? as usize;
        let mut transactions = Vec::with_capacity(tx_count);
        for _ in 0..tx_count {
            let len = r.u32()? as usize;
            transactions.push(Transaction::decode(r.bytes(len)?)?);
        }
        let vote_count = r.u32()? as usize;
        let mut fastpath_votes = Vec::with_capacity(vote_count);
        for _ in 0..vote_count {
            let block = r.block_ref()?;
            let index = r.u32()?;
            let accept = r.u8()? != 0;
            fastpath_votes.push(TxVote { position: TxPosition { block, index }, accept });
        }
        if !r.done() {
            return None;
        }
        let digest = Digest(Sha256::digest(bytes).into());
        Some(Self {
            reference: BlockRef::new(author, round, digest),
            epoch,
            parents,
            transactions,
            fastpath_votes,
            epoch_change_bit,
            timestamp,
            signature,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn canonical_bytes(
    epoch: Epoch,
    author: AuthorityIndex,
    round: Round,
    parents: &[BlockRef],
    epoch_change_bit: bool,
    timestamp: u64,
    transactions: &[Transaction],
    votes: &[TxVote],
) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 44 * parents.len());
    out.push(ENCODING_VERSION);
    out.extend(epoch.to_le_bytes());
    out.extend(author.0.to_le_bytes());
    out.extend(round.to_le_bytes());
    out.extend((parents.len() as u32).to_le_bytes());
    for parent in parents {
        push_block_ref(&mut out, parent);
    }
    out.push(epoch_change_bit as u8);
    out.extend(timestamp.to_le_bytes());
    out.extend((transactions.len() as u32).to_le_bytes());
    for tx in transactions {
        let bytes = tx.encode();
        out.extend((bytes.len() as u32).to_le_bytes());
        out.extend(bytes);
    }
    out.extend((votes.len() as u32).to_le_bytes());
    for vote in votes {
        push_block_ref(&mut out, &vote.position.block);
        out.extend(vote.position.index.to_le_bytes());
        out.push(vote.accept as u8);
    }
    out
}

fn push_block_ref(out: &mut Vec<u8>, r: &BlockRef) {
    out.extend(r.author.0.to_le_bytes());
    out.extend(r.round.to_le_bytes());
    out.extend(r.digest.0);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn bytes(&mut self, n: usize) -> Option<&'a [u8]> {
        let slice = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(slice)
    }

    fn u8(&mut self) -> Option<u8> {
        Some(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    fn block_ref(&mut self) -> Option<BlockRef> {
        let author = AuthorityIndex(self.u32()?);
        let round = self.u64()?;
        let digest = Digest(self.bytes(32)?.try_into().unwrap());
        Some(BlockRef::new(author, round, digest))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::KeyedHashScheme;

    fn ref_with(author: u32, round: Round, byte: u8) -> BlockRef {
        BlockRef::new(AuthorityIndex(author), round, Digest([byte; 32]))
    }

    /// Frozen byte-level layout of the canonical encoding. Any change to
    /// this vector is a wire format break.
    #[test]
    fn canonical_encoding_layout() {
        let parent = ref_with(3, 1, 0xaa);
        let tx = Transaction::new(vec![(7, 0)], false, b"xy".to_vec());
        let vote = TxVote { position: TxPosition { block: parent, index: 2 }, accept: true };
        let bytes = canonical_bytes(
            5,
            AuthorityIndex(1),
            2,
            std::slice::from_ref(&parent),
            true,
            1000,
            std::slice::from_ref(&tx),
            std::slice::from_ref(&vote),
        );

        let mut expected = vec![0x01];
        expected.extend(5u64.to_le_bytes()); // epoch
        expected.extend(1u32.to_le_bytes()); // author
        expected.extend(2u64.to_le_bytes()); // round
        expected.extend(1u32.to_le_bytes()); // parent count
        expected.extend(3u32.to_le_bytes());
        expected.extend(1u64.to_le_bytes());
        expected.extend([0xaa; 32]);
        expected.push(1); // epoch change bit
        expected.extend(1000u64.to_le_bytes()); // timestamp
        expected.extend(1u32.to_le_bytes()); // tx count
        let tx_bytes = {
            let mut b = Vec::new();
            b.extend(1u32.to_le_bytes()); // owned input count
            b.extend(7u64.to_le_bytes()); // object id
            b.extend(0u64.to_le_bytes()); // version
            b.push(0); // has_shared_inputs
            b.extend(2u32.to_le_bytes()); // payload length
            b.extend(b"xy");
            b
        };
        expected.extend((tx_bytes.len() as u32).to_le_bytes());
        expected.extend(&tx_bytes);
        expected.extend(1u32.to_le_bytes()); // vote count
        expected.extend(3u32.to_le_bytes());
        expected.extend(1u64.to_le_bytes());
        expected.extend([0xaa; 32]);
        expected.extend(2u32.to_le_bytes()); // tx index
        expected.push(1); // accept

        assert_eq!(bytes, expected);
    }

    #[test]
    fn block_round_trips_through_canonical_bytes() {
        let signer = KeyedHashScheme::default();
        let parent = Block::genesis(AuthorityIndex(0));
        let tx = Transaction::new(vec![(1, 0), (2, 3)], true, b"pay".to_vec());
        let block = Block::new(
            AuthorityIndex(0),
            0,
            1,
            vec![parent.reference()],
            vec![tx],
            vec![TxVote {
                position: TxPosition { block: parent.reference(), index: 0 },
                accept: false,
            }],
            false,
            42,
            &signer,
        );
        let decoded =
            Block::from_canonical_bytes(&block.canonical_bytes(), block.signature().to_vec())
                .unwrap();
        assert_eq!(decoded, block);
        assert_eq!(decoded.reference(), block.reference());
    }

    #[test]
    fn equivocating_blocks_share_slot_but_differ() {
        let signer = KeyedHashScheme::default();
        let genesis = Block::genesis(AuthorityIndex(1));
        let mk = |payload: &[u8]| {
            Block::new(
                AuthorityIndex(1),
                0,
                1,
                vec![genesis.reference()],
                vec![Transaction::new(vec![], false, payload.to_vec())],
                vec![],
                false,
                0,
                &signer,
            )
        };
        let a = mk(b"one");
        let b = mk(b"two");
        assert_eq!(a.author(), b.author());
        assert_eq!(a.round(), b.round());
        assert_ne!(a.reference(), b.reference());
    }

    #[test]
    fn block_ref_text_round_trip() {
        let r = ref_with(2, 17, 0x5c);
        let parsed = BlockRef::parse(&r.to_full_string()).unwrap();
        assert_eq!(parsed, r);
        assert!(BlockRef::parse("A2@17").is_none());
    }

    #[test]
    fn genesis_is_deterministic() {
        assert_eq!(
            Block::genesis(AuthorityIndex(2)).reference(),
            Block::genesis(AuthorityIndex(2)).reference()
        );
        assert_ne!(
            Block::genesis(AuthorityIndex(1)).reference().digest,
            Block::genesis(AuthorityIndex(2)).reference().digest
        );
    }
}
