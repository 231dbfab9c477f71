use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid threshold: t = {t}, n = {n} (need 1 <= t <= n)")]
    InvalidThreshold { t: usize, n: usize },

    #[error("duplicate participant index {0}")]
    DuplicateIndex(u32),

    #[error("participant index must be >= 1")]
    ZeroIndex,

    #[error("insufficient shares: need {needed}, got {got}")]
    InsufficientShares { needed: usize, got: usize },

    #[error("shares come from different extraction contexts")]
    MixedContext,

    #[error("nonce slot {slot} of signer {index} was already consumed")]
    NonceReuse { index: u32, slot: u64 },

    #[error("signer {0} is not in the signer set")]
    NotInSignerSet(u32),

    #[error("signer set of size {signers} is below threshold {t}")]
    BelowThreshold { t: usize, signers: usize },

    #[error("no commitment for signer {index} at slot {slot}")]
    MissingCommitment { index: u32, slot: u64 },

    #[error("signature share from signer {0} failed verification")]
    ShareVerificationFailed(u32),

    #[error("signature shares do not cover the signer set")]
    IncompleteSet,

    #[error("malformed key chain: {0}")]
    MalformedChain(String),

    #[error("message index {0} not found in signature history")]
    UnknownMessageIndex(u64),

    #[error("message index {0} already present in signature history")]
    DuplicateHistoryIndex(u64),

    #[error("signer {0} did not reveal its nonces")]
    IncompleteNonceReveal(u32),

    #[error("malformed forgery proof: {0}")]
    MalformedProof(String),

    #[error("audit signature does not verify over the entry")]
    BadAuditSignature,

    #[error("audit chain mismatch at height {height}")]
    ChainMismatch { height: u64 },

    #[error("SIB1 of {size} bytes exceeds the {limit}-byte maximum")]
    OversizeSib1 { size: usize, limit: usize },

    #[error("identity {0:?} must be exactly {1} bytes for SIB1 carriage")]
    IdentityLength(String, usize),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("signing refused: system halted after confirmed forgery")]
    Halted,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
