use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("no prime p = kq + 1 found within {0} candidates")]
    NoPrimeFound(u64),

    #[error("invalid group parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    #[error("value is not invertible modulo the given modulus")]
    NotInvertible,

    #[error("party {party}: value received from party {from} is not in the expected subgroup")]
    SubgroupViolation { party: u32, from: u32 },

    #[error("party {0} has not completed setup")]
    NotSetUp(u32),

    #[error("input from party {party} is out of range: {reason}")]
    OutOfRange { party: u32, reason: String },

    #[error("missing ciphertext from party {0}")]
    MissingCiphertext(u32),

    #[error("unexpected or duplicate ciphertext from party {0}")]
    UnexpectedCiphertext(u32),

    #[error("aggregate is not congruent to 1 mod p")]
    MalformedAggregate,

    #[error("term {term} has a single contributor (party {party}) and would disclose its value; use the advanced scheme")]
    InsecureTerm { term: usize, party: u32 },

    #[error("sum path has {found} distinct participant(s), at least {required} required")]
    TooFewSumParticipants { found: usize, required: usize },

    #[error("model requires at least {required} participants, got {found}")]
    TooFewParticipants { found: usize, required: usize },

    #[error("party {party} has input 0 in product term {term}")]
    ZeroInProductTerm { term: usize, party: u32 },

    #[error("unknown recipient {0}")]
    UnknownRecipient(u32),

    #[error("malformed wire message: {0}")]
    Decode(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
