use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("unresolved Hecke multiplicity at degree {degree}: cluster of size {cluster_size} after primes {primes:?}")]
    UnresolvedCluster {
        degree: usize,
        cluster_size: usize,
        primes: Vec<u64>,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("checksum mismatch in {path}: expected {expected}, found {actual}")]
    ChecksumMismatch {
        path: String,
        expected: String,
        actual: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
