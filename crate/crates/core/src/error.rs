use thiserror::Error;

/// Errors raised by the tabular machinery, environments, oracles and driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what} is not a probability distribution (sum = {sum}, row {row})")]
    NotADistribution {
        what: &'static str,
        row: usize,
        sum: f64,
    },

    #[error("reward entry {index} = {value} lies outside [-1, 1]")]
    OutOfBox { index: usize, value: f64 },

    #[error("index {index} out of range for {what} (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("{field} = {value} is out of range: {reason}")]
    Range {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("reset schedule error: {0}")]
    Schedule(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            found,
        })
    }
}
