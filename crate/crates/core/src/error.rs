use thiserror::Error;

/// Errors produced by the localization library.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested configuration cannot be run.
    #[error("configuration error: {0}")]
    Config(String),

    /// A localization trial failed inside a sweep.
    #[error("trial (n = {n}, index = {index}) failed: {source}")]
    Trial {
        n: usize,
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
