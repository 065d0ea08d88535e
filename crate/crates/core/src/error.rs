use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("tail argument {a} exceeds the essential supremum {ess_sup}")]
    TailDomain { a: f64, ess_sup: f64 },

    #[error("distribution is not normalized (essential supremum {0}, expected 1)")]
    NotNormalized(f64),

    #[error("no ell in [0, 1) gives a positive coverage probability")]
    NoValidEll,

    #[error("invalid ell {ell}: {reason}")]
    InvalidEll { ell: f64, reason: &'static str },

    #[error("operation requires a nonzero point measure")]
    ZeroMeasure,

    #[error("charge row has {have} entries but {need} are required")]
    ShortRow { have: usize, need: usize },

    #[error("cannot shift a measure whose front atom is -inf")]
    InfiniteFront,

    #[error("graph with n = {n} is too large for path enumeration (max {max})")]
    TooLarge { n: usize, max: usize },

    #[error(
        "backward search exceeded the cap |t| <= {cap} (replica {replica}, {variates} variates drawn)"
    )]
    CapExceeded {
        cap: u64,
        replica: u64,
        variates: u64,
    },

    #[error(
        "backward search drew more than {budget} charges (replica {replica}, reached t = {t})"
    )]
    BudgetExceeded { budget: u64, replica: u64, t: i64 },

    #[error("inconsistent x-chain parameters: {0}")]
    ChainParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
