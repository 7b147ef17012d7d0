use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: expected 2m = {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree cap {cap} exceeded (degree would be {degree})")]
    DegreeCap { cap: usize, degree: usize },

    #[error("division by zero scalar")]
    DivisionByZero,

    #[error("malformed generator word: {0}")]
    MalformedWord(String),

    #[error("expression parameter must be symmetric: |K - K^T| = {residual:.3e}")]
    NotSymmetric { residual: f64 },

    #[error("matrix is not in sp(m,C): |aJ + J a^T| = {residual:.3e}")]
    NotSp { residual: f64 },

    #[error("matrix is not symplectic: |S J S^T - J| = {residual:.3e}")]
    NotSymplectic { residual: f64 },

    #[error("Siegel condition violated: Re(<aK,a>/(i hbar)) = {value:.6e} >= 0")]
    NotSiegel { value: f64 },

    #[error("outside chart: {0}")]
    OutsideChart(String),

    #[error("singular point of *-exponential at t = {t_re}+{t_im}i")]
    SingularPoint { t_re: f64, t_im: f64 },

    #[error("path error: {0}")]
    Path(String),

    #[error("polar element undefined for this g: {0}")]
    PolarUndefined(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("schema violation in field `{field}`: {constraint}")]
    Schema { field: String, constraint: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
