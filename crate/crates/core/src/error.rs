use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("probe at ({x}, {y}) lies outside the environment box [{lo:?}, {hi:?}] inflated by the bump radius")]
    OutOfDomain { x: f64, y: f64, lo: [f64; 2], hi: [f64; 2] },

    #[error("action index ({a}, {b}) out of range for {na}x{nb} action sets")]
    ActionIndex { a: usize, b: usize, na: usize, nb: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("degenerate strip: lo = {lo} must be strictly below hi = {hi}")]
    DegenerateStrip { lo: f64, hi: f64 },

    #[error("dynamics are not oriented: best margin delta = {delta} <= 0")]
    NotOriented { delta: f64 },

    #[error("localization requires pi(v) = 0, got |pi(v)| = {residual}")]
    PiKillsV { residual: f64 },

    #[error("active box exhausted at step {step} of {steps}: the domain needs a margin of at least {required} on each side (had {available})")]
    UnderMargined {
        step: usize,
        steps: usize,
        required: f64,
        available: f64,
    },

    #[error("CFL number {cfl} exceeds the monotonicity limit {limit}")]
    Cfl { cfl: f64, limit: f64 },

    #[error("grids are not matched under the scaling x -> eps x: {reason}")]
    UnmatchedGrids { reason: &'static str },

    #[error("point ({x}, {y}) is outside the active box of the field")]
    OutsideActive { x: f64, y: f64 },

    #[error("time {t} is not a whole number of steps of {dt}")]
    OffSchedule { t: f64, dt: f64 },

    #[error("schedule too short: {got} points given, {needed} needed")]
    InsufficientSchedule { got: usize, needed: usize },

    #[error("schedule lacks the times needed for pair ({m}, {n})")]
    MissingTimes { m: f64, n: f64 },

    #[error("increment bound c[{index}] = {value} is negative")]
    NegativeIncrement { index: usize, value: f64 },

    #[error("epsilon {eps} outside (0, 1/2]")]
    EpsilonOutOfRange { eps: f64 },

    #[error("momentum ({px}, {py}) leaves the tabulated effective Hamiltonian range")]
    TableExcursion { px: f64, py: f64 },

    #[error("a-priori bound violated: |u| = {value} > {bound} at t = {t}, sample {sample}")]
    AprioriBound {
        value: f64,
        bound: f64,
        t: f64,
        sample: usize,
    },

    #[error("sample {sample} failed: {reason}")]
    Sample { sample: usize, reason: String },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
