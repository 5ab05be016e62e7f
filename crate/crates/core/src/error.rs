use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("boundary sign pattern {signs:?} matches no known phase region")]
    AmbiguousRegion { signs: [f64; 4] },

    #[error("quasi-energy spectrum at phi = {phi} is degenerate across zero (gap {gap:e})")]
    DegenerateMode { phi: f64, gap: f64 },

    #[error("overlap block is singular at phi = {phi} (|det U| = {det:e})")]
    SingularOverlap { phi: f64, det: f64 },

    #[error("initial point is not an admissible pre-quench state: {reason}")]
    InadmissibleInitialState { reason: String },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("ground state is gapless (smallest |level| = {level:e})")]
    GaplessGroundState { level: f64 },

    #[error("system size {size} exceeds the limit {limit} for {what}")]
    SizeLimit { size: usize, limit: usize, what: &'static str },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("series ends at t = {end} before the averaging window tau = {tau}")]
    WindowTooShort { end: f64, tau: f64 },

    #[error("no parity sector reproduces the reference vacuum energy {reference} (closest {closest}, |diff| = {diff:e})")]
    SectorMismatch { reference: f64, closest: f64, diff: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
