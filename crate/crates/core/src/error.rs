use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid unit system: {0}")]
    InvalidUnits(String),

    #[error("invalid particle: rest mass must be positive and finite, got {0}")]
    InvalidParticle(f64),

    #[error("speed limit violated: |v| = {speed} >= c = {c}")]
    SpeedLimit { speed: f64, c: f64 },

    #[error("zero-velocity De Broglie radius is undefined")]
    ZeroVelocity,

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("domain error in `{expr}` at t = {t}: {reason}")]
    Domain {
        expr: String,
        t: f64,
        reason: String,
    },

    #[error("t = {t} is outside the trajectory domain [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid worldsheet: {0}")]
    InvalidWorldsheet(String),

    #[error("invalid quadrature settings: {0}")]
    InvalidQuadrature(String),

    #[error("non-finite integrand value {value} at t = {t}")]
    NonFiniteIntegrand { t: f64, value: f64 },

    #[error("non-finite integrand value {value} at (tau, sigma) = ({tau}, {sigma})")]
    NonFiniteIntegrand2d { tau: f64, sigma: f64, value: f64 },

    #[error("non-monotone trajectory")]
    NonMonotone,

    #[error("velocity {speed} below floor {floor} for the spatial swept-area form")]
    BelowVelocityFloor { speed: f64, floor: f64 },

    #[error("negative Nambu-Goto radicand {value} at (tau, sigma) = ({tau}, {sigma})")]
    NegativeRadicand { tau: f64, sigma: f64, value: f64 },

    #[error("string tension must be positive and finite, got {0}")]
    InvalidTension(f64),

    #[error("unit system of the trajectory does not match the requested one")]
    UnitMismatch,

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("infeasible path: segment {segment} has |dx/dt| = {speed} >= v_max = {bound}")]
    Infeasible {
        segment: usize,
        speed: f64,
        bound: f64,
    },

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("csv error: {0}")]
    Csv(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
