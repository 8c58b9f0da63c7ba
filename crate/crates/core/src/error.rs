use std::path::PathBuf;

use crate::box_solver::BoxSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("profile violates boundary pins: u(-a) = {left}, u(a) = {right}")]
    BoundaryPins { left: f64, right: f64 },

    #[error("Newton iteration diverged after {iters} iterations (residual {residual:.3e})")]
    NewtonDiverged {
        iters: usize,
        residual: f64,
        last: Box<BoxSolution>,
    },

    #[error("continuation stalled at sigma = {sigma} (step fell below {min_step:e})")]
    ContinuationStalled { sigma: f64, min_step: f64 },

    #[error("wave speed lost its sign at sigma = {sigma} (c = {c})")]
    SpeedSignLoss { sigma: f64, c: f64 },

    #[error("profile never crosses theta = {theta}")]
    NoThetaCrossing { theta: f64 },

    #[error("f' never changes sign on (0, {upper})")]
    NoPeak { upper: f64 },

    #[error("contour passes through a root near {re} + {im}i")]
    ContourThroughRoot { re: f64, im: f64 },

    #[error("state blew up at t = {t} (max |u| = {max_abs})")]
    BlowUp { t: f64, max_abs: f64 },

    #[error("state does not cross level {level} at t = {t}")]
    NoCrossing { level: f64, t: f64 },

    #[error("zero pivot in banded factorization at row {row}")]
    SingularPivot { row: usize },

    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
