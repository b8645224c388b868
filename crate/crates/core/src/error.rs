use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DebondError {
    #[error("invalid front curve: {0}")]
    InvalidFront(String),

    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid problem data: {0}")]
    InvalidData(String),

    #[error("compatibility condition violated: {0}")]
    Compatibility(String),

    #[error("invalid toughness: {0}")]
    InvalidToughness(String),

    #[error("point (t = {t}, r = {r}) lies outside the admissible space-time region")]
    ApexOutside { t: f64, r: f64 },

    #[error("lattice does not cover the requested region: {0}")]
    LatticeCoverage(String),

    #[error(
        "fixed-point iteration stalled after {iterations} iterations \
         (last change {last_change:e}, measured factor {factor:.3})"
    )]
    NoConvergence {
        iterations: usize,
        last_change: f64,
        factor: f64,
    },

    #[error("coupled window width fell below the lattice step (factor history {factors:?})")]
    WindowUnderflow { factors: Vec<f64> },

    #[error("coercivity lost at t = {t}, y = {y}: principal coefficient {coefficient}")]
    Coercivity { t: f64, y: f64, coefficient: f64 },

    #[error("time step {dt} exceeds the stability bound {bound}")]
    Cfl { dt: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, DebondError>;
