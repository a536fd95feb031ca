use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A conversion needed the inverse of a matrix that has no usable pivot.
    #[error("singular matrix in {context}: pivot {pivot} has magnitude {magnitude:e}")]
    Singular {
        context: &'static str,
        pivot: usize,
        magnitude: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("multiport is not unilateral: {0}")]
    Structure(String),

    #[error("invalid termination: {0}")]
    Termination(String),

    /// Θ = 1 has no finite reactance.
    #[error("element {element} is open-circuited (Θ = 1); no finite reactance")]
    OpenCircuit { element: usize },

    #[error("cannot normalize transfer: {0}")]
    Normalization(String),

    #[error("grid of {cells} cells exceeds budget of {budget}")]
    GridBudget { cells: u128, budget: u128 },

    #[error("non-finite objective at variables {variables:?}")]
    NonFinite { variables: Vec<f64> },

    #[error("invalid problem: {0}")]
    Problem(String),
}
