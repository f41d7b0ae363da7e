use thiserror::Error;

pub type Result<T> = std::result::Result<T, ModalError>;

/// Errors surfaced by the modal regression pipeline.
#[derive(Debug, Clone, Error)]
pub enum ModalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The estimated marginal density at `x` is below the support floor.
    /// Conditional quantities are meaningless where no data lives.
    #[error("query x = {x:?} lies in a low-density region (marginal {marginal:.3e} below floor {floor:.3e})")]
    LowDensity { x: Vec<f64>, marginal: f64, floor: f64 },

    /// `|p_yy|` at the query is below the curvature floor; the modal-function
    /// gradient is undefined near a bifurcation or merge.
    #[error("degenerate curvature at (x = {x:?}, y = {y}): |p_yy| = {p_yy:.3e} below floor")]
    DegenerateCurvature { x: Vec<f64>, y: f64, p_yy: f64 },

    #[error("no estimated modes at x = {x:?}")]
    NoModes { x: Vec<f64> },

    #[error("prediction mass {target} unreachable within y bounds dilated by 5h (max mass {max_mass})")]
    UnreachableMass { target: f64, max_mass: f64 },

    #[error("bandwidth selection failed: no grid value produced a nonempty modal set")]
    SelectionFailure,

    #[error("unsupported: {0}")]
    Unsupported(String),
}
