use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no decaying root: both roots of αλ²+β=0 have Re λ ≤ 0")]
    NoDecayingRoot,
    #[error("newton iteration diverged after {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("converged to a trivial branch (max|V| = {amplitude:.3e})")]
    TrivialBranch { amplitude: f64 },
    #[error("tail not resolved: |V(L)|/max|V| = {ratio:.3e}, increase the domain length")]
    TailNotResolved { ratio: f64 },
    #[error("near-kernel for m={m} (adjoint: {adjoint}) is not one-dimensional: smallest singular values {smallest:.3e}, {next:.3e}")]
    NullspaceDimension { m: u32, adjoint: bool, smallest: f64, next: f64 },
    #[error("degenerate pairing ⟨φ,ψ⟩ = {value:.3e}")]
    DegeneratePairing { value: f64 },
    #[error("tail fit residual {residual:.3e} exceeds tolerance")]
    WindowTooNoisy { residual: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("grid has {points} points per axis; composite Boole quadrature needs 4k+1")]
    NotBooleCompatible { points: usize },
    #[error("grid spacing {dx} does not resolve the pulse (need ≤ {required})")]
    GridTooCoarse { dx: f64, required: f64 },
    #[error("pulses too close: separation {distance:.4}")]
    TooClose { distance: f64 },
    #[error("interaction fit residual {residual:.3e} exceeds 5%")]
    FitResidualTooLarge { residual: f64 },
    #[error("parameters outside the reversible regime (J₁J₂λᵢcos(κ₂−κ₁) = {value:.3e})")]
    NotHamiltonianRegime { value: f64 },
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("no return event before t = {t_cap}")]
    NoReturn { t_cap: f64 },
    #[error("gmres stalled after {iterations} iterations (relative residual {residual:.3e})")]
    GmresStalled { iterations: usize, residual: f64 },
    #[error("projection matrix C is singular (condition {condition:.3e})")]
    SingularC { condition: f64 },
    #[error("left the weak-interaction regime (separation {distance:.4})")]
    LeftWeakRegime { distance: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}
