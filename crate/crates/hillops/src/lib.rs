//! Numerical toolkit for Hill operators on the circle, developing maps into
//! RP(1), the universal cover of SL(2,R), and the classification of coadjoint
//! Virasoro orbits, together with finite-difference verification of the
//! differential-form identities relating them (the 1-form Θ, the 2-forms
//! ϖ_D / ϖ_P / ω_can / ω₂, and Drinfeld–Sokolov reduction).
//!
//! Everything is represented on uniform grids over S¹ = ℝ/ℤ. Periodic data
//! uses spectral (DFT) calculus; quasi-periodic data (angle functions φ with
//! φ(x+1) = h̃·φ(x)) uses high-order finite differences on exact
//! quasi-periodic extensions. Tangent vectors to the infinite-dimensional
//! spaces are realized as small finite-difference families of maps.

pub mod circle;
pub mod devmap;
pub mod ds;
pub mod forms;
pub mod hill;
pub mod sl2;
pub mod suites;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("density weight mismatch: expected {expected}, got {got}")]
    WeightMismatch { expected: f64, got: f64 },
    #[error("grid function is not strictly increasing (min forward difference {min_diff})")]
    NotMonotone { min_diff: f64 },
    #[error("grid size mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("grid size must be a power of two >= 16, got {0}")]
    BadGridSize(usize),
    #[error("classification ambiguous at the |trace| = 2 boundary (tau = {tau})")]
    BoundaryAmbiguous { tau: f64 },
    #[error("ODE step count too coarse: Richardson residual {residual} exceeds {tol}")]
    StepsTooCoarse { residual: f64, tol: f64 },
    #[error("induced angle function is not an immersion (min phi' = {min_slope})")]
    NotImmersion { min_slope: f64 },
    #[error("monodromy cross-check failed (residual {residual})")]
    MonodromyMismatch { residual: f64 },
    #[error("translation number is zero; stabilizer is trivial")]
    ZeroTranslationNumber,
    #[error("translation number is positive ({0}); no arc endpoints")]
    PositiveTranslationNumber(f64),
    #[error("family member failed validation: {0}")]
    DegenerateFamily(String),
    #[error("connection is not on the level set A21 = -1 (max deviation {0})")]
    NotOnLevelSet(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
