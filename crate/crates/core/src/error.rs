//! Error type shared by the kernels, selectors, projections and steppers.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An outer-product sum grew past its configured width cap.
    WidthCapExceeded { width: usize, cap: usize },
    /// Non-finite value encountered; context names the operation or index.
    NonFinite { context: String },
    /// Spectra of A and -B intersect in a Sylvester solve.
    SpectralCollision { min_gap: f64 },
    SingularMatrix { context: String },
    /// A selection hit a singular interpolation block (infinite growth).
    InfeasibleSelection { context: String },
    /// Growth-factor guard tripped during a projection or stage.
    GrowthGuard {
        growth: f64,
        guard: f64,
        stage: Option<usize>,
    },
    /// QDEIM deflation lost full rank, or the input was (numerically) zero.
    RankLoss { step: usize },
    /// Enumeration exceeded its branch budget.
    BranchBudget { budget: usize },
    /// SRRQR swap loop exceeded its iteration guard; the Table of selector
    /// bounds notes the worst case costs O(m r^3 log_eta r) swaps.
    SwapBudget { iterations: usize },
    /// ARP sampling found no remaining probability mass.
    ProbabilityMassLost { total: f64 },
    /// Integrator state became non-finite at the given step.
    NonFiniteState { step: usize },
    ShapeMismatch { context: String },
    Numerical(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::WidthCapExceeded { width, cap } => {
                write!(f, "outer-product sum width {width} exceeds cap {cap}")
            }
            Error::NonFinite { context } => write!(f, "non-finite value in {context}"),
            Error::SpectralCollision { min_gap } => write!(
                f,
                "sylvester spectra collide: min |lambda_A + lambda_B| = {min_gap:.3e}"
            ),
            Error::SingularMatrix { context } => write!(f, "singular matrix: {context}"),
            Error::InfeasibleSelection { context } => {
                write!(f, "infeasible selection: {context}")
            }
            Error::GrowthGuard {
                growth,
                guard,
                stage,
            } => match stage {
                Some(s) => write!(
                    f,
                    "growth-factor guard tripped at stage {s}: {growth:.3e} > {guard:.3e}"
                ),
                None => write!(f, "growth-factor guard tripped: {growth:.3e} > {guard:.3e}"),
            },
            Error::RankLoss { step } => {
                write!(f, "selection lost full rank at step {step}")
            }
            Error::BranchBudget { budget } => {
                write!(f, "selection enumeration exceeded branch budget {budget}")
            }
            Error::SwapBudget { iterations } => write!(
                f,
                "srrqr swap loop exceeded {iterations} iterations (worst case is \
                 O(m r^3 log_eta r) operations)"
            ),
            Error::ProbabilityMassLost { total } => {
                write!(f, "arp sampling mass {total:.3e} below threshold")
            }
            Error::NonFiniteState { step } => {
                write!(f, "integrator state non-finite at step {step}")
            }
            Error::ShapeMismatch { context } => write!(f, "shape mismatch: {context}"),
            Error::Numerical(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for Error {}
