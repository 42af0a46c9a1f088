use alloc::string::String;

/// Errors produced by the core numerics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid tabulated diagonal: {0}")]
    InvalidTable(String),

    #[error(
        "contact set has positive measure ({measure:.3e}); no absolutely continuous copula exists"
    )]
    PositiveMeasureContact { measure: f64 },

    #[error("interval ({lo}, {hi}) does not end on fixed points of the diagonal")]
    NotFixedPoint { lo: f64, hi: f64 },

    #[error("diagonal touches the identity inside (0,1); build a spliced model instead")]
    NotSimple,

    #[error("quadrature did not reach tolerance {requested:.1e} (achieved {achieved:.3e})")]
    Accuracy { requested: f64, achieved: f64 },

    #[error("integrand is not finite at x = {at}")]
    NonFinite { at: f64 },

    #[error("root finding for quantile {quantile} did not converge")]
    NonConvergence { quantile: f64 },

    #[error("model is infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = core::result::Result<T, Error>;
