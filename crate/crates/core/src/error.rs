use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate sparsity regime: p = {p} >= n/e for n = {n}")]
    DegenerateSparsity { n: u64, p: f64 },

    #[error("prior does not declare constant `{0}`")]
    MissingConstant(&'static str),

    #[error("m_0 = {m0} >= alpha = {alpha}: every observation would be rejected")]
    AlwaysReject { m0: f64, alpha: f64 },

    #[error("m_x stays below alpha = {alpha} up to x = {x_cap} (m = {m_cap})")]
    NoCrossing { alpha: f64, x_cap: f64, m_cap: f64 },

    #[error("shrinkage curve not monotone: m({x_lo}) = {m_lo} > m({x_hi}) = {m_hi}")]
    NonMonotone {
        x_lo: f64,
        m_lo: f64,
        x_hi: f64,
        m_hi: f64,
    },

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    QuadratureNotConverged { achieved: f64, requested: f64 },

    #[error("non-finite integrand or log-density at u = {at}")]
    NonFinite { at: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::AlwaysReject { .. }
                | Error::NoCrossing { .. }
                | Error::NonMonotone { .. }
                | Error::QuadratureNotConverged { .. }
                | Error::NonFinite { .. }
        )
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(
            name,
            format!("must be positive and finite, got {value}"),
        ))
    }
}

pub(crate) fn ensure_unit_open(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::invalid(
            name,
            format!("must lie in (0, 1), got {value}"),
        ))
    }
}
