use thiserror::Error;

/// Errors raised anywhere in the pricing engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "frequency {re}{im:+}i lies outside the analyticity strip of the characteristic function"
    )]
    CfDomain { re: f64, im: f64 },

    #[error("fractional Riccati solution blew up at t = {time} (|h| = {modulus:e})")]
    RiccatiBlowUp { time: f64, modulus: f64 },

    #[error("truncation search did not converge after {iterations} iterations (last X_c = {last_half_width})")]
    TruncationNotConverged {
        iterations: usize,
        last_half_width: f64,
    },

    #[error("price {price} violates the {bound} no-arbitrage bound {value}")]
    PriceOutOfBounds {
        price: f64,
        bound: &'static str,
        value: f64,
    },

    #[error("implied volatility search failed to converge for price {price}")]
    ImpliedVolNotConverged { price: f64 },

    #[error("target log-strike {target} lies outside the grid [{lower}, {upper}]")]
    Extrapolation { target: f64, lower: f64, upper: f64 },

    #[error("negative discriminant c2 + sqrt(c4) = {0} in the cumulant truncation rule")]
    NegativeDiscriminant(f64),

    #[error("unknown table id `{0}`")]
    UnknownTable(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, PricingError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> PricingError {
    PricingError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
