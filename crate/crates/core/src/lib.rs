//! Fourier option pricing with the SINC expansion of the truncated
//! log-return density, with the COS, Lewis and Carr-Madan methods alongside
//! for comparison.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod competitors;
pub mod error;
pub mod fft;
pub mod models;
pub mod moments;
pub mod rough_heston;
pub mod sinc;
pub mod surface;
pub mod tables;

pub use error::{PricingError, Result};
pub use models::{CharacteristicFunction, MarketSpec};
pub use sinc::{find_truncation, OptionKind, SincPricer, TruncationRange};
pub use tables::ModelSpec;
