//! Stationary measure of the open-boundary asymmetric simple exclusion
//! process, computed three ways: from the Askey-Wilson matrix
//! representation, from a brute-force Markov chain solve, and by
//! event-driven simulation.
//!
//! ```
//! use asep_core::{ansatz, params::AsepParams};
//!
//! let asep = AsepParams::tasep(1.0, 1.0).unwrap();
//! let profile = ansatz::profile_exact(&asep, 2).unwrap();
//! assert!((profile[0] - 0.6).abs() < 1e-12);
//! ```

// Banded matrix code reads better with explicit indices, and `!(x < y)`
// is how NaN gets rejected along with out-of-range values.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod awdist;
pub mod error;
pub mod harnesspoly;
pub mod ldp;
pub mod numeric;
pub mod oracle;
pub mod params;
pub mod semiinf;
pub mod sim;
pub mod validate;

pub use error::{AsepError, Result};
pub use params::{AsepParams, AwParams, Phase, PhaseInfo};
