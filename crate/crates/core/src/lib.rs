//! Exact-arithmetic workbench for the odd power sum systems
//!
//! ```text
//! sum_{i=1}^{2k+2} z_i^(2j-1) = 0                        (1 <= j <= k)
//! sum_{i=1}^{k+1} x_i^((2j-1)d) = sum_{i=1}^{k+1} y_i^((2j-1)d)
//! ```
//!
//! * [`poly`], [`linalg`], [`upsilon`]: exact polynomials, the relation among
//!   odd power sums and the product factorisation it induces.
//! * [`systems`]: signatures, triviality tests and exact diagonal counts.
//! * [`enumeration`]: parallel signature-collision counting, listings,
//!   growth surveys and the result journal.
//! * [`cascade`]: product relations, the `u` matrix and the gcd cascade.
//! * [`exponents`]: exact paucity exponents and the discrete AM-GM bound.

pub mod cascade;
pub mod decimal;
pub mod enumeration;
pub mod exponents;
pub mod linalg;
pub mod poly;
pub mod systems;
pub mod upsilon;

pub use poly::{ArithOp, PolyError, SparsePoly};
pub use systems::{Signature, SystemSpec, Variant};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
