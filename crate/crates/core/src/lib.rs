//! Smooth equivalent norms on `ℓ∞(L) ⊕ c₀(L)` and the machinery built on them.
//!
//! Everything works on finitely supported, desk-scale representatives:
//!
//! - [`smooth_kernel`]: the scalar functions `varpi` and `theta`.
//! - [`pair_norm`]: the lattice norm on pairs `(f, x)`, its fast stationary
//!   solver, Danskin gradient and a brute-force oracle.
//! - [`ordinal`]: ordinals below ω^ω in Cantor normal form.
//! - [`space_operators`]: Talagrand operators, boundary maps and tensor norms.
//! - [`bump_toolkit`]: bump / plateau / coercive constructions.
//! - [`unity_partitions`]: covering sets, resolutions and the basic-set locator.
//! - [`acceptance`]: the acceptance criteria as seeded checks.
//! - [`cli`]: JSON batch front-end (feature `cli`).

pub mod acceptance;
pub mod bump_toolkit;
#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod indexed;
pub mod ordinal;
pub mod pair_norm;
pub mod quadrature;
pub mod sampling;
pub mod smooth_kernel;
pub mod space_operators;
pub mod unity_partitions;

pub use error::{Error, Result};
pub use indexed::{IndexedVector, NormPair};
pub use ordinal::Ordinal;
pub use smooth_kernel::KernelFunctions;
