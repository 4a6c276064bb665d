//! Covert communication over a classical-quantum multiple-access channel with a helper.
//!
//! The crate is organised bottom-up:
//!
//! - [`qlinalg`]: dense complex matrices for small Hilbert spaces.
//! - [`channel`]: physical channels, signal ensembles and the compiled cq table.
//! - [`infomeasures`]: entropies, Holevo quantities, relative entropies, pinching.
//! - [`region`]: covert feasibility search and the union-of-pentagons rate region.
//! - [`codingsim`]: random codebooks, typical projectors, square-root decoding,
//!   covertness metrics and the operator-inequality harness.
//!
//! All logarithms are base 2. Factor ordering is `A1 ⊗ A2 ⊗ A3` on the input side and
//! `B ⊗ E` on the output side; matrices are indexed row-major in the usual Kronecker
//! convention.

#![forbid(unsafe_code)]

pub mod channel;
pub mod codingsim;
pub mod error;
pub mod infomeasures;
pub mod qlinalg;
pub mod random;
pub mod region;

pub use error::{Error, Result};
