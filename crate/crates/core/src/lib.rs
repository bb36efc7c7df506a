//! Two-track verification of the local computations behind a GL(2)
//! Eisenstein-times-cusp-form integral: every local quantity (Weil actions on
//! Schwartz functions, induced sections, Whittaker functions, the local
//! integrals I(α) and 𝒫(s,w)) is computed once by brute-force summation over
//! truncated p-adic domains and once from closed-form expressions, and the
//! two are checked against each other.

pub mod cnum;
pub mod engine;
pub mod error;
pub mod chars;
pub mod matrix;
pub mod padic;

pub mod integrate;
pub mod kirillov;
pub mod schwartz;
pub mod section;
pub mod symbolic;
pub mod tail;
pub mod whittaker;

pub use error::{Error, Result};
