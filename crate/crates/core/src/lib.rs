//! Contract-based verifier for FPL, a small functional language with
//! bit-accurate IEEE-754 semantics.

pub mod checks;
pub mod driver;
pub mod float;
pub mod frontend;
pub mod interp;
pub mod mathspec;
pub mod portfolio;
pub mod sexp;
pub mod vcgen;
