//! Exact-arithmetic periodic orbits for ergodic endomorphisms of the
//! n-torus.
//!
//! An integer matrix A with nonzero determinant induces an endomorphism of
//! 𝕋ⁿ = ℝⁿ/ℤⁿ. When no eigenvalue of A is a root of unity the endomorphism
//! is ergodic, and it then carries a sequence of periodic orbits O_k whose
//! minimum gap d(O_k) and period T(O_k) satisfy d(O_k)ⁿ·T(O_k) ≥ C > 0 with
//! T(O_k) → ∞. This crate constructs such sequences explicitly — eigenvector
//! points of the companion frame modulo split-prime powers, glued across a
//! primary cyclic decomposition and pulled back through an exact integer
//! conjugation — and verifies every finitely checkable claim along the way:
//! period laws of the induced linear recurrences, wedge-invariant distance
//! certificates, the sphere-packing upper bound, and box-count
//! equidistribution reports.
//!
//! All pass/fail-critical arithmetic is exact (arbitrary-precision integers
//! and rationals); floating point appears only in report values and in the
//! two ω_n-based checks, which carry a fixed 1e-12 slack.
//!
//! ```
//! use toral::matrix::IntMatrix;
//! use toral::orbit::{construct_general, ConstructOptions};
//!
//! let cat = IntMatrix::from_i64(&[&[2, 1], &[1, 1]]);
//! let orbit = construct_general(&cat, 1, &ConstructOptions::default()).unwrap();
//! assert_eq!(orbit.frame_record.period.to_string(), "5");
//! ```
//!
//! The `book/` directory of the repository holds the long-form guide; its
//! code snippets are compiled and run as doc-tests through the hidden
//! `book` module below.

pub mod cli;
pub mod equidist;
pub mod error;
pub mod lrs;
pub mod matrix;
pub mod modular;
pub mod orbit;
pub mod poly;

pub use error::{Error, Result};

// Compile and run every Rust snippet of the guide with `cargo test --doc`,
// so the book cannot drift from the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            #[allow(non_camel_case_types)]
            pub struct $name;
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(polynomials, "../../../book/src/polynomials.md");
    chapter!(modular, "../../../book/src/modular.md");
    chapter!(matrices, "../../../book/src/matrices.md");
    chapter!(recurrences, "../../../book/src/recurrences.md");
    chapter!(orbits, "../../../book/src/orbits.md");
    chapter!(equidistribution, "../../../book/src/equidistribution.md");
    chapter!(cli, "../../../book/src/cli.md");
}
