//! Exact computation in the p-adic ring C*-algebra `Q_p`, generated by a
//! unitary `U` and an isometry `S` with `U^p S = S U` and
//! `sum_{l<p} U^l S S* U^-l = 1`.
//!
//! Symbolic identities are decided on normal forms and cross-checked against
//! the canonical representation on `l^2(Z)` in [`rep`].

pub mod algebra;
pub mod decompose;
pub mod dynamics;
pub mod element;
pub mod error;
pub mod index;
pub mod matrix;
pub mod numeric;
pub mod parse;
pub mod rep;

pub use algebra::{
    expand_level, mul_monomial, normalize_monomial, residue_map_surjective, AlgebraContext,
    Monomial, Word,
};
pub use element::{Coefficient, Element};
pub use error::{QpError, Result};
pub use parse::{parse, render};
pub use matrix::{psi, psi_inverse, OpMatrix, ScalarMatrix};
