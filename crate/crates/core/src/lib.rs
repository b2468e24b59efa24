//! Exact computation in the restricted Cartan-type Lie algebras W(n),
//! S(n)^(1) and H(2m)^(2) over finite fields F_{p^k}, and classification of
//! their semisimple elements into automorphism-group orbits.
//!
//! The crate is organized around the objects it computes with:
//!
//! - [`gf`]: arithmetic in F_{p^k} and F_p-linear algebra on field elements;
//! - [`trunc`]: the truncated polynomial algebra A(n) = k[x_i]/(x_i^p);
//! - [`cartan`]: derivations of A(n), brackets, p-th powers, the divergence
//!   and Hamiltonian maps, and membership in W / S^(1) / H^(2);
//! - [`aut`]: automorphisms of A(n) and the induced Lie-algebra maps;
//! - [`tori`]: the standard maximal tori, weight decompositions, and the
//!   index of a semisimple element;
//! - [`orbits`]: index-lowering maps, Weyl-group data, canonical orbit
//!   labels and the orbit-equivalence decision procedure;
//! - [`normw`]: normalizers and centralizers of the standard tori of W(n);
//! - [`oracle`]: brute-force enumeration of Aut(A(n)) at desk scale;
//! - [`jsonio`]: the stable JSON forms of all the above.

pub mod aut;
pub mod cartan;
pub mod error;
pub mod gf;
pub mod jsonio;
pub mod linalg;
pub mod normw;
pub mod oracle;
pub mod orbits;
pub mod tori;
pub mod trunc;

pub use error::{Error, Result};
pub use gf::{fp_independent, fp_rref, Field, FieldElem, FpSubspace};
pub use trunc::TruncPoly;
