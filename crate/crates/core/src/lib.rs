//! Finite Weyl-Heisenberg and Clifford group operators, SIC-POVM verification,
//! and the embedded equiangular tight frames of aligned SICs.
//!
//! The crate is organized bottom-up:
//!
//! - [`modring`] — exact modular-integer arithmetic, roots of unity and the
//!   Chinese-remainder index maps every group construction relies on.
//! - [`matrix`] — a dense complex matrix/vector toolkit (products, adjoints,
//!   Kronecker products, partial traces, a Hermitian Jacobi eigensolver).
//! - [`weylheis`] — the standard representation of WH(n), displacement
//!   operators and the displacement-operator basis expansion.
//! - [`clifford`] — symplectic matrices over Z_{n̄}, the projective
//!   representation F → V_F, parity operators and their classification, and
//!   the order-2 symmetry matrix of aligned SICs.
//! - [`decomp`] — Hilbert-space decompositions: the four-block representation
//!   for dimensions divisible by 4, its intertwiner to the standard
//!   representation, Chinese-remainder tensor splitting and the twirl
//!   identities that produce partial traces.
//! - [`sicalign`] — SIC orbits, overlap phases, alignment conditions, the
//!   projectors certifying embedded tight frames, frame partitions and the
//!   symmetry verification.
//! - [`fidsearch`] — numerical fiducial search (frame-potential minimization,
//!   optionally penalized towards alignment) and fiducial file I/O.

pub mod clifford;
pub mod decomp;
pub mod fidsearch;
pub mod matrix;
pub mod modring;
pub mod sicalign;
pub mod weylheis;

pub use matrix::{Complex64, ComplexMatrix};
