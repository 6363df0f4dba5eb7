//! Exact certification pipeline for the CHSH mod 3 Bell inequality.
//!
//! The crate builds the symmetry-reduced sum-of-squares semidefinite program for
//! the CHSH mod 3 Bell polynomial, solves it in arbitrary precision, rounds the
//! numeric solution to an exact certificate over the real cubic field
//! F = Q[z]/(z^3 - 3z + 1), verifies the certificate in exact arithmetic,
//! extracts all optimal quantum strategies, and quantifies how robustly the
//! inequality self-tests the maximally entangled two-qutrit state.
//!
//! Pipeline stages (see the `cli` binary for the file-level interface):
//!
//! ```text
//! bellgame::build_p ── sdp::assemble_sos ── solver::solve ── certify::round_solution
//!        │                                                        │
//!        └── classical / Buhrman-Massar bounds          certify::verify_certificate
//!                                                                 │
//!                                  extract::closure ── extract::block_diagonalize
//!                                                                 │
//!                                          robust::robust_experiment, defect, ...
//! ```
//!
//! All exact computation happens over the fields in [`exactnum`]; words and
//! noncommutative polynomials live in [`ncalg`].

pub mod par;
pub mod exactnum;
pub mod linear;
pub mod ncalg;
pub mod bellgame;
pub mod symmetry;
pub mod sdp;
pub mod solver;
pub mod certify;
pub mod extract;
pub mod robust;
