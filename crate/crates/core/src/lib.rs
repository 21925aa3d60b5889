//! Finite element solver for the nonlocal size-modified Poisson-Boltzmann
//! model of a solvated molecule in an ionic mixture.
//!
//! The electrostatic potential is split as `u = G + Psi + Phi`, where `G`
//! carries the point-charge singularities in closed form, `Psi` solves a
//! linear nonlocal interface problem and `Phi` solves the nonlinear problem
//! by a damped Newton iteration. Nonlocal convolutions with the Yukawa
//! kernel are replaced by auxiliary fields solving `-lambda^2 Lap q + q = p`.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fem;
pub mod geometry;
pub mod kernels;
pub mod mesh;
pub mod model;
pub mod post;
pub mod solver;
pub mod sparse;
