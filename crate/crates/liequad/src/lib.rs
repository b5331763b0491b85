//! Symbolic and numeric toolkit for Hamiltonian dynamics on symplectic,
//! cosymplectic, contact and cocontact phase spaces: brackets with
//! independent cross-checks, Lie algebra solvability analysis, integrability
//! criteria, symmetry reduction to quadratures, and a Runge-Kutta oracle.

pub mod brackets;
pub mod cli;
pub mod expr;
pub mod geometry;
pub mod liealg;
pub mod numint;
pub mod reduce;
pub mod symmetry;
pub mod theorems;
