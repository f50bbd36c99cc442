//! Certification and verification primitives for restricted eigenvalue (RE)
//! and restricted isometry (RIP) conditions on structured subgaussian random
//! designs, together with the Lasso and Dantzig-selector estimators and the
//! closed-form theory quantities they are compared against.
//!
//! The crate is `no_std` (with `alloc`); all IO, configuration, and the
//! Monte Carlo harness live in the companion `relab` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bounds;
pub mod cone;
pub mod linalg;
pub mod model;
pub mod recert;
pub mod rng;
pub mod solvers;
pub mod width;
