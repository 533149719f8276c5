//! Symbolic/numeric engine for almost Kähler structures on a single chart:
//! twist-map deformations built from Hamiltonian functions, Chern connections
//! and Chern-Ricci forms, and an independent two-route verification that the
//! twisted Chern-Ricci data matches its bracket/derivative prediction.

pub mod check;
pub mod error;
pub mod expr;
pub mod kahler;
pub mod matrix;
pub mod patch;
pub mod twist;
pub mod verify;

pub use error::Error;
