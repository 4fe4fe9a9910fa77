//! Simulation toolkit for dissipative state preparation in damped spin-boson
//! chains: sparse operator algebra over composite spin ⊗ boson spaces,
//! Lindblad time evolution and steady states, spin-wave analysis with the
//! adiabatically-eliminated effective model, and a trapped-ion realization
//! layer that derives the chain couplings from laser and trap parameters.

pub mod error;
pub mod ion;
pub mod lindblad;
pub mod model;
pub mod operators;
pub mod parallel;
pub mod space;
pub mod sparse;
pub mod spinwave;
pub mod states;

pub use error::{Error, Result};
