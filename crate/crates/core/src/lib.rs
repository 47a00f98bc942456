//! Numerics for fast solitary waves in Fermi-Pasta-Ulam-Tsingou chains with
//! singular interaction potentials.
//!
//! The pipeline runs from the asymptotic shape ODE ([`shape_ode`]) through the
//! scaling bundle ([`scaling`]) to exact traveling waves ([`wave`]), their
//! linearized spectrum in weighted spaces ([`spectral`]) and direct lattice
//! simulation ([`lattice`]). [`cli_io`] wires everything to files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod lattice;
pub mod ode;
pub mod parallel;
pub mod potentials;
pub mod scaling;
pub mod shape_ode;
pub mod spectral;
pub mod wave;

pub use potentials::{Potential, PotentialKind};
pub use scaling::ScalingParams;
pub use shape_ode::ShapeSolution;
pub use wave::WaveProfile;
