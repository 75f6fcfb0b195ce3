//! Simulator and verification toolkit for eternal height-field solutions:
//! landscape kernels, Busemann families, variational evolution, competition
//! interfaces, coloring maps, and shock geometry.

pub mod busemann;
pub mod colormap;
pub mod error;
pub mod eternal;
pub mod geodesics;
pub mod geom;
pub mod interfaces;
pub mod landscape;
pub mod lpp;
pub mod weight;

pub use error::{KpzError, Result};
pub use geom::{Sign, SignedDirection, SpaceTimePoint};
