//! Simulation of ghost imaging with spatially entangled photon pairs from a
//! thin nonlinear crystal pumped by structured light.

pub mod analysis;
pub mod biphoton;
pub mod config;
pub mod crystal;
pub mod error;
pub mod experiment;
pub mod fft;
pub mod field;
pub mod holography;
pub mod io;
pub mod modes;
pub mod propagation;

pub use error::{Error, Result};
pub use field::{ComplexField, Domain, Frame, Grid2D, IntensityMap, Normalization};
