//! Structured-illumination imaging of DNB arrays: forward simulation,
//! six-frame reconstruction and resolution metrology.

pub mod commands;
pub mod config;
pub mod error;
pub mod fft;
pub mod forward;
pub mod illumination;
pub mod image;
pub mod io;
pub mod metrology;
pub mod optics;
pub mod phantom;
pub mod recon;

pub use error::{Error, Result};
pub use image::{Image2D, Spectrum2D};
