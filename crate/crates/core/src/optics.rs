//! Diffraction-limited incoherent imaging with a circular pupil.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::image::{Image2D, Spectrum2D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalConfig {
    pub wavelength_nm: f64,
    pub na: f64,
    /// Camera-plane pixel pitch.
    pub pixel_size_nm: f64,
    /// Output grid refinement of the super-resolved image.
    pub upsample_factor: usize,
}

impl Default for OpticalConfig {
    fn default() -> Self {
        Self {
            wavelength_nm: 550.0,
            na: 0.8,
            pixel_size_nm: 219.5,
            upsample_factor: 2,
        }
    }
}

impl OpticalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_nm.is_finite() && self.wavelength_nm > 0.0) {
            return Err(Error::invalid(format!(
                "wavelength must be positive, got {}",
                self.wavelength_nm
            )));
        }
        if !(self.na > 0.0 && self.na <= 1.5) {
            return Err(Error::invalid(format!(
                "numerical aperture must lie in (0, 1.5], got {}",
                self.na
            )));
        }
        if !(self.pixel_size_nm.is_finite() && self.pixel_size_nm > 0.0) {
            return Err(Error::invalid(format!(
                "pixel size must be positive, got {}",
                self.pixel_size_nm
            )));
        }
        if self.upsample_factor < 1 {
            return Err(Error::invalid("upsample factor must be at least 1"));
        }
        Ok(())
    }
}

/// Incoherent cutoff `2 NA / lambda` in cycles/nm.
pub fn abbe_cutoff(cfg: &OpticalConfig) -> f64 {
    2.0 * cfg.na / cfg.wavelength_nm
}

/// Abbe limit `lambda / (2 NA)` in nm.
pub fn abbe_resolution(cfg: &OpticalConfig) -> f64 {
    cfg.wavelength_nm / (2.0 * cfg.na)
}

/// Rayleigh criterion `0.61 lambda / NA` in nm.
pub fn rayleigh_resolution(cfg: &OpticalConfig) -> f64 {
    0.61 * cfg.wavelength_nm / cfg.na
}

/// Circular-pupil OTF at normalized radius `rho = |k| / kc`.
pub fn otf_profile(rho: f64) -> f64 {
    let rho = rho.abs();
    if rho >= 1.0 {
        return 0.0;
    }
    (2.0 / PI) * (rho.acos() - rho * (1.0 - rho * rho).sqrt())
}

fn check_sampling(cfg: &OpticalConfig, grid_pixel_nm: f64) -> Result<()> {
    cfg.validate()?;
    let kc = abbe_cutoff(cfg);
    let nyquist = 1.0 / (2.0 * grid_pixel_nm);
    if kc > nyquist {
        return Err(Error::Sampling {
            msg: format!(
                "OTF cutoff {kc:.4e} cycles/nm exceeds grid Nyquist {nyquist:.4e}"
            ),
            required_grid_nm: 1.0 / (2.0 * kc),
        });
    }
    Ok(())
}

/// OTF sampled on a DC-centered grid. Real, radially symmetric, `H(0) = 1`.
pub fn otf(
    cfg: &OpticalConfig,
    width: usize,
    height: usize,
    grid_pixel_nm: f64,
) -> Result<Spectrum2D> {
    check_sampling(cfg, grid_pixel_nm)?;
    let kc = abbe_cutoff(cfg);
    let mut spec = Spectrum2D::zeros(width, height, grid_pixel_nm)?;
    let (w, h) = (width, height);
    for j in 0..h {
        for i in 0..w {
            let (kx, ky) = spec.frequency(i, j);
            let v = otf_profile((kx * kx + ky * ky).sqrt() / kc);
            spec.data_mut()[j * w + i] = Complex64::new(v, 0.0);
        }
    }
    Ok(spec)
}

/// PSF centered at `(width / 2, height / 2)`, non-negative, summing to 1.
pub fn psf(
    cfg: &OpticalConfig,
    width: usize,
    height: usize,
    grid_pixel_nm: f64,
) -> Result<Image2D> {
    let h = otf(cfg, width, height, grid_pixel_nm)?;
    let field = fft::inverse_complex(h.data(), width, height);
    // inverse of a real even spectrum is real; uncentered output has its
    // origin at index 0, move it to the grid center
    let centered = fft::center(&field, width, height);
    let img = fft::real_part_checked(centered, width, height, grid_pixel_nm)?;
    let peak = img.min_max().1;
    let floor = -1e-9 * peak;
    if let Some(v) = img.data().iter().copied().find(|&v| v < floor) {
        return Err(Error::NumericConsistency(format!(
            "PSF negativity {v:.3e} beyond clip threshold {floor:.3e}"
        )));
    }
    let clipped = img.map(|v| v.max(0.0))?;
    let total = clipped.sum();
    clipped.scaled(1.0 / total)
}

/// Transfer of a camera: optical OTF times the pixel-integration box,
/// evaluable at any frequency. Used where sub-bin shifts are needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemTransfer {
    cutoff: f64,
    pixel_size_nm: f64,
}

impl SystemTransfer {
    pub fn new(cfg: &OpticalConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cutoff: abbe_cutoff(cfg),
            pixel_size_nm: cfg.pixel_size_nm,
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn pixel_size_nm(&self) -> f64 {
        self.pixel_size_nm
    }

    /// Transfer at physical frequency `(kx, ky)` in cycles/nm.
    #[inline]
    pub fn eval(&self, kx: f64, ky: f64) -> f64 {
        let rho = (kx * kx + ky * ky).sqrt() / self.cutoff;
        if rho >= 1.0 {
            return 0.0;
        }
        otf_profile(rho) * sinc(kx * self.pixel_size_nm) * sinc(ky * self.pixel_size_nm)
    }
}

const TABLE_STEPS: usize = 8192;

/// The pupil profile of a [`SystemTransfer`] on a fine lookup table, for
/// inner loops that evaluate it millions of times. Interpolation error is
/// below 1e-7 away from the cutoff.
#[derive(Debug, Clone)]
pub struct TransferTable {
    transfer: SystemTransfer,
    lut: Vec<f64>,
}

impl TransferTable {
    pub fn new(transfer: &SystemTransfer) -> Self {
        let mut lut: Vec<f64> = (0..=TABLE_STEPS)
            .map(|i| otf_profile(i as f64 / TABLE_STEPS as f64))
            .collect();
        lut.push(0.0);
        Self {
            transfer: *transfer,
            lut,
        }
    }

    pub fn transfer(&self) -> &SystemTransfer {
        &self.transfer
    }

    /// Pupil profile at squared physical radius `k2`, cycles^2/nm^2.
    #[inline]
    pub fn profile_sq(&self, k2: f64) -> f64 {
        let rho = k2.sqrt() / self.transfer.cutoff;
        if rho >= 1.0 {
            return 0.0;
        }
        let x = rho * TABLE_STEPS as f64;
        let i = x as usize;
        let f = x - i as f64;
        self.lut[i] + f * (self.lut[i + 1] - self.lut[i])
    }

    #[inline]
    pub fn eval(&self, kx: f64, ky: f64) -> f64 {
        let p = self.profile_sq(kx * kx + ky * ky);
        if p == 0.0 {
            return 0.0;
        }
        let a = self.transfer.pixel_size_nm;
        p * sinc(kx * a) * sinc(ky * a)
    }
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}
