//! Synthetic DNB arrays: a square lattice of raised-cosine discs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::Image2D;

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub rows: usize,
    pub cols: usize,
    pub pitch_nm: f64,
    /// Diameter at the first zero of the radial profile.
    pub dnb_diameter_nm: f64,
    /// Probability that a lattice site holds a DNB.
    pub occupancy: f64,
    pub intensity_min: f64,
    pub intensity_max: f64,
    /// Half-range of the uniform per-site positional jitter.
    pub jitter_nm: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            rows: 54,
            cols: 54,
            pitch_nm: 480.0,
            dnb_diameter_nm: 220.0,
            occupancy: 0.9,
            intensity_min: 0.5,
            intensity_max: 1.0,
            jitter_nm: 0.0,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows < 1 || self.cols < 1 {
            return Err(Error::invalid("phantom needs at least one row and column"));
        }
        if !(self.dnb_diameter_nm > 0.0 && self.dnb_diameter_nm < self.pitch_nm) {
            return Err(Error::invalid(format!(
                "DNB diameter {} must be positive and below the pitch {}",
                self.dnb_diameter_nm, self.pitch_nm
            )));
        }
        if !(self.occupancy > 0.0 && self.occupancy <= 1.0) {
            return Err(Error::invalid(format!(
                "occupancy {} outside (0, 1]",
                self.occupancy
            )));
        }
        if !(self.intensity_min >= 0.0 && self.intensity_min <= self.intensity_max) {
            return Err(Error::invalid(format!(
                "intensity bounds [{}, {}] are not ordered and non-negative",
                self.intensity_min, self.intensity_max
            )));
        }
        if !(self.jitter_nm >= 0.0 && self.jitter_nm.is_finite()) {
            return Err(Error::invalid("jitter must be non-negative"));
        }
        Ok(())
    }
}

/// One occupied lattice site, in nm relative to the center of pixel (0, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub x_nm: f64,
    pub y_nm: f64,
    pub amplitude: f64,
}

/// Raised-cosine radial profile with its first zero at `radius`.
#[inline]
pub fn disc_profile(r: f64, radius: f64) -> f64 {
    if r >= radius {
        0.0
    } else {
        0.5 * (1.0 + (PI * r / radius).cos())
    }
}

/// Draws the occupied sites of a field of `width x height` pixels.
///
/// Every site consumes the same four draws (occupancy, amplitude, jitter x,
/// jitter y) regardless of outcome, so changing the occupancy keeps the
/// amplitudes of surviving sites.
pub fn phantom_sites(
    spec: &PhantomSpec,
    width: usize,
    height: usize,
    grid_pixel_nm: f64,
) -> Result<Vec<Site>> {
    spec.validate()?;
    let radius = spec.dnb_diameter_nm / 2.0;
    let cx = (width as f64 - 1.0) / 2.0 * grid_pixel_nm;
    let cy = (height as f64 - 1.0) / 2.0 * grid_pixel_nm;
    let half_w = (spec.cols as f64 - 1.0) / 2.0 * spec.pitch_nm + radius + spec.jitter_nm;
    let half_h = (spec.rows as f64 - 1.0) / 2.0 * spec.pitch_nm + radius + spec.jitter_nm;
    if half_w > cx || half_h > cy {
        return Err(Error::Geometry(format!(
            "{}x{} lattice at {} nm pitch spans {:.0}x{:.0} nm, field is {:.0}x{:.0} nm",
            spec.cols,
            spec.rows,
            spec.pitch_nm,
            2.0 * half_w,
            2.0 * half_h,
            2.0 * cx,
            2.0 * cy
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut sites = Vec::new();
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let occupied = rng.random::<f64>() < spec.occupancy;
            let amp = spec.intensity_min + (spec.intensity_max - spec.intensity_min) * rng.random::<f64>();
            let jx = spec.jitter_nm * (2.0 * rng.random::<f64>() - 1.0);
            let jy = spec.jitter_nm * (2.0 * rng.random::<f64>() - 1.0);
            if !occupied {
                continue;
            }
            sites.push(Site {
                x_nm: cx + (c as f64 - (spec.cols as f64 - 1.0) / 2.0) * spec.pitch_nm + jx,
                y_nm: cy + (r as f64 - (spec.rows as f64 - 1.0) / 2.0) * spec.pitch_nm + jy,
                amplitude: amp,
            });
        }
    }
    Ok(sites)
}

/// Renders the phantom on a grid of `grid_pixel_nm` pixels.
pub fn generate_phantom(
    spec: &PhantomSpec,
    width: usize,
    height: usize,
    grid_pixel_nm: f64,
) -> Result<Image2D> {
    spec.validate()?;
    let required = spec.dnb_diameter_nm / 4.0;
    if grid_pixel_nm > required {
        return Err(Error::Sampling {
            msg: format!("grid pixel {grid_pixel_nm} nm leaves fewer than 4 pixels per DNB"),
            required_grid_nm: required,
        });
    }
    let sites = phantom_sites(spec, width, height, grid_pixel_nm)?;
    render_sites(&sites, spec.dnb_diameter_nm / 2.0, width, height, grid_pixel_nm)
}

/// Draws raised-cosine discs of the given radius at arbitrary positions.
pub fn render_sites(
    sites: &[Site],
    radius_nm: f64,
    width: usize,
    height: usize,
    grid_pixel_nm: f64,
) -> Result<Image2D> {
    let mut data = vec![0.0; width * height];
    let reach = (radius_nm / grid_pixel_nm).ceil() as i64 + 1;
    for s in sites {
        let px = (s.x_nm / grid_pixel_nm).round() as i64;
        let py = (s.y_nm / grid_pixel_nm).round() as i64;
        for y in (py - reach).max(0)..=(py + reach).min(height as i64 - 1) {
            let dy = y as f64 * grid_pixel_nm - s.y_nm;
            for x in (px - reach).max(0)..=(px + reach).min(width as i64 - 1) {
                let dx = x as f64 * grid_pixel_nm - s.x_nm;
                let v = disc_profile((dx * dx + dy * dy).sqrt(), radius_nm);
                if v > 0.0 {
                    data[y as usize * width + x as usize] += s.amplitude * v;
                }
            }
        }
    }
    Image2D::new(width, height, grid_pixel_nm, data)
}
