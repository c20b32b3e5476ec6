//! Real rasters and DC-centered spectra.
//!
//! Both containers are row-major and carry the physical pixel size of the
//! grid they were sampled on. A [`Spectrum2D`] stores the zero-frequency bin at
//! `(width / 2, height / 2)` (integer division), so bin `(i, j)` holds the
//! frequency `((i - width / 2) / (width * px), (j - height / 2) / (height * px))`
//! in cycles per nanometer.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    width: usize,
    height: usize,
    pixel_size_nm: f64,
    data: Vec<f64>,
}

impl Image2D {
    pub fn new(width: usize, height: usize, pixel_size_nm: f64, data: Vec<f64>) -> Result<Self> {
        check_geometry(width, height, pixel_size_nm)?;
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite sample at ({}, {})",
                i % width,
                i / width
            )));
        }
        Ok(Self {
            width,
            height,
            pixel_size_nm,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, pixel_size_nm: f64) -> Result<Self> {
        Self::new(width, height, pixel_size_nm, vec![0.0; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel index.
    pub fn from_fn(
        width: usize,
        height: usize,
        pixel_size_nm: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, pixel_size_nm, data)
    }

    /// The `w x h` window whose top-left pixel is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image2D> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::Geometry(format!(
                "crop {w}x{h} at ({x0}, {y0}) exceeds {}x{}",
                self.width, self.height
            )));
        }
        Image2D::from_fn(w, h, self.pixel_size_nm, |x, y| self.get(x0 + x, y0 + y))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_size_nm(&self) -> f64 {
        self.pixel_size_nm
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn same_geometry(&self, other: &Image2D) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.pixel_size_nm == other.pixel_size_nm
    }

    /// Applies `f` to every sample. Fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Image2D> {
        Image2D::new(
            self.width,
            self.height,
            self.pixel_size_nm,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn scaled(&self, factor: f64) -> Result<Image2D> {
        self.map(|v| v * factor)
    }

    /// Pointwise product with an image of identical geometry.
    pub fn multiply(&self, other: &Image2D) -> Result<Image2D> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn zip_with(&self, other: &Image2D, f: impl Fn(f64, f64) -> f64) -> Result<Image2D> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Geometry(format!(
                "image sizes differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Image2D::new(
            self.width,
            self.height,
            self.pixel_size_nm,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Bilinear sample at fractional pixel coordinates; `None` outside the grid.
    pub fn bilinear(&self, x: f64, y: f64) -> Option<f64> {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        if !(0.0..=max_x).contains(&x) || !(0.0..=max_y).contains(&y) {
            return None;
        }
        let x0 = (x.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (y.floor() as usize).min(self.height.saturating_sub(2));
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        Some(top * (1.0 - fy) + bottom * fy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    width: usize,
    height: usize,
    pixel_size_nm: f64,
    data: Vec<Complex64>,
}

impl Spectrum2D {
    pub fn new(
        width: usize,
        height: usize,
        pixel_size_nm: f64,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        check_geometry(width, height, pixel_size_nm)?;
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "spectrum length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            pixel_size_nm,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, pixel_size_nm: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            pixel_size_nm,
            vec![Complex64::new(0.0, 0.0); width * height],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_size_nm(&self) -> f64 {
        self.pixel_size_nm
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.width + i]
    }

    /// Index of the zero-frequency bin.
    pub fn center(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    /// Signed bin offsets from DC for storage index `(i, j)`.
    #[inline]
    pub fn bin_offset(&self, i: usize, j: usize) -> (i64, i64) {
        (
            i as i64 - (self.width / 2) as i64,
            j as i64 - (self.height / 2) as i64,
        )
    }

    /// Physical frequency (cycles/nm) of storage index `(i, j)`.
    #[inline]
    pub fn frequency(&self, i: usize, j: usize) -> (f64, f64) {
        let (di, dj) = self.bin_offset(i, j);
        (
            di as f64 / (self.width as f64 * self.pixel_size_nm),
            dj as f64 / (self.height as f64 * self.pixel_size_nm),
        )
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn same_geometry(&self, other: &Spectrum2D) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.pixel_size_nm == other.pixel_size_nm
    }
}

fn check_geometry(width: usize, height: usize, pixel_size_nm: f64) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "dimensions must be at least 1, got {width}x{height}"
        )));
    }
    if !(pixel_size_nm.is_finite() && pixel_size_nm > 0.0) {
        return Err(Error::invalid(format!(
            "pixel size must be positive, got {pixel_size_nm}"
        )));
    }
    Ok(())
}
