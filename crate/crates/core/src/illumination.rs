//! Sinusoidal illumination along the pixel axes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::Image2D;
use crate::optics::{abbe_cutoff, OpticalConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    X,
    Y,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::X => "X",
            Orientation::Y => "Y",
        })
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Orientation::X),
            "Y" | "y" => Ok(Orientation::Y),
            other => Err(Error::invalid(format!("unknown orientation {other:?}"))),
        }
    }
}

/// `I(r) = 1 + m cos(2 pi f u + phase)` with `u` the coordinate along the
/// orientation axis, measured from the center of pixel (0, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlluminationPattern {
    pub orientation: Orientation,
    pub freq_cyc_per_nm: f64,
    pub phase_rad: f64,
    pub modulation: f64,
}

impl IlluminationPattern {
    pub fn validate(&self) -> Result<()> {
        if !(self.freq_cyc_per_nm > 0.0 && self.freq_cyc_per_nm.is_finite()) {
            return Err(Error::invalid(format!(
                "pattern frequency must be positive, got {}",
                self.freq_cyc_per_nm
            )));
        }
        if !(self.modulation > 0.0 && self.modulation <= 1.0) {
            return Err(Error::invalid(format!(
                "modulation {} outside (0, 1]",
                self.modulation
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn value_at(&self, x_nm: f64, y_nm: f64) -> f64 {
        let u = match self.orientation {
            Orientation::X => x_nm,
            Orientation::Y => y_nm,
        };
        1.0 + self.modulation * (2.0 * PI * self.freq_cyc_per_nm * u + self.phase_rad).cos()
    }
}

pub fn pattern_image(
    p: &IlluminationPattern,
    width: usize,
    height: usize,
    grid_pixel_nm: f64,
) -> Result<Image2D> {
    p.validate()?;
    // the pattern is separable: evaluate one line, then replicate
    let along = match p.orientation {
        Orientation::X => width,
        Orientation::Y => height,
    };
    let line: Vec<f64> = (0..along)
        .map(|i| p.value_at(i as f64 * grid_pixel_nm, i as f64 * grid_pixel_nm))
        .collect();
    Image2D::from_fn(width, height, grid_pixel_nm, |x, y| match p.orientation {
        Orientation::X => line[x],
        Orientation::Y => line[y],
    })
}

pub const PROTOCOL_PHASES: [f64; 3] = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0];

/// Six patterns: three phases along X, then three along Y.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionProtocol {
    patterns: [IlluminationPattern; 6],
}

impl AcquisitionProtocol {
    pub fn new(freq_cyc_per_nm: f64, modulation: f64) -> Result<Self> {
        let mut patterns = [IlluminationPattern {
            orientation: Orientation::X,
            freq_cyc_per_nm,
            phase_rad: 0.0,
            modulation,
        }; 6];
        for (i, p) in patterns.iter_mut().enumerate() {
            p.orientation = if i < 3 { Orientation::X } else { Orientation::Y };
            p.phase_rad = PROTOCOL_PHASES[i % 3];
            p.validate()?;
        }
        Ok(Self { patterns })
    }

    pub fn patterns(&self) -> &[IlluminationPattern; 6] {
        &self.patterns
    }

    pub fn freq_cyc_per_nm(&self) -> f64 {
        self.patterns[0].freq_cyc_per_nm
    }

    pub fn modulation(&self) -> f64 {
        self.patterns[0].modulation
    }

    /// `(orientation, phase)` tags in acquisition order.
    pub fn tags(&self) -> [(Orientation, f64); 6] {
        self.patterns.map(|p| (p.orientation, p.phase_rad))
    }
}

/// Protocol at `freq_fraction` of the incoherent cutoff.
pub fn default_protocol(
    cfg: &OpticalConfig,
    freq_fraction: f64,
    modulation: f64,
) -> Result<AcquisitionProtocol> {
    cfg.validate()?;
    if !(freq_fraction > 0.0 && freq_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "frequency fraction {freq_fraction} outside (0, 1]"
        )));
    }
    AcquisitionProtocol::new(freq_fraction * abbe_cutoff(cfg), modulation)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(orientation: Orientation, phase: f64, m: f64) -> IlluminationPattern {
        IlluminationPattern {
            orientation,
            freq_cyc_per_nm: 1.0 / 400.0,
            phase_rad: phase,
            modulation: m,
        }
    }

    #[test]
    fn pattern_values() {
        let img = pattern_image(&pat(Orientation::X, 0.0, 0.9), 80, 4, 10.0).unwrap();
        assert!((img.get(0, 0) - 1.9).abs() < 1e-12);
        // half period = 200 nm = 20 pixels
        assert!((img.get(20, 3) - 0.1).abs() < 1e-12);
        // 80 px = two whole periods
        assert!((img.mean() - 1.0).abs() < 1e-9);
        let (lo, hi) = img.min_max();
        assert!(lo >= 0.1 - 1e-12 && hi <= 1.9 + 1e-12);
        for x in 0..80 {
            assert!((img.get(x, 0) - img.get(x, 3)).abs() < 1e-15);
        }
    }

    #[test]
    fn y_pattern_varies_along_y_only() {
        let img = pattern_image(&pat(Orientation::Y, 1.0, 0.5), 4, 40, 10.0).unwrap();
        for y in 0..40 {
            for x in 1..4 {
                assert_eq!(img.get(x, y), img.get(0, y));
            }
        }
        assert!((img.get(0, 20) - img.get(0, 0)).abs() > 0.5);
    }

    #[test]
    fn phase_average_is_flat() {
        for o in [Orientation::X, Orientation::Y] {
            let imgs: Vec<_> = PROTOCOL_PHASES
                .iter()
                .map(|&ph| pattern_image(&pat(o, ph, 0.9), 33, 29, 7.0).unwrap())
                .collect();
            for i in 0..33 * 29 {
                let m = imgs.iter().map(|im| im.data()[i]).sum::<f64>() / 3.0;
                assert!((m - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn protocol_defaults() {
        let cfg = OpticalConfig::default();
        let p = default_protocol(&cfg, 0.8, 0.9).unwrap();
        assert!((p.freq_cyc_per_nm() - 0.8 * 2.0 * 0.8 / 550.0).abs() < 1e-18);
        assert!((p.freq_cyc_per_nm() - 2.327e-3).abs() < 1e-6);
        let tags = p.tags();
        for (i, (o, ph)) in tags.iter().enumerate() {
            assert_eq!(*o, if i < 3 { Orientation::X } else { Orientation::Y });
            assert_eq!(*ph, PROTOCOL_PHASES[i % 3]);
        }
        assert!(default_protocol(&cfg, 0.0, 0.9).is_err());
        assert!(default_protocol(&cfg, 1.1, 0.9).is_err());
        assert!(default_protocol(&cfg, 0.8, 0.0).is_err());
    }
}
