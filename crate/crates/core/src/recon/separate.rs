//! Per-bin unmixing of a phase-stepped triplet into its three bands.
//!
//! Frame `m` has spectrum `D_m = C0 + (mod/2) e^{i phi_m} C+ + (mod/2) e^{-i phi_m} C-`,
//! where `C+` carries object content shifted up by the pattern frequency. The
//! 3x3 mixing matrix is the same in every bin, so it is inverted once.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::illumination::Orientation;
use crate::image::{Image2D, Spectrum2D};

/// Mixing matrices with a Frobenius condition number above this are rejected.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedComponents {
    pub orientation: Orientation,
    pub c0: Spectrum2D,
    pub cplus: Spectrum2D,
    pub cminus: Spectrum2D,
    /// Modulation assumed when unmixing; `cplus` is scaled by `true / assumed`.
    pub modulation: f64,
    pub condition: f64,
}

type Mat3 = [[Complex64; 3]; 3];

pub fn mixing_matrix(phases: [f64; 3], modulation: f64) -> Mat3 {
    let half = modulation / 2.0;
    phases.map(|phi| {
        [
            Complex64::new(1.0, 0.0),
            Complex64::from_polar(half, phi),
            Complex64::from_polar(half, -phi),
        ]
    })
}

fn frobenius(m: &Mat3) -> f64 {
    m.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Inverse by adjugate; `None` when the determinant vanishes.
pub fn invert3(m: &Mat3) -> Option<Mat3> {
    let c = |r: usize, k: usize| m[r][k];
    let cof = |r0: usize, r1: usize, k0: usize, k1: usize| c(r0, k0) * c(r1, k1) - c(r0, k1) * c(r1, k0);
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let det = c(0, 0) * adj[0][0] + c(0, 1) * adj[1][0] + c(0, 2) * adj[2][0];
    if det.norm() == 0.0 || !det.norm().is_finite() {
        return None;
    }
    Some(adj.map(|row| row.map(|v| v / det)))
}

/// Frobenius-norm condition number of the mixing matrix.
pub fn condition_number(phases: [f64; 3], modulation: f64) -> f64 {
    let m = mixing_matrix(phases, modulation);
    match invert3(&m) {
        Some(inv) => frobenius(&m) * frobenius(&inv),
        None => f64::INFINITY,
    }
}

/// Unmixes spectra that are already in the Fourier domain.
pub fn separate_spectra(
    spectra: [&Spectrum2D; 3],
    phases: [f64; 3],
    modulation: f64,
    orientation: Orientation,
) -> Result<SeparatedComponents> {
    if !(modulation > 0.0 && modulation.is_finite()) {
        return Err(Error::invalid(format!("modulation {modulation} must be positive")));
    }
    let [a, b, c] = spectra;
    if !a.same_geometry(b) || !a.same_geometry(c) {
        return Err(Error::Geometry("triplet frames differ in geometry".into()));
    }
    let m = mixing_matrix(phases, modulation);
    let inv = invert3(&m).ok_or(Error::DegeneratePhases {
        condition: f64::INFINITY,
    })?;
    let condition = frobenius(&m) * frobenius(&inv);
    if condition > MAX_CONDITION {
        return Err(Error::DegeneratePhases { condition });
    }
    let n = a.data().len();
    let mut out = [
        vec![Complex64::new(0.0, 0.0); n],
        vec![Complex64::new(0.0, 0.0); n],
        vec![Complex64::new(0.0, 0.0); n],
    ];
    for i in 0..n {
        let d = [a.data()[i], b.data()[i], c.data()[i]];
        for (row, comp) in inv.iter().zip(out.iter_mut()) {
            comp[i] = row[0] * d[0] + row[1] * d[1] + row[2] * d[2];
        }
    }
    let [c0, cplus, cminus] = out;
    let (w, h, px) = (a.width(), a.height(), a.pixel_size_nm());
    Ok(SeparatedComponents {
        orientation,
        c0: Spectrum2D::new(w, h, px, c0)?,
        cplus: Spectrum2D::new(w, h, px, cplus)?,
        cminus: Spectrum2D::new(w, h, px, cminus)?,
        modulation,
        condition,
    })
}

pub fn separate_components(
    frames: [&Image2D; 3],
    phases: [f64; 3],
    modulation: f64,
    orientation: Orientation,
) -> Result<SeparatedComponents> {
    let [a, b, c] = frames;
    if !a.same_geometry(b) || !a.same_geometry(c) {
        return Err(Error::Geometry("triplet frames differ in geometry".into()));
    }
    // check the phases before paying for the transforms
    let condition = condition_number(phases, modulation.max(f64::MIN_POSITIVE));
    if condition > MAX_CONDITION {
        return Err(Error::DegeneratePhases { condition });
    }
    let spectra = [fft::fft2(a)?, fft::fft2(b)?, fft::fft2(c)?];
    separate_spectra([&spectra[0], &spectra[1], &spectra[2]], phases, modulation, orientation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::illumination::PROTOCOL_PHASES;

    #[test]
    fn identical_frames_have_no_sidebands() {
        let img = Image2D::from_fn(16, 16, 1.0, |x, y| ((x * y) % 5) as f64).unwrap();
        let comp =
            separate_components([&img, &img, &img], PROTOCOL_PHASES, 0.9, Orientation::X).unwrap();
        let spec = fft::fft2(&img).unwrap();
        let scale = spec.energy().sqrt();
        for i in 0..256 {
            assert!((comp.c0.data()[i] - spec.data()[i]).norm() < 1e-12 * scale);
            assert!(comp.cplus.data()[i].norm() < 1e-12 * scale);
            assert!(comp.cminus.data()[i].norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn repeated_phase_is_degenerate() {
        let img = Image2D::zeros(8, 8, 1.0).unwrap();
        let r = separate_components(
            [&img, &img, &img],
            [0.0, 0.0, PROTOCOL_PHASES[1]],
            0.9,
            Orientation::X,
        );
        assert!(matches!(r, Err(Error::DegeneratePhases { .. })));
    }

    #[test]
    fn equally_spaced_phases_are_well_conditioned() {
        let c = condition_number(PROTOCOL_PHASES, 1.0);
        assert!(c > 1.0 && c < 10.0, "condition {c}");
        assert!(condition_number([0.0, 1e-12, 2.0], 1.0) > MAX_CONDITION);
    }
}
