//! Full width at half maximum along a line segment.

use crate::error::{Error, Result};
use crate::image::Image2D;

#[derive(Debug, Clone, PartialEq)]
pub struct FwhmResult {
    /// Distance of each sample from `p0`, nm.
    pub positions_nm: Vec<f64>,
    pub profile: Vec<f64>,
    pub peak_position_nm: f64,
    pub fwhm_nm: f64,
    pub left_nm: f64,
    pub right_nm: f64,
}

/// Bilinear profile from `p0` to `p1`. Points are in nm with the center of
/// pixel (0, 0) at the origin.
pub fn line_profile(img: &Image2D, p0: [f64; 2], p1: [f64; 2], n_samples: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n_samples < 3 {
        return Err(Error::invalid("a profile needs at least 3 samples"));
    }
    let px = img.pixel_size_nm();
    let len = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
    if !(len > 0.0) {
        return Err(Error::invalid("segment has zero length"));
    }
    let mut pos = Vec::with_capacity(n_samples);
    let mut val = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let t = i as f64 / (n_samples - 1) as f64;
        let x = p0[0] + t * (p1[0] - p0[0]);
        let y = p0[1] + t * (p1[1] - p0[1]);
        let v = img.bilinear(x / px, y / px).ok_or_else(|| {
            Error::Geometry(format!("profile point ({x:.1}, {y:.1}) nm lies outside the image"))
        })?;
        pos.push(t * len);
        val.push(v);
    }
    Ok((pos, val))
}

fn crossing(pos: &[f64], val: &[f64], a: usize, b: usize, level: f64) -> f64 {
    let t = (level - val[a]) / (val[b] - val[a]);
    pos[a] + t * (pos[b] - pos[a])
}

pub fn fwhm(img: &Image2D, p0: [f64; 2], p1: [f64; 2], n_samples: usize) -> Result<FwhmResult> {
    let (pos, val) = line_profile(img, p0, p1, n_samples)?;
    let (mut peak, mut ip) = (f64::NEG_INFINITY, 0);
    for (i, &v) in val.iter().enumerate() {
        if v > peak {
            peak = v;
            ip = i;
        }
    }
    let background = val.iter().copied().fold(f64::INFINITY, f64::min);
    if !(peak > background) {
        return Err(Error::ProfileDegenerate("profile is flat".into()));
    }
    let half = background + (peak - background) / 2.0;
    let left = (0..ip)
        .rev()
        .find(|&i| val[i] < half)
        .map(|i| crossing(&pos, &val, i, i + 1, half));
    let right = (ip + 1..val.len())
        .find(|&i| val[i] < half)
        .map(|i| crossing(&pos, &val, i - 1, i, half));
    let (Some(left_nm), Some(right_nm)) = (left, right) else {
        return Err(Error::ProfileDegenerate(
            "profile does not fall below half maximum on both sides of the peak".into(),
        ));
    };
    Ok(FwhmResult {
        peak_position_nm: pos[ip],
        fwhm_nm: right_nm - left_nm,
        left_nm,
        right_nm,
        positions_nm: pos,
        profile: val,
    })
}
