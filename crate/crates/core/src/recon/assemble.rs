//! Generalized Wiener assembly of the five bands on the upsampled grid.
//!
//! The camera spectrum is periodic, so a band shifted by the pattern vector is
//! read at `wrap(q + v)`. Camera bins whose transfer support overlaps another
//! alias order are ambiguous and left out; with a pattern frequency near the
//! camera Nyquist limit this is what keeps folded low-frequency content from
//! landing far out in the extended band.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft;
use crate::image::Image2D;
use crate::optics::{sinc, OpticalConfig, SystemTransfer, TransferTable};
use crate::recon::estimate::PatternEstimate;
use crate::recon::separate::SeparatedComponents;
use crate::recon::ReconParams;

/// One band ready for placement: a camera spectrum resampled at `k + frac`,
/// its integer shift and complex gain.
struct Band {
    data: Vec<Complex64>,
    shift_int: [i64; 2],
    shift: [f64; 2],
    gain: Complex64,
}

/// Spectrum at `k + frac` of the band tapered by the separable `window`.
fn resample(
    centered: &[Complex64],
    w: usize,
    h: usize,
    frac: [f64; 2],
    window: Option<(&[f64], &[f64])>,
) -> Vec<Complex64> {
    if frac == [0.0, 0.0] && window.is_none() {
        return centered.to_vec();
    }
    let mut field = fft::inverse_complex(centered, w, h);
    let rx: Vec<Complex64> = (0..w)
        .map(|x| {
            let a = window.map_or(1.0, |(wx, _)| wx[x]);
            Complex64::from_polar(a, -2.0 * PI * frac[0] * x as f64 / w as f64)
        })
        .collect();
    for y in 0..h {
        let a = window.map_or(1.0, |(_, wy)| wy[y]);
        let ry = Complex64::from_polar(a, -2.0 * PI * frac[1] * y as f64 / h as f64);
        for x in 0..w {
            field[y * w + x] *= rx[x] * ry;
        }
    }
    fft::forward_complex(field, w, h)
}

fn band(
    centered: &[Complex64],
    w: usize,
    h: usize,
    shift: [f64; 2],
    gain: Complex64,
    window: Option<(&[f64], &[f64])>,
) -> Band {
    let shift_int = [shift[0].round() as i64, shift[1].round() as i64];
    let frac = [shift[0] - shift_int[0] as f64, shift[1] - shift_int[1] as f64];
    Band {
        data: resample(centered, w, h, frac, window),
        shift_int,
        shift,
        gain,
    }
}

#[inline]
fn wrap(k: i64, n: i64) -> i64 {
    (k + n / 2).rem_euclid(n) - n / 2
}

/// Transfer at `k_true` (physical units) if it is the only alias order of its
/// camera bin inside the support, else `None`. `period` is the camera
/// sampling frequency per axis.
#[inline]
fn unambiguous(table: &TransferTable, k_true: [f64; 2], period: [f64; 2]) -> Option<f64> {
    let kc2 = table.transfer().cutoff().powi(2);
    let [x, y] = k_true;
    if x * x + y * y >= kc2 {
        return None;
    }
    // per axis the nearest other order is the one toward the origin; if any
    // alias lies inside the disc, one of these three does
    let xa = x - period[0].copysign(x);
    let ya = y - period[1].copysign(y);
    if xa * xa + y * y < kc2 || x * x + ya * ya < kc2 || xa * xa + ya * ya < kc2 {
        return None;
    }
    let p = table.profile_sq(x * x + y * y);
    (p != 0.0).then_some(p)
}

/// Combines both orientations into a real image on a grid `cfg.upsample_factor`
/// times finer than the camera. The components are the untapered separation
/// output; `params.edge_border_fraction` sets the taper applied here.
pub fn assemble(
    comp_x: &SeparatedComponents,
    comp_y: &SeparatedComponents,
    est_x: &PatternEstimate,
    est_y: &PatternEstimate,
    transfer: &SystemTransfer,
    cfg: &OpticalConfig,
    params: &ReconParams,
) -> Result<Image2D> {
    params.validate()?;
    cfg.validate()?;
    let (w, h) = (comp_x.c0.width(), comp_x.c0.height());
    let px = comp_x.c0.pixel_size_nm();
    if !comp_x.c0.same_geometry(&comp_y.c0) {
        return Err(Error::Geometry("orientations differ in geometry".into()));
    }
    let f = cfg.upsample_factor;
    let (pw, ph) = (f * w, f * h);
    for est in [est_x, est_y] {
        let [sx, sy] = est.freq_px;
        if !(sx.is_finite() && sy.is_finite())
            || sx.abs() >= (pw / 2) as f64
            || sy.abs() >= (ph / 2) as f64
        {
            return Err(Error::Geometry(format!(
                "pattern shift ({sx:.3}, {sy:.3}) bins exceeds the Nyquist limit of the {pw}x{ph} output grid"
            )));
        }
    }

    let border = params.edge_border_fraction;
    let (wx, wy) = (fft::edge_window(w, border), fft::edge_window(h, border));
    let window = (border > 0.0).then_some((wx.as_slice(), wy.as_slice()));
    let gain = |e: &PatternEstimate, m_sep: f64| {
        Complex64::from_polar(e.modulation_est / m_sep, e.phase_rad)
    };
    let c0: Vec<Complex64> = comp_x
        .c0
        .data()
        .iter()
        .zip(comp_y.c0.data())
        .map(|(a, b)| (a + b) * 0.5)
        .collect();
    let neg = |s: [f64; 2]| [-s[0], -s[1]];
    let gx = gain(est_x, comp_x.modulation);
    let gy = gain(est_y, comp_y.modulation);
    let one = Complex64::new(1.0, 0.0);
    let bands = [
        band(&c0, w, h, [0.0, 0.0], one, window),
        band(comp_x.cplus.data(), w, h, est_x.freq_px, gx, window),
        band(comp_x.cminus.data(), w, h, neg(est_x.freq_px), gx.conj(), window),
        band(comp_y.cplus.data(), w, h, est_y.freq_px, gy, window),
        band(comp_y.cminus.data(), w, h, neg(est_y.freq_px), gy.conj(), window),
    ];

    let table = TransferTable::new(transfer);
    let dk = [1.0 / (w as f64 * px), 1.0 / (h as f64 * px)];
    let period = [1.0 / px, 1.0 / px];
    let p_mean = 0.5
        * (est_x.freq_px[0].hypot(est_x.freq_px[1]) * dk[0]
            + est_y.freq_px[0].hypot(est_y.freq_px[1]) * dk[1]);
    let k_apod = params.apod_cutoff_fraction * (transfer.cutoff() + p_mean);
    let w2 = params.wiener_w * params.wiener_w;
    let (wi, hi) = (w as i64, h as i64);
    let (pcx, pcy) = ((pw / 2) as i64, (ph / 2) as i64);

    // pixel-box factor of every band along each output axis
    let sinc_axis = |n: usize, c: i64, d: f64, shift: f64| -> Vec<f64> {
        (0..n)
            .map(|i| sinc((i as i64 - c) as f64 * d * px + shift * d * px))
            .collect()
    };
    let sx: Vec<Vec<f64>> = bands.iter().map(|b| sinc_axis(pw, pcx, dk[0], b.shift[0])).collect();
    let sy: Vec<Vec<f64>> = bands.iter().map(|b| sinc_axis(ph, pcy, dk[1], b.shift[1])).collect();

    let mut spec = vec![Complex64::new(0.0, 0.0); pw * ph];
    spec.par_chunks_mut(pw).enumerate().for_each(|(j, row)| {
        // the unpaired Nyquist row/column would break conjugate symmetry
        if j == 0 && ph % 2 == 0 {
            return;
        }
        let qy = j as i64 - pcy;
        for (i, out) in row.iter_mut().enumerate() {
            if i == 0 && pw % 2 == 0 {
                continue;
            }
            let qx = i as i64 - pcx;
            let rho = (qx as f64 * dk[0]).hypot(qy as f64 * dk[1]) / k_apod;
            if rho >= 1.0 {
                continue;
            }
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for (b, band) in bands.iter().enumerate() {
                let k_true = [
                    (qx as f64 + band.shift[0]) * dk[0],
                    (qy as f64 + band.shift[1]) * dk[1],
                ];
                let Some(p) = unambiguous(&table, k_true, period) else {
                    continue;
                };
                let kx = wrap(qx + band.shift_int[0], wi);
                let ky = wrap(qy + band.shift_int[1], hi);
                // the camera Nyquist bin has no conjugate partner
                if (w % 2 == 0 && kx == -wi / 2) || (h % 2 == 0 && ky == -hi / 2) {
                    continue;
                }
                let idx = (ky + hi / 2) as usize * w + (kx + wi / 2) as usize;
                let hc = band.gain * (p * sx[b][i] * sy[b][j]);
                num += hc.conj() * band.data[idx];
                den += hc.norm_sqr();
            }
            if den > 0.0 {
                *out = num * ((0.5 * PI * rho).cos() / (den + w2));
            }
        }
    });

    let mut field = fft::inverse_complex(&spec, pw, ph);
    let g = f as f64;
    field.iter_mut().for_each(|c| *c *= g);
    fft::real_part_checked(field, pw, ph, px / g)
}
