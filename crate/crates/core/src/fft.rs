//! Unitary 2D transforms, edge apodization and Fourier-domain upsampling.
//!
//! Both directions scale by `1 / sqrt(width * height)`, so Parseval holds with
//! no extra factors. Spectra leave this module DC-centered.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::image::{Image2D, Spectrum2D};

/// Below this many samples the row passes run on the calling thread.
const PARALLEL_THRESHOLD: usize = 64 * 64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

fn rows_in_place(buf: &mut [Complex64], width: usize, direction: FftDirection) {
    let fft = plan(width, direction);
    if buf.len() >= PARALLEL_THRESHOLD {
        buf.par_chunks_mut(width).for_each(|row| fft.process(row));
    } else {
        fft.process(buf);
    }
}

fn transpose(src: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    const BLOCK: usize = 32;
    for by in (0..height).step_by(BLOCK) {
        for bx in (0..width).step_by(BLOCK) {
            for y in by..(by + BLOCK).min(height) {
                for x in bx..(bx + BLOCK).min(width) {
                    dst[x * height + y] = src[y * width + x];
                }
            }
        }
    }
    dst
}

/// Unitary 2D DFT on a row-major buffer in natural (DC at index 0) order.
pub(crate) fn transform_natural(
    buf: Vec<Complex64>,
    width: usize,
    height: usize,
    direction: FftDirection,
) -> Vec<Complex64> {
    let mut buf = buf;
    rows_in_place(&mut buf, width, direction);
    let mut t = transpose(&buf, width, height);
    rows_in_place(&mut t, height, direction);
    let mut out = transpose(&t, height, width);
    let scale = 1.0 / ((width * height) as f64).sqrt();
    if out.len() >= PARALLEL_THRESHOLD {
        out.par_iter_mut().for_each(|c| *c *= scale);
    } else {
        out.iter_mut().for_each(|c| *c *= scale);
    }
    out
}

/// Moves the DC sample from index 0 to `(width / 2, height / 2)`.
pub(crate) fn center(natural: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); natural.len()];
    let (cx, cy) = (width / 2, height / 2);
    for y in 0..height {
        let ty = (y + cy) % height;
        for x in 0..width {
            out[ty * width + (x + cx) % width] = natural[y * width + x];
        }
    }
    out
}

/// Inverse of [`center`].
pub(crate) fn uncenter(centered: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); centered.len()];
    let (cx, cy) = (width / 2, height / 2);
    for y in 0..height {
        let sy = (y + cy) % height;
        for x in 0..width {
            out[y * width + x] = centered[sy * width + (x + cx) % width];
        }
    }
    out
}

/// Forward transform of a complex field, DC-centered output.
pub(crate) fn forward_complex(
    field: Vec<Complex64>,
    width: usize,
    height: usize,
) -> Vec<Complex64> {
    center(
        &transform_natural(field, width, height, FftDirection::Forward),
        width,
        height,
    )
}

/// Inverse transform of a DC-centered spectrum to a complex field.
pub(crate) fn inverse_complex(
    centered: &[Complex64],
    width: usize,
    height: usize,
) -> Vec<Complex64> {
    transform_natural(
        uncenter(centered, width, height),
        width,
        height,
        FftDirection::Inverse,
    )
}

pub fn fft2(img: &Image2D) -> Result<Spectrum2D> {
    let (w, h) = (img.width(), img.height());
    let field = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Spectrum2D::new(w, h, img.pixel_size_nm(), forward_complex(field, w, h))
}

/// Inverse transform of a conjugate-symmetric spectrum.
///
/// Fails with a numeric-consistency error when the imaginary residue exceeds
/// `1e-9 * max|real|`.
pub fn ifft2(spec: &Spectrum2D) -> Result<Image2D> {
    let (w, h) = (spec.width(), spec.height());
    let field = inverse_complex(spec.data(), w, h);
    real_part_checked(field, w, h, spec.pixel_size_nm())
}

pub(crate) fn real_part_checked(
    field: Vec<Complex64>,
    width: usize,
    height: usize,
    pixel_size_nm: f64,
) -> Result<Image2D> {
    let (max_re, max_im) = field.iter().fold((0.0f64, 0.0f64), |(r, i), c| {
        (r.max(c.re.abs()), i.max(c.im.abs()))
    });
    if max_im > 1e-9 * max_re && max_im > f64::MIN_POSITIVE {
        return Err(Error::NumericConsistency(format!(
            "imaginary residue {max_im:.3e} exceeds 1e-9 of max real part {max_re:.3e}"
        )));
    }
    Image2D::new(
        width,
        height,
        pixel_size_nm,
        field.into_iter().map(|c| c.re).collect(),
    )
}

/// Raised-cosine weight for position `i` of `n` with a taper of `taper` samples.
fn taper_weight(i: usize, n: usize, taper: f64) -> f64 {
    if taper <= 0.0 || n < 2 {
        return 1.0;
    }
    // distance in samples from the nearest outermost pixel
    let d = (i.min(n - 1 - i)) as f64;
    if d >= taper {
        1.0
    } else {
        0.5 * (1.0 - (PI * d / taper).cos())
    }
}

/// One-dimensional raised-cosine edge window of length `n`.
pub fn edge_window(n: usize, border_fraction: f64) -> Vec<f64> {
    let taper = border_fraction * n as f64;
    (0..n).map(|i| taper_weight(i, n, taper)).collect()
}

/// Separable raised-cosine taper: 1 in the interior, 0 at the outermost pixels.
pub fn apodize_edges(img: &Image2D, border_fraction: f64) -> Result<Image2D> {
    if !(0.0..=0.5).contains(&border_fraction) {
        return Err(Error::invalid(format!(
            "border fraction {border_fraction} outside [0, 0.5]"
        )));
    }
    if border_fraction == 0.0 {
        return Ok(img.clone());
    }
    let wx = edge_window(img.width(), border_fraction);
    let wy = edge_window(img.height(), border_fraction);
    Image2D::from_fn(img.width(), img.height(), img.pixel_size_nm(), |x, y| {
        img.get(x, y) * wx[x] * wy[y]
    })
}

/// Zero-pads a DC-centered spectrum to `new_w x new_h`, splitting any
/// unpaired Nyquist row/column of an even source so real inputs stay real.
pub(crate) fn pad_centered(
    src: &[Complex64],
    width: usize,
    height: usize,
    new_w: usize,
    new_h: usize,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); new_w * new_h];
    let (cx, cy) = (width as i64 / 2, height as i64 / 2);
    let (ncx, ncy) = (new_w as i64 / 2, new_h as i64 / 2);
    let grow_x = new_w > width;
    let grow_y = new_h > height;
    for j in 0..height {
        let dj = j as i64 - cy;
        for i in 0..width {
            let di = i as i64 - cx;
            let v = src[j * width + i];
            let nyq_x = grow_x && width % 2 == 0 && di == -cx;
            let nyq_y = grow_y && height % 2 == 0 && dj == -cy;
            let xs: &[i64] = if nyq_x { &[-cx, cx] } else { &[di] };
            let ys: &[i64] = if nyq_y { &[-cy, cy] } else { &[dj] };
            let share = 1.0 / (xs.len() * ys.len()) as f64;
            for &ox in xs {
                for &oy in ys {
                    let ti = (ox + ncx) as usize;
                    let tj = (oy + ncy) as usize;
                    out[tj * new_w + ti] += v * share;
                }
            }
        }
    }
    out
}

/// Fourier interpolation onto a grid `factor` times finer in each dimension.
///
/// The output keeps the input mean and has `pixel_size_nm / factor` pixels.
pub fn upsample_fourier(img: &Image2D, factor: usize) -> Result<Image2D> {
    if factor < 1 {
        return Err(Error::invalid("upsampling factor must be at least 1"));
    }
    if factor == 1 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width(), img.height());
    let (nw, nh) = (w * factor, h * factor);
    let spec = fft2(img)?;
    let padded = pad_centered(spec.data(), w, h, nw, nh);
    // unitary scaling shrinks amplitudes by sqrt(old/new); restore the mean
    let mut field = inverse_complex(&padded, nw, nh);
    let gain = ((nw * nh) as f64 / (w * h) as f64).sqrt();
    field.iter_mut().for_each(|c| *c *= gain);
    real_part_checked(field, nw, nh, img.pixel_size_nm() / factor as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image2D::from_fn(w, h, 1.0, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn constant_image_has_single_dc_bin() {
        let c = 2.5;
        let img = Image2D::new(8, 8, 1.0, vec![c; 64]).unwrap();
        let spec = fft2(&img).unwrap();
        for j in 0..8 {
            for i in 0..8 {
                let v = spec.get(i, j);
                if (i, j) == (4, 4) {
                    assert!((v.re - 8.0 * c).abs() < 1e-12 && v.im.abs() < 1e-12);
                } else {
                    assert!(v.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn delta_has_flat_quarter_spectrum() {
        let mut data = vec![0.0; 16];
        data[0] = 1.0;
        let spec = fft2(&Image2D::new(4, 4, 1.0, data).unwrap()).unwrap();
        for c in spec.data() {
            assert!((c.norm() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn center_bin_inverts_to_constant() {
        let c = 1.75;
        let mut spec = Spectrum2D::zeros(8, 8, 1.0).unwrap();
        spec.data_mut()[4 * 8 + 4] = Complex64::new(8.0 * c, 0.0);
        let img = ifft2(&spec).unwrap();
        assert!(img.data().iter().all(|v| (v - c).abs() < 1e-12));
    }

    #[test]
    fn round_trip_and_parseval_odd_and_even() {
        for &(w, h) in &[(8, 8), (7, 5), (32, 17), (64, 64)] {
            let img = random_image(w, h, (w * h) as u64);
            let spec = fft2(&img).unwrap();
            let e_img: f64 = img.data().iter().map(|v| v * v).sum();
            assert!((spec.energy() - e_img).abs() <= 1e-9 * e_img);
            let back = ifft2(&spec).unwrap();
            assert!(rel_l2(back.data(), img.data()) < 1e-12);
        }
    }

    #[test]
    fn asymmetric_spectrum_is_rejected() {
        let mut spec = Spectrum2D::zeros(8, 8, 1.0).unwrap();
        spec.data_mut()[4 * 8 + 5] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            ifft2(&spec),
            Err(Error::NumericConsistency(_))
        ));
    }

    #[test]
    fn apodization_rules() {
        let img = random_image(20, 20, 3);
        assert_eq!(apodize_edges(&img, 0.0).unwrap(), img);
        let ap = apodize_edges(&img, 0.1).unwrap();
        assert_eq!(ap.get(10, 10), img.get(10, 10));
        assert_eq!(ap.get(0, 0), 0.0);
        assert_eq!(ap.get(19, 7), 0.0);
        assert!(apodize_edges(&img, 0.6).is_err());
        assert!(apodize_edges(&img, -0.1).is_err());
    }

    #[test]
    fn upsample_identity_and_mean() {
        let img = random_image(12, 10, 5);
        assert_eq!(upsample_fourier(&img, 1).unwrap(), img);
        let up = upsample_fourier(&img, 3).unwrap();
        assert_eq!((up.width(), up.height()), (36, 30));
        assert!((up.pixel_size_nm() - 1.0 / 3.0).abs() < 1e-15);
        assert!((up.mean() - img.mean()).abs() <= 1e-9 * img.mean().abs().max(1e-12));
        assert!(upsample_fourier(&img, 0).is_err());
    }
}
