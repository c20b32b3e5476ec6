//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simshot::forward::{acquire_stack, NoiseModel, SimStack};
use simshot::illumination::default_protocol;
use simshot::optics::OpticalConfig;
use simshot::phantom::{generate_phantom, render_sites, PhantomSpec, Site};
use simshot::Image2D;

pub const FINE: usize = 4;

/// DC-centered unitary DFT by direct double summation.
pub fn dft_brute(img: &Image2D) -> Vec<Complex64> {
    let (w, h) = (img.width(), img.height());
    let (cx, cy) = ((w / 2) as f64, (h / 2) as f64);
    let norm = 1.0 / ((w * h) as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); w * h];
    for j in 0..h {
        for i in 0..w {
            let (u, v) = (i as f64 - cx, j as f64 - cy);
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let a = -2.0 * PI * (u * x as f64 / w as f64 + v * y as f64 / h as f64);
                    acc += Complex64::from_polar(img.get(x, y), a);
                }
            }
            out[j * w + i] = acc * norm;
        }
    }
    out
}

/// Decorrelation value written out as the double sum over frequency bins.
pub fn decorrelation_oracle(spec: &[Complex64], w: usize, h: usize, px: f64, r: f64, ref_px: f64) -> f64 {
    let (cx, cy) = (w / 2, h / 2);
    let (mut num, mut energy, mut count) = (0.0, 0.0, 0.0);
    for j in 0..h {
        for i in 0..w {
            if (i, j) == (cx, cy) {
                continue;
            }
            let a = spec[j * w + i];
            energy += a.norm_sqr();
            let kx = (i as f64 - cx as f64) / (w as f64 * px);
            let ky = (j as f64 - cy as f64) / (h as f64 * px);
            if 2.0 * kx.hypot(ky) * ref_px <= r && a.norm() > 0.0 {
                let n = a / a.norm();
                num += (a * n.conj()).re;
                count += 1.0;
            }
        }
    }
    if energy * count > 0.0 {
        num / (energy * count).sqrt()
    } else {
        0.0
    }
}

pub fn random_image(w: usize, h: usize, px: f64, seed: u64) -> Image2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image2D::from_fn(w, h, px, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

/// Real noise whose spectrum is flat inside `fraction` of the grid Nyquist
/// radius and zero outside.
pub fn band_limited_noise(n: usize, px: f64, fraction: f64, seed: u64) -> Image2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = (n / 2) as f64;
    let mut re = vec![0.0; n * n];
    let mut im = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let r = (i as f64 - c).hypot(j as f64 - c) / c;
            if r <= fraction && r > 0.0 {
                re[j * n + i] = rng.random_range(-1.0..1.0);
                im[j * n + i] = rng.random_range(-1.0..1.0);
            }
        }
    }
    // x(p) = sum_k (re + i im) e^{2 pi i k p / n}; the real part is band-limited
    let mut rowsum = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for x in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let v = Complex64::new(re[j * n + i], im[j * n + i]);
                if v.re != 0.0 || v.im != 0.0 {
                    acc += v * Complex64::from_polar(1.0, 2.0 * PI * (i as f64 - c) * x as f64 / n as f64);
                }
            }
            rowsum[j * n + x] = acc;
        }
    }
    Image2D::from_fn(n, n, px, |x, y| {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += rowsum[j * n + x] * Complex64::from_polar(1.0, 2.0 * PI * (j as f64 - c) * y as f64 / n as f64);
        }
        acc.re
    })
    .unwrap()
}

/// Default-lattice phantom filling an `n x n` camera field with a margin.
pub fn phantom(n: usize, cfg: &OpticalConfig, seed: u64) -> Image2D {
    let fine = cfg.pixel_size_nm / FINE as f64;
    let rows = ((n as f64 * cfg.pixel_size_nm - 600.0) / 480.0) as usize;
    let spec = PhantomSpec {
        rows,
        cols: rows,
        seed,
        ..PhantomSpec::default()
    };
    generate_phantom(&spec, FINE * n, FINE * n, fine).unwrap()
}

pub fn default_stack(n: usize, noise: &NoiseModel, seed: u64) -> SimStack {
    let cfg = OpticalConfig::default();
    let truth = phantom(n, &cfg, seed);
    let protocol = default_protocol(&cfg, 0.8, 0.9).unwrap();
    acquire_stack(&truth, &cfg, &protocol, noise).unwrap()
}

/// Pattern phase at the center of camera pixel (0, 0) for phase offset `phi`.
pub fn phase_at_camera_origin(freq_cyc_per_nm: f64, phi: f64, cfg: &OpticalConfig) -> f64 {
    let fine = cfg.pixel_size_nm / FINE as f64;
    let offset = (FINE as f64 - 1.0) / 2.0 * fine;
    (2.0 * PI * freq_cyc_per_nm * offset + phi + PI).rem_euclid(2.0 * PI) - PI
}

pub fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Point in camera-profile coordinates (origin at the center of camera
/// pixel (0, 0)) expressed on the simulation grid.
pub fn camera_to_fine(v: f64, cfg: &OpticalConfig) -> f64 {
    let fine = cfg.pixel_size_nm / FINE as f64;
    v + (FINE as f64 - 1.0) / 2.0 * fine
}

/// Truth with DNBs of the default size at the given camera-profile positions.
pub fn sites_phantom(n: usize, cfg: &OpticalConfig, points: &[[f64; 2]]) -> Image2D {
    let fine = cfg.pixel_size_nm / FINE as f64;
    let sites: Vec<Site> = points
        .iter()
        .map(|p| Site {
            x_nm: camera_to_fine(p[0], cfg),
            y_nm: camera_to_fine(p[1], cfg),
            amplitude: 1.0,
        })
        .collect();
    render_sites(&sites, 110.0, FINE * n, FINE * n, fine).unwrap()
}

/// `1 - valley / lower peak` between the maxima of the two profile halves;
/// 0 when the profile has no interior minimum.
pub fn dip(profile: &[f64]) -> f64 {
    let n = profile.len();
    let argmax = |a: usize, b: usize| (a..b).max_by(|&i, &j| profile[i].total_cmp(&profile[j])).unwrap();
    let (pl, pr) = (argmax(0, n / 2), argmax(n / 2, n));
    let valley = profile[pl..=pr].iter().copied().fold(f64::INFINITY, f64::min);
    let peak = profile[pl].min(profile[pr]);
    if valley < peak {
        1.0 - valley / peak
    } else {
        0.0
    }
}

fn bessel_j0(z: f64) -> f64 {
    // (1/pi) int_0^pi cos(z sin t) dt, Simpson
    let n = 256;
    let h = PI / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let wgt = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        s += wgt * (z * (i as f64 * h).sin()).cos();
    }
    s * h / 3.0 / PI
}

/// Hankel transform of the raised-cosine disc of first-zero radius `radius`.
fn disc_transform(k: f64, radius: f64) -> f64 {
    let n = 200;
    let h = radius / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let r = i as f64 * h;
        let wgt = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let f = 0.5 * (1.0 + (PI * r / radius).cos());
        s += wgt * r * f * bessel_j0(2.0 * PI * k * r);
    }
    2.0 * PI * s * h / 3.0
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Camera image of one DNB along the line through its center: the product
/// of pupil OTF, disc transform and pixel box integrated over the pupil,
/// evaluated at offsets `xs` (nm) from the DNB center.
pub fn dnb_profile_oracle(cfg: &OpticalConfig, radius: f64, xs: &[f64]) -> Vec<f64> {
    let kc = 2.0 * cfg.na / cfg.wavelength_nm;
    let a = cfg.pixel_size_nm;
    let n = 400;
    let dk = 2.0 * kc / n as f64;
    let kgrid: Vec<f64> = (0..n).map(|i| -kc + (i as f64 + 0.5) * dk).collect();
    // radial factors on a fine 1D table
    let m = 2000;
    let table: Vec<f64> = (0..=m)
        .map(|i| {
            let rho = i as f64 / m as f64;
            let otf = (2.0 / PI) * (rho.acos() - rho * (1.0 - rho * rho).sqrt());
            otf * disc_transform(rho * kc, radius)
        })
        .collect();
    let radial = |k: f64| {
        let t = k / kc * m as f64;
        if t >= m as f64 {
            return 0.0;
        }
        let i = t as usize;
        let f = t - i as f64;
        table[i] * (1.0 - f) + table[i + 1] * f
    };
    let proj: Vec<f64> = kgrid
        .iter()
        .map(|&kx| kgrid.iter().map(|&ky| radial(kx.hypot(ky)) * sinc(ky * a)).sum::<f64>() * sinc(kx * a))
        .collect();
    xs.iter()
        .map(|&x| {
            kgrid
                .iter()
                .zip(&proj)
                .map(|(&kx, &p)| p * (2.0 * PI * kx * x).cos())
                .sum::<f64>()
                * dk
                * dk
        })
        .collect()
}

/// Width at half maximum of a sampled peak by linear interpolation.
pub fn fwhm_1d(xs: &[f64], v: &[f64]) -> f64 {
    let (ip, &peak) = v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let base = v.iter().copied().fold(f64::INFINITY, f64::min);
    let half = base + (peak - base) / 2.0;
    let cross = |a: usize, b: usize| xs[a] + (half - v[a]) / (v[b] - v[a]) * (xs[b] - xs[a]);
    let l = (0..ip).rev().find(|&i| v[i] < half).unwrap();
    let r = (ip + 1..v.len()).find(|&i| v[i] < half).unwrap();
    cross(r - 1, r) - cross(l, l + 1)
}
