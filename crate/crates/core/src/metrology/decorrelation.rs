//! Parameter-free resolution estimate from decorrelation curves.
//!
//! `d(r) = sum Re{I In*} M_r / sqrt(sum |I|^2 * sum |In M_r|^2)`, where `In` is
//! the unit-magnitude spectrum and `M_r` the disc of normalized radius `r`.
//! Radii are normalized so that 1.0 is the Nyquist frequency of a reference
//! pixel (the camera pixel), which puts a 2x-upsampled image on `(0, 2]`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::image::{Image2D, Spectrum2D};

pub const REFERENCE_PIXEL_NM: f64 = 219.5;

#[derive(Debug, Clone, PartialEq)]
pub struct DecorrelationParams {
    pub reference_pixel_nm: f64,
    pub n_radii: usize,
    pub n_filters: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub min_prominence: f64,
    pub min_value: f64,
    pub edge_border_fraction: f64,
}

impl Default for DecorrelationParams {
    fn default() -> Self {
        Self {
            reference_pixel_nm: REFERENCE_PIXEL_NM,
            n_radii: 64,
            n_filters: 10,
            sigma_min: 0.05,
            sigma_max: 1.0,
            min_prominence: 0.01,
            min_value: 0.05,
            edge_border_fraction: 0.1,
        }
    }
}

impl DecorrelationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.reference_pixel_nm > 0.0 && self.reference_pixel_nm.is_finite()) {
            return Err(Error::invalid("reference pixel must be positive"));
        }
        if self.n_radii < 3 {
            return Err(Error::invalid("at least 3 radii are needed to find a maximum"));
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.sigma_max && self.sigma_max.is_finite())
        {
            return Err(Error::invalid(format!(
                "high-pass sigma range [{}, {}] is not ordered and positive",
                self.sigma_min, self.sigma_max
            )));
        }
        if !(self.min_prominence >= 0.0 && self.min_value.is_finite()) {
            return Err(Error::invalid("maximum thresholds must be finite and non-negative"));
        }
        if !(0.0..=0.5).contains(&self.edge_border_fraction) {
            return Err(Error::invalid("edge border fraction outside [0, 0.5]"));
        }
        Ok(())
    }

    /// Geometric high-pass widths, `sigma_min` to `sigma_max`.
    pub fn sigmas(&self) -> Vec<f64> {
        let n = self.n_filters;
        if n == 1 {
            return vec![self.sigma_min];
        }
        let ratio = (self.sigma_max / self.sigma_min).ln();
        (0..n)
            .map(|i| self.sigma_min * (ratio * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMax {
    /// 0 for the unfiltered curve, `i + 1` for filter `i`.
    pub curve: usize,
    pub r: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecorrelationResult {
    pub radii: Vec<f64>,
    pub d0: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub filtered_curves: Vec<Vec<f64>>,
    pub maxima: Vec<LocalMax>,
    pub kcmax: f64,
    pub resolution_nm: f64,
    pub reference_pixel_nm: f64,
}

impl DecorrelationResult {
    /// `r,d0,hp0,hp1,...` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,d0");
        for i in 0..self.filtered_curves.len() {
            s.push_str(&format!(",hp{i}"));
        }
        s.push('\n');
        for (k, r) in self.radii.iter().enumerate() {
            s.push_str(&format!("{r:.6},{:.9}", self.d0[k]));
            for c in &self.filtered_curves {
                s.push_str(&format!(",{:.9}", c[k]));
            }
            s.push('\n');
        }
        s
    }
}

/// `2 * reference_pixel / kcmax`.
pub fn resolution_from_kcmax(kcmax: f64, reference_pixel_nm: f64) -> Result<f64> {
    if !(kcmax > 0.0 && kcmax.is_finite()) {
        return Err(Error::ResolutionIndeterminate(format!(
            "kcmax {kcmax} is not a positive frequency"
        )));
    }
    Ok(2.0 * reference_pixel_nm / kcmax)
}

/// Unit-magnitude copy; bins with `|I| < eps` (or exactly zero) become 0.
pub fn normalize_spectrum(spec: &Spectrum2D, eps: f64) -> Spectrum2D {
    let data = spec
        .data()
        .iter()
        .map(|&c| {
            let m = c.norm();
            if m >= eps && m > 0.0 {
                c / m
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Spectrum2D::new(spec.width(), spec.height(), spec.pixel_size_nm(), data)
        .expect("normalization keeps geometry and finiteness")
}

/// Radius of bin `(i, j)` with 1.0 at the reference Nyquist frequency.
#[inline]
pub fn normalized_radius(spec: &Spectrum2D, i: usize, j: usize, reference_pixel_nm: f64) -> f64 {
    let (kx, ky) = spec.frequency(i, j);
    2.0 * kx.hypot(ky) * reference_pixel_nm
}

/// One point of the decorrelation curve by direct summation. DC never enters
/// either sum.
pub fn decorrelation_value(
    spec: &Spectrum2D,
    nspec: &Spectrum2D,
    r: f64,
    reference_pixel_nm: f64,
) -> Result<f64> {
    if !spec.same_geometry(nspec) {
        return Err(Error::Geometry("spectrum and normalized spectrum differ".into()));
    }
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("radius {r} must be non-negative")));
    }
    let (cx, cy) = spec.center();
    let (mut num, mut energy, mut count) = (0.0, 0.0, 0.0);
    for j in 0..spec.height() {
        for i in 0..spec.width() {
            if (i, j) == (cx, cy) {
                continue;
            }
            let a = spec.get(i, j);
            energy += a.norm_sqr();
            if normalized_radius(spec, i, j, reference_pixel_nm) <= r {
                let b = nspec.get(i, j);
                num += (a * b.conj()).re;
                count += b.norm_sqr();
            }
        }
    }
    let den = (energy * count).sqrt();
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Mean-subtracted, edge-tapered spectrum used by every curve.
pub fn prepared_spectrum(img: &Image2D, border_fraction: f64) -> Result<Spectrum2D> {
    let mean = img.mean();
    let centered = img.map(|v| v - mean)?;
    fft::fft2(&fft::apodize_edges(&centered, border_fraction)?)
}

/// Largest normalized radius worth evaluating: 1 on the reference grid,
/// 2 on a grid twice as fine.
pub fn max_radius(pixel_size_nm: f64, reference_pixel_nm: f64) -> f64 {
    reference_pixel_nm / pixel_size_nm
}

pub fn radii(n: usize, r_max: f64) -> Vec<f64> {
    (1..=n).map(|i| r_max * i as f64 / n as f64).collect()
}

/// Non-DC bins sorted by radius, shared by all curves of one image.
struct RadialOrder {
    rho: Vec<f64>,
    index: Vec<usize>,
}

impl RadialOrder {
    fn new(spec: &Spectrum2D, reference_pixel_nm: f64) -> Self {
        let (cx, cy) = spec.center();
        let mut bins: Vec<(f64, usize)> = Vec::with_capacity(spec.data().len());
        for j in 0..spec.height() {
            for i in 0..spec.width() {
                if (i, j) != (cx, cy) {
                    bins.push((normalized_radius(spec, i, j, reference_pixel_nm), j * spec.width() + i));
                }
            }
        }
        bins.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            rho: bins.iter().map(|b| b.0).collect(),
            index: bins.iter().map(|b| b.1).collect(),
        }
    }

    /// Curve for spectrum `a` (weighted by `weight(rho)`) against `n`.
    fn curve(
        &self,
        a: &[Complex64],
        n: &[Complex64],
        weight: impl Fn(f64) -> f64,
        radii: &[f64],
    ) -> Vec<f64> {
        let energy: f64 = self
            .index
            .iter()
            .zip(&self.rho)
            .map(|(&k, &r)| (a[k] * weight(r)).norm_sqr())
            .sum();
        let mut out = Vec::with_capacity(radii.len());
        let (mut num, mut count, mut p) = (0.0, 0.0, 0);
        for &r in radii {
            while p < self.rho.len() && self.rho[p] <= r {
                let k = self.index[p];
                num += (a[k] * weight(self.rho[p]) * n[k].conj()).re;
                count += n[k].norm_sqr();
                p += 1;
            }
            let den = (energy * count).sqrt();
            out.push(if den > 0.0 { num / den } else { 0.0 });
        }
        out
    }
}

/// Unfiltered curve on `n_radii` radii over `(0, r_max]`.
pub fn decorrelation_curve(
    img: &Image2D,
    reference_pixel_nm: f64,
    n_radii: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let spec = prepared_spectrum(img, DecorrelationParams::default().edge_border_fraction)?;
    let nspec = normalize_spectrum(&spec, f64::MIN_POSITIVE);
    let rs = radii(n_radii, max_radius(img.pixel_size_nm(), reference_pixel_nm));
    let order = RadialOrder::new(&spec, reference_pixel_nm);
    let d = order.curve(spec.data(), nspec.data(), |_| 1.0, &rs);
    Ok((rs, d))
}

/// Strict interior maxima with at least the given prominence and height.
pub fn local_maxima(radii: &[f64], d: &[f64], min_prominence: f64, min_value: f64) -> Vec<(f64, f64)> {
    let n = d.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(d[i] > d[i - 1] && d[i] > d[i + 1]) || d[i] < min_value {
            continue;
        }
        let mut left = d[i];
        for j in (0..i).rev() {
            if d[j] > d[i] {
                break;
            }
            left = left.min(d[j]);
        }
        let mut right = d[i];
        for &v in &d[i + 1..] {
            if v > d[i] {
                break;
            }
            right = right.min(v);
        }
        if d[i] - left.max(right) >= min_prominence {
            out.push((radii[i], d[i]));
        }
    }
    out
}

pub fn analyze_resolution(img: &Image2D, params: &DecorrelationParams) -> Result<DecorrelationResult> {
    params.validate()?;
    let spec = prepared_spectrum(img, params.edge_border_fraction)?;
    let nspec = normalize_spectrum(&spec, f64::MIN_POSITIVE);
    let rs = radii(params.n_radii, max_radius(img.pixel_size_nm(), params.reference_pixel_nm));
    let order = RadialOrder::new(&spec, params.reference_pixel_nm);

    let d0 = order.curve(spec.data(), nspec.data(), |_| 1.0, &rs);
    let sigmas = params.sigmas();
    let filtered_curves: Vec<Vec<f64>> = sigmas
        .iter()
        .map(|&s| {
            let two_s2 = 2.0 * s * s;
            order.curve(spec.data(), nspec.data(), |r| 1.0 - (-r * r / two_s2).exp(), &rs)
        })
        .collect();

    let mut maxima = Vec::new();
    for (curve, d) in std::iter::once(&d0).chain(&filtered_curves).enumerate() {
        for (r, v) in local_maxima(&rs, d, params.min_prominence, params.min_value) {
            maxima.push(LocalMax { curve, r, d: v });
        }
    }
    let kcmax = maxima.iter().map(|m| m.r).fold(f64::NEG_INFINITY, f64::max);
    if maxima.is_empty() {
        return Err(Error::ResolutionIndeterminate(
            "no decorrelation curve has a qualifying local maximum".into(),
        ));
    }
    let resolution_nm = resolution_from_kcmax(kcmax, params.reference_pixel_nm)?;
    Ok(DecorrelationResult {
        radii: rs,
        d0,
        sigmas,
        filtered_curves,
        maxima,
        kcmax,
        resolution_nm,
        reference_pixel_nm: params.reference_pixel_nm,
    })
}
