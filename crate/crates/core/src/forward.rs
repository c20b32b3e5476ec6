//! Image formation on a fine grid followed by camera binning and noise.
//!
//! A raw frame is `bin((truth * pattern) (x) psf) + noise`, with the blur done
//! by circular convolution in the Fourier domain.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::fft;
use crate::illumination::{
    pattern_image, AcquisitionProtocol, IlluminationPattern, Orientation, PROTOCOL_PHASES,
};
use crate::image::Image2D;
use crate::io::{read_img1, write_atomic, write_img1};
use crate::optics::{otf, OpticalConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Expected photon count for a camera value of 1.0; 0 disables shot noise
    /// and leaves the output in intensity units.
    pub photons_at_unit_intensity: f64,
    /// Gaussian read noise, in output units.
    pub read_noise_sd: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            photons_at_unit_intensity: 1e4,
            read_noise_sd: 10.0,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn off() -> Self {
        Self {
            photons_at_unit_intensity: 0.0,
            read_noise_sd: 0.0,
            seed: 0,
        }
    }

    pub fn is_off(&self) -> bool {
        self.photons_at_unit_intensity == 0.0 && self.read_noise_sd == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.photons_at_unit_intensity >= 0.0 && self.photons_at_unit_intensity.is_finite()) {
            return Err(Error::invalid("photons_at_unit_intensity must be non-negative"));
        }
        if !(self.read_noise_sd >= 0.0 && self.read_noise_sd.is_finite()) {
            return Err(Error::invalid("read_noise_sd must be non-negative"));
        }
        Ok(())
    }

    /// Same parameters with an independent stream for `index`.
    pub fn derived(&self, index: u64) -> NoiseModel {
        NoiseModel {
            seed: mix_seed(self.seed, index),
            ..*self
        }
    }

    pub fn apply(&self, img: &Image2D) -> Result<Image2D> {
        self.validate()?;
        if self.is_off() {
            return Ok(img.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let read = Normal::new(0.0, self.read_noise_sd)
            .map_err(|e| Error::invalid(format!("read noise: {e}")))?;
        let photons = self.photons_at_unit_intensity;
        let data = img
            .data()
            .iter()
            .map(|&v| {
                let signal = if photons > 0.0 {
                    let lambda = photons * v.max(0.0);
                    if lambda > 0.0 {
                        Poisson::new(lambda).map(|p| p.sample(&mut rng)).unwrap_or(0.0)
                    } else {
                        0.0
                    }
                } else {
                    v
                };
                signal + read.sample(&mut rng)
            })
            .collect();
        Image2D::new(img.width(), img.height(), img.pixel_size_nm(), data)
    }
}

/// SplitMix64 finalizer over `seed` and `index`.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Integer ratio between camera and simulation pixels.
pub fn binning_factor(fine_pixel_nm: f64, camera_pixel_nm: f64) -> Result<usize> {
    let ratio = camera_pixel_nm / fine_pixel_nm;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
        return Err(Error::Geometry(format!(
            "camera pixel {camera_pixel_nm} nm is not an integer multiple of grid pixel {fine_pixel_nm} nm"
        )));
    }
    Ok(n as usize)
}

/// Averages `factor x factor` blocks.
pub fn bin_image(img: &Image2D, factor: usize) -> Result<Image2D> {
    if factor == 1 {
        return Ok(img.clone());
    }
    if img.width() % factor != 0 || img.height() % factor != 0 {
        return Err(Error::Geometry(format!(
            "{}x{} grid does not divide into {factor}x{factor} bins",
            img.width(),
            img.height()
        )));
    }
    let (w, h) = (img.width() / factor, img.height() / factor);
    let mut data = vec![0.0; w * h];
    for y in 0..img.height() {
        let row = &img.data()[y * img.width()..(y + 1) * img.width()];
        let out = &mut data[(y / factor) * w..(y / factor + 1) * w];
        for (x, v) in row.iter().enumerate() {
            out[x / factor] += v;
        }
    }
    let norm = 1.0 / (factor * factor) as f64;
    data.iter_mut().for_each(|v| *v *= norm);
    Image2D::new(w, h, img.pixel_size_nm() * factor as f64, data)
}

/// Noise-free blur with the system OTF on the grid of `img`.
pub fn blur(img: &Image2D, cfg: &OpticalConfig) -> Result<Image2D> {
    let (w, h) = (img.width(), img.height());
    let h_otf = otf(cfg, w, h, img.pixel_size_nm())?;
    let field = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut spec = fft::forward_complex(field, w, h);
    for (s, t) in spec.iter_mut().zip(h_otf.data()) {
        *s *= t.re;
    }
    let out = fft::inverse_complex(&spec, w, h);
    Image2D::new(w, h, img.pixel_size_nm(), out.into_iter().map(|c| c.re).collect())
}

fn form_image(truth: &Image2D, cfg: &OpticalConfig, noise: &NoiseModel) -> Result<Image2D> {
    cfg.validate()?;
    noise.validate()?;
    let factor = binning_factor(truth.pixel_size_nm(), cfg.pixel_size_nm)?;
    if truth.width() % factor != 0 || truth.height() % factor != 0 {
        return Err(Error::Geometry(format!(
            "{}x{} truth grid is not a whole number of {factor}x{factor} camera pixels",
            truth.width(),
            truth.height()
        )));
    }
    let blurred = blur(truth, cfg)?;
    let camera = bin_image(&blurred, factor)?;
    noise.apply(&camera)
}

/// Conventional (unpatterned) image on the camera grid.
pub fn widefield(truth: &Image2D, cfg: &OpticalConfig, noise: &NoiseModel) -> Result<Image2D> {
    form_image(truth, cfg, noise)
}

/// One structured-illumination raw frame.
pub fn sim_raw(
    truth: &Image2D,
    pattern: &IlluminationPattern,
    cfg: &OpticalConfig,
    noise: &NoiseModel,
) -> Result<Image2D> {
    let lit = truth.multiply(&pattern_image(
        pattern,
        truth.width(),
        truth.height(),
        truth.pixel_size_nm(),
    )?)?;
    form_image(&lit, cfg, noise)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackSlice {
    pub orientation: Orientation,
    pub phase_rad: f64,
    pub image: Image2D,
}

/// Six raw frames of one acquisition, tagged by orientation and phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStack {
    slices: Vec<StackSlice>,
    truth: Option<Image2D>,
}

const PHASE_TAG_TOLERANCE: f64 = 1e-6;

fn phase_index(phase: f64) -> Option<usize> {
    let p = phase.rem_euclid(2.0 * PI);
    PROTOCOL_PHASES.iter().position(|&q| {
        let d = (p - q).abs();
        d < PHASE_TAG_TOLERANCE || (2.0 * PI - d) < PHASE_TAG_TOLERANCE
    })
}

impl SimStack {
    pub fn new(slices: Vec<StackSlice>, truth: Option<Image2D>) -> Result<Self> {
        if slices.len() != 6 {
            return Err(Error::Validation(format!(
                "stack has {} slices, expected 6",
                slices.len()
            )));
        }
        let first = &slices[0].image;
        let mut seen = [[false; 3]; 2];
        for (i, s) in slices.iter().enumerate() {
            if !s.image.same_geometry(first) {
                return Err(Error::Validation(format!(
                    "slice {i} geometry {}x{} @ {} nm differs from slice 0",
                    s.image.width(),
                    s.image.height(),
                    s.image.pixel_size_nm()
                )));
            }
            let pi = phase_index(s.phase_rad).ok_or_else(|| {
                Error::Validation(format!(
                    "slice {i} phase {} is not one of 0, 2pi/3, 4pi/3",
                    s.phase_rad
                ))
            })?;
            let oi = s.orientation as usize;
            if seen[oi][pi] {
                return Err(Error::Validation(format!(
                    "slice {i} repeats tag ({}, {})",
                    s.orientation, s.phase_rad
                )));
            }
            seen[oi][pi] = true;
        }
        Ok(Self { slices, truth })
    }

    pub fn slices(&self) -> &[StackSlice] {
        &self.slices
    }

    pub fn truth(&self) -> Option<&Image2D> {
        self.truth.as_ref()
    }

    pub fn geometry(&self) -> (usize, usize, f64) {
        let im = &self.slices[0].image;
        (im.width(), im.height(), im.pixel_size_nm())
    }

    /// The three frames of one orientation, sorted by phase.
    pub fn triplet(&self, orientation: Orientation) -> [&StackSlice; 3] {
        let mut out: Vec<&StackSlice> = self
            .slices
            .iter()
            .filter(|s| s.orientation == orientation)
            .collect();
        out.sort_by_key(|s| phase_index(s.phase_rad));
        [out[0], out[1], out[2]]
    }

    /// Phase average of the X triplet (equal to a widefield frame when noiseless).
    pub fn pseudo_widefield(&self) -> Result<Image2D> {
        let t = self.triplet(Orientation::X);
        let sum = t[0].image.zip_with(&t[1].image, |a, b| a + b)?;
        sum.zip_with(&t[2].image, |a, b| (a + b) / 3.0)
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = String::new();
        for (i, s) in self.slices.iter().enumerate() {
            let name = format!("slice_{i}.img1");
            write_img1(&s.image, dir.join(&name))?;
            manifest.push_str(&manifest_line(i, s.orientation, s.phase_rad, &name));
            manifest.push('\n');
        }
        if let Some(t) = &self.truth {
            write_img1(t, dir.join(TRUTH_FILE))?;
        }
        write_atomic(&dir.join(MANIFEST_FILE), manifest.as_bytes())
    }

    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let entries = read_manifest(&dir.join(MANIFEST_FILE))?;
        let mut by_index: [Option<ManifestEntry>; 6] = Default::default();
        for e in entries {
            if e.slice >= 6 {
                return Err(Error::Validation(format!("slice index {} out of range", e.slice)));
            }
            if by_index[e.slice].is_some() {
                return Err(Error::Validation(format!("slice {} listed twice", e.slice)));
            }
            let i = e.slice;
            by_index[i] = Some(e);
        }
        let mut slices = Vec::with_capacity(6);
        for (i, e) in by_index.into_iter().enumerate() {
            let e = e.ok_or_else(|| Error::Validation(format!("missing slice {i} in manifest")))?;
            let path = dir.join(&e.file);
            if !path.exists() {
                return Err(Error::Validation(format!(
                    "missing slice {i}: {} not found",
                    path.display()
                )));
            }
            slices.push(StackSlice {
                orientation: e.orientation,
                phase_rad: e.phase_rad,
                image: read_img1(&path)?,
            });
        }
        let truth_path = dir.join(TRUTH_FILE);
        let truth = if truth_path.exists() {
            Some(read_img1(&truth_path)?)
        } else {
            None
        };
        SimStack::new(slices, truth)
    }
}

pub const MANIFEST_FILE: &str = "stack.txt";
pub const TRUTH_FILE: &str = "truth.img1";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub slice: usize,
    pub orientation: Orientation,
    pub phase_rad: f64,
    pub file: PathBuf,
}

pub fn manifest_line(slice: usize, orientation: Orientation, phase: f64, file: &str) -> String {
    format!(
        "slice={slice} orientation={orientation} phase={} file={file}",
        format_significant(phase, 9)
    )
}

/// Formats `v` with `digits` significant digits.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-4..(digits as i32)).contains(&exp) {
        return format!("{:.*e}", digits - 1, v);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| Error::Validation(format!("manifest line {}: {msg}", lineno + 1));
        let (mut slice, mut orientation, mut phase, mut file) = (None, None, None, None);
        for field in line.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| bad(format!("field {field:?} is not key=value")))?;
            match k {
                "slice" => slice = Some(v.parse::<usize>().map_err(|e| bad(format!("slice: {e}")))?),
                "orientation" => orientation = Some(v.parse::<Orientation>()?),
                "phase" => phase = Some(v.parse::<f64>().map_err(|e| bad(format!("phase: {e}")))?),
                "file" => file = Some(PathBuf::from(v)),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        out.push(ManifestEntry {
            slice: slice.ok_or_else(|| bad("missing slice".into()))?,
            orientation: orientation.ok_or_else(|| bad("missing orientation".into()))?,
            phase_rad: phase.ok_or_else(|| bad("missing phase".into()))?,
            file: file.ok_or_else(|| bad("missing file".into()))?,
        });
    }
    Ok(out)
}

fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}

/// Six raw frames in protocol order, slice `i` drawing noise from
/// `noise.derived(i)`.
pub fn acquire_stack(
    truth: &Image2D,
    cfg: &OpticalConfig,
    protocol: &AcquisitionProtocol,
    noise: &NoiseModel,
) -> Result<SimStack> {
    let slices = protocol
        .patterns()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(StackSlice {
                orientation: p.orientation,
                phase_rad: p.phase_rad,
                image: sim_raw(truth, p, cfg, &noise.derived(i as u64))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SimStack::new(slices, Some(truth.clone()))
}
