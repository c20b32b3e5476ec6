//! Flat `key = value` run configuration shared by every command.
//!
//! Lines are `key = value`; `#` starts a comment. Unknown and repeated keys are
//! errors. [`RunConfig::render`] writes every key, and parsing the rendered
//! text gives back the same configuration.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::forward::{mix_seed, NoiseModel};
use crate::metrology::DecorrelationParams;
use crate::optics::OpticalConfig;
use crate::phantom::PhantomSpec;
use crate::recon::ReconParams;

/// Where the reconstruction looks for the pattern frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FreqHint {
    /// The configured `freq_fraction`.
    Auto,
    /// Search the whole pupil.
    Off,
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub optics: OpticalConfig,
    /// Camera frame size in pixels.
    pub width: usize,
    pub height: usize,
    /// Simulation grid refinement over the camera pixel.
    pub fine_factor: usize,
    /// `rows` and `cols` of 0 fit the lattice to the field.
    pub phantom: PhantomSpec,
    pub freq_fraction: f64,
    pub modulation: f64,
    pub noise: NoiseModel,
    pub recon: ReconParams,
    pub freq_hint: FreqHint,
    pub metrology: DecorrelationParams,
    pub n_groups: usize,
    pub split: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            optics: OpticalConfig::default(),
            width: 128,
            height: 128,
            fine_factor: 4,
            phantom: PhantomSpec {
                rows: 0,
                cols: 0,
                ..PhantomSpec::default()
            },
            freq_fraction: 0.8,
            modulation: 0.9,
            noise: NoiseModel::default(),
            recon: ReconParams::default(),
            freq_hint: FreqHint::Auto,
            metrology: DecorrelationParams::default(),
            n_groups: 200,
            split: 0.8,
            out: PathBuf::from("out"),
        }
    }
}

/// Every key with its help text, in render order.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "master seed; phantom and noise streams derive from it"),
    ("wavelength_nm", "emission wavelength"),
    ("na", "numerical aperture"),
    ("pixel_size_nm", "camera pixel pitch"),
    ("upsample_factor", "super-resolved grid refinement"),
    ("width", "camera frame width in pixels"),
    ("height", "camera frame height in pixels"),
    ("fine_factor", "simulation grid pixels per camera pixel"),
    ("rows", "DNB lattice rows, 0 fits the field"),
    ("cols", "DNB lattice columns, 0 fits the field"),
    ("pitch_nm", "lattice pitch"),
    ("dnb_diameter_nm", "DNB diameter at the first zero of its profile"),
    ("occupancy", "probability a site holds a DNB, in (0, 1]"),
    ("intensity_min", "lower DNB brightness"),
    ("intensity_max", "upper DNB brightness"),
    ("jitter_nm", "half-range of per-site position jitter"),
    ("freq_fraction", "pattern frequency over the optical cutoff"),
    ("modulation", "pattern modulation depth"),
    ("photons_at_unit_intensity", "photons per unit camera value, 0 disables shot noise"),
    ("read_noise_sd", "Gaussian read noise"),
    ("wiener_w", "Wiener regularization constant"),
    ("apod_cutoff_fraction", "final apodization cutoff over kc + |p|"),
    ("notch_suppress_dc", "mask the DC neighbourhood during pattern search"),
    ("dc_notch_px", "DC notch radius in bins"),
    ("search_halfwidth_px", "pattern search half-width in bins"),
    ("freq_hint_fraction", "expected pattern frequency: auto, off or a fraction of kc"),
    ("edge_border_fraction", "edge taper width before assembly"),
    ("reference_pixel_nm", "pixel that defines kcmax = 1"),
    ("n_radii", "samples per decorrelation curve"),
    ("n_filters", "number of high-pass filtered curves"),
    ("sigma_min", "narrowest high-pass sigma"),
    ("sigma_max", "widest high-pass sigma"),
    ("min_prominence", "local maximum prominence threshold"),
    ("min_value", "local maximum height threshold"),
    ("analysis_border_fraction", "edge taper width before resolution analysis"),
    ("n_groups", "dataset size"),
    ("split", "training fraction of the dataset"),
    ("out", "output directory"),
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{value}'"))),
    }
}

impl RunConfig {
    pub fn help() -> String {
        let d = RunConfig::default();
        let mut s = String::new();
        for (k, doc) in KEYS {
            s.push_str(&format!("  {k:<28} {doc} [default {}]\n", d.get(k).unwrap_or_default()));
        }
        s
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "seed" => self.seed = parse_num(key, v)?,
            "wavelength_nm" => self.optics.wavelength_nm = parse_num(key, v)?,
            "na" => self.optics.na = parse_num(key, v)?,
            "pixel_size_nm" => self.optics.pixel_size_nm = parse_num(key, v)?,
            "upsample_factor" => self.optics.upsample_factor = parse_num(key, v)?,
            "width" => self.width = parse_num(key, v)?,
            "height" => self.height = parse_num(key, v)?,
            "fine_factor" => self.fine_factor = parse_num(key, v)?,
            "rows" => self.phantom.rows = parse_num(key, v)?,
            "cols" => self.phantom.cols = parse_num(key, v)?,
            "pitch_nm" => self.phantom.pitch_nm = parse_num(key, v)?,
            "dnb_diameter_nm" => self.phantom.dnb_diameter_nm = parse_num(key, v)?,
            "occupancy" => self.phantom.occupancy = parse_num(key, v)?,
            "intensity_min" => self.phantom.intensity_min = parse_num(key, v)?,
            "intensity_max" => self.phantom.intensity_max = parse_num(key, v)?,
            "jitter_nm" => self.phantom.jitter_nm = parse_num(key, v)?,
            "freq_fraction" => self.freq_fraction = parse_num(key, v)?,
            "modulation" => self.modulation = parse_num(key, v)?,
            "photons_at_unit_intensity" => self.noise.photons_at_unit_intensity = parse_num(key, v)?,
            "read_noise_sd" => self.noise.read_noise_sd = parse_num(key, v)?,
            "wiener_w" => self.recon.wiener_w = parse_num(key, v)?,
            "apod_cutoff_fraction" => self.recon.apod_cutoff_fraction = parse_num(key, v)?,
            "notch_suppress_dc" => self.recon.notch_suppress_dc = parse_bool(key, v)?,
            "dc_notch_px" => self.recon.dc_notch_px = parse_num(key, v)?,
            "search_halfwidth_px" => self.recon.search_halfwidth_px = parse_num(key, v)?,
            "freq_hint_fraction" => {
                self.freq_hint = match v {
                    "auto" => FreqHint::Auto,
                    "off" | "none" => FreqHint::Off,
                    _ => FreqHint::Fraction(parse_num(key, v)?),
                }
            }
            "edge_border_fraction" => self.recon.edge_border_fraction = parse_num(key, v)?,
            "reference_pixel_nm" => self.metrology.reference_pixel_nm = parse_num(key, v)?,
            "n_radii" => self.metrology.n_radii = parse_num(key, v)?,
            "n_filters" => self.metrology.n_filters = parse_num(key, v)?,
            "sigma_min" => self.metrology.sigma_min = parse_num(key, v)?,
            "sigma_max" => self.metrology.sigma_max = parse_num(key, v)?,
            "min_prominence" => self.metrology.min_prominence = parse_num(key, v)?,
            "min_value" => self.metrology.min_value = parse_num(key, v)?,
            "analysis_border_fraction" => self.metrology.edge_border_fraction = parse_num(key, v)?,
            "n_groups" => self.n_groups = parse_num(key, v)?,
            "split" => self.split = parse_num(key, v)?,
            "out" => {
                if v.is_empty() {
                    return Err(Error::Config("out: empty path".into()));
                }
                self.out = PathBuf::from(v)
            }
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "seed" => self.seed.to_string(),
            "wavelength_nm" => self.optics.wavelength_nm.to_string(),
            "na" => self.optics.na.to_string(),
            "pixel_size_nm" => self.optics.pixel_size_nm.to_string(),
            "upsample_factor" => self.optics.upsample_factor.to_string(),
            "width" => self.width.to_string(),
            "height" => self.height.to_string(),
            "fine_factor" => self.fine_factor.to_string(),
            "rows" => self.phantom.rows.to_string(),
            "cols" => self.phantom.cols.to_string(),
            "pitch_nm" => self.phantom.pitch_nm.to_string(),
            "dnb_diameter_nm" => self.phantom.dnb_diameter_nm.to_string(),
            "occupancy" => self.phantom.occupancy.to_string(),
            "intensity_min" => self.phantom.intensity_min.to_string(),
            "intensity_max" => self.phantom.intensity_max.to_string(),
            "jitter_nm" => self.phantom.jitter_nm.to_string(),
            "freq_fraction" => self.freq_fraction.to_string(),
            "modulation" => self.modulation.to_string(),
            "photons_at_unit_intensity" => self.noise.photons_at_unit_intensity.to_string(),
            "read_noise_sd" => self.noise.read_noise_sd.to_string(),
            "wiener_w" => self.recon.wiener_w.to_string(),
            "apod_cutoff_fraction" => self.recon.apod_cutoff_fraction.to_string(),
            "notch_suppress_dc" => self.recon.notch_suppress_dc.to_string(),
            "dc_notch_px" => self.recon.dc_notch_px.to_string(),
            "search_halfwidth_px" => self.recon.search_halfwidth_px.to_string(),
            "freq_hint_fraction" => match self.freq_hint {
                FreqHint::Auto => "auto".into(),
                FreqHint::Off => "off".into(),
                FreqHint::Fraction(f) => f.to_string(),
            },
            "edge_border_fraction" => self.recon.edge_border_fraction.to_string(),
            "reference_pixel_nm" => self.metrology.reference_pixel_nm.to_string(),
            "n_radii" => self.metrology.n_radii.to_string(),
            "n_filters" => self.metrology.n_filters.to_string(),
            "sigma_min" => self.metrology.sigma_min.to_string(),
            "sigma_max" => self.metrology.sigma_max.to_string(),
            "min_prominence" => self.metrology.min_prominence.to_string(),
            "min_value" => self.metrology.min_value.to_string(),
            "analysis_border_fraction" => self.metrology.edge_border_fraction.to_string(),
            "n_groups" => self.n_groups.to_string(),
            "split" => self.split.to_string(),
            "out" => self.out.display().to_string(),
            _ => return None,
        };
        Some(s)
    }

    /// Defaults overridden by the keys in `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value, got '{line}'", n + 1))
            })?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: key '{k}' repeated", n + 1)));
            }
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip_config(e))))?;
        }
        Ok(cfg)
    }

    pub fn render(&self) -> String {
        KEYS.iter()
            .map(|(k, _)| format!("{k} = {}\n", self.get(k).unwrap_or_default()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(strip_config(e));
        self.optics.validate().map_err(wrap)?;
        self.noise.validate().map_err(wrap)?;
        self.recon_params().validate().map_err(wrap)?;
        self.metrology.validate().map_err(wrap)?;
        let mut p = self.phantom.clone();
        p.rows = p.rows.max(1);
        p.cols = p.cols.max(1);
        p.validate().map_err(wrap)?;
        if self.width < 16 || self.height < 16 {
            return Err(Error::Config(format!(
                "frame {}x{} is below the 16x16 minimum",
                self.width, self.height
            )));
        }
        if self.fine_factor < 1 {
            return Err(Error::Config("fine_factor must be at least 1".into()));
        }
        if !(self.freq_fraction > 0.0 && self.freq_fraction <= 1.0) {
            return Err(Error::Config(format!("freq_fraction {} outside (0, 1]", self.freq_fraction)));
        }
        if !(self.modulation > 0.0 && self.modulation <= 1.0) {
            return Err(Error::Config(format!("modulation {} outside (0, 1]", self.modulation)));
        }
        if self.n_groups < 1 {
            return Err(Error::Config("n_groups must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.split) {
            return Err(Error::Config(format!("split {} outside [0, 1]", self.split)));
        }
        Ok(())
    }

    pub fn fine_pixel_nm(&self) -> f64 {
        self.optics.pixel_size_nm / self.fine_factor as f64
    }

    pub fn recon_params(&self) -> ReconParams {
        ReconParams {
            freq_hint_fraction: match self.freq_hint {
                FreqHint::Auto => Some(self.freq_fraction),
                FreqHint::Off => None,
                FreqHint::Fraction(f) => Some(f),
            },
            ..self.recon.clone()
        }
    }

    /// Phantom with its seed drawn from `seed` and any zero lattice size
    /// fitted to the field, leaving one pitch of margin.
    pub fn phantom_spec(&self, seed: u64) -> PhantomSpec {
        let mut p = self.phantom.clone();
        p.seed = mix_seed(seed, 0);
        let fit = |n: usize| {
            let c = (n * self.fine_factor) as f64 - 1.0;
            let half = c / 2.0 * self.fine_pixel_nm();
            let room = half - p.dnb_diameter_nm / 2.0 - p.jitter_nm - p.pitch_nm;
            ((2.0 * room / p.pitch_nm).floor() + 1.0).max(1.0) as usize
        };
        if p.rows == 0 {
            p.rows = fit(self.height);
        }
        if p.cols == 0 {
            p.cols = fit(self.width);
        }
        p
    }

    pub fn noise_model(&self, seed: u64) -> NoiseModel {
        NoiseModel {
            seed: mix_seed(seed, 1),
            ..self.noise
        }
    }
}

fn strip_config(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}
