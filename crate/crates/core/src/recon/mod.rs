//! Six-frame SIM reconstruction: separate, estimate, assemble.

pub mod assemble;
pub mod estimate;
pub mod separate;

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result, StageExt};
use crate::forward::SimStack;
use crate::illumination::Orientation;
use crate::image::Image2D;
use crate::optics::{OpticalConfig, SystemTransfer};

pub use assemble::assemble;
pub use estimate::{estimate_pattern, PatternEstimate};
pub use separate::{condition_number, separate_components, SeparatedComponents};

#[derive(Debug, Clone, PartialEq)]
pub struct ReconParams {
    pub wiener_w: f64,
    /// Fraction of `kc + |p|` where the final cosine apodization reaches zero.
    pub apod_cutoff_fraction: f64,
    pub notch_suppress_dc: bool,
    /// Radius in bins of the DC notch used while searching for the pattern.
    pub dc_notch_px: f64,
    pub search_halfwidth_px: f64,
    /// Expected pattern frequency as a fraction of the cutoff; the search
    /// stays within `search_halfwidth_px` of it. `None` searches the whole band.
    pub freq_hint_fraction: Option<f64>,
    /// Edge taper applied to the bands during assembly. Pattern estimation
    /// always sees untapered frames.
    pub edge_border_fraction: f64,
}

impl Default for ReconParams {
    fn default() -> Self {
        Self {
            wiener_w: 0.05,
            apod_cutoff_fraction: 1.0,
            notch_suppress_dc: true,
            dc_notch_px: 2.0,
            search_halfwidth_px: 3.0,
            freq_hint_fraction: Some(0.8),
            edge_border_fraction: 0.1,
        }
    }
}

impl ReconParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wiener_w > 0.0 && self.wiener_w.is_finite()) {
            return Err(Error::invalid(format!("wiener_w {} must be positive", self.wiener_w)));
        }
        if !(self.apod_cutoff_fraction > 0.0 && self.apod_cutoff_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "apod_cutoff_fraction {} outside (0, 1]",
                self.apod_cutoff_fraction
            )));
        }
        if !(self.dc_notch_px >= 0.0 && self.dc_notch_px.is_finite()) {
            return Err(Error::invalid("dc_notch_px must be non-negative"));
        }
        if !(self.search_halfwidth_px > 0.0 && self.search_halfwidth_px.is_finite()) {
            return Err(Error::invalid("search_halfwidth_px must be positive"));
        }
        if let Some(f) = self.freq_hint_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!("freq_hint_fraction {f} outside (0, 1]")));
            }
        }
        if !(0.0..=0.5).contains(&self.edge_border_fraction) {
            return Err(Error::invalid(format!(
                "edge_border_fraction {} outside [0, 0.5]",
                self.edge_border_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrientationReport {
    pub orientation: Orientation,
    pub estimate: PatternEstimate,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconReport {
    pub orientations: [OrientationReport; 2],
    pub separate_ms: f64,
    pub estimate_ms: f64,
    pub assemble_ms: f64,
    pub total_ms: f64,
}

impl ReconReport {
    /// `key=value` lines.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for o in &self.orientations {
            let t = o.orientation.to_string().to_lowercase();
            let e = &o.estimate;
            let _ = writeln!(s, "{t}.freq_px_x={:.6}", e.freq_px[0]);
            let _ = writeln!(s, "{t}.freq_px_y={:.6}", e.freq_px[1]);
            let _ = writeln!(s, "{t}.phase_rad={:.6}", e.phase_rad);
            let _ = writeln!(s, "{t}.modulation_est={:.6}", e.modulation_est);
            let _ = writeln!(s, "{t}.correlation_peak={:.6}", e.correlation_peak);
            let _ = writeln!(s, "{t}.condition={:.6}", o.condition);
        }
        let _ = writeln!(s, "time.separate_ms={:.3}", self.separate_ms);
        let _ = writeln!(s, "time.estimate_ms={:.3}", self.estimate_ms);
        let _ = writeln!(s, "time.assemble_ms={:.3}", self.assemble_ms);
        let _ = writeln!(s, "time.total_ms={:.3}", self.total_ms);
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub image: Image2D,
    pub report: ReconReport,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn separate_orientation(stack: &SimStack, orientation: Orientation) -> Result<SeparatedComponents> {
    let t = stack.triplet(orientation);
    // unit modulation during separation; the estimate supplies the real one
    separate_components(
        [&t[0].image, &t[1].image, &t[2].image],
        [t[0].phase_rad, t[1].phase_rad, t[2].phase_rad],
        1.0,
        orientation,
    )
}

/// Full pipeline on a tagged six-frame stack.
pub fn reconstruct6(
    stack: &SimStack,
    cfg: &OpticalConfig,
    params: &ReconParams,
) -> Result<Reconstruction> {
    let start = Instant::now();
    params.validate().stage("params")?;
    cfg.validate().stage("params")?;
    let (_, _, px) = stack.geometry();
    if (px - cfg.pixel_size_nm).abs() > 1e-9 * cfg.pixel_size_nm {
        return Err(Error::Validation(format!(
            "stack pixel {px} nm differs from configured camera pixel {} nm",
            cfg.pixel_size_nm
        )))
        .stage("params");
    }
    let transfer = SystemTransfer::new(cfg).stage("params")?;

    let t = Instant::now();
    let (cx, cy) = rayon::join(
        || separate_orientation(stack, Orientation::X),
        || separate_orientation(stack, Orientation::Y),
    );
    let (cx, cy) = (cx.stage("separate")?, cy.stage("separate")?);
    let separate_ms = ms(t);

    let t = Instant::now();
    let (ex, ey) = rayon::join(
        || estimate_pattern(&cx, &transfer, params),
        || estimate_pattern(&cy, &transfer, params),
    );
    let (ex, ey) = (ex.stage("estimate")?, ey.stage("estimate")?);
    let estimate_ms = ms(t);

    let t = Instant::now();
    let image = assemble(&cx, &cy, &ex, &ey, &transfer, cfg, params).stage("assemble")?;
    let assemble_ms = ms(t);
    let report = ReconReport {
        orientations: [
            OrientationReport {
                orientation: Orientation::X,
                estimate: ex,
                condition: cx.condition,
            },
            OrientationReport {
                orientation: Orientation::Y,
                estimate: ey,
                condition: cy.condition,
            },
        ],
        separate_ms,
        estimate_ms,
        assemble_ms,
        total_ms: ms(start),
    };
    Ok(Reconstruction { image, report })
}
