//! Resolution and line-profile measurements.

pub mod decorrelation;
pub mod fwhm;

pub use decorrelation::{
    analyze_resolution, decorrelation_curve, decorrelation_value, normalize_spectrum,
    resolution_from_kcmax, DecorrelationParams, DecorrelationResult, LocalMax, REFERENCE_PIXEL_NM,
};
pub use fwhm::{fwhm, line_profile, FwhmResult};
