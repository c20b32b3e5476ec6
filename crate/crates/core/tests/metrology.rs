mod common;

use simshot::fft;
use simshot::metrology::decorrelation::local_maxima;
use simshot::metrology::{
    analyze_resolution, decorrelation_curve, fwhm, resolution_from_kcmax, DecorrelationParams,
    REFERENCE_PIXEL_NM,
};
use simshot::{Error, Image2D};

use common::*;

#[test]
fn curve_matches_brute_force_on_prepared_image() {
    let img = random_image(24, 20, 219.5, 9);
    let (rs, d) = decorrelation_curve(&img, REFERENCE_PIXEL_NM, 12).unwrap();
    let mean = img.mean();
    let prepared = fft::apodize_edges(&img.map(|v| v - mean).unwrap(), 0.1).unwrap();
    let brute = dft_brute(&prepared);
    for (r, got) in rs.iter().zip(&d) {
        let want = decorrelation_oracle(&brute, 24, 20, 219.5, *r, REFERENCE_PIXEL_NM);
        assert!((got - want).abs() < 1e-10, "r={r}: {got} vs {want}");
    }
}

#[test]
fn finer_grid_doubles_the_radius_range() {
    let img = random_image(32, 32, REFERENCE_PIXEL_NM / 2.0, 1);
    let (rs, _) = decorrelation_curve(&img, REFERENCE_PIXEL_NM, 20).unwrap();
    assert!((rs.last().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn cutoff_tracks_the_band_limit() {
    for fraction in [0.4, 0.6, 0.8] {
        let img = band_limited_noise(128, REFERENCE_PIXEL_NM, fraction, 3);
        let r = analyze_resolution(&img, &DecorrelationParams::default()).unwrap();
        assert!((r.kcmax / fraction - 1.0).abs() < 0.05, "{fraction}: {}", r.kcmax);
        let want = 2.0 * REFERENCE_PIXEL_NM / r.kcmax;
        assert!((r.resolution_nm - want).abs() < 1e-9);
    }
}

#[test]
fn constant_image_is_indeterminate() {
    let img = Image2D::from_fn(64, 64, 219.5, |_, _| 5.0).unwrap();
    let err = analyze_resolution(&img, &DecorrelationParams::default()).unwrap_err();
    assert!(matches!(err, Error::ResolutionIndeterminate(_)));
}

#[test]
fn kcmax_must_be_positive() {
    assert!(resolution_from_kcmax(0.0, REFERENCE_PIXEL_NM).is_err());
    assert!(resolution_from_kcmax(-1.0, REFERENCE_PIXEL_NM).is_err());
}

#[test]
fn maxima_need_prominence() {
    let rs: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let bump = [0.1, 0.2, 0.5, 0.2, 0.1, 0.1, 0.11, 0.1, 0.05, 0.0];
    let m = local_maxima(&rs, &bump, 0.05, 0.05);
    assert_eq!(m, vec![(0.3, 0.5)]);
    assert!(local_maxima(&rs, &[0.1; 10], 0.0, 0.0).is_empty());
}

#[test]
fn gaussian_fwhm() {
    for sigma in [60.0, 100.0, 150.0] {
        let g = Image2D::from_fn(96, 96, 20.0, |x, y| {
            let (dx, dy) = (x as f64 * 20.0 - 960.0, y as f64 * 20.0 - 960.0);
            (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
        })
        .unwrap();
        let r = fwhm(&g, [0.0, 960.0], [1900.0, 960.0], 1901).unwrap();
        let want = 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma;
        assert!((r.fwhm_nm / want - 1.0).abs() < 0.02, "{sigma}: {}", r.fwhm_nm);
        assert!((r.peak_position_nm - 960.0).abs() < 1.0);
    }
}

#[test]
fn fwhm_rejects_flat_and_open_profiles() {
    let flat = Image2D::from_fn(16, 16, 10.0, |_, _| 1.0).unwrap();
    assert!(matches!(
        fwhm(&flat, [0.0, 50.0], [150.0, 50.0], 50),
        Err(Error::ProfileDegenerate(_))
    ));
    let ramp = Image2D::from_fn(16, 16, 10.0, |x, _| x as f64).unwrap();
    assert!(matches!(
        fwhm(&ramp, [0.0, 50.0], [150.0, 50.0], 50),
        Err(Error::ProfileDegenerate(_))
    ));
    assert!(matches!(
        fwhm(&flat, [0.0, 50.0], [400.0, 50.0], 50),
        Err(Error::Geometry(_))
    ));
}
