mod common;

use simshot::forward::{acquire_stack, widefield, NoiseModel, SimStack, StackSlice};
use simshot::illumination::{default_protocol, Orientation, PROTOCOL_PHASES};
use simshot::optics::{OpticalConfig, SystemTransfer};
use simshot::recon::{assemble, reconstruct6, separate_components, PatternEstimate, ReconParams};
use simshot::{Error, Image2D};

use common::*;

fn true_estimate(o: Orientation, n: usize, cfg: &OpticalConfig) -> PatternEstimate {
    let f = 0.8 * 2.0 * cfg.na / cfg.wavelength_nm;
    let bins = f * n as f64 * cfg.pixel_size_nm;
    PatternEstimate {
        freq_px: if o == Orientation::X { [bins, 0.0] } else { [0.0, bins] },
        phase_rad: phase_at_camera_origin(f, 0.0, cfg),
        modulation_est: 0.9,
        correlation_peak: 1.0,
    }
}

/// Six copies of one frame: a stack with no pattern at all.
fn unmodulated(frame: &Image2D) -> SimStack {
    let slices = (0..6)
        .map(|i| StackSlice {
            orientation: if i < 3 { Orientation::X } else { Orientation::Y },
            phase_rad: PROTOCOL_PHASES[i % 3],
            image: frame.clone(),
        })
        .collect();
    SimStack::new(slices, None).unwrap()
}

#[test]
fn noisy_estimates_stay_close() {
    let cfg = OpticalConfig::default();
    for seed in [3, 4] {
        let stack = default_stack(128, &NoiseModel { seed, ..NoiseModel::default() }, seed);
        let rec = reconstruct6(&stack, &cfg, &ReconParams::default()).unwrap();
        for r in &rec.report.orientations {
            let want = true_estimate(r.orientation, 128, &cfg);
            let e = &r.estimate;
            let df = (e.freq_px[0] - want.freq_px[0]).hypot(e.freq_px[1] - want.freq_px[1]);
            assert!(df < 0.05, "seed {seed}: freq off by {df}");
            assert!(wrap_angle(e.phase_rad - want.phase_rad).abs() < 0.1);
            assert!((e.modulation_est - 0.9).abs() < 0.05);
        }
    }
}

fn random_sites_stack(n: usize, seed: u64) -> SimStack {
    use rand::{Rng, SeedableRng};
    let cfg = OpticalConfig::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let span = n as f64 * cfg.pixel_size_nm;
    let points: Vec<[f64; 2]> = (0..n * n / 8)
        .map(|_| [rng.random_range(300.0..span - 300.0), rng.random_range(300.0..span - 300.0)])
        .collect();
    let truth = sites_phantom(n, &cfg, &points);
    let protocol = default_protocol(&cfg, 0.8, 0.9).unwrap();
    acquire_stack(&truth, &cfg, &protocol, &NoiseModel::off()).unwrap()
}

fn unhinted() -> ReconParams {
    ReconParams {
        freq_hint_fraction: None,
        ..ReconParams::default()
    }
}

#[test]
fn full_band_search_finds_the_pattern() {
    let cfg = OpticalConfig::default();
    let rec = reconstruct6(&random_sites_stack(128, 1), &cfg, &unhinted()).unwrap();
    for r in &rec.report.orientations {
        let want = true_estimate(r.orientation, 128, &cfg).freq_px;
        let got = r.estimate.freq_px;
        // the sign of the shift is a convention; C- carries the mirror
        let d = (got[0] - want[0]).hypot(got[1] - want[1]).min((got[0] + want[0]).hypot(got[1] + want[1]));
        assert!(d < 0.05, "{:?} vs {:?}", got, want);
    }
}

#[test]
fn unhinted_search_on_a_lattice_finds_the_moire() {
    // p - G correlates as well as p on a periodic object; the hint breaks the tie
    let cfg = OpticalConfig::default();
    let rec = reconstruct6(&default_stack(128, &NoiseModel::off(), 1), &cfg, &unhinted()).unwrap();
    let g = 128.0 * cfg.pixel_size_nm / 480.0;
    let p = true_estimate(Orientation::X, 128, &cfg).freq_px[0];
    let got = rec.report.orientations[0].estimate.freq_px;
    assert!((got[0].abs() - (p - g)).abs() < 0.05 && got[1].abs() < 0.05, "{got:?}");
}

#[test]
fn unmodulated_stack_is_not_a_pattern() {
    let cfg = OpticalConfig::default();
    let truth = phantom(64, &cfg, 5);
    for noise in [NoiseModel::off(), NoiseModel::default()] {
        let stack = unmodulated(&widefield(&truth, &cfg, &NoiseModel::off()).unwrap());
        // independent noise per frame on top of the flat stack
        let slices = stack
            .slices()
            .iter()
            .enumerate()
            .map(|(i, s)| StackSlice {
                image: noise.derived(i as u64).apply(&s.image).unwrap(),
                ..s.clone()
            })
            .collect();
        let stack = SimStack::new(slices, None).unwrap();
        let err = reconstruct6(&stack, &cfg, &ReconParams::default()).unwrap_err();
        assert!(matches!(err.root(), Error::PatternNotFound { .. }), "{err}");
    }
}

#[test]
fn five_slices_are_rejected() {
    let stack = default_stack(32, &NoiseModel::off(), 0);
    let five = stack.slices()[..5].to_vec();
    assert!(matches!(SimStack::new(five, None), Err(Error::Validation(_))));
}

#[test]
fn degenerate_phases_are_rejected() {
    let stack = default_stack(32, &NoiseModel::off(), 0);
    let t = stack.triplet(Orientation::X);
    let frames = [&t[0].image, &t[1].image, &t[2].image];
    let err = separate_components(frames, [0.0, 0.0, 1e-12], 0.9, Orientation::X).unwrap_err();
    assert!(matches!(err, Error::DegeneratePhases { .. }));
}

#[test]
fn estimates_ignore_intensity_scale() {
    let cfg = OpticalConfig::default();
    let stack = default_stack(64, &NoiseModel::off(), 2);
    let scaled = SimStack::new(
        stack
            .slices()
            .iter()
            .map(|s| StackSlice {
                image: s.image.scaled(37.5).unwrap(),
                ..s.clone()
            })
            .collect(),
        None,
    )
    .unwrap();
    let params = ReconParams::default();
    let a = reconstruct6(&stack, &cfg, &params).unwrap();
    let b = reconstruct6(&scaled, &cfg, &params).unwrap();
    for (x, y) in a.report.orientations.iter().zip(&b.report.orientations) {
        let (ex, ey) = (&x.estimate, &y.estimate);
        assert!((ex.freq_px[0] - ey.freq_px[0]).abs() < 1e-9);
        assert!((ex.freq_px[1] - ey.freq_px[1]).abs() < 1e-9);
        assert!(wrap_angle(ex.phase_rad - ey.phase_rad).abs() < 1e-9);
        assert!((ex.modulation_est - ey.modulation_est).abs() < 1e-9);
    }
    for (p, q) in a.image.data().iter().zip(b.image.data()) {
        assert!((p * 37.5 - q).abs() <= 1e-9 * q.abs().max(1.0));
    }
}

#[test]
fn slice_order_does_not_matter() {
    let cfg = OpticalConfig::default();
    let stack = default_stack(64, &NoiseModel::default(), 6);
    let mut slices = stack.slices().to_vec();
    slices.swap(0, 4);
    slices.swap(1, 5);
    slices.reverse();
    let shuffled = SimStack::new(slices, None).unwrap();
    let params = ReconParams::default();
    let a = reconstruct6(&stack, &cfg, &params).unwrap();
    let b = reconstruct6(&shuffled, &cfg, &params).unwrap();
    assert_eq!(a.image, b.image);
}

#[test]
fn flat_field_stays_flat() {
    let cfg = OpticalConfig::default();
    let n = 64;
    let flat = Image2D::from_fn(n, n, cfg.pixel_size_nm, |_, _| 3.0).unwrap();
    let stack = unmodulated(&flat);
    let comp = |o| {
        let t = stack.triplet(o);
        separate_components([&t[0].image, &t[1].image, &t[2].image], PROTOCOL_PHASES, 1.0, o).unwrap()
    };
    let params = ReconParams {
        edge_border_fraction: 0.0,
        ..ReconParams::default()
    };
    let transfer = SystemTransfer::new(&cfg).unwrap();
    let out = assemble(
        &comp(Orientation::X),
        &comp(Orientation::Y),
        &true_estimate(Orientation::X, n, &cfg),
        &true_estimate(Orientation::Y, n, &cfg),
        &transfer,
        &cfg,
        &params,
    )
    .unwrap();
    assert_eq!((out.width(), out.height()), (2 * n, 2 * n));
    let (lo, hi) = out.min_max();
    assert!(lo > 0.0 && (hi - lo) < 1e-9 * hi, "range [{lo}, {hi}]");
}

#[test]
fn output_grid_is_upsampled() {
    let cfg = OpticalConfig::default();
    let stack = default_stack(64, &NoiseModel::off(), 0);
    let rec = reconstruct6(&stack, &cfg, &ReconParams::default()).unwrap();
    assert_eq!((rec.image.width(), rec.image.height()), (128, 128));
    assert!((rec.image.pixel_size_nm() - 109.75).abs() < 1e-12);
    assert!(rec.report.total_ms >= rec.report.estimate_ms);
}

#[test]
fn mismatched_pixel_is_a_validation_error() {
    let stack = default_stack(32, &NoiseModel::off(), 0);
    let cfg = OpticalConfig {
        pixel_size_nm: 200.0,
        ..OpticalConfig::default()
    };
    let err = reconstruct6(&stack, &cfg, &ReconParams::default()).unwrap_err();
    assert!(matches!(err.root(), Error::Validation(_)));
}
