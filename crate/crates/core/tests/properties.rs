use proptest::prelude::*;

use num_complex::Complex64;
use simshot::commands::split_groups;
use simshot::config::RunConfig;
use simshot::fft;
use simshot::forward::bin_image;
use simshot::illumination::Orientation;
use simshot::io::{decode_img1, encode_img1, Dtype};
use simshot::metrology::{decorrelation_value, normalize_spectrum};
use simshot::recon::separate::{condition_number, mixing_matrix, separate_spectra};
use simshot::{Image2D, Spectrum2D};

fn image(max: usize) -> impl Strategy<Value = Image2D> {
    (1..=max, 1..=max, 1.0..500.0f64).prop_flat_map(|(w, h, px)| {
        prop::collection::vec(-1e3..1e3f64, w * h).prop_map(move |d| Image2D::new(w, h, px, d).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn img1_round_trip(img in image(12)) {
        let back = decode_img1(&encode_img1(&img, Dtype::F32)).unwrap();
        prop_assert_eq!(back.pixel_size_nm(), img.pixel_size_nm());
        for (a, b) in img.data().iter().zip(back.data()) {
            prop_assert_eq!(*a as f32 as f64, *b);
        }
    }

    #[test]
    fn fft_is_unitary_and_invertible(img in image(16)) {
        let spec = fft::fft2(&img).unwrap();
        let e_img: f64 = img.data().iter().map(|v| v * v).sum();
        prop_assert!((spec.energy() - e_img).abs() <= 1e-9 * e_img.max(1.0));
        let back = fft::ifft2(&spec).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            prop_assert!((a - b).abs() <= 1e-9 * 1e3);
        }
    }

    #[test]
    fn binning_keeps_the_mean(w in 1..6usize, h in 1..6usize, f in 1..5usize, seed in any::<u64>()) {
        let img = Image2D::from_fn(w * f, h * f, 10.0, |x, y| ((x * 31 + y * 17) as u64 ^ seed) as f64 % 97.0).unwrap();
        let b = bin_image(&img, f).unwrap();
        prop_assert_eq!((b.width(), b.height()), (w, h));
        prop_assert!((b.mean() - img.mean()).abs() < 1e-9);
    }

    #[test]
    fn separation_inverts_mixing(
        p1 in 0.3..2.5f64, p2 in 3.5..6.0f64, m in 0.1..1.0f64,
        bands in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 3 * 16),
    ) {
        let phases = [0.0, p1, p2];
        prop_assume!(condition_number(phases, m) < 1e4);
        let c: Vec<Complex64> = bands.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let mix = mixing_matrix(phases, m);
        let frames: Vec<Spectrum2D> = mix.iter().map(|row| {
            let d = (0..16).map(|i| row[0] * c[i] + row[1] * c[16 + i] + row[2] * c[32 + i]).collect();
            Spectrum2D::new(4, 4, 1.0, d).unwrap()
        }).collect();
        let s = separate_spectra([&frames[0], &frames[1], &frames[2]], phases, m, Orientation::Y).unwrap();
        for (k, comp) in [s.c0.data(), s.cplus.data(), s.cminus.data()].iter().enumerate() {
            for i in 0..16 {
                prop_assert!((comp[i] - c[16 * k + i]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn decorrelation_is_bounded(img in image(12), r in 0.0..1.5f64) {
        let spec = fft::fft2(&img).unwrap();
        let n = normalize_spectrum(&spec, f64::MIN_POSITIVE);
        let d = decorrelation_value(&spec, &n, r, 219.5).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&d));
    }

    #[test]
    fn split_is_a_partition(n in 1..300usize, split in 0.0..=1.0f64, seed in any::<u64>()) {
        let (train, test) = split_groups(n, split, seed);
        prop_assert_eq!(train.len(), (split * n as f64).round() as usize);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn config_render_parses_back(seed in any::<u64>(), w in 0.001..1.0f64, rows in 0..100usize) {
        let mut cfg = RunConfig::default();
        cfg.set("seed", &seed.to_string()).unwrap();
        cfg.set("wiener_w", &w.to_string()).unwrap();
        cfg.set("rows", &rows.to_string()).unwrap();
        let back = RunConfig::parse(&cfg.render()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
