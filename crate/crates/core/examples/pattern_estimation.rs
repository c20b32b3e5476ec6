//! Pattern frequency, phase and modulation recovered from separated bands
//! at several photon budgets.
//!
//! cargo run --release --example pattern_estimation

use std::f64::consts::PI;

use simshot::commands::simulate_group;
use simshot::config::RunConfig;
use simshot::illumination::Orientation;
use simshot::optics::{abbe_cutoff, SystemTransfer};
use simshot::recon::{estimate_pattern, separate_components};

fn main() -> simshot::Result<()> {
    let mut cfg = RunConfig::default();
    let o = cfg.optics;
    let f = cfg.freq_fraction * abbe_cutoff(&o);
    let bins = f * cfg.width as f64 * o.pixel_size_nm;
    // phase at the center of camera pixel (0, 0), which sits 1.5 fine pixels in
    let offset = (cfg.fine_factor as f64 - 1.0) / 2.0 * cfg.fine_pixel_nm();
    let phase = (2.0 * PI * f * offset + PI).rem_euclid(2.0 * PI) - PI;
    println!("truth: shift {bins:.4} bins, phase {phase:.4} rad, modulation {}", cfg.modulation);

    let transfer = SystemTransfer::new(&o)?;
    println!("{:>10} {:>9} {:>10} {:>9} {:>6} {:>6}", "photons", "shift", "phase", "m", "peak", "cond");
    for photons in [0.0, 1e5, 1e4, 1e3, 1e2] {
        cfg.noise.photons_at_unit_intensity = photons;
        cfg.noise.read_noise_sd = if photons == 0.0 { 0.0 } else { 10.0 };
        let (stack, _) = simulate_group(&cfg, 3)?;
        let t = stack.triplet(Orientation::X);
        let comp = separate_components(
            [&t[0].image, &t[1].image, &t[2].image],
            [t[0].phase_rad, t[1].phase_rad, t[2].phase_rad],
            1.0,
            Orientation::X,
        )?;
        match estimate_pattern(&comp, &transfer, &cfg.recon_params()) {
            Ok(e) => println!(
                "{photons:>10} {:>9.4} {:>10.4} {:>9.4} {:>6.3} {:>6.2}",
                e.freq_px[0], e.phase_rad, e.modulation_est, e.correlation_peak, comp.condition
            ),
            Err(e) => println!("{photons:>10} {e}"),
        }
    }
    Ok(())
}
