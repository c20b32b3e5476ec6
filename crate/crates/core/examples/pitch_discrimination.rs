//! Two DNBs one lattice pitch apart, profiled across the widefield image and
//! the reconstruction.
//!
//! cargo run --release --example pitch_discrimination

use simshot::forward::{acquire_stack, widefield, NoiseModel};
use simshot::illumination::default_protocol;
use simshot::metrology::line_profile;
use simshot::optics::OpticalConfig;
use simshot::phantom::{render_sites, Site};
use simshot::recon::{reconstruct6, ReconParams};
use simshot::Image2D;

const PITCH: f64 = 480.0;
const N: usize = 64;

/// `1 - valley / lower peak` between the two halves' maxima; 0 without a valley.
fn dip(profile: &[f64]) -> f64 {
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

fn main() -> simshot::Result<()> {
    let cfg = OpticalConfig::default();
    let fine = cfg.pixel_size_nm / 4.0;
    // profile coordinates put the center of camera pixel (0, 0) at the
    // origin; on the simulation grid that point sits 1.5 fine pixels in
    let mid = [(N / 2) as f64 * cfg.pixel_size_nm; 2];
    let to_fine = |v: f64| v + 1.5 * fine;
    let sites = [-0.5, 0.5].map(|s| Site {
        x_nm: to_fine(mid[0] + s * PITCH),
        y_nm: to_fine(mid[1]),
        amplitude: 1.0,
    });
    let truth = render_sites(&sites, 110.0, 4 * N, 4 * N, fine)?;
    let protocol = default_protocol(&cfg, 0.8, 0.9)?;
    let stack = acquire_stack(&truth, &cfg, &protocol, &NoiseModel::off())?;
    let wf = widefield(&truth, &cfg, &NoiseModel::off())?;
    let sr = reconstruct6(&stack, &cfg, &ReconParams::default())?;

    let p0 = [mid[0] - PITCH, mid[1]];
    let p1 = [mid[0] + PITCH, mid[1]];
    let profile = |img: &Image2D| line_profile(img, p0, p1, 97).map(|p| p.1);
    let (pw, ps) = (profile(&wf)?, profile(&sr.image)?);
    println!("{:>8} {:>10} {:>10}", "x_nm", "widefield", "sim");
    for i in (0..97).step_by(8) {
        let x = -PITCH + 2.0 * PITCH * i as f64 / 96.0;
        println!("{x:>8.0} {:>10.4} {:>10.4}", pw[i], ps[i]);
    }
    println!("widefield dip {:.3}", dip(&pw));
    println!("reconstruction dip {:.3}", dip(&ps));
    Ok(())
}
