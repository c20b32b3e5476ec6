//! Width of an isolated DNB in the widefield image and in the reconstruction.
//!
//! cargo run --release --example fwhm_profile

use simshot::forward::{acquire_stack, widefield, NoiseModel};
use simshot::illumination::default_protocol;
use simshot::metrology::fwhm;
use simshot::optics::OpticalConfig;
use simshot::phantom::{render_sites, Site};
use simshot::recon::{reconstruct6, ReconParams};

const N: usize = 64;

fn main() -> simshot::Result<()> {
    let cfg = OpticalConfig::default();
    let fine = cfg.pixel_size_nm / 4.0;
    let mid = (N / 2) as f64 * cfg.pixel_size_nm;
    // profile coordinates start at the center of camera pixel (0, 0)
    let site = Site { x_nm: mid + 1.5 * fine, y_nm: mid + 1.5 * fine, amplitude: 1.0 };
    let truth = render_sites(&[site], 110.0, 4 * N, 4 * N, fine)?;
    let wf = widefield(&truth, &cfg, &NoiseModel::off())?;
    let stack = acquire_stack(&truth, &cfg, &default_protocol(&cfg, 0.8, 0.9)?, &NoiseModel::off())?;
    let sr = reconstruct6(&stack, &cfg, &ReconParams::default())?;

    let span = 1000.0;
    for (name, img) in [("widefield", &wf), ("reconstruction", &sr.image)] {
        for (axis, p0, p1) in [("x", [mid - span, mid], [mid + span, mid]), ("y", [mid, mid - span], [mid, mid + span])] {
            let r = fwhm(img, p0, p1, 2001)?;
            println!("{name:>14} {axis}: fwhm {:.1} nm, peak at {:.1} nm", r.fwhm_nm, r.peak_position_nm - span);
        }
    }
    Ok(())
}
