//! Diffraction limits, OTF samples and what the camera can see.
//!
//! cargo run --release --example optics_budget

use simshot::optics::{abbe_cutoff, abbe_resolution, otf_profile, rayleigh_resolution, OpticalConfig, SystemTransfer};

fn main() -> simshot::Result<()> {
    let cfg = OpticalConfig::default();
    let kc = abbe_cutoff(&cfg);
    let nyquist = 1.0 / (2.0 * cfg.pixel_size_nm);
    println!("lambda {} nm, NA {}, camera pixel {} nm", cfg.wavelength_nm, cfg.na, cfg.pixel_size_nm);
    println!("cutoff        {kc:.4e} cyc/nm");
    println!("abbe          {:.1} nm", abbe_resolution(&cfg));
    println!("rayleigh      {:.1} nm", rayleigh_resolution(&cfg));
    println!("camera nyquist {nyquist:.4e} cyc/nm ({:.2} of cutoff)", nyquist / kc);
    let p = 0.8 * kc;
    println!("pattern at 0.8 kc: period {:.1} nm, extended support {:.4e} cyc/nm", 1.0 / p, kc + p);
    println!("sr grid nyquist {:.4e} cyc/nm", cfg.upsample_factor as f64 * nyquist);

    let t = SystemTransfer::new(&cfg)?;
    println!("\n{:>6} {:>8} {:>10}", "k/kc", "otf", "otf*pixel");
    for i in 0..=10 {
        let rho = i as f64 / 10.0;
        println!("{rho:>6.1} {:>8.4} {:>10.4}", otf_profile(rho), t.eval(rho * kc, 0.0));
    }
    Ok(())
}
