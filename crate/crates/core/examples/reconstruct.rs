//! Simulates a stack and reconstructs it, printing the estimates and timings.
//!
//! cargo run --release --example reconstruct [size]

use simshot::commands::{simulate_group, SR_FILE};
use simshot::config::RunConfig;
use simshot::io::write_img1;
use simshot::recon::reconstruct6;

fn main() -> simshot::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(256);
    let cfg = RunConfig { width: n, height: n, ..RunConfig::default() };
    let (stack, _) = simulate_group(&cfg, 1)?;
    let rec = reconstruct6(&stack, &cfg.optics, &cfg.recon_params())?;

    let kc = 2.0 * cfg.optics.na / cfg.optics.wavelength_nm;
    let bins = cfg.freq_fraction * kc * n as f64 * cfg.optics.pixel_size_nm;
    println!("true shift {bins:.4} bins");
    print!("{}", rec.report.render());
    println!("output {}x{} @ {} nm", rec.image.width(), rec.image.height(), rec.image.pixel_size_nm());

    let dir = std::env::temp_dir().join("simshot_examples");
    std::fs::create_dir_all(&dir).map_err(|source| simshot::Error::Io { path: dir.clone(), source })?;
    write_img1(&rec.image, dir.join(SR_FILE))?;
    println!("wrote {}", dir.join(SR_FILE).display());
    Ok(())
}
