//! Decorrelation resolution of widefield and reconstructed images.
//!
//! cargo run --release --example resolution_analysis [seeds]

use simshot::commands::simulate_group;
use simshot::config::RunConfig;
use simshot::metrology::analyze_resolution;
use simshot::recon::reconstruct6;

fn main() -> simshot::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let cfg = RunConfig { width: 256, height: 256, ..RunConfig::default() };
    println!("{:>4} {:>9} {:>8} {:>9} {:>8} {:>6}", "seed", "wf kcmax", "wf nm", "sr kcmax", "sr nm", "ratio");
    for seed in 0..seeds {
        let (stack, wf) = simulate_group(&cfg, seed)?;
        let sr = reconstruct6(&stack, &cfg.optics, &cfg.recon_params())?;
        let a = analyze_resolution(&wf, &cfg.metrology)?;
        let b = analyze_resolution(&sr.image, &cfg.metrology)?;
        println!(
            "{seed:>4} {:>9.4} {:>8.1} {:>9.4} {:>8.1} {:>6.2}",
            a.kcmax,
            a.resolution_nm,
            b.kcmax,
            b.resolution_nm,
            a.resolution_nm / b.resolution_nm
        );
    }
    Ok(())
}
