//! Simulates one six-frame stack from the default config and writes it out.
//!
//! cargo run --release --example simulate_stack [seed]

use simshot::commands::{simulate_group, WIDEFIELD_FILE};
use simshot::config::RunConfig;
use simshot::io::write_img1;

fn main() -> simshot::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let cfg = RunConfig { seed, ..RunConfig::default() };
    let (stack, wf) = simulate_group(&cfg, seed)?;

    let truth = stack.truth().expect("simulated stacks carry the truth");
    println!(
        "truth {}x{} @ {} nm, {:.0} DNB-equivalents",
        truth.width(),
        truth.height(),
        truth.pixel_size_nm(),
        truth.sum() / truth.data().iter().copied().fold(0.0, f64::max)
    );
    for (i, s) in stack.slices().iter().enumerate() {
        let (lo, hi) = s.image.min_max();
        println!("slice {i} {} phase {:.4} mean {:.1} range [{lo:.1}, {hi:.1}]", s.orientation, s.phase_rad, s.image.mean());
    }
    println!("widefield mean {:.1}", wf.mean());

    let dir = std::env::temp_dir().join("simshot_examples").join("stack");
    stack.write_dir(&dir)?;
    write_img1(&wf, dir.join(WIDEFIELD_FILE))?;
    println!("wrote {}", dir.display());
    Ok(())
}
