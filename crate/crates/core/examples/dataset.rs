//! Builds a small training dataset and lists its split.
//!
//! cargo run --release --example dataset [n_groups]

use simshot::commands::{cmd_dataset, read_split};
use simshot::config::RunConfig;

fn main() -> simshot::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let cfg = RunConfig {
        n_groups: n,
        width: 64,
        height: 64,
        out: std::env::temp_dir().join("simshot_examples").join("dataset"),
        ..RunConfig::default()
    };
    let summary = cmd_dataset(&cfg)?;
    for w in &summary.warnings {
        println!("warning: {w}");
    }
    for (dir, set) in read_split(&cfg.out)? {
        let files = std::fs::read_dir(&dir).map(|d| d.count()).unwrap_or(0);
        println!("{set:>5} {} ({files} files)", dir.display());
    }
    println!("train {} test {}", summary.train.len(), summary.test.len());
    Ok(())
}
