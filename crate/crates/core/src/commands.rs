//! The four `simshot` commands and their output layout.
//!
//! ```text
//! simulate     out/stack.txt slice_{0..5}.img1 truth.img1 widefield.img1 config.txt
//! reconstruct  out/sr.img1 report.txt config.txt
//! analyze      out/analysis.txt decorrelation.csv config.txt
//! dataset      out/group_NNNN/{simulate layout, sr.img1}  out/split.txt config.txt
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::forward::{acquire_stack, mix_seed, widefield, SimStack};
use crate::illumination::default_protocol;
use crate::image::Image2D;
use crate::io::{read_img1, write_atomic, write_img1};
use crate::metrology::{analyze_resolution, DecorrelationResult};
use crate::phantom::generate_phantom;
use crate::recon::{reconstruct6, Reconstruction};

pub const WIDEFIELD_FILE: &str = "widefield.img1";
pub const SR_FILE: &str = "sr.img1";
pub const REPORT_FILE: &str = "report.txt";
pub const CONFIG_FILE: &str = "config.txt";
pub const ANALYSIS_FILE: &str = "analysis.txt";
pub const CURVES_FILE: &str = "decorrelation.csv";
pub const SPLIT_FILE: &str = "split.txt";

/// Process exit status for an error: 2 config, 3 data, 4 numeric/analysis.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Config(_) | Error::InvalidInput(_) | Error::Sampling { .. } | Error::Geometry(_) => 2,
        Error::Io { .. } | Error::Format { .. } | Error::Validation(_) => 3,
        _ => 4,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_config(cfg: &RunConfig, dir: &Path) -> Result<()> {
    write_atomic(&dir.join(CONFIG_FILE), cfg.render().as_bytes())
}

/// Truth, six raw frames and a widefield frame for one seed.
pub fn simulate_group(cfg: &RunConfig, seed: u64) -> Result<(SimStack, Image2D)> {
    cfg.validate()?;
    let as_config = |e: Error| match e {
        Error::Sampling { .. } | Error::Geometry(_) | Error::InvalidInput(_) => {
            Error::Config(e.to_string())
        }
        other => other,
    };
    let fine = cfg.fine_pixel_nm();
    let truth = generate_phantom(
        &cfg.phantom_spec(seed),
        cfg.width * cfg.fine_factor,
        cfg.height * cfg.fine_factor,
        fine,
    )
    .map_err(as_config)?;
    let protocol = default_protocol(&cfg.optics, cfg.freq_fraction, cfg.modulation).map_err(as_config)?;
    let noise = cfg.noise_model(seed);
    let stack = acquire_stack(&truth, &cfg.optics, &protocol, &noise).map_err(as_config)?;
    // index 6 keeps the widefield noise independent of the six slices
    let wf = widefield(&truth, &cfg.optics, &noise.derived(6)).map_err(as_config)?;
    Ok((stack, wf))
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimStack> {
    let (stack, wf) = simulate_group(cfg, cfg.seed)?;
    create_dir(&cfg.out)?;
    stack.write_dir(&cfg.out)?;
    write_img1(&wf, cfg.out.join(WIDEFIELD_FILE))?;
    write_config(cfg, &cfg.out)?;
    Ok(stack)
}

/// Reads the stack in `stack_dir` and writes `sr.img1` and `report.txt`.
pub fn cmd_reconstruct(cfg: &RunConfig, stack_dir: &Path) -> Result<Reconstruction> {
    cfg.validate()?;
    let stack = SimStack::read_dir(stack_dir)?;
    let rec = reconstruct6(&stack, &cfg.optics, &cfg.recon_params())?;
    create_dir(&cfg.out)?;
    write_img1(&rec.image, cfg.out.join(SR_FILE))?;
    write_atomic(&cfg.out.join(REPORT_FILE), rec.report.render().as_bytes())?;
    write_config(cfg, &cfg.out)?;
    Ok(rec)
}

/// Summary lines written to `analysis.txt`.
pub fn analysis_summary(image: &Path, r: &DecorrelationResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "image={}", image.display());
    let _ = writeln!(s, "kcmax={:.6}", r.kcmax);
    let _ = writeln!(s, "resolution_nm={:.3}", r.resolution_nm);
    let _ = writeln!(s, "reference_pixel_nm={}", r.reference_pixel_nm);
    let _ = writeln!(s, "maxima={}", r.maxima.len());
    s
}

pub fn cmd_analyze(cfg: &RunConfig, image: &Path) -> Result<DecorrelationResult> {
    cfg.validate()?;
    let img = read_img1(image)?;
    let r = analyze_resolution(&img, &cfg.metrology)?;
    create_dir(&cfg.out)?;
    write_atomic(&cfg.out.join(ANALYSIS_FILE), analysis_summary(image, &r).as_bytes())?;
    write_atomic(&cfg.out.join(CURVES_FILE), r.to_csv().as_bytes())?;
    write_config(cfg, &cfg.out)?;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn group_name(i: usize) -> String {
    format!("group_{i:04}")
}

/// Seeded shuffle of `0..n`; the first `round(split * n)` go to training.
pub fn split_groups(n: usize, split: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(seed, 2)));
    let n_train = ((split * n as f64).round() as usize).min(n);
    let mut test = idx.split_off(n_train);
    idx.sort_unstable();
    test.sort_unstable();
    (idx, test)
}

/// `cfg.n_groups` groups, each with its stack, widefield and the
/// reconstruction that serves as the training label.
pub fn cmd_dataset(cfg: &RunConfig) -> Result<DatasetSummary> {
    cfg.validate()?;
    create_dir(&cfg.out)?;
    let params = cfg.recon_params();
    (0..cfg.n_groups).into_par_iter().try_for_each(|g| -> Result<()> {
        let seed = mix_seed(cfg.seed, 1000 + g as u64);
        let (stack, wf) = simulate_group(cfg, seed)?;
        let rec = reconstruct6(&stack, &cfg.optics, &params)?;
        let dir = cfg.out.join(group_name(g));
        create_dir(&dir)?;
        stack.write_dir(&dir)?;
        write_img1(&wf, dir.join(WIDEFIELD_FILE))?;
        write_img1(&rec.image, dir.join(SR_FILE))?;
        write_atomic(&dir.join(REPORT_FILE), rec.report.render().as_bytes())
    })?;

    let (train, test) = split_groups(cfg.n_groups, cfg.split, cfg.seed);
    let mut warnings = Vec::new();
    if test.is_empty() {
        warnings.push(format!("split {} leaves the test set empty", cfg.split));
    }
    if train.is_empty() {
        warnings.push(format!("split {} leaves the training set empty", cfg.split));
    }
    let mut manifest = String::new();
    for (set, members) in [("train", &train), ("test", &test)] {
        for &g in members.iter() {
            let _ = writeln!(manifest, "{} {set}", group_name(g));
        }
    }
    write_atomic(&cfg.out.join(SPLIT_FILE), manifest.as_bytes())?;
    write_config(cfg, &cfg.out)?;
    Ok(DatasetSummary {
        train: train.into_iter().map(group_name).collect(),
        test: test.into_iter().map(group_name).collect(),
        warnings,
    })
}

/// Parses `split.txt` into `(group, set)` pairs.
pub fn read_split(dir: &Path) -> Result<Vec<(PathBuf, String)>> {
    let path = dir.join(SPLIT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (g, set) = l
                .split_once(' ')
                .ok_or_else(|| Error::Validation(format!("bad split line '{l}'")))?;
            Ok((dir.join(g), set.trim().to_string()))
        })
        .collect()
}
