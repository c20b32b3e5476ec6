//! IMG1 round trip, the 16-bit export path and a PGM preview.
//!
//! cargo run --release --example img1_io

use simshot::io::{decode_img1, encode_img1, export_pgm16, read_img1, write_img1, write_img1_as, Dtype};
use simshot::Image2D;

fn main() -> simshot::Result<()> {
    let img = Image2D::from_fn(64, 48, 54.875, |x, y| ((x as f64 / 5.0).sin() * (y as f64 / 7.0).cos()) * 100.0)?;
    let dir = std::env::temp_dir().join("simshot_examples").join("io");
    std::fs::create_dir_all(&dir).map_err(|source| simshot::Error::Io { path: dir.clone(), source })?;

    write_img1(&img, dir.join("f32.img1"))?;
    let back = read_img1(dir.join("f32.img1"))?;
    let err = img.data().iter().zip(back.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("f32: {}x{} @ {} nm, max error {err:.2e}", back.width(), back.height(), back.pixel_size_nm());

    write_img1_as(&img, dir.join("u16.img1"), Dtype::U16)?;
    let (lo, hi) = read_img1(dir.join("u16.img1"))?.min_max();
    println!("u16 export range [{lo}, {hi}]");

    export_pgm16(&img, dir.join("preview.pgm"))?;

    let mut bytes = encode_img1(&img, Dtype::F32);
    bytes.truncate(100);
    match decode_img1(&bytes) {
        Err(e) => println!("truncated file: {e}"),
        Ok(_) => unreachable!(),
    }
    println!("wrote {}", dir.display());
    Ok(())
}
