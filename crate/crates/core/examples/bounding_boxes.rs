//! Computes the pixel bounding box of a state-space cell and checks that
//! images rendered inside the cell fall within it.
//!
//! `cargo run --example bounding_boxes`

use rand::{Rng, SeedableRng};
use tiler::tiling::{pixel_x_span, PixelSpan};
use tiler::{bounding_box, render, CameraState, Interval, SceneConfig, StateRegion};

fn main() -> tiler::Result<()> {
    let cfg = SceneConfig::default();
    let cell = StateRegion::new((0, 0), Interval::new(5.0, 5.4), Interval::new(10.0, 10.4));
    let b = bounding_box(&cell, &cfg)?;

    println!("cell delta {} theta {}", cell.delta, cell.theta);
    println!("total box width {} over {} pixels", b.total_width(), cfg.pixels());
    for row in [16, 20, 24, 31] {
        let widths: Vec<u8> = (0..cfg.pixel_count)
            .map(|col| {
                let k = row * cfg.pixel_count + col;
                b.high()[k] - b.low()[k]
            })
            .collect();
        println!("row {row:2} widths {widths:?}");
    }
    if let PixelSpan::Ground(span) = pixel_x_span(&cell, 24, 8, &cfg)? {
        println!("pixel (24, 8) sees world x in {span}");
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let inside = (0..1000)
        .filter(|_| b.contains(&render(cell.lerp(rng.gen(), rng.gen()), &cfg)))
        .count();
    println!("{inside}/1000 images rendered inside the cell lie in the box");

    let point = StateRegion::point(CameraState::new(5.0, 10.0));
    let exact = bounding_box(&point, &cfg)?;
    println!(
        "a single-state cell gives a zero-width box equal to the render: {}",
        exact.total_width() == 0 && exact.contains(&render(CameraState::new(5.0, 10.0), &cfg))
    );
    Ok(())
}
