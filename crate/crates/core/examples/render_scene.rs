//! Renders the road scene at a few camera states, prints one as ASCII, and
//! writes PGM files.
//!
//! `cargo run --example render_scene [out_dir]`

use tiler::scene::{project_pixel, Projection};
use tiler::{pgm, render, CameraState, SceneConfig};

fn main() -> tiler::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("tiler-render"), Into::into);
    std::fs::create_dir_all(&out)?;
    let cfg = SceneConfig::default();

    let states = [(0.0, 0.0), (5.0, 10.0), (-20.0, -30.0), (35.0, 45.0)];
    for (delta, theta) in states {
        let image = render(CameraState::new(delta, theta), &cfg);
        let path = out.join(format!("scene_d{delta}_t{theta}.pgm"));
        pgm::write_image(&path, &image)?;
        println!("wrote {}", path.display());
    }

    let state = CameraState::new(5.0, 10.0);
    let image = render(state, &cfg);
    println!("\ndelta = 5, theta = 10 deg (rows 0..16 are sky):");
    let shades = [' ', '.', ':', '+', '#'];
    for row in 0..cfg.pixel_count {
        let line: String = (0..cfg.pixel_count)
            .map(|col| shades[(image.get(row, col) as usize * (shades.len() - 1) + 127) / 255])
            .collect();
        println!("  {line}");
    }

    if let Projection::Ground { x, y } = project_pixel(state, 24, 8, &cfg) {
        println!("\npixel (24, 8) sees the ground at x = {x:.4}, y = {y:.4}");
    }
    Ok(())
}
