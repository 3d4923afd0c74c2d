//! Road-scene world model and the one-ray-per-pixel camera.
//!
//! The world is a straight road along the y axis lying in the z = 0 plane.
//! Intensity on the road depends only on the x coordinate: a centre line at
//! x = 0, side lines at x = ±road_width, plain road elsewhere, and linear
//! ramps of half-width `ramp_half_width` across every line/road boundary.
//! Everything above the horizon is sky.
//!
//! The camera sits at `(offset, 0, camera_height)` and is rotated by `angle`
//! degrees about the vertical axis. Each pixel is traced with exactly one ray
//! from the focal point through the pixel centre on a virtual image plane in
//! front of the focal point.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scene geometry and intensities. Defaults are the road case-study values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Distance from the centre of the centre line to the centre of a side line.
    pub road_width: f64,
    /// Width of the centre line and of each side line.
    pub line_width: f64,
    /// Half-width of the linear intensity ramp at each line boundary.
    pub ramp_half_width: f64,
    pub camera_height: f64,
    pub focal_length: f64,
    /// Side length of one pixel on the image plane.
    pub pixel_side: f64,
    /// Image is `pixel_count × pixel_count`.
    pub pixel_count: usize,
    pub intensity_side_line: f64,
    pub intensity_center_line: f64,
    pub intensity_road: f64,
    pub intensity_sky: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            road_width: 50.0,
            line_width: 4.0,
            ramp_half_width: 1.0,
            camera_height: 20.0,
            focal_length: 1.0,
            pixel_side: 0.16,
            pixel_count: 32,
            intensity_side_line: 1.0,
            intensity_center_line: 0.7,
            intensity_road: 0.3,
            intensity_sky: 0.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("road_width", self.road_width),
            ("line_width", self.line_width),
            ("ramp_half_width", self.ramp_half_width),
            ("camera_height", self.camera_height),
            ("focal_length", self.focal_length),
            ("pixel_side", self.pixel_side),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidScene(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if self.pixel_count == 0 || !self.pixel_count.is_multiple_of(2) {
            return Err(Error::InvalidScene(format!(
                "pixel_count must be positive and even, got {}",
                self.pixel_count
            )));
        }
        let intensities = [
            ("intensity_side_line", self.intensity_side_line),
            ("intensity_center_line", self.intensity_center_line),
            ("intensity_road", self.intensity_road),
            ("intensity_sky", self.intensity_sky),
        ];
        for (name, v) in intensities {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidScene(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        // Ramps must not overlap each other or cross x = 0, otherwise the
        // profile is no longer the simple plateau/ramp sequence.
        let half_line = 0.5 * self.line_width;
        if self.ramp_half_width > half_line {
            return Err(Error::InvalidScene(
                "ramp_half_width must not exceed half the line width".into(),
            ));
        }
        if half_line + self.ramp_half_width > self.road_width - half_line - self.ramp_half_width {
            return Err(Error::InvalidScene(
                "centre-line and side-line ramps overlap; increase road_width".into(),
            ));
        }
        Ok(())
    }

    /// Reads a TOML (`.toml`) or JSON (anything else) scene file. Missing
    /// fields fall back to the defaults.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SceneConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text)?
        } else {
            serde_json::from_str(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Plateau/ramp knots of the intensity profile for `x >= 0`, in
    /// increasing x. Between consecutive knots the profile is linear; past
    /// the last knot it stays at the road intensity.
    fn half_profile_knots(&self) -> [(f64, f64); 7] {
        let r = self.ramp_half_width;
        let centre_edge = 0.5 * self.line_width;
        let side_inner = self.road_width - 0.5 * self.line_width;
        let side_outer = self.road_width + 0.5 * self.line_width;
        [
            (0.0, self.intensity_center_line),
            (centre_edge - r, self.intensity_center_line),
            (centre_edge + r, self.intensity_road),
            (side_inner - r, self.intensity_road),
            (side_inner + r, self.intensity_side_line),
            (side_outer - r, self.intensity_side_line),
            (side_outer + r, self.intensity_road),
        ]
    }

    /// All x positions where the intensity profile changes slope, in
    /// increasing order. The profile is linear between consecutive entries.
    pub fn profile_breakpoints(&self) -> Vec<f64> {
        let knots = self.half_profile_knots();
        let mut out: Vec<f64> = knots[1..].iter().rev().map(|&(x, _)| -x).collect();
        out.extend(knots[1..].iter().map(|&(x, _)| x));
        out
    }

    /// Number of pixels in one image.
    pub fn pixels(&self) -> usize {
        self.pixel_count * self.pixel_count
    }

    /// Coordinate of the centre of pixel `index` on the image plane.
    fn pixel_center(&self, index: usize) -> f64 {
        let d = self.pixel_side;
        d * index as f64 + (d / 2.0 - self.pixel_count as f64 * d / 2.0)
    }

    /// Horizontal camera-frame coordinate of the centre of column `col`.
    pub fn column_offset(&self, col: usize) -> f64 {
        self.pixel_center(col)
    }

    /// Rows whose rays point at or above the horizon. Sky status does not
    /// depend on the camera state because the camera only rotates about the
    /// vertical axis.
    pub fn is_sky_row(&self, row: usize) -> bool {
        -self.pixel_center(row) >= 0.0
    }
}

/// Road intensity in `[0, 1]` at world x coordinate `x`.
pub fn intensity_profile(x: f64, cfg: &SceneConfig) -> f64 {
    let ax = x.abs();
    let knots = cfg.half_profile_knots();
    for pair in knots.windows(2) {
        let (x0, v0) = pair[0];
        let (x1, v1) = pair[1];
        if ax <= x1 {
            if v0 == v1 {
                return v0;
            }
            let t = (ax - x0) / (x1 - x0);
            return v0 + (v1 - v0) * t;
        }
    }
    cfg.intensity_road
}

/// Camera offset (length units) and heading (degrees).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraState {
    pub offset: f64,
    pub angle_deg: f64,
}

impl CameraState {
    pub fn new(offset: f64, angle_deg: f64) -> Self {
        CameraState { offset, angle_deg }
    }
}

/// Where a pixel's ray lands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Projection {
    Ground { x: f64, y: f64 },
    Sky,
}

type Mat4 = [[f64; 4]; 4];
type Mat4x3 = [[f64; 3]; 4];

fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mul4x3(a: &Mat4, b: &Mat4x3) -> Mat4x3 {
    let mut out = [[0.0; 3]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// The composed homogeneous map from pixel coordinates `(row, col, 1)` to
/// world coordinates for one camera state:
/// focal-to-world translation · road-plane projection · camera-to-focal
/// rotation · pixel-to-camera.
#[derive(Clone, Debug)]
pub struct CameraTransform {
    m: Mat4x3,
}

impl CameraTransform {
    pub fn new(state: CameraState, cfg: &SceneConfig) -> Self {
        let zc = cfg.camera_height;
        let d = cfg.pixel_side;
        let f = cfg.focal_length;
        let c = d / 2.0 - cfg.pixel_count as f64 * d / 2.0;
        let (sin, cos) = state.angle_deg.to_radians().sin_cos();

        let focal_to_world: Mat4 = [
            [1.0, 0.0, 0.0, state.offset],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, zc],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let plane_projection: Mat4 = [
            [-zc, 0.0, 0.0, 0.0],
            [0.0, -zc, 0.0, 0.0],
            [0.0, 0.0, -zc, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        let camera_to_focal: Mat4 = [
            [cos, -sin, 0.0, 0.0],
            [sin, cos, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let pixel_to_camera: Mat4x3 = [[0.0, d, c], [0.0, 0.0, f], [-d, 0.0, -c], [0.0, 0.0, 1.0]];
        let m = mul4x3(
            &mul4(&mul4(&focal_to_world, &plane_projection), &camera_to_focal),
            &pixel_to_camera,
        );
        CameraTransform { m }
    }

    pub fn project(&self, row: usize, col: usize) -> Projection {
        let p = [row as f64, col as f64, 1.0];
        let h = |r: usize| self.m[r][0] * p[0] + self.m[r][1] * p[1] + self.m[r][2] * p[2];
        // The homogeneous weight is the vertical component of the ray in the
        // focal frame; the ray reaches the road only when it points down.
        let w = h(3);
        if w >= 0.0 {
            return Projection::Sky;
        }
        Projection::Ground {
            x: h(0) / w,
            y: h(1) / w,
        }
    }
}

/// Road-plane intersection of the ray through pixel `(row, col)`.
pub fn project_pixel(state: CameraState, row: usize, col: usize, cfg: &SceneConfig) -> Projection {
    CameraTransform::new(state, cfg).project(row, col)
}

/// Maps a `[0, 1]` intensity to a byte, rounding half away from zero.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Square 8-bit grayscale image stored row-major, row 0 at the top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    size: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(size: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != size * size {
            return Err(Error::ShapeMismatch {
                expected: size * size,
                actual: pixels.len(),
            });
        }
        Ok(Image { size, pixels })
    }

    pub fn filled(size: usize, value: u8) -> Self {
        Image {
            size,
            pixels: vec![value; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.size + col]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64).collect()
    }
}

/// Renders the camera image for `state`.
pub fn render(state: CameraState, cfg: &SceneConfig) -> Image {
    let n = cfg.pixel_count;
    let transform = CameraTransform::new(state, cfg);
    let sky = quantize(cfg.intensity_sky);
    let mut pixels = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            pixels.push(match transform.project(row, col) {
                Projection::Sky => sky,
                Projection::Ground { x, .. } => quantize(intensity_profile(x, cfg)),
            });
        }
    }
    Image { size: n, pixels }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct ray/plane intersection, built without the homogeneous chain.
    fn ray_oracle(state: CameraState, row: usize, col: usize, cfg: &SceneConfig) -> Option<(f64, f64)> {
        let n = cfg.pixel_count as f64;
        let d = cfg.pixel_side;
        let right = (col as f64 + 0.5) * d - n * d / 2.0;
        let up = n * d / 2.0 - (row as f64 + 0.5) * d;
        let forward = cfg.focal_length;
        let t = state.angle_deg.to_radians();
        let dir = [
            t.cos() * right - t.sin() * forward,
            t.sin() * right + t.cos() * forward,
            up,
        ];
        if dir[2] >= 0.0 {
            return None;
        }
        let s = -cfg.camera_height / dir[2];
        Some((state.offset + s * dir[0], s * dir[1]))
    }

    #[test]
    fn default_config_is_valid_and_matches_case_study() {
        let cfg = SceneConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.road_width, 50.0);
        assert_eq!(cfg.line_width, 4.0);
        assert_eq!(cfg.ramp_half_width, 1.0);
        assert_eq!(cfg.camera_height, 20.0);
        assert_eq!(cfg.focal_length, 1.0);
        assert_eq!(cfg.pixel_side, 0.16);
        assert_eq!(cfg.pixel_count, 32);
        assert_eq!(
            (
                cfg.intensity_side_line,
                cfg.intensity_center_line,
                cfg.intensity_road,
                cfg.intensity_sky
            ),
            (1.0, 0.7, 0.3, 0.0)
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SceneConfig {
                pixel_count: 31,
                ..Default::default()
            },
            SceneConfig {
                pixel_count: 0,
                ..Default::default()
            },
            SceneConfig {
                camera_height: 0.0,
                ..Default::default()
            },
            SceneConfig {
                intensity_road: 1.5,
                ..Default::default()
            },
            SceneConfig {
                ramp_half_width: 3.0,
                ..Default::default()
            },
            SceneConfig {
                road_width: 5.0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn intensity_profile_values() {
        let cfg = SceneConfig::default();
        assert_eq!(intensity_profile(0.0, &cfg), 0.7);
        assert_eq!(intensity_profile(25.0, &cfg), 0.3);
        assert!((intensity_profile(2.0, &cfg) - 0.5).abs() < 1e-12);
        assert_eq!(intensity_profile(50.0, &cfg), 1.0);
        assert_eq!(intensity_profile(-50.0, &cfg), 1.0);
        assert_eq!(intensity_profile(500.0, &cfg), 0.3);
        for x in [0.3, 1.7, 2.5, 47.9, 52.2, 60.0] {
            assert_eq!(intensity_profile(x, &cfg), intensity_profile(-x, &cfg));
        }
    }

    #[test]
    fn breakpoints_are_sorted_and_symmetric() {
        let bp = SceneConfig::default().profile_breakpoints();
        assert_eq!(
            bp,
            vec![-53.0, -51.0, -49.0, -47.0, -3.0, -1.0, 1.0, 3.0, 47.0, 49.0, 51.0, 53.0]
        );
    }

    #[test]
    fn quantize_rounding() {
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
        // 0.3 * 255 evaluates to exactly 76.5 in binary64; ties go away from zero.
        assert_eq!(0.3 * 255.0, 76.5);
        assert_eq!(quantize(0.3), 77);
        assert_eq!(quantize(-0.2), 0);
        assert_eq!(quantize(1.2), 255);
    }

    #[test]
    fn top_half_is_sky() {
        let cfg = SceneConfig::default();
        for state in [
            CameraState::new(0.0, 0.0),
            CameraState::new(-40.0, 60.0),
            CameraState::new(33.0, -59.0),
        ] {
            for row in 0..16 {
                for col in 0..32 {
                    assert_eq!(project_pixel(state, row, col, &cfg), Projection::Sky);
                }
            }
            for row in 16..32 {
                assert!(matches!(project_pixel(state, row, 0, &cfg), Projection::Ground { .. }));
            }
        }
    }

    #[test]
    fn centered_camera_is_mirror_symmetric() {
        let cfg = SceneConfig::default();
        let state = CameraState::new(0.0, 0.0);
        for c in 0..32 {
            let (Projection::Ground { x: a, .. }, Projection::Ground { x: b, .. }) = (
                project_pixel(state, 31, c, &cfg),
                project_pixel(state, 31, 31 - c, &cfg),
            ) else {
                panic!("bottom row must hit the road");
            };
            assert!((a + b).abs() < 1e-12, "{a} vs {b}");
        }
        let img = render(state, &cfg);
        for r in 0..32 {
            for c in 0..32 {
                assert_eq!(img.get(r, c), img.get(r, 31 - c));
            }
        }
    }

    #[test]
    fn chain_matches_direct_intersection() {
        let cfg = SceneConfig::default();
        let state = CameraState::new(5.0, 10.0);
        let Projection::Ground { x, y } = project_pixel(state, 24, 8, &cfg) else {
            panic!("pixel (24, 8) must hit the road");
        };
        let (ox, oy) = ray_oracle(state, 24, 8, &cfg).unwrap();
        assert!((x - ox).abs() < 1e-9 && (y - oy).abs() < 1e-9);
        // Frozen from the direct intersection above.
        assert!((x - -14.932_610_018_846_763).abs() < 1e-9, "x = {x:.15}");
        assert!((y - 11.418_087_350_174_88).abs() < 1e-9, "y = {y:.15}");
    }

    #[test]
    fn chain_matches_oracle_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let cfg = SceneConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let state = CameraState::new(rng.gen_range(-50.0..50.0), rng.gen_range(-70.0..70.0));
            let (row, col) = (rng.gen_range(0..32), rng.gen_range(0..32));
            match (project_pixel(state, row, col, &cfg), ray_oracle(state, row, col, &cfg)) {
                (Projection::Sky, None) => {}
                (Projection::Ground { x, y }, Some((ox, oy))) => {
                    let scale = 1.0 + ox.abs().max(oy.abs());
                    assert!((x - ox).abs() <= 1e-9 * scale && (y - oy).abs() <= 1e-9 * scale);
                }
                (a, b) => panic!("sky disagreement at {state:?} ({row}, {col}): {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn render_is_deterministic_and_sky_is_zero() {
        let cfg = SceneConfig::default();
        let state = CameraState::new(5.0, 10.0);
        let a = render(state, &cfg);
        assert_eq!(a, render(state, &cfg));
        for r in 0..16 {
            for c in 0..32 {
                assert_eq!(a.get(r, c), 0);
            }
        }
    }
}
