//! State-space grids and per-cell pixel bounding boxes for the road scene.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scene::{intensity_profile, quantize, CameraState, CameraTransform, Image, Projection, SceneConfig};

/// Relative outward padding applied to computed x-spans of non-degenerate
/// cells. Absorbs the few-ulp disagreement between the closed-form extremum
/// location and the floating-point evaluation at interior states.
const SPAN_PAD_REL: f64 = 1e-10;

/// Rectangle of camera states: offset range × angle range (degrees).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    pub delta: Interval,
    pub theta: Interval,
}

impl StateSpace {
    pub fn new(delta: Interval, theta: Interval) -> Self {
        StateSpace { delta, theta }
    }

    /// Offset in [-40, 40], angle in [-60°, 60°].
    pub fn case_study() -> Self {
        StateSpace::new(Interval::new(-40.0, 40.0), Interval::new(-60.0, 60.0))
    }

    pub fn contains(&self, state: CameraState) -> bool {
        self.delta.contains(state.offset) && self.theta.contains(state.angle_deg)
    }

    pub fn area(&self) -> f64 {
        self.delta.width() * self.theta.width()
    }
}

/// One grid cell of the state space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRegion {
    /// `(offset index, angle index)` within the grid.
    pub index: (usize, usize),
    pub delta: Interval,
    pub theta: Interval,
}

impl StateRegion {
    pub fn new(index: (usize, usize), delta: Interval, theta: Interval) -> Self {
        StateRegion { index, delta, theta }
    }

    pub fn point(state: CameraState) -> Self {
        StateRegion::new((0, 0), Interval::point(state.offset), Interval::point(state.angle_deg))
    }

    pub fn is_point(&self) -> bool {
        self.delta.width() == 0.0 && self.theta.width() == 0.0
    }

    pub fn area(&self) -> f64 {
        self.delta.width() * self.theta.width()
    }

    pub fn corners(&self) -> [CameraState; 4] {
        [
            CameraState::new(self.delta.lo, self.theta.lo),
            CameraState::new(self.delta.lo, self.theta.hi),
            CameraState::new(self.delta.hi, self.theta.lo),
            CameraState::new(self.delta.hi, self.theta.hi),
        ]
    }

    /// State at fractional position `(u, v) ∈ [0, 1]²` of the cell.
    pub fn lerp(&self, u: f64, v: f64) -> CameraState {
        CameraState::new(
            self.delta.lo + u * self.delta.width(),
            self.theta.lo + v * self.theta.width(),
        )
    }

    pub fn contains(&self, state: CameraState) -> bool {
        self.delta.contains(state.offset) && self.theta.contains(state.angle_deg)
    }
}

/// Split points `lo, lo + step, …, hi` along one axis. The last piece may be
/// shorter than `step`; a zero-width axis yields a single degenerate piece.
fn axis_edges(range: Interval, step: f64) -> Vec<f64> {
    let width = range.width();
    // Guards against 80 / 0.1 evaluating to 800.0000000000001.
    let count = ((width / step) - 1e-9).ceil().max(1.0) as usize;
    let mut edges: Vec<f64> = (0..count).map(|k| range.lo + k as f64 * step).collect();
    edges.push(range.hi);
    edges
}

/// Number of cells along each axis for the given cell sizes.
pub fn grid_shape(space: &StateSpace, cell_delta: f64, cell_theta: f64) -> (usize, usize) {
    (
        axis_edges(space.delta, cell_delta).len() - 1,
        axis_edges(space.theta, cell_theta).len() - 1,
    )
}

/// Cells covering `space`, ordered by offset index then angle index.
pub fn make_grid(space: &StateSpace, cell_delta: f64, cell_theta: f64) -> Result<Vec<StateRegion>> {
    if !(cell_delta > 0.0 && cell_theta > 0.0 && cell_delta.is_finite() && cell_theta.is_finite()) {
        return Err(Error::InvalidStateSpace(format!(
            "cell sizes must be positive, got {cell_delta} x {cell_theta}"
        )));
    }
    if !space.delta.is_finite() || !space.theta.is_finite() {
        return Err(Error::InvalidStateSpace("ranges must be finite".into()));
    }
    if space.delta.lo > space.delta.hi || space.theta.lo > space.theta.hi {
        return Ok(Vec::new());
    }
    let de = axis_edges(space.delta, cell_delta);
    let te = axis_edges(space.theta, cell_theta);
    let mut cells = Vec::with_capacity((de.len() - 1) * (te.len() - 1));
    for (i, d) in de.windows(2).enumerate() {
        for (j, t) in te.windows(2).enumerate() {
            cells.push(StateRegion::new(
                (i, j),
                Interval::new(d[0], d[1]),
                Interval::new(t[0], t[1]),
            ));
        }
    }
    Ok(cells)
}

/// Ground-truth bounds of the measured quantities `(offset, angle)` over a
/// cell. The quantity of interest is the state itself, so these are the
/// cell's own intervals.
pub fn ground_truth_intervals(region: &StateRegion) -> (Interval, Interval) {
    (region.delta, region.theta)
}

/// Non-empty set of class labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSet(BTreeSet<usize>);

impl ClassSet {
    pub fn new(classes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = classes.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidArgument("class set must be non-empty".into()));
        }
        Ok(ClassSet(set))
    }

    pub fn singleton(class: usize) -> Self {
        ClassSet(BTreeSet::from([class]))
    }

    /// The only member, if there is exactly one.
    pub fn single(&self) -> Option<usize> {
        (self.0.len() == 1).then(|| *self.0.iter().next().unwrap())
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Range of a pixel's road intersection over a cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PixelSpan {
    Ground(Interval),
    Sky,
}

/// Angles (degrees) at which the ray through column `col` is perpendicular
/// to the road direction. On those angles the intersection x is stationary
/// in the angle.
pub fn perpendicular_angles(col: usize, cfg: &SceneConfig, theta: Interval) -> Vec<f64> {
    let offset = cfg.column_offset(col);
    let base = if offset == 0.0 {
        90.0
    } else {
        (-cfg.focal_length / offset).atan().to_degrees()
    };
    (-3..=3)
        .map(|k| base + 180.0 * k as f64)
        .filter(|t| theta.contains(*t))
        .collect()
}

/// Camera transforms for every critical state of one cell: the four corners
/// plus, per column, the two offset edges at each perpendicular angle.
struct CriticalStates {
    corners: Vec<CameraTransform>,
    per_column: Vec<Vec<CameraTransform>>,
    pad: bool,
}

impl CriticalStates {
    fn new(region: &StateRegion, cfg: &SceneConfig) -> Self {
        let corners = region.corners().iter().map(|&s| CameraTransform::new(s, cfg)).collect();
        let per_column = (0..cfg.pixel_count)
            .map(|col| {
                perpendicular_angles(col, cfg, region.theta)
                    .into_iter()
                    .flat_map(|t| {
                        [region.delta.lo, region.delta.hi].map(|d| CameraTransform::new(CameraState::new(d, t), cfg))
                    })
                    .collect()
            })
            .collect();
        CriticalStates {
            corners,
            per_column,
            pad: !region.is_point(),
        }
    }

    fn span(&self, region: &StateRegion, row: usize, col: usize) -> Result<PixelSpan> {
        let mut xs = Vec::with_capacity(8);
        let mut sky = 0usize;
        let candidates = self.corners.iter().chain(&self.per_column[col]);
        let total = self.corners.len() + self.per_column[col].len();
        for t in candidates {
            match t.project(row, col) {
                Projection::Ground { x, .. } => xs.push(x),
                Projection::Sky => sky += 1,
            }
        }
        if sky == total {
            return Ok(PixelSpan::Sky);
        }
        if sky > 0 {
            return Err(Error::MixedSkyGround {
                row,
                col,
                cell: region.index,
            });
        }
        let mut span = Interval::enclosing(xs).expect("at least four candidates");
        if self.pad {
            span.lo -= SPAN_PAD_REL * (1.0 + span.lo.abs());
            span.hi += SPAN_PAD_REL * (1.0 + span.hi.abs());
        }
        Ok(PixelSpan::Ground(span))
    }
}

/// Range of road x coordinates hit by pixel `(row, col)` as the camera moves
/// over `region`.
pub fn pixel_x_span(region: &StateRegion, row: usize, col: usize, cfg: &SceneConfig) -> Result<PixelSpan> {
    CriticalStates::new(region, cfg).span(region, row, col)
}

/// Exact range of the intensity profile over `[span.lo, span.hi]`. The
/// profile is piecewise linear, so the extremes sit at the endpoints or at
/// interior breakpoints.
pub fn intensity_range(span: Interval, cfg: &SceneConfig) -> Interval {
    let inside = cfg
        .profile_breakpoints()
        .into_iter()
        .filter(|&b| span.lo < b && b < span.hi);
    let values = [span.lo, span.hi]
        .into_iter()
        .chain(inside)
        .map(|x| intensity_profile(x, cfg));
    Interval::enclosing(values).expect("non-empty")
}

/// Per-pixel byte intervals: an l∞ box in image space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelBox {
    size: usize,
    low: Vec<u8>,
    high: Vec<u8>,
}

impl PixelBox {
    pub fn new(size: usize, low: Vec<u8>, high: Vec<u8>) -> Result<Self> {
        if low.len() != size * size || high.len() != size * size {
            return Err(Error::ShapeMismatch {
                expected: size * size,
                actual: low.len().max(high.len()),
            });
        }
        if low.iter().zip(&high).any(|(l, h)| l > h) {
            return Err(Error::InvalidArgument("pixel box has low > high".into()));
        }
        Ok(PixelBox { size, low, high })
    }

    /// Degenerate box around a single image.
    pub fn from_image(image: &Image) -> Self {
        PixelBox {
            size: image.size(),
            low: image.pixels().to_vec(),
            high: image.pixels().to_vec(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn low(&self) -> &[u8] {
        &self.low
    }

    pub fn high(&self) -> &[u8] {
        &self.high
    }

    pub fn contains(&self, image: &Image) -> bool {
        image.size() == self.size
            && image
                .pixels()
                .iter()
                .zip(self.low.iter().zip(&self.high))
                .all(|(p, (l, h))| l <= p && p <= h)
    }

    pub fn is_subset_of(&self, other: &PixelBox) -> bool {
        self.size == other.size
            && (0..self.low.len()).all(|i| other.low[i] <= self.low[i] && self.high[i] <= other.high[i])
    }

    /// Sum of per-pixel widths.
    pub fn total_width(&self) -> u64 {
        self.low.iter().zip(&self.high).map(|(l, h)| (h - l) as u64).sum()
    }
}

/// Bounding box of every image the camera can take from a state in `region`.
pub fn bounding_box(region: &StateRegion, cfg: &SceneConfig) -> Result<PixelBox> {
    let n = cfg.pixel_count;
    let critical = CriticalStates::new(region, cfg);
    let sky = quantize(cfg.intensity_sky);
    let mut low = Vec::with_capacity(n * n);
    let mut high = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            match critical.span(region, row, col)? {
                PixelSpan::Sky => {
                    low.push(sky);
                    high.push(sky);
                }
                PixelSpan::Ground(span) => {
                    // Rounding is monotone, so quantizing the range endpoints
                    // brackets every quantized value inside the range.
                    let range = intensity_range(span, cfg);
                    low.push(quantize(range.lo));
                    high.push(quantize(range.hi));
                }
            }
        }
    }
    Ok(PixelBox { size: n, low, high })
}

const BOX_MAGIC: &[u8; 4] = b"TLBX";
const BOX_VERSION: u32 = 1;

/// Writes boxes to the binary sidecar layout:
///
/// ```text
/// magic "TLBX" | version u32 | image side n u32 | count u64
/// count × { offset index u32 | angle index u32 | low n·n bytes | high n·n bytes }
/// ```
///
/// All integers little-endian.
pub fn write_boxes<'a>(
    path: impl AsRef<Path>,
    size: usize,
    boxes: impl ExactSizeIterator<Item = ((usize, usize), &'a PixelBox)>,
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(BOX_MAGIC)?;
    w.write_all(&BOX_VERSION.to_le_bytes())?;
    w.write_all(&(size as u32).to_le_bytes())?;
    w.write_all(&(boxes.len() as u64).to_le_bytes())?;
    for (index, b) in boxes {
        if b.size != size {
            return Err(Error::BoxFile(format!(
                "box {index:?} has side {}, expected {size}",
                b.size
            )));
        }
        w.write_all(&(index.0 as u32).to_le_bytes())?;
        w.write_all(&(index.1 as u32).to_le_bytes())?;
        w.write_all(&b.low)?;
        w.write_all(&b.high)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_boxes(path: impl AsRef<Path>) -> Result<Vec<((usize, usize), PixelBox)>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = std::io::BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::BoxFile("truncated header".into()))?;
    if &magic != BOX_MAGIC {
        return Err(Error::BoxFile("bad magic".into()));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |r: &mut std::io::BufReader<std::fs::File>| -> Result<u32> {
        r.read_exact(&mut u32buf)
            .map_err(|_| Error::BoxFile("truncated file".into()))?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = read_u32(&mut r)?;
    if version != BOX_VERSION {
        return Err(Error::BoxFile(format!("unsupported version {version}")));
    }
    let size = read_u32(&mut r)? as usize;
    let mut count = [0u8; 8];
    r.read_exact(&mut count)
        .map_err(|_| Error::BoxFile("truncated header".into()))?;
    let count = u64::from_le_bytes(count) as usize;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let i = read_u32(&mut r)? as usize;
        let j = read_u32(&mut r)? as usize;
        let mut low = vec![0u8; size * size];
        let mut high = vec![0u8; size * size];
        r.read_exact(&mut low)
            .and_then(|_| r.read_exact(&mut high))
            .map_err(|_| Error::BoxFile(format!("truncated record for cell ({i}, {j})")))?;
        out.push(((i, j), PixelBox::new(size, low, high)?));
    }
    Ok(out)
}
