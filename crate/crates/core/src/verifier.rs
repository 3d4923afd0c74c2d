//! Tile-by-tile error bounds for a network over a gridded state space.
//!
//! Every tile pairs a state-space cell with a box enclosing every input the
//! observation process can produce from that cell. A sound engine bounds the
//! network outputs over the box; comparing those with the cell's ground-truth
//! range bounds the prediction error of every input in the tile.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundMethod, InputBox, OutputIntervals};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::network::Network;
use crate::scene::{render, CameraState, Image, SceneConfig};
use crate::tiling::{bounding_box, ground_truth_intervals, make_grid, ClassSet, PixelBox, StateRegion, StateSpace};

/// Number of measured quantities: camera offset and angle.
pub const QUANTITIES: usize = 2;
pub const QUANTITY_NAMES: [&str; QUANTITIES] = ["delta", "theta"];

/// An observation process: how states become network inputs.
pub trait Observation: Sync {
    /// Raw network input observed from `state`.
    fn observe(&self, state: CameraState) -> Vec<f64>;

    /// Box containing `observe(s)` for every state `s` in `region`.
    fn input_box(&self, region: &StateRegion) -> Result<InputBox>;
}

/// The road camera.
#[derive(Clone, Debug)]
pub struct RoadCamera {
    pub scene: SceneConfig,
}

impl RoadCamera {
    pub fn new(scene: SceneConfig) -> Self {
        RoadCamera { scene }
    }

    pub fn image(&self, state: CameraState) -> Image {
        render(state, &self.scene)
    }

    pub fn pixel_box(&self, region: &StateRegion) -> Result<PixelBox> {
        bounding_box(region, &self.scene)
    }
}

impl Observation for RoadCamera {
    fn observe(&self, state: CameraState) -> Vec<f64> {
        render(state, &self.scene).to_f64()
    }

    fn input_box(&self, region: &StateRegion) -> Result<InputBox> {
        Ok(InputBox::from(&bounding_box(region, &self.scene)?))
    }
}

/// Error bound of one tile for one quantity: the farthest the output range
/// can sit from the ground-truth range, `max(out.hi − gt.lo, gt.hi − out.lo)`.
pub fn tile_error_regression(ground_truth: Interval, output: Interval) -> f64 {
    (output.hi - ground_truth.lo).max(ground_truth.hi - output.lo)
}

/// Zero when the ground truth is a single class `y` whose score lower bound
/// beats every other class's upper bound; one otherwise.
pub fn tile_error_classification(ground_truth: &ClassSet, scores: &OutputIntervals) -> Result<u8> {
    if scores.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two class scores, got {}",
            scores.len()
        )));
    }
    let Some(y) = ground_truth.single() else {
        return Ok(1);
    };
    if y >= scores.len() {
        return Err(Error::InvalidArgument(format!(
            "class {y} out of range for {} scores",
            scores.len()
        )));
    }
    let target = scores.get(y).lo;
    let separated = scores.iter().enumerate().all(|(k, iv)| k == y || target > iv.hi);
    Ok(if separated { 0 } else { 1 })
}

/// Result of one regression tile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileResult {
    pub index: (usize, usize),
    pub ground_truth: [Interval; QUANTITIES],
    pub outputs: [Interval; QUANTITIES],
    pub errors: [f64; QUANTITIES],
    #[serde(skip)]
    pub solve_time: Duration,
}

/// Result of one classification tile.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassTileResult {
    pub index: (usize, usize),
    pub classes: ClassSet,
    pub scores: OutputIntervals,
    pub error: u8,
    pub solve_time: Duration,
}

/// Maximum per-quantity tile error.
pub fn global_bound(results: &[TileResult]) -> Result<[f64; QUANTITIES]> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("global bound of an empty result set".into()));
    }
    let mut out = [f64::NEG_INFINITY; QUANTITIES];
    for r in results {
        for (o, e) in out.iter_mut().zip(r.errors) {
            *o = o.max(e);
        }
    }
    Ok(out)
}

pub fn global_bound_classification(results: &[ClassTileResult]) -> Result<u8> {
    results
        .iter()
        .map(|r| r.error)
        .max()
        .ok_or_else(|| Error::InvalidArgument("global bound of an empty result set".into()))
}

/// Local bound of an input: the worst tile bound among tiles whose box
/// contains it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalBound {
    Covered([f64; QUANTITIES]),
    NotCovered,
}

impl LocalBound {
    fn absorb(&mut self, errors: [f64; QUANTITIES]) {
        match self {
            LocalBound::NotCovered => *self = LocalBound::Covered(errors),
            LocalBound::Covered(cur) => {
                for (c, e) in cur.iter_mut().zip(errors) {
                    *c = c.max(e);
                }
            }
        }
    }
}

/// In-memory index of every tile's pixel box and error bounds.
#[derive(Clone, Debug, Default)]
pub struct BoxIndex {
    entries: Vec<(PixelBox, [f64; QUANTITIES])>,
}

impl BoxIndex {
    pub fn new() -> Self {
        BoxIndex::default()
    }

    pub fn push(&mut self, pixel_box: PixelBox, errors: [f64; QUANTITIES]) {
        self.entries.push((pixel_box, errors));
    }

    /// Recomputes each tile's box from the scene.
    pub fn from_results(
        camera: &RoadCamera,
        results: &[TileResult],
        space: &StateSpace,
        cell: (f64, f64),
    ) -> Result<Self> {
        let regions = make_grid(space, cell.0, cell.1)?;
        let lookup: std::collections::HashMap<_, _> = regions.iter().map(|r| (r.index, r)).collect();
        let boxes: Vec<_> = results
            .par_iter()
            .map(|t| {
                let region = lookup.get(&t.index).ok_or(Error::MissingCell(t.index))?;
                Ok((camera.pixel_box(region)?, t.errors))
            })
            .collect::<Result<_>>()?;
        Ok(BoxIndex { entries: boxes })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn local_bound(&self, image: &Image) -> LocalBound {
        local_bound(image, self.entries.iter().map(|(b, e)| (b, *e)))
    }
}

/// Maximum tile bound over every `(box, errors)` pair whose box contains `image`.
pub fn local_bound<'a>(
    image: &Image,
    tiles: impl IntoIterator<Item = (&'a PixelBox, [f64; QUANTITIES])>,
) -> LocalBound {
    let mut out = LocalBound::NotCovered;
    for (b, errors) in tiles {
        if b.contains(image) {
            out.absorb(errors);
        }
    }
    out
}

/// Grid and engine settings for one Tiler run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilerPlan {
    pub space: StateSpace,
    pub cell_delta: f64,
    pub cell_theta: f64,
    pub method: BoundMethod,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
}

impl TilerPlan {
    pub fn regions(&self) -> Result<Vec<StateRegion>> {
        make_grid(&self.space, self.cell_delta, self.cell_theta)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub plan: TilerPlan,
    pub tiles: Vec<TileResult>,
    pub global: [f64; QUANTITIES],
}

/// Bounds one regression tile.
pub fn verify_tile(
    obs: &dyn Observation,
    net: &Network,
    method: BoundMethod,
    region: &StateRegion,
) -> Result<TileResult> {
    let start = Instant::now();
    let wrap = |e: Error| Error::Tile {
        cell: region.index,
        source: Box::new(e),
    };
    let input = obs.input_box(region).map_err(wrap)?;
    let out = method.bounds(net, &input).map_err(wrap)?;
    let (gt_delta, gt_theta) = ground_truth_intervals(region);
    let ground_truth = [gt_delta, gt_theta];
    let outputs = [out.get(0), out.get(1)];
    let errors = [
        tile_error_regression(ground_truth[0], outputs[0]),
        tile_error_regression(ground_truth[1], outputs[1]),
    ];
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(wrap(Error::NonFinite("tile error bound".into())));
    }
    Ok(TileResult {
        index: region.index,
        ground_truth,
        outputs,
        errors,
        solve_time: start.elapsed(),
    })
}

/// Cells processed per parallel batch in the streaming runner.
const BATCH: usize = 512;

/// Runs every tile after the first `skip`, handing results to `sink` in
/// cell order. Output is independent of the worker count.
pub fn run_tiler_streaming(
    obs: &dyn Observation,
    plan: &TilerPlan,
    net: &Network,
    skip: usize,
    mut sink: impl FnMut(&TileResult) -> Result<()>,
) -> Result<()> {
    if net.output_len() != QUANTITIES {
        return Err(Error::InvalidArgument(format!(
            "regression network must have {QUANTITIES} outputs, has {}",
            net.output_len()
        )));
    }
    let regions = plan.regions()?;
    let pool = plan.pool()?;
    for batch in regions.get(skip..).unwrap_or_default().chunks(BATCH) {
        let results: Vec<Result<TileResult>> = pool.install(|| {
            batch
                .par_iter()
                .map(|r| verify_tile(obs, net, plan.method, r))
                .collect()
        });
        for r in results {
            sink(&r?)?;
        }
    }
    Ok(())
}

/// Runs every tile and collects the report.
pub fn run_tiler(obs: &dyn Observation, plan: &TilerPlan, net: &Network) -> Result<VerificationReport> {
    let mut tiles = Vec::new();
    run_tiler_streaming(obs, plan, net, 0, |t| {
        tiles.push(t.clone());
        Ok(())
    })?;
    let global = global_bound(&tiles)?;
    Ok(VerificationReport {
        plan: plan.clone(),
        tiles,
        global,
    })
}

/// Ground-truth class labelling of states.
pub trait Labeling: Sync {
    fn label(&self, state: CameraState) -> usize;
    /// Every label taken by some state in the region.
    fn classes(&self, region: &StateRegion) -> ClassSet;
}

/// Class 1 when the camera offset is non-negative, class 0 otherwise.
#[derive(Clone, Copy, Debug, Default)]
pub struct OffsetSign;

impl Labeling for OffsetSign {
    fn label(&self, state: CameraState) -> usize {
        usize::from(state.offset >= 0.0)
    }

    fn classes(&self, region: &StateRegion) -> ClassSet {
        let mut classes = Vec::with_capacity(2);
        if region.delta.lo < 0.0 {
            classes.push(0);
        }
        if region.delta.hi >= 0.0 {
            classes.push(1);
        }
        ClassSet::new(classes).expect("every interval has a label")
    }
}

pub fn verify_tile_classification(
    obs: &dyn Observation,
    labels: &dyn Labeling,
    net: &Network,
    method: BoundMethod,
    region: &StateRegion,
) -> Result<ClassTileResult> {
    let start = Instant::now();
    let wrap = |e: Error| Error::Tile {
        cell: region.index,
        source: Box::new(e),
    };
    let input = obs.input_box(region).map_err(wrap)?;
    let scores = method.bounds(net, &input).map_err(wrap)?;
    let classes = labels.classes(region);
    let error = tile_error_classification(&classes, &scores).map_err(wrap)?;
    Ok(ClassTileResult {
        index: region.index,
        classes,
        scores,
        error,
        solve_time: start.elapsed(),
    })
}

#[derive(Clone, Debug)]
pub struct ClassificationReport {
    pub plan: TilerPlan,
    pub tiles: Vec<ClassTileResult>,
    pub global: u8,
}

pub fn run_tiler_classification(
    obs: &dyn Observation,
    labels: &dyn Labeling,
    plan: &TilerPlan,
    net: &Network,
) -> Result<ClassificationReport> {
    let regions = plan.regions()?;
    let pool = plan.pool()?;
    let tiles = pool.install(|| {
        regions
            .par_iter()
            .map(|r| verify_tile_classification(obs, labels, net, plan.method, r))
            .collect::<Result<Vec<_>>>()
    })?;
    let global = global_bound_classification(&tiles)?;
    Ok(ClassificationReport {
        plan: plan.clone(),
        tiles,
        global,
    })
}
