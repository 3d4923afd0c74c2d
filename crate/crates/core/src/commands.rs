//! File-level pipeline behind the `tiler` binary: dataset generation,
//! verification runs, estimation, reporting, sweeps, and local-bound queries.
//!
//! A verification run directory holds:
//!
//! | file            | contents                                             |
//! |-----------------|------------------------------------------------------|
//! | `run.json`      | resolved run config and scene (enough to re-run)     |
//! | `tiles.csv`     | one [`TileRecord`] per tile, in cell order           |
//! | `timings.csv`   | per-tile solve time                                  |
//! | `summary.json`  | global bounds, grid, method, totals, wall time       |
//! | `boxes.bin`     | optional pixel boxes, see [`crate::tiling::write_boxes`] |
//! | `estimates.csv` | written by `estimate`                                |
//! | `report/`       | written by `report`                                  |

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundMethod;
use crate::error::{Error, Result};
use crate::estimator::{empirical_max_error, DEFAULT_SPACING};
use crate::interval::Interval;
use crate::network::Network;
use crate::pgm;
use crate::records::{read_complete_rows, read_rows, CsvSink, EstimateRecord, TileRecord, TimingRecord};
use crate::report::{Distribution, Heatmap};
use crate::scene::{render, CameraState, Image, SceneConfig};
use crate::tiling::{grid_shape, make_grid, read_boxes, write_boxes, StateRegion, StateSpace};
use crate::verifier::{run_tiler_streaming, LocalBound, RoadCamera, TilerPlan, QUANTITY_NAMES};

pub const RUN_FILE: &str = "run.json";
pub const TILES_FILE: &str = "tiles.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const BOXES_FILE: &str = "boxes.bin";
pub const ESTIMATES_FILE: &str = "estimates.csv";

/// Settings for a verification run. Every field can come from a TOML/JSON
/// file and be overridden on the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Weight file of the network under test.
    pub network: Option<PathBuf>,
    /// Scene file; the case-study scene when absent.
    pub scene: Option<PathBuf>,
    pub delta_range: [f64; 2],
    pub theta_range: [f64; 2],
    pub cell_delta: f64,
    pub cell_theta: f64,
    pub method: BoundMethod,
    /// Worker threads; 0 means one per core.
    pub workers: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub spacing: f64,
    pub dump_boxes: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            network: None,
            scene: None,
            delta_range: [-40.0, 40.0],
            theta_range: [-60.0, 60.0],
            cell_delta: 0.1,
            cell_theta: 0.1,
            method: BoundMethod::Ibp,
            workers: 0,
            out: PathBuf::from("tiler-out"),
            seed: 0,
            spacing: DEFAULT_SPACING,
            dump_boxes: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "toml") {
            Ok(toml::from_str(&text)?)
        } else {
            Ok(serde_json::from_str(&text)?)
        }
    }

    pub fn space(&self) -> StateSpace {
        StateSpace::new(
            Interval {
                lo: self.delta_range[0],
                hi: self.delta_range[1],
            },
            Interval {
                lo: self.theta_range[0],
                hi: self.theta_range[1],
            },
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        for (name, r) in [("delta_range", self.delta_range), ("theta_range", self.theta_range)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return bad(format!("{name} must be a finite [lo, hi] with lo <= hi, got {r:?}"));
            }
        }
        for (name, v) in [
            ("cell_delta", self.cell_delta),
            ("cell_theta", self.cell_theta),
            ("spacing", self.spacing),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn scene_config(&self) -> Result<SceneConfig> {
        match &self.scene {
            Some(p) => SceneConfig::from_file(p),
            None => Ok(SceneConfig::default()),
        }
    }

    pub fn plan(&self) -> TilerPlan {
        TilerPlan {
            space: self.space(),
            cell_delta: self.cell_delta,
            cell_theta: self.cell_theta,
            method: self.method,
            workers: self.workers,
        }
    }

    fn network_path(&self) -> Result<&Path> {
        self.network.as_deref().ok_or_else(|| {
            Error::InvalidArgument("no network weight file given (--network or `network` in config)".into())
        })
    }
}

/// Contents of `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSnapshot {
    pub run: RunConfig,
    pub scene: SceneConfig,
}

impl RunSnapshot {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(RUN_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub method: BoundMethod,
    pub cell_delta: f64,
    pub cell_theta: f64,
    pub delta_range: [f64; 2],
    pub theta_range: [f64; 2],
    pub grid: (usize, usize),
    pub tiles: usize,
    pub resumed_from: usize,
    pub global_bound: [f64; 2],
    /// Global bound as a fraction of each quantity's range.
    pub global_bound_relative: [f64; 2],
    pub workers: usize,
    pub wall_seconds: f64,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn effective_workers(requested: usize) -> usize {
    if requested == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        requested
    }
}

/// Runs the regression Tiler and writes the run directory. With `resume`,
/// rows already present in `tiles.csv` from an identical configuration are
/// kept and the run continues after them.
pub fn verify(cfg: &RunConfig, resume: bool) -> Result<VerifySummary> {
    cfg.validate()?;
    let start = Instant::now();
    let scene = cfg.scene_config()?;
    let net = Network::load(cfg.network_path()?)?;
    let camera = RoadCamera::new(scene.clone());
    let dir = cfg.out.as_path();
    create_dir(dir)?;

    let snapshot = RunSnapshot {
        run: cfg.clone(),
        scene,
    };
    let tiles_path = dir.join(TILES_FILE);
    let timings_path = dir.join(TIMINGS_FILE);
    let mut done = 0usize;
    let mut global = [f64::NEG_INFINITY; 2];
    if resume && tiles_path.exists() {
        let previous = RunSnapshot::load(dir)?;
        if !same_grid_and_engine(&previous, &snapshot) {
            return Err(Error::InvalidArgument(format!(
                "cannot resume: {} was produced by a different configuration",
                dir.display()
            )));
        }
        let rows: Vec<TileRecord> = read_complete_rows(&tiles_path)?;
        let expected = make_grid(&cfg.space(), cfg.cell_delta, cfg.cell_theta)?;
        for (row, region) in rows.iter().zip(&expected) {
            if row.index() != region.index {
                return Err(Error::InvalidArgument(
                    "cannot resume: tiles.csv is out of cell order".into(),
                ));
            }
            for (g, e) in global.iter_mut().zip(row.errors()) {
                *g = g.max(e);
            }
        }
        done = rows.len();
        // Drop any partial trailing line by rewriting the parsed rows.
        let mut sink = CsvSink::create(&tiles_path, &TileRecord::HEADER)?;
        for row in &rows {
            sink.write(row)?;
        }
        sink.flush()?;
        let kept: std::collections::HashSet<_> = rows.iter().map(TileRecord::index).collect();
        let timings: Vec<TimingRecord> = if timings_path.exists() {
            read_complete_rows(&timings_path)?
        } else {
            Vec::new()
        };
        let mut sink = CsvSink::create(&timings_path, &TimingRecord::HEADER)?;
        for t in timings
            .iter()
            .filter(|t| kept.contains(&(t.delta_index, t.theta_index)))
        {
            sink.write(t)?;
        }
        sink.flush()?;
    } else {
        CsvSink::create(&tiles_path, &TileRecord::HEADER)?.flush()?;
        CsvSink::create(&timings_path, &TimingRecord::HEADER)?.flush()?;
    }
    write_json(&dir.join(RUN_FILE), &snapshot)?;

    let mut plan = cfg.plan();
    plan.workers = effective_workers(cfg.workers);
    let mut tiles = CsvSink::append(&tiles_path)?;
    let mut timings = CsvSink::append(&timings_path)?;
    let mut written = 0usize;
    run_tiler_streaming(&camera, &plan, &net, done, |t| {
        tiles.write(&TileRecord::from(t))?;
        timings.write(&TimingRecord {
            delta_index: t.index.0,
            theta_index: t.index.1,
            solve_seconds: t.solve_time.as_secs_f64(),
        })?;
        for (g, e) in global.iter_mut().zip(t.errors) {
            *g = g.max(e);
        }
        written += 1;
        if written.is_multiple_of(4096) {
            tiles.flush()?;
            timings.flush()?;
        }
        Ok(())
    })?;
    tiles.flush()?;
    timings.flush()?;

    let total = done + written;
    if total == 0 {
        return Err(Error::InvalidStateSpace("state space produced no tiles".into()));
    }
    if cfg.dump_boxes {
        dump_boxes(&camera, cfg, dir)?;
    }
    let space = cfg.space();
    let summary = VerifySummary {
        method: cfg.method,
        cell_delta: cfg.cell_delta,
        cell_theta: cfg.cell_theta,
        delta_range: cfg.delta_range,
        theta_range: cfg.theta_range,
        grid: grid_shape(&space, cfg.cell_delta, cfg.cell_theta),
        tiles: total,
        resumed_from: done,
        global_bound: global,
        global_bound_relative: [global[0] / space.delta.width(), global[1] / space.theta.width()],
        workers: plan.workers,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

fn same_grid_and_engine(a: &RunSnapshot, b: &RunSnapshot) -> bool {
    a.scene == b.scene
        && a.run.network == b.run.network
        && a.run.delta_range == b.run.delta_range
        && a.run.theta_range == b.run.theta_range
        && a.run.cell_delta == b.run.cell_delta
        && a.run.cell_theta == b.run.cell_theta
        && a.run.method == b.run.method
}

fn dump_boxes(camera: &RoadCamera, cfg: &RunConfig, dir: &Path) -> Result<()> {
    let regions = make_grid(&cfg.space(), cfg.cell_delta, cfg.cell_theta)?;
    let boxes = regions
        .par_iter()
        .map(|r| Ok((r.index, camera.pixel_box(r)?)))
        .collect::<Result<Vec<_>>>()?;
    write_boxes(
        dir.join(BOXES_FILE),
        camera.scene.pixel_count,
        boxes.iter().map(|(i, b)| (*i, b)),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub spacing: f64,
    pub tiles: usize,
    /// Largest empirical error over all tiles, per quantity.
    pub empirical_max: [f64; 2],
    /// Smallest bound-minus-estimate gap, per quantity.
    pub min_gap: [f64; 2],
    /// Tiles whose estimate exceeds their bound (a soundness violation).
    pub negative_gaps: usize,
}

/// Samples every tile of a finished run on a sub-grid and writes
/// `estimates.csv`. Fails if any estimate exceeds its tile bound.
pub fn estimate(dir: impl AsRef<Path>, spacing: Option<f64>, workers: usize) -> Result<EstimateSummary> {
    let dir = dir.as_ref();
    let snapshot = RunSnapshot::load(dir)?;
    let spacing = spacing.unwrap_or(snapshot.run.spacing);
    let net = Network::load(snapshot.run.network_path()?)?;
    let camera = RoadCamera::new(snapshot.scene.clone());
    let rows: Vec<TileRecord> = read_rows(dir.join(TILES_FILE))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(effective_workers(workers))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let records: Vec<EstimateRecord> = pool.install(|| {
        rows.par_iter()
            .map(|row| {
                let region = StateRegion::new(
                    row.index(),
                    Interval::new(row.delta_lo, row.delta_hi),
                    Interval::new(row.theta_lo, row.theta_hi),
                );
                let est = empirical_max_error(&region, &camera, &net, spacing)?;
                Ok(EstimateRecord::new(row, &est))
            })
            .collect::<Result<_>>()
    })?;
    let mut sink = CsvSink::create(dir.join(ESTIMATES_FILE), &EstimateRecord::HEADER)?;
    let mut summary = EstimateSummary {
        spacing,
        tiles: records.len(),
        empirical_max: [0.0; 2],
        min_gap: [f64::INFINITY; 2],
        negative_gaps: 0,
    };
    for r in &records {
        sink.write(r)?;
        summary.empirical_max[0] = summary.empirical_max[0].max(r.emp_delta);
        summary.empirical_max[1] = summary.empirical_max[1].max(r.emp_theta);
        summary.min_gap[0] = summary.min_gap[0].min(r.gap_delta);
        summary.min_gap[1] = summary.min_gap[1].min(r.gap_theta);
        if r.gap_delta < 0.0 || r.gap_theta < 0.0 {
            summary.negative_gaps += 1;
        }
    }
    sink.flush()?;
    if summary.negative_gaps > 0 {
        return Err(Error::InvalidArgument(format!(
            "{} tiles have an empirical error above their bound; the bound engine is unsound",
            summary.negative_gaps
        )));
    }
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantitySummary {
    pub quantity: String,
    pub range: f64,
    pub global_bound: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    /// Tolerance used for the trusted fraction: 3% of the quantity's range.
    pub trust_tolerance: f64,
    pub trusted_fraction: f64,
    pub empirical_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub tiles: usize,
    pub quantities: Vec<QuantitySummary>,
}

/// Fraction of a quantity's range used as the trust tolerance.
pub const TRUST_FRACTION: f64 = 0.03;

fn distribution_of(rows: &[TileRecord], q: usize) -> Result<Distribution> {
    // Zero-area grids (a single state) fall back to count weighting.
    let zero_area = rows.iter().all(|r| r.area() == 0.0);
    Distribution::new(
        rows.iter()
            .map(|r| (r.errors()[q], if zero_area { 1.0 } else { r.area() }))
            .collect(),
    )
}

/// Writes heatmaps, cumulative distributions, and `report.json` under
/// `<dir>/report/`.
pub fn report(dir: impl AsRef<Path>) -> Result<ReportSummary> {
    let dir = dir.as_ref();
    let snapshot = RunSnapshot::load(dir)?;
    let rows: Vec<TileRecord> = read_rows(dir.join(TILES_FILE))?;
    let estimates_path = dir.join(ESTIMATES_FILE);
    let estimates: Option<Vec<EstimateRecord>> = if estimates_path.exists() {
        Some(read_rows(&estimates_path)?)
    } else {
        None
    };
    let out = dir.join("report");
    create_dir(&out)?;
    let space = snapshot.run.space();
    let (nd, nt) = grid_shape(&space, snapshot.run.cell_delta, snapshot.run.cell_theta);
    let axes = format!(
        "x: delta index 0..{nd} over [{}, {}]\ny: theta index 0..{nt} over [{}, {}] (bottom to top)",
        space.delta.lo, space.delta.hi, space.theta.lo, space.theta.hi
    );
    let ranges = [space.delta.width(), space.theta.width()];

    let mut cdf = CsvSink::create(out.join("distribution.csv"), &["quantity", "threshold", "fraction"])?;
    let mut quantities = Vec::new();
    for (q, name) in QUANTITY_NAMES.iter().enumerate() {
        let heat = Heatmap::from_cells(nd, nt, rows.iter().map(|r| (r.index(), r.errors()[q])))?;
        heat.write(
            out.join(format!("bound_{name}.pgm")),
            &format!("error bound e_{name}"),
            &axes,
        )?;
        let dist = distribution_of(&rows, q)?;
        for (t, f) in dist.cdf_table() {
            cdf.write_fields([name.to_string(), t.to_string(), f.to_string()])?;
        }
        let mut empirical_max = None;
        if let Some(est) = &estimates {
            let pick = |r: &EstimateRecord| {
                if q == 0 {
                    (r.emp_delta, r.gap_delta)
                } else {
                    (r.emp_theta, r.gap_theta)
                }
            };
            let heat = Heatmap::from_cells(nd, nt, est.iter().map(|r| ((r.delta_index, r.theta_index), pick(r).0)))?;
            heat.write(
                out.join(format!("empirical_{name}.pgm")),
                &format!("empirical max error {name}"),
                &axes,
            )?;
            let heat = Heatmap::from_cells(nd, nt, est.iter().map(|r| ((r.delta_index, r.theta_index), pick(r).1)))?;
            heat.write(
                out.join(format!("gap_{name}.pgm")),
                &format!("bound minus empirical {name}"),
                &axes,
            )?;
            empirical_max = est.iter().map(|r| pick(r).0).reduce(f64::max);
        }
        let tolerance = TRUST_FRACTION * ranges[q];
        quantities.push(QuantitySummary {
            quantity: name.to_string(),
            range: ranges[q],
            global_bound: dist.max(),
            p50: dist.percentile(50.0)?,
            p90: dist.percentile(90.0)?,
            p99: dist.percentile(99.0)?,
            trust_tolerance: tolerance,
            trusted_fraction: dist.trusted_fraction(tolerance),
            empirical_max,
        });
    }
    cdf.flush()?;
    let summary = ReportSummary {
        tiles: rows.len(),
        quantities,
    };
    write_json(&out.join("report.json"), &summary)?;
    Ok(summary)
}

/// One row of a tile-size sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell_size: f64,
    pub tiles: usize,
    pub p99_delta: f64,
    pub p99_theta: f64,
    pub global_delta: f64,
    pub global_theta: f64,
    pub wall_seconds: f64,
}

/// Runs the Tiler at each square cell size and tabulates the bounds.
/// Results stay in memory; `cfg.out` receives `sweep.csv` only.
pub fn sweep(cfg: &RunConfig, cell_sizes: &[f64]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let camera = RoadCamera::new(cfg.scene_config()?);
    let net = Network::load(cfg.network_path()?)?;
    let mut rows = Vec::new();
    for &size in cell_sizes {
        let start = Instant::now();
        let mut plan = cfg.plan();
        plan.cell_delta = size;
        plan.cell_theta = size;
        plan.workers = effective_workers(cfg.workers);
        let report = crate::verifier::run_tiler(&camera, &plan, &net)?;
        let records: Vec<TileRecord> = report.tiles.iter().map(TileRecord::from).collect();
        rows.push(SweepRow {
            cell_size: size,
            tiles: records.len(),
            p99_delta: distribution_of(&records, 0)?.percentile(99.0)?,
            p99_theta: distribution_of(&records, 1)?.percentile(99.0)?,
            global_delta: report.global[0],
            global_theta: report.global[1],
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    create_dir(&cfg.out)?;
    let mut sink = CsvSink::create(
        cfg.out.join("sweep.csv"),
        &[
            "cell_size",
            "tiles",
            "p99_delta",
            "p99_theta",
            "global_delta",
            "global_theta",
            "wall_seconds",
        ],
    )?;
    for r in &rows {
        sink.write(r)?;
    }
    sink.flush()?;
    Ok(rows)
}

/// Local error bound of `image` against a finished run. Uses `boxes.bin`
/// when present, otherwise recomputes each tile's box.
pub fn query(dir: impl AsRef<Path>, image: &Image) -> Result<LocalBound> {
    let dir = dir.as_ref();
    let snapshot = RunSnapshot::load(dir)?;
    if image.size() != snapshot.scene.pixel_count {
        return Err(Error::ShapeMismatch {
            expected: snapshot.scene.pixels(),
            actual: image.pixels().len(),
        });
    }
    let rows: Vec<TileRecord> = read_rows(dir.join(TILES_FILE))?;
    let errors: std::collections::HashMap<_, _> = rows.iter().map(|r| (r.index(), r.errors())).collect();
    let boxes_path = dir.join(BOXES_FILE);
    let mut bound = LocalBound::NotCovered;
    let mut absorb = |contained: bool, e: [f64; 2]| {
        if contained {
            bound = match bound {
                LocalBound::NotCovered => LocalBound::Covered(e),
                LocalBound::Covered(c) => LocalBound::Covered([c[0].max(e[0]), c[1].max(e[1])]),
            };
        }
    };
    if boxes_path.exists() {
        for (index, b) in read_boxes(&boxes_path)? {
            let e = *errors.get(&index).ok_or(Error::MissingCell(index))?;
            absorb(b.contains(image), e);
        }
    } else {
        let camera = RoadCamera::new(snapshot.scene.clone());
        let regions = make_grid(&snapshot.run.space(), snapshot.run.cell_delta, snapshot.run.cell_theta)?;
        let by_index: std::collections::HashMap<_, _> = regions.iter().map(|r| (r.index, r)).collect();
        let hits = rows
            .par_iter()
            .map(|row| {
                let region = by_index.get(&row.index()).ok_or(Error::MissingCell(row.index()))?;
                Ok((camera.pixel_box(region)?.contains(image), row.errors()))
            })
            .collect::<Result<Vec<_>>>()?;
        for (contained, e) in hits {
            absorb(contained, e);
        }
    }
    Ok(bound)
}

/// Label CSV header for generated datasets.
pub const LABEL_HEADER: [&str; 3] = ["file", "delta", "theta"];

/// Settings snapshot written as `<out>/dataset.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSnapshot {
    pub count: usize,
    pub seed: u64,
    pub delta_range: [f64; 2],
    pub theta_range: [f64; 2],
    pub scene: SceneConfig,
}

/// Renders `count` images at uniformly random states and writes
/// `<out>/images/NNNNNN.pgm`, `<out>/labels.csv`, and `<out>/dataset.json`.
pub fn gen_dataset(
    out: impl AsRef<Path>,
    count: usize,
    seed: u64,
    delta_range: [f64; 2],
    theta_range: [f64; 2],
    scene: &SceneConfig,
) -> Result<()> {
    let out = out.as_ref();
    if !(delta_range[0] <= delta_range[1] && theta_range[0] <= theta_range[1]) {
        return Err(Error::InvalidArgument("dataset ranges must have lo <= hi".into()));
    }
    scene.validate()?;
    let images = out.join("images");
    create_dir(&images)?;
    write_json(
        &out.join("dataset.json"),
        &DatasetSnapshot {
            count,
            seed,
            delta_range,
            theta_range,
            scene: scene.clone(),
        },
    )?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut labels = CsvSink::create(out.join("labels.csv"), &LABEL_HEADER)?;
    for i in 0..count {
        let state = CameraState::new(
            rng.gen_range(delta_range[0]..=delta_range[1]),
            rng.gen_range(theta_range[0]..=theta_range[1]),
        );
        let name = format!("{i:06}.pgm");
        pgm::write_image(images.join(&name), &render(state, scene))?;
        labels.write_fields([
            format!("images/{name}"),
            state.offset.to_string(),
            state.angle_deg.to_string(),
        ])?;
    }
    labels.flush()
}
