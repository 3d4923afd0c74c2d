//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain binary
//! (no test harness) and exits non-zero if any criterion fails.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tiler::bounds::{grid_oracle, ibp_bounds, linear_relaxation_bounds, FLOAT_SLACK};
use tiler::commands::{self, RunConfig};
use tiler::estimator::empirical_max_error;
use tiler::interval::Interval;
use tiler::report::Distribution;
use tiler::tiling::{bounding_box, ClassSet};
use tiler::verifier::{
    global_bound, global_bound_classification, local_bound, run_tiler, tile_error_classification,
    tile_error_regression, verify_tile_classification, ClassTileResult, Labeling, OffsetSign, TileResult,
};
use tiler::{
    render, BoundMethod, CameraState, Image, InputBox, LocalBound, Network, Observation, OutputIntervals, PixelBox,
    SceneConfig, StateRegion, StateSpace, TilerPlan,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn subregion() -> StateSpace {
    StateSpace::new(Interval::new(-10.0, 10.0), Interval::new(-15.0, 15.0))
}

fn plan(cell: f64, method: BoundMethod) -> TilerPlan {
    TilerPlan {
        space: subregion(),
        cell_delta: cell,
        cell_theta: cell,
        method,
        workers: 0,
    }
}

fn interior(region: &StateRegion, u: f64, v: f64) -> CameraState {
    let s = region.lerp(u, v);
    CameraState::new(s.offset.min(region.delta.hi), s.angle_deg.min(region.theta.hi))
}

fn soundness_sweep(net: &Network, tiles: &[TileResult], regions: &[StateRegion]) -> Outcome {
    let camera = common::camera();
    let fractions = [1.0 / 6.0, 0.5, 5.0 / 6.0];
    let (violations, worst_ratio) = tiles
        .par_iter()
        .zip(regions)
        .map(|(tile, region)| {
            let mut violations = 0usize;
            let mut worst: f64 = 0.0;
            for &u in &fractions {
                for &v in &fractions {
                    let s = interior(region, u, v);
                    let y = net.forward_image(&camera.image(s)).unwrap();
                    for (q, truth) in [s.offset, s.angle_deg].into_iter().enumerate() {
                        let err = (y[q] - truth).abs();
                        if err > tile.errors[q] {
                            violations += 1;
                        }
                        worst = worst.max(err / tile.errors[q]);
                    }
                }
            }
            (violations, worst)
        })
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    outcome(
        violations == 0 && tiles.len() == 3750,
        format!(
            "{} tiles x 9 states, {violations} violations, largest actual/bound ratio {worst_ratio:.3}",
            tiles.len()
        ),
    )
}

fn containment() -> Outcome {
    let cfg = SceneConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let space = StateSpace::case_study();
    let mut violations = 0;
    for k in 0..200 {
        let (wd, wt) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let d0 = rng.gen_range(space.delta.lo..space.delta.hi - wd);
        let t0 = rng.gen_range(space.theta.lo..space.theta.hi - wt);
        let region = StateRegion::new((k, 0), Interval::new(d0, d0 + wd), Interval::new(t0, t0 + wt));
        let b = bounding_box(&region, &cfg).unwrap();
        for _ in 0..5 {
            let s = interior(&region, rng.gen(), rng.gen());
            if !b.contains(&render(s, &cfg)) {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("200 tiles x 5 interior states, {violations} violations"),
    )
}

fn random_tiny_net(rng: &mut ChaCha8Rng) -> (Network, usize) {
    let inputs = rng.gen_range(1..=4);
    let hidden: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(1..=8)).collect();
    let outputs = rng.gen_range(1..=3);
    (Network::random_mlp(inputs, &hidden, outputs, rng), inputs)
}

fn random_box(rng: &mut ChaCha8Rng, dim: usize) -> InputBox {
    let lo: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let hi = lo.iter().map(|l| l + rng.gen_range(0.0..1.0)).collect();
    InputBox::new(lo, hi).unwrap()
}

fn engine_oracle() -> (Outcome, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (mut ibp_ok, mut lin_ok, mut degenerate_ok) = (0, 0, 0);
    let (mut ibp_width, mut lin_width, mut lin_tighter) = (0.0, 0.0, 0);
    for _ in 0..50 {
        let (net, dim) = random_tiny_net(&mut rng);
        let b = random_box(&mut rng, dim);
        let oracle = grid_oracle(&net, &b, 21).unwrap();
        let ibp = ibp_bounds(&net, &b).unwrap();
        let lin = linear_relaxation_bounds(&net, &b).unwrap();
        ibp_ok += usize::from(oracle.is_subset_within(&ibp, FLOAT_SLACK));
        lin_ok += usize::from(oracle.is_subset_within(&lin, FLOAT_SLACK));
        ibp_width += ibp.mean_width();
        lin_width += lin.mean_width();
        lin_tighter += usize::from(lin.mean_width() <= ibp.mean_width());

        let point = InputBox::point(b.lo.clone());
        let thin = |o: OutputIntervals| o.iter().all(|iv| iv.width() <= 1e-9);
        if thin(ibp_bounds(&net, &point).unwrap()) && thin(linear_relaxation_bounds(&net, &point).unwrap()) {
            degenerate_ok += 1;
        }
    }
    let info = format!(
        "mean output width over 50 tiny nets: ibp {:.4}, linrelax {:.4}; linrelax no wider in {lin_tighter}/50",
        ibp_width / 50.0,
        lin_width / 50.0
    );
    (
        outcome(
            ibp_ok == 50 && lin_ok == 50 && degenerate_ok == 50,
            format!("oracle in ibp {ibp_ok}/50, in linrelax {lin_ok}/50, degenerate width <= 1e-9 {degenerate_ok}/50"),
        ),
        info,
    )
}

fn isotonicity(net: &Network) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let mut violations = 0;
    for _ in 0..100 {
        let (tiny, dim) = random_tiny_net(&mut rng);
        let outer = random_box(&mut rng, dim);
        let (lo, hi): (Vec<f64>, Vec<f64>) = outer
            .lo
            .iter()
            .zip(&outer.hi)
            .map(|(&l, &h)| {
                let a = rng.gen_range(l..=h);
                let b = rng.gen_range(l..=h);
                (a.min(b), a.max(b))
            })
            .unzip();
        let inner = InputBox::new(lo, hi).unwrap();
        assert!(inner.is_subset_of(&outer));
        if !ibp_bounds(&tiny, &inner)
            .unwrap()
            .is_subset_of(&ibp_bounds(&tiny, &outer).unwrap())
        {
            violations += 1;
        }
    }
    // Nested state regions give nested pixel boxes on the image network.
    let cfg = SceneConfig::default();
    let mut image_pairs = 0;
    for _ in 0..20 {
        let d0 = rng.gen_range(-30.0..30.0);
        let t0 = rng.gen_range(-50.0..50.0);
        let outer = StateRegion::new((0, 0), Interval::new(d0, d0 + 1.0), Interval::new(t0, t0 + 1.0));
        let inner = StateRegion::new(
            (0, 0),
            Interval::new(d0 + 0.2, d0 + 0.6),
            Interval::new(t0 + 0.5, t0 + 0.9),
        );
        let (bi, bo) = (bounding_box(&inner, &cfg).unwrap(), bounding_box(&outer, &cfg).unwrap());
        let (ii, io) = (InputBox::from(&bi), InputBox::from(&bo));
        if !bi.is_subset_of(&bo)
            || !ibp_bounds(net, &ii)
                .unwrap()
                .is_subset_of(&ibp_bounds(net, &io).unwrap())
        {
            violations += 1;
        }
        image_pairs += 1;
    }
    outcome(
        violations == 0,
        format!(
            "100 tiny-net box pairs + {image_pairs} nested tile pairs on the image network, {violations} violations"
        ),
    )
}

fn p99_area_weighted(tiles: &[TileResult], q: usize) -> f64 {
    let entries = tiles
        .iter()
        .map(|t| (t.errors[q], t.ground_truth[0].width() * t.ground_truth[1].width()))
        .collect();
    Distribution::new(entries).unwrap().percentile(99.0).unwrap()
}

fn tile_size_trend(sweep: &[(f64, Vec<TileResult>)]) -> Outcome {
    let p99: Vec<(f64, f64, f64)> = sweep
        .iter()
        .map(|(cell, tiles)| (*cell, p99_area_weighted(tiles, 0), p99_area_weighted(tiles, 1)))
        .collect();
    let non_increasing = p99.windows(2).all(|w| w[1].1 <= w[0].1);
    let table: Vec<String> = p99
        .iter()
        .map(|(c, d, t)| format!("cell {c}: p99 e_delta {d:.3}, e_theta {t:.3}"))
        .collect();
    outcome(non_increasing, table.join("; "))
}

fn gap_check(net: &Network, tiles: &[TileResult], regions: &[StateRegion]) -> Outcome {
    let camera = common::camera();
    let (negative, min_gap, samples) = tiles
        .par_iter()
        .zip(regions)
        .map(|(tile, region)| {
            let est = empirical_max_error(region, &camera, net, 0.05).unwrap();
            let gaps = [tile.errors[0] - est.errors[0], tile.errors[1] - est.errors[1]];
            let negative = gaps.iter().filter(|g| **g < 0.0).count();
            (negative, gaps[0].min(gaps[1]), est.samples)
        })
        .reduce(|| (0, f64::INFINITY, 0), |a, b| (a.0 + b.0, a.1.min(b.1), a.2 + b.2));
    outcome(
        negative == 0,
        format!(
            "{} tiles at cell 0.4, {samples} sub-grid states, {negative} negative gaps, smallest gap {min_gap:.4}",
            tiles.len()
        ),
    )
}

fn formulas() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    // Per-tile regression error.
    check(
        "tile [0,1]/[0,1]",
        tile_error_regression(Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)) == 1.0,
    );
    check(
        "tile [5,6]/[5.5]",
        tile_error_regression(Interval::new(5.0, 6.0), Interval::point(5.5)) == 0.5,
    );
    check(
        "tile [0,0.1]/[-2,3]",
        tile_error_regression(Interval::new(0.0, 0.1), Interval::new(-2.0, 3.0)) == 3.0,
    );
    // Global bound.
    let tile = |e: f64| TileResult {
        index: (0, 0),
        ground_truth: [Interval::point(0.0); 2],
        outputs: [Interval::point(0.0); 2],
        errors: [e, e],
        solve_time: Default::default(),
    };
    let tiles: Vec<_> = [0.5, 12.66, 3.2].into_iter().map(tile).collect();
    check("global max", global_bound(&tiles).unwrap() == [12.66, 12.66]);
    check("global single", global_bound(&tiles[..1]).unwrap() == [0.5, 0.5]);
    let class_tile = |error| ClassTileResult {
        index: (0, 0),
        classes: ClassSet::singleton(0),
        scores: OutputIntervals(vec![]),
        error,
        solve_time: Default::default(),
    };
    check(
        "global classification zeros",
        global_bound_classification(&[class_tile(0), class_tile(0)]).unwrap() == 0,
    );
    // Local bound.
    let boxed = |lo: u8, hi: u8| PixelBox::new(1, vec![lo], vec![hi]).unwrap();
    let (a, b) = (boxed(0, 10), boxed(10, 20));
    let on_edge = Image::new(1, vec![10]).unwrap();
    let inside_a = Image::new(1, vec![3]).unwrap();
    let outside = Image::new(1, vec![255]).unwrap();
    let boxes = [(&a, [1.0, 2.0]), (&b, [4.0, 0.5])];
    check(
        "local boundary max",
        local_bound(&on_edge, boxes) == LocalBound::Covered([4.0, 2.0]),
    );
    check(
        "local single",
        local_bound(&inside_a, boxes) == LocalBound::Covered([1.0, 2.0]),
    );
    check(
        "local not covered",
        local_bound(&outside, boxes) == LocalBound::NotCovered,
    );
    // Classification tile error.
    let scores = |c1: (f64, f64), c2: (f64, f64)| {
        OutputIntervals(vec![
            Interval::new(-9.0, -8.0),
            Interval::new(c1.0, c1.1),
            Interval::new(c2.0, c2.1),
        ])
    };
    check(
        "class separated",
        tile_error_classification(&ClassSet::singleton(1), &scores((2.0, 3.0), (0.0, 1.0))).unwrap() == 0,
    );
    check(
        "class two labels",
        tile_error_classification(&ClassSet::new([1, 2]).unwrap(), &scores((2.0, 3.0), (0.0, 1.0))).unwrap() == 1,
    );
    check(
        "class overlap",
        tile_error_classification(&ClassSet::singleton(1), &scores((0.0, 2.0), (1.0, 3.0))).unwrap() == 1,
    );
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "13 examples exact".into()
        } else {
            format!("failed: {failures:?}")
        },
    )
}

fn classification(net: &Network) -> Outcome {
    let cls = net.sign_classifier(0).unwrap();
    let camera = common::camera();
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let mut certified = Vec::new();
    let mut tried = 0;
    while certified.len() < 20 && tried < 400 {
        tried += 1;
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let d0 = sign * rng.gen_range(5.0..35.0);
        let t0 = rng.gen_range(-40.0..40.0);
        let region = StateRegion::new((tried, 0), Interval::new(d0, d0 + 0.1), Interval::new(t0, t0 + 0.1));
        let result = verify_tile_classification(&camera, &OffsetSign, &cls, BoundMethod::Ibp, &region).unwrap();
        if result.error == 0 {
            certified.push((region, result.classes.single().unwrap()));
        }
    }
    let mut wrong = 0;
    for (region, class) in &certified {
        let b = camera.pixel_box(region).unwrap();
        for k in 0..100 {
            // Half rendered feasible images, half arbitrary points of the box.
            let image = if k % 2 == 0 {
                let s = interior(region, rng.gen(), rng.gen());
                assert_eq!(OffsetSign.label(s), *class);
                camera.image(s)
            } else {
                let pixels = b
                    .low()
                    .iter()
                    .zip(b.high())
                    .map(|(&l, &h)| rng.gen_range(l..=h))
                    .collect();
                Image::new(b.size(), pixels).unwrap()
            };
            let s = cls.forward_image(&image).unwrap();
            let predicted = usize::from(s[1] > s[0]);
            if predicted != *class {
                wrong += 1;
            }
        }
    }
    outcome(
        certified.len() == 20 && wrong == 0,
        format!(
            "{} e=0 tiles (of {tried} tried) x 100 inputs, {wrong} misclassified",
            certified.len()
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: usize| {
        let cfg = RunConfig {
            network: Some(common::fixture("road_net.json")),
            delta_range: [-10.0, 10.0],
            theta_range: [-15.0, 15.0],
            cell_delta: 0.8,
            cell_theta: 0.8,
            workers,
            out: dir.path().join(format!("w{workers}")),
            ..RunConfig::default()
        };
        commands::verify(&cfg, false).unwrap();
        std::fs::read(cfg.out.join(commands::TILES_FILE)).unwrap()
    };
    let (one, four) = (run(1), run(4));
    outcome(
        one == four && !one.is_empty(),
        format!(
            "tiles.csv with 1 and 4 workers: {} vs {} bytes, identical: {}",
            one.len(),
            four.len(),
            one == four
        ),
    )
}

fn linrelax_on_image_net(net: &Network) -> String {
    let camera = common::camera();
    let regions: Vec<StateRegion> = (0..10)
        .map(|k| {
            let d = -9.0 + 2.0 * k as f64;
            StateRegion::new((k, 0), Interval::new(d, d + 0.4), Interval::new(-2.0, -1.6))
        })
        .collect();
    let (mut ibp, mut lin) = (0.0, 0.0);
    for r in &regions {
        let b = camera.input_box(r).unwrap();
        ibp += ibp_bounds(net, &b).unwrap().mean_width();
        lin += linear_relaxation_bounds(net, &b).unwrap().mean_width();
    }
    format!(
        "image network, 10 tiles at cell 0.4: mean output width ibp {:.3}, linrelax {:.3}",
        ibp / 10.0,
        lin / 10.0
    )
}

fn main() {
    let start = Instant::now();
    let net = common::road_net();
    let camera = common::camera();
    let mut results: Vec<(&str, Outcome)> = Vec::new();

    let mut sweep = Vec::new();
    for cell in [0.8, 0.4, 0.2] {
        let p = plan(cell, BoundMethod::Ibp);
        sweep.push((cell, run_tiler(&camera, &p, &net).unwrap().tiles));
    }
    let regions_04 = plan(0.4, BoundMethod::Ibp).regions().unwrap();
    let tiles_04 = &sweep[1].1;

    results.push(("soundness sweep", soundness_sweep(&net, tiles_04, &regions_04)));
    results.push(("box containment", containment()));
    let (oracle, width_info) = engine_oracle();
    results.push(("bound-engine oracle", oracle));
    results.push(("inclusion isotonicity", isotonicity(&net)));
    results.push(("tile-size trend", tile_size_trend(&sweep)));
    results.push(("tile-size gap", gap_check(&net, tiles_04, &regions_04)));
    results.push(("formula examples", formulas()));
    results.push(("classification soundness", classification(&net)));
    results.push(("determinism", determinism()));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("INFO linrelax tightness: {width_info}");
    println!("INFO linrelax tightness: {}", linrelax_on_image_net(&net));
    println!(
        "{} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
