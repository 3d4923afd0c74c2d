//! Compares per-tile bounds with empirical maximum errors sampled on a
//! sub-grid, and shows that finer sampling never lowers the estimate.
//!
//! `cargo run --release --example estimate_gap`

use tiler::estimator::{empirical_max_error, gap};
use tiler::verifier::run_tiler;
use tiler::{BoundMethod, Interval, Network, RoadCamera, SceneConfig, StateSpace, TilerPlan};

fn main() -> tiler::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/road_net.json");
    let net = Network::load(path)?;
    let camera = RoadCamera::new(SceneConfig::default());
    let plan = TilerPlan {
        space: StateSpace::new(Interval::new(10.0, 11.0), Interval::new(-1.0, 1.0)),
        cell_delta: 0.5,
        cell_theta: 0.5,
        method: BoundMethod::Ibp,
        workers: 0,
    };
    let report = run_tiler(&camera, &plan, &net)?;
    println!("tile      e_delta  emp_delta  gap     | e_theta  emp_theta  gap");
    for (tile, region) in report.tiles.iter().zip(plan.regions()?) {
        let est = empirical_max_error(&region, &camera, &net, 0.05)?;
        println!(
            "{:?}  {:7.3}  {:9.3}  {:6.3}  | {:7.3}  {:9.3}  {:6.3}",
            tile.index,
            tile.errors[0],
            est.errors[0],
            gap(tile.errors[0], est.errors[0]),
            tile.errors[1],
            est.errors[1],
            gap(tile.errors[1], est.errors[1])
        );
    }

    let region = &plan.regions()?[0];
    for spacing in [0.25, 0.125, 0.0625] {
        let est = empirical_max_error(region, &camera, &net, spacing)?;
        println!(
            "spacing {spacing}: {} samples, empirical max {:?}",
            est.samples, est.errors
        );
    }
    Ok(())
}
