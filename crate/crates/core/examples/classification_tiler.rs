//! Classification Tiler: which side of the lane centre is the camera on?
//! The two class scores are the negated and plain offset estimate of the
//! road-scene network.
//!
//! `cargo run --release --example classification_tiler`

use tiler::verifier::{run_tiler_classification, OffsetSign};
use tiler::{BoundMethod, Interval, Network, RoadCamera, SceneConfig, StateSpace, TilerPlan};

fn main() -> tiler::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/road_net.json");
    let classifier = Network::load(path)?.sign_classifier(0)?;
    let camera = RoadCamera::new(SceneConfig::default());

    for cell in [0.4, 0.1] {
        for method in [BoundMethod::Ibp, BoundMethod::LinearRelaxation] {
            let plan = TilerPlan {
                space: StateSpace::new(Interval::new(-8.0, 8.0), Interval::new(-1.0, 1.0)),
                cell_delta: cell,
                cell_theta: cell,
                method,
                workers: 0,
            };
            let report = run_tiler_classification(&camera, &OffsetSign, &plan, &classifier)?;
            let proved = report.tiles.iter().filter(|t| t.error == 0).count();
            println!(
                "cell {cell} {method}: {proved}/{} tiles proved correct, global bound {}",
                report.tiles.len(),
                report.global
            );
        }
    }
    Ok(())
}
