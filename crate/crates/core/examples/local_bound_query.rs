//! Local error bound of individual images: the worst tile bound over every
//! tile whose pixel box contains the image.
//!
//! `cargo run --release --example local_bound_query`

use tiler::verifier::{run_tiler, BoxIndex};
use tiler::{
    BoundMethod, CameraState, Image, Interval, LocalBound, Network, RoadCamera, SceneConfig, StateSpace, TilerPlan,
};

fn main() -> tiler::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/road_net.json");
    let net = Network::load(path)?;
    let camera = RoadCamera::new(SceneConfig::default());
    let plan = TilerPlan {
        space: StateSpace::new(Interval::new(-2.0, 2.0), Interval::new(-2.0, 2.0)),
        cell_delta: 0.4,
        cell_theta: 0.4,
        method: BoundMethod::Ibp,
        workers: 0,
    };
    let report = run_tiler(&camera, &plan, &net)?;
    let index = BoxIndex::from_results(&camera, &report.tiles, &plan.space, (plan.cell_delta, plan.cell_theta))?;
    println!("{} boxes, global bound {:?}", index.len(), report.global);

    for state in [
        CameraState::new(0.1, 0.3),
        CameraState::new(-1.9, 1.7),
        CameraState::new(0.0, 0.0),
    ] {
        let image = camera.image(state);
        let y = net.forward_image(&image)?;
        let actual = [(y[0] - state.offset).abs(), (y[1] - state.angle_deg).abs()];
        match index.local_bound(&image) {
            LocalBound::Covered(e) => println!("{state:?}: actual error {actual:.3?} <= local bound {e:.3?}"),
            LocalBound::NotCovered => println!("{state:?}: NOT_COVERED"),
        }
    }
    println!("all-white image: {:?}", index.local_bound(&Image::filled(32, 255)));
    Ok(())
}
