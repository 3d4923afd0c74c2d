//! Compares the two sound bound engines with a sampled inner estimate, on a
//! tiny network and on the road-scene network.
//!
//! `cargo run --release --example bound_engines`

use rand::SeedableRng;
use tiler::bounds::{grid_oracle, ibp_bounds, linear_relaxation_bounds, sampled_oracle};
use tiler::{InputBox, Interval, Network, Observation, OutputIntervals, RoadCamera, SceneConfig, StateRegion};

fn main() -> tiler::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);

    let tiny = Network::random_mlp(3, &[8, 8], 2, &mut rng);
    let b = InputBox::new(vec![-0.5, 0.0, 0.2], vec![0.1, 0.4, 0.6])?;
    let show = |name: &str, o: &OutputIntervals| {
        let parts: Vec<String> = o.iter().map(|iv| format!("[{:.4}, {:.4}]", iv.lo, iv.hi)).collect();
        println!("  {name:<9} {}", parts.join("  "));
    };
    println!("tiny network, 3 inputs, outputs y0 y1:");
    show("grid", &grid_oracle(&tiny, &b, 25)?);
    show("ibp", &ibp_bounds(&tiny, &b)?);
    show("linrelax", &linear_relaxation_bounds(&tiny, &b)?);

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/road_net.json");
    let net = Network::load(path)?;
    let camera = RoadCamera::new(SceneConfig::default());
    let cell = StateRegion::new((0, 0), Interval::new(5.0, 5.4), Interval::new(10.0, 10.4));
    let input = camera.input_box(&cell)?;
    println!(
        "\nroad network on cell delta {} theta {}, outputs delta_hat theta_hat:",
        cell.delta, cell.theta
    );
    show("sampled", &sampled_oracle(&net, &input, 2000, &mut rng)?);
    show("ibp", &ibp_bounds(&net, &input)?);
    show("linrelax", &linear_relaxation_bounds(&net, &input)?);
    Ok(())
}
