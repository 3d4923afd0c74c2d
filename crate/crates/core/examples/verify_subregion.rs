//! Runs the regression Tiler over a small part of the state space, then the
//! same run through the file pipeline.
//!
//! `cargo run --release --example verify_subregion [out_dir]`

use tiler::commands::{self, RunConfig};
use tiler::verifier::run_tiler;
use tiler::{BoundMethod, Interval, Network, RoadCamera, SceneConfig, StateSpace, TilerPlan};

fn main() -> tiler::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/road_net.json");
    let net = Network::load(path)?;
    let camera = RoadCamera::new(SceneConfig::default());

    for method in [BoundMethod::Ibp, BoundMethod::LinearRelaxation] {
        let plan = TilerPlan {
            space: StateSpace::new(Interval::new(-2.0, 2.0), Interval::new(-4.0, 4.0)),
            cell_delta: 0.4,
            cell_theta: 0.4,
            method,
            workers: 0,
        };
        let report = run_tiler(&camera, &plan, &net)?;
        println!(
            "{method}: {} tiles, global bound delta {:.3} theta {:.3}",
            report.tiles.len(),
            report.global[0],
            report.global[1]
        );
        let best = report
            .tiles
            .iter()
            .min_by(|a, b| a.errors[0].total_cmp(&b.errors[0]))
            .unwrap();
        println!(
            "  tightest delta tile {:?}: truth {} output {} bound {:.3}",
            best.index, best.ground_truth[0], best.outputs[0], best.errors[0]
        );
    }

    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("tiler-verify"), Into::into);
    let cfg = RunConfig {
        network: Some(path.into()),
        delta_range: [-2.0, 2.0],
        theta_range: [-4.0, 4.0],
        cell_delta: 0.4,
        cell_theta: 0.4,
        out,
        ..RunConfig::default()
    };
    let summary = commands::verify(&cfg, false)?;
    println!(
        "\nwrote {} ({} tiles, {:.2}s)",
        cfg.out.display(),
        summary.tiles,
        summary.wall_seconds
    );
    Ok(())
}
