//! Full file pipeline: verify, estimate, and report on a small region,
//! producing heatmaps, cumulative distributions, and trusted fractions.
//!
//! `cargo run --release --example report_heatmaps [out_dir]`

use tiler::commands::{self, RunConfig};

fn main() -> tiler::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("tiler-report"), Into::into);
    let cfg = RunConfig {
        network: Some(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/road_net.json").into()),
        delta_range: [-4.0, 4.0],
        theta_range: [-6.0, 6.0],
        cell_delta: 0.4,
        cell_theta: 0.4,
        out,
        ..RunConfig::default()
    };
    let verified = commands::verify(&cfg, false)?;
    println!(
        "verified {} tiles, global bound {:?}",
        verified.tiles, verified.global_bound
    );
    let estimated = commands::estimate(&cfg.out, Some(0.1), 0)?;
    println!(
        "estimated, empirical max {:?}, smallest gap {:?}",
        estimated.empirical_max, estimated.min_gap
    );
    let report = commands::report(&cfg.out)?;
    for q in &report.quantities {
        println!(
            "{}: p50 {:.3} p90 {:.3} p99 {:.3}, {:.1}% of the region within {:.2}",
            q.quantity,
            q.p50,
            q.p90,
            q.p99,
            100.0 * q.trusted_fraction,
            q.trust_tolerance
        );
    }
    println!("heatmaps and tables in {}", cfg.out.join("report").display());
    Ok(())
}
