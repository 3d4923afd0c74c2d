#![allow(dead_code)]

use std::path::PathBuf;

use tiler::{Network, RoadCamera, SceneConfig};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn road_net() -> Network {
    Network::load(fixture("road_net.json")).expect("fixture network loads")
}

pub fn camera() -> RoadCamera {
    RoadCamera::new(SceneConfig::default())
}
