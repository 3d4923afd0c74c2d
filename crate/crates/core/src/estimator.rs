//! Empirical lower estimates of per-tile maximum error by sub-grid sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::network::Network;
use crate::scene::CameraState;
use crate::tiling::StateRegion;
use crate::verifier::{Observation, QUANTITIES};

/// Default sub-grid spacing along both axes.
pub const DEFAULT_SPACING: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileEstimate {
    pub index: (usize, usize),
    /// Largest observed `|prediction − truth|` per quantity.
    pub errors: [f64; QUANTITIES],
    pub spacing: f64,
    pub samples: usize,
}

/// Sample positions `lo, lo + s, lo + 2s, …` up to `hi`, with `hi` itself
/// always included. Halving `s` yields a superset.
pub fn sample_axis(range: Interval, spacing: f64) -> Vec<f64> {
    let steps = ((range.width() / spacing) + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=steps)
        .map(|k| range.lo + k as f64 * spacing)
        .filter(|&v| v <= range.hi)
        .collect();
    if out.last() != Some(&range.hi) {
        out.push(range.hi);
    }
    out
}

/// Evaluates the network on every sub-grid state of `region` (corners
/// included) and returns the worst absolute error per quantity.
pub fn empirical_max_error(
    region: &StateRegion,
    obs: &dyn Observation,
    net: &Network,
    spacing: f64,
) -> Result<TileEstimate> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let deltas = sample_axis(region.delta, spacing);
    let thetas = sample_axis(region.theta, spacing);
    let mut errors = [0.0f64; QUANTITIES];
    for &d in &deltas {
        for &t in &thetas {
            let y = net.forward(&obs.observe(CameraState::new(d, t)))?;
            let truth = [d, t];
            for q in 0..QUANTITIES {
                errors[q] = errors[q].max((y[q] - truth[q]).abs());
            }
        }
    }
    Ok(TileEstimate {
        index: region.index,
        errors,
        spacing,
        samples: deltas.len() * thetas.len(),
    })
}

/// Tightness gap between a sound bound and its empirical estimate.
pub fn gap(bound: f64, estimate: f64) -> f64 {
    bound - estimate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::InputBox;
    use crate::network::{InputSpec, LayerSpec, WeightFile};

    struct Direct;

    impl Observation for Direct {
        fn observe(&self, s: CameraState) -> Vec<f64> {
            vec![s.offset, s.angle_deg]
        }

        fn input_box(&self, r: &StateRegion) -> Result<InputBox> {
            InputBox::new(vec![r.delta.lo, r.theta.lo], vec![r.delta.hi, r.theta.hi])
        }
    }

    fn linear(weights: [f64; 4], bias: [f64; 2]) -> Network {
        Network::from_spec(WeightFile {
            format_version: 1,
            input_spec: InputSpec {
                height: 1,
                width: 2,
                channels: 1,
                scale: 1.0,
            },
            layers: vec![
                LayerSpec::Flatten,
                LayerSpec::LinearOutput {
                    in_features: 2,
                    out_features: 2,
                    weights: weights.to_vec(),
                    bias: bias.to_vec(),
                },
            ],
        })
        .unwrap()
    }

    #[test]
    fn axis_sampling() {
        assert_eq!(sample_axis(Interval::new(0.0, 0.2), 0.1).len(), 3);
        let s = sample_axis(Interval::new(0.0, 0.25), 0.1);
        assert_eq!(s.len(), 4);
        assert_eq!(*s.last().unwrap(), 0.25);
        assert_eq!(sample_axis(Interval::point(4.0), 0.05), vec![4.0]);
        let coarse = sample_axis(Interval::new(-1.3, -0.9), 0.1);
        let fine = sample_axis(Interval::new(-1.3, -0.9), 0.05);
        assert!(coarse.iter().all(|c| fine.contains(c)));
    }

    #[test]
    fn perfect_net_on_point_region() {
        let region = StateRegion::point(CameraState::new(1.5, -3.0));
        let est = empirical_max_error(&region, &Direct, &linear([1.0, 0.0, 0.0, 1.0], [0.0, 0.0]), 0.05).unwrap();
        assert_eq!(est.errors, [0.0, 0.0]);
        assert_eq!(est.samples, 1);
    }

    #[test]
    fn biased_net_error_is_bias() {
        let region = StateRegion::new((0, 0), Interval::new(0.0, 1.0), Interval::new(0.0, 1.0));
        let est = empirical_max_error(&region, &Direct, &linear([1.0, 0.0, 0.0, 0.0], [0.25, 0.0]), 0.5).unwrap();
        // theta output is constant 0, so its worst error is at theta = 1.
        assert_eq!(est.errors, [0.25, 1.0]);
        assert_eq!(est.samples, 9);
    }

    #[test]
    fn gap_examples() {
        assert!((gap(1.0, 0.4) - 0.6).abs() < 1e-15);
        assert_eq!(gap(0.7, 0.7), 0.0);
    }

    #[test]
    fn bad_spacing() {
        let region = StateRegion::point(CameraState::new(0.0, 0.0));
        assert!(empirical_max_error(&region, &Direct, &linear([1.0; 4], [0.0; 2]), 0.0).is_err());
    }
}
