//! Sound output ranges of a network over an input box.
//!
//! Two engines are provided. Interval bound propagation pushes elementwise
//! intervals through every layer. The linear relaxation engine propagates
//! linear bounding functions backwards from each output, replacing every
//! unstable ReLU with its triangle relaxation; it reuses the interval pass for
//! the pre-activation ranges. Both operate in plain double precision without
//! outward rounding.
//!
//! [`grid_oracle`] and [`sampled_oracle`] evaluate the network on concrete
//! points and therefore give inner approximations that every sound engine
//! must contain.

use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::network::{Layer, Network};
use crate::tiling::PixelBox;

/// Rounding slack allowed when comparing engine bounds with exact evaluation.
pub const FLOAT_SLACK: f64 = 1e-9;

/// Maximum number of points [`grid_oracle`] evaluates.
pub const ORACLE_BUDGET: u128 = 1_000_000;

/// Axis-aligned box over raw (unscaled) network inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct InputBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl InputBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::ShapeMismatch {
                expected: lo.len(),
                actual: hi.len(),
            });
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| l.partial_cmp(h).is_none_or(|o| o.is_gt()))
        {
            return Err(Error::InvalidArgument("input box has lo > hi or NaN".into()));
        }
        Ok(InputBox { lo, hi })
    }

    pub fn point(x: Vec<f64>) -> Self {
        InputBox { lo: x.clone(), hi: x }
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| l <= v && v <= h)
    }

    pub fn is_subset_of(&self, other: &InputBox) -> bool {
        self.len() == other.len() && (0..self.len()).all(|i| other.lo[i] <= self.lo[i] && self.hi[i] <= other.hi[i])
    }
}

impl From<&PixelBox> for InputBox {
    fn from(b: &PixelBox) -> Self {
        InputBox {
            lo: b.low().iter().map(|&v| v as f64).collect(),
            hi: b.high().iter().map(|&v| v as f64).collect(),
        }
    }
}

/// One interval per network output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputIntervals(pub Vec<Interval>);

impl OutputIntervals {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> Interval {
        self.0[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Interval> {
        self.0.iter()
    }

    /// True when every interval of `self` lies inside the matching one of `other`.
    pub fn is_subset_of(&self, other: &OutputIntervals) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a.is_subset_of(b))
    }

    /// Subset test that tolerates `slack` of floating-point rounding on each
    /// endpoint. The engines do not round outward.
    pub fn is_subset_within(&self, other: &OutputIntervals, slack: f64) -> bool {
        self.len() == other.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.lo >= b.lo - slack && a.hi <= b.hi + slack)
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.len() && self.0.iter().zip(y).all(|(iv, v)| iv.contains(*v))
    }

    pub fn mean_width(&self) -> f64 {
        self.0.iter().map(Interval::width).sum::<f64>() / self.len().max(1) as f64
    }
}

/// Which sound engine to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundMethod {
    #[serde(rename = "ibp")]
    Ibp,
    #[serde(rename = "linrelax")]
    LinearRelaxation,
}

impl BoundMethod {
    pub fn bounds(self, net: &Network, input: &InputBox) -> Result<OutputIntervals> {
        match self {
            BoundMethod::Ibp => ibp_bounds(net, input),
            BoundMethod::LinearRelaxation => linear_relaxation_bounds(net, input),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundMethod::Ibp => "ibp",
            BoundMethod::LinearRelaxation => "linrelax",
        }
    }
}

impl std::fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ibp" => Ok(BoundMethod::Ibp),
            "linrelax" | "linear_relaxation" => Ok(BoundMethod::LinearRelaxation),
            other => Err(Error::InvalidArgument(format!(
                "unknown bound method {other:?} (expected ibp or linrelax)"
            ))),
        }
    }
}

/// Interval bounds on every activation: entry `i` bounds the input of layer
/// `i` (after scaling); the last entry bounds the output.
pub struct IntervalTrace {
    pub lo: Vec<Vec<f64>>,
    pub hi: Vec<Vec<f64>>,
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

pub fn ibp_trace(net: &Network, input: &InputBox) -> Result<IntervalTrace> {
    if input.len() != net.input_len() {
        return Err(Error::ShapeMismatch {
            expected: net.input_len(),
            actual: input.len(),
        });
    }
    let scale = net.input_spec().scale;
    let mut lo: Vec<f64> = input.lo.iter().map(|v| v / scale).collect();
    let mut hi: Vec<f64> = input.hi.iter().map(|v| v / scale).collect();
    let mut trace = IntervalTrace {
        lo: Vec::with_capacity(net.layers().len() + 1),
        hi: Vec::with_capacity(net.layers().len() + 1),
    };
    for (idx, layer) in net.layers().iter().enumerate() {
        trace.lo.push(lo.clone());
        trace.hi.push(hi.clone());
        match layer {
            Layer::Relu => {
                lo.iter_mut().for_each(|v| *v = v.max(0.0));
                hi.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            Layer::Flatten => {}
            Layer::Conv2d(_) | Layer::Dense(_) => {
                let affine = layer.as_affine().expect("affine layer");
                (lo, hi) = affine.apply_interval(&lo, &hi);
                check_finite(&lo, &format!("interval bounds after layer {idx}"))?;
                check_finite(&hi, &format!("interval bounds after layer {idx}"))?;
            }
        }
    }
    trace.lo.push(lo);
    trace.hi.push(hi);
    Ok(trace)
}

/// Interval bound propagation.
pub fn ibp_bounds(net: &Network, input: &InputBox) -> Result<OutputIntervals> {
    let trace = ibp_trace(net, input)?;
    let (lo, hi) = (trace.lo.last().unwrap(), trace.hi.last().unwrap());
    Ok(OutputIntervals(
        lo.iter().zip(hi).map(|(&l, &h)| Interval::new(l, h)).collect(),
    ))
}

/// Bounds `cᵀ y` from above (`upper = true`) or below over the input box by
/// propagating a linear function backwards through the network.
fn backward_bound(net: &Network, trace: &IntervalTrace, output_coeffs: Vec<f64>, upper: bool) -> f64 {
    let mut coeffs = output_coeffs;
    let mut constant = 0.0;
    for (idx, layer) in net.layers().iter().enumerate().rev() {
        match layer {
            Layer::Flatten => {}
            Layer::Conv2d(_) | Layer::Dense(_) => {
                let affine = layer.as_affine().expect("affine layer");
                constant += coeffs.iter().zip(affine.bias()).map(|(c, b)| c * b).sum::<f64>();
                coeffs = affine.apply_transpose(&coeffs);
            }
            Layer::Relu => {
                let (pre_lo, pre_hi) = (&trace.lo[idx], &trace.hi[idx]);
                for (j, c) in coeffs.iter_mut().enumerate() {
                    let (l, u) = (pre_lo[j], pre_hi[j]);
                    if l >= 0.0 {
                        continue;
                    }
                    if u <= 0.0 {
                        *c = 0.0;
                        continue;
                    }
                    // Unstable neuron: relu(z) <= u (z - l) / (u - l) and
                    // relu(z) >= alpha z with alpha chosen to minimise the area.
                    let slope = u / (u - l);
                    let alpha = if u > -l { 1.0 } else { 0.0 };
                    let use_upper_line = (*c >= 0.0) == upper;
                    if use_upper_line {
                        constant -= *c * slope * l;
                        *c *= slope;
                    } else {
                        *c *= alpha;
                    }
                }
            }
        }
    }
    let scale = net.input_spec().scale;
    let (lo, hi) = (&trace.lo[0], &trace.hi[0]);
    debug_assert!(
        lo.iter().zip(hi).all(|(l, h)| l <= h),
        "scaled input box inverted (scale {scale})"
    );
    let mut total = constant;
    for (j, &c) in coeffs.iter().enumerate() {
        let (a, b) = (c * lo[j], c * hi[j]);
        total += if upper { a.max(b) } else { a.min(b) };
    }
    total
}

/// Backward linear-relaxation bounds with interval pre-activation ranges.
pub fn linear_relaxation_bounds(net: &Network, input: &InputBox) -> Result<OutputIntervals> {
    let trace = ibp_trace(net, input)?;
    let outputs = net.output_len();
    let mut out = Vec::with_capacity(outputs);
    for k in 0..outputs {
        let mut unit = vec![0.0; outputs];
        unit[k] = 1.0;
        let hi = backward_bound(net, &trace, unit.clone(), true);
        let lo = backward_bound(net, &trace, unit, false);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite(format!("linear relaxation bound of output {k}")));
        }
        // Both sides are valid bounds; an inverted pair can only come from
        // rounding on a degenerate box.
        out.push(Interval::new(lo.min(hi), lo.max(hi)));
    }
    Ok(OutputIntervals(out))
}

fn hull_of_outputs(net: &Network, points: impl Iterator<Item = Vec<f64>>) -> Result<OutputIntervals> {
    let mut acc: Option<Vec<Interval>> = None;
    for p in points {
        let y = net.forward(&p)?;
        acc = Some(match acc {
            None => y.iter().map(|&v| Interval::point(v)).collect(),
            Some(mut ivs) => {
                for (iv, v) in ivs.iter_mut().zip(y) {
                    *iv = iv.hull(&Interval::point(v));
                }
                ivs
            }
        });
    }
    Ok(OutputIntervals(acc.expect("at least one point")))
}

/// Min/max of the network over a Cartesian grid with `resolution` points per
/// non-degenerate input axis (endpoints included).
pub fn grid_oracle(net: &Network, input: &InputBox, resolution: usize) -> Result<OutputIntervals> {
    if input.len() != net.input_len() {
        return Err(Error::ShapeMismatch {
            expected: net.input_len(),
            actual: input.len(),
        });
    }
    let res = resolution.max(2);
    let axes: Vec<Vec<f64>> = (0..input.len())
        .map(|i| {
            let (l, h) = (input.lo[i], input.hi[i]);
            if l == h {
                vec![l]
            } else {
                (0..res)
                    .map(|k| {
                        if k + 1 == res {
                            h
                        } else {
                            l + (h - l) * k as f64 / (res - 1) as f64
                        }
                    })
                    .collect()
            }
        })
        .collect();
    let points = axes.iter().try_fold(1u128, |acc, a| acc.checked_mul(a.len() as u128));
    match points {
        Some(p) if p <= ORACLE_BUDGET => {}
        other => {
            return Err(Error::OracleBudget {
                points: other.unwrap_or(u128::MAX),
                budget: ORACLE_BUDGET,
            })
        }
    }
    let mut digits = vec![0usize; axes.len()];
    let mut done = false;
    let iter = std::iter::from_fn(|| {
        if done {
            return None;
        }
        let point: Vec<f64> = digits.iter().zip(&axes).map(|(&d, a)| a[d]).collect();
        // Odometer increment.
        done = true;
        for (d, a) in digits.iter_mut().zip(&axes) {
            *d += 1;
            if *d < a.len() {
                done = false;
                break;
            }
            *d = 0;
        }
        Some(point)
    });
    hull_of_outputs(net, iter)
}

/// Min/max of the network over the two extreme vertices of the box plus
/// `samples` uniformly random points. For inputs too large to grid.
pub fn sampled_oracle(net: &Network, input: &InputBox, samples: usize, rng: &mut impl Rng) -> Result<OutputIntervals> {
    let random = (0..samples)
        .map(|_| {
            input
                .lo
                .iter()
                .zip(&input.hi)
                .map(|(&l, &h)| if l == h { l } else { rng.gen_range(l..=h) })
                .collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>();
    let points = [input.lo.clone(), input.hi.clone()].into_iter().chain(random);
    hull_of_outputs(net, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{InputSpec, LayerSpec, WeightFile};
    use rand::SeedableRng;

    fn affine_1d(w: f64, b: f64) -> Network {
        Network::from_spec(WeightFile {
            format_version: 1,
            input_spec: InputSpec {
                height: 1,
                width: 1,
                channels: 1,
                scale: 1.0,
            },
            layers: vec![
                LayerSpec::Flatten,
                LayerSpec::LinearOutput {
                    in_features: 1,
                    out_features: 1,
                    weights: vec![w],
                    bias: vec![b],
                },
            ],
        })
        .unwrap()
    }

    fn random_box(rng: &mut impl Rng, dim: usize) -> InputBox {
        let lo: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hi = lo.iter().map(|l| l + rng.gen_range(0.0..0.8)).collect();
        InputBox::new(lo, hi).unwrap()
    }

    #[test]
    fn affine_1d_exact() {
        let net = affine_1d(2.0, 1.0);
        let b = InputBox::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(ibp_bounds(&net, &b).unwrap().get(0), Interval::new(1.0, 3.0));
        assert_eq!(
            linear_relaxation_bounds(&net, &b).unwrap().get(0),
            Interval::new(1.0, 3.0)
        );
        let oracle = grid_oracle(&net, &b, 5).unwrap();
        assert_eq!(oracle.get(0), Interval::new(1.0, 3.0));
    }

    #[test]
    fn point_boxes_are_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let net = Network::random_mlp(4, &[8, 8], 2, &mut rng);
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = net.forward(&x).unwrap();
            let b = InputBox::point(x);
            for out in [
                ibp_bounds(&net, &b).unwrap(),
                linear_relaxation_bounds(&net, &b).unwrap(),
                grid_oracle(&net, &b, 3).unwrap(),
            ] {
                for (iv, v) in out.iter().zip(&y) {
                    assert!(iv.width() <= 1e-9 && (iv.lo - v).abs() <= 1e-9, "{iv} vs {v}");
                }
            }
        }
    }

    #[test]
    fn single_affine_layer_matches_ibp() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let net = Network::random_mlp(4, &[], 3, &mut rng);
        for _ in 0..10 {
            let b = random_box(&mut rng, 4);
            let (i, l) = (
                ibp_bounds(&net, &b).unwrap(),
                linear_relaxation_bounds(&net, &b).unwrap(),
            );
            for (a, c) in i.iter().zip(l.iter()) {
                assert!((a.lo - c.lo).abs() < 1e-12 && (a.hi - c.hi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn engines_contain_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let net = Network::random_mlp(3, &[6, 5], 2, &mut rng);
            let b = random_box(&mut rng, 3);
            let oracle = grid_oracle(&net, &b, 12).unwrap();
            let ibp = ibp_bounds(&net, &b).unwrap();
            let lin = linear_relaxation_bounds(&net, &b).unwrap();
            assert!(oracle.is_subset_within(&ibp, FLOAT_SLACK));
            assert!(oracle.is_subset_within(&lin, FLOAT_SLACK));
        }
    }

    #[test]
    fn monotone_net_oracle_hits_corners() {
        let net = affine_1d(-3.0, 0.5);
        let b = InputBox::new(vec![-1.0], vec![2.0]).unwrap();
        assert_eq!(grid_oracle(&net, &b, 7).unwrap().get(0), Interval::new(-5.5, 3.5));
    }

    #[test]
    fn oracle_budget_is_enforced() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let net = Network::random_mlp(8, &[4], 1, &mut rng);
        let b = InputBox::new(vec![0.0; 8], vec![1.0; 8]).unwrap();
        assert!(matches!(grid_oracle(&net, &b, 10), Err(Error::OracleBudget { .. })));
        assert!(grid_oracle(&net, &b, 5).is_ok());
    }

    #[test]
    fn method_names_roundtrip() {
        for m in [BoundMethod::Ibp, BoundMethod::LinearRelaxation] {
            assert_eq!(m.name().parse::<BoundMethod>().unwrap(), m);
        }
        assert!("milp".parse::<BoundMethod>().is_err());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = affine_1d(1.0, 0.0);
        let b = InputBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(ibp_bounds(&net, &b), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn sampled_oracle_inside_ibp_on_conv_net() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let net = Network::random_case_study(8, 2, &mut rng);
        let lo: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..200.0_f64).floor()).collect();
        let hi: Vec<f64> = lo
            .iter()
            .map(|l| (l + rng.gen_range(0.0..40.0_f64)).floor().min(255.0))
            .collect();
        let b = InputBox::new(lo, hi).unwrap();
        let oracle = sampled_oracle(&net, &b, 200, &mut rng).unwrap();
        let ibp = ibp_bounds(&net, &b).unwrap();
        let lin = linear_relaxation_bounds(&net, &b).unwrap();
        assert!(oracle.is_subset_within(&ibp, FLOAT_SLACK) && oracle.is_subset_within(&lin, FLOAT_SLACK));
    }
}
