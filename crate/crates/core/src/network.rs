//! Feedforward ReLU networks: conv / dense / ReLU / flatten layers, the JSON
//! weight-file format, and inference.
//!
//! # Weight file
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "input_spec": { "height": 32, "width": 32, "channels": 1, "scale": 255.0 },
//!   "layers": [
//!     { "type": "conv2d", "in_channels": 1, "out_channels": 16, "kernel_size": 4,
//!       "stride": 2, "padding": 1, "weights": [...], "bias": [...] },
//!     { "type": "relu" },
//!     { "type": "flatten" },
//!     { "type": "dense", "in_features": 2048, "out_features": 100, "weights": [...], "bias": [...] },
//!     { "type": "linear_output", "in_features": 100, "out_features": 2, "weights": [...], "bias": [...] }
//!   ]
//! }
//! ```
//!
//! Raw inputs are divided by `input_spec.scale` before the first layer.
//! Activations are laid out channel-major, then row-major, then column; this
//! is also the order `flatten` produces. Conv weights are stored as
//! `[out_channel][in_channel][kernel_row][kernel_col]` and dense weights as
//! `[out_feature][in_feature]`. The final layer must be `linear_output`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Raw inputs are divided by this before the first layer.
    pub scale: f64,
}

impl InputSpec {
    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
        padding: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Relu,
    Flatten,
    Dense {
        in_features: usize,
        out_features: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    LinearOutput {
        in_features: usize,
        out_features: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFile {
    pub format_version: u32,
    pub input_spec: InputSpec,
    pub layers: Vec<LayerSpec>,
}

/// Activation shape between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Chw { c: usize, h: usize, w: usize },
    Flat(usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Chw { c, h, w } => c * h * w,
            Shape::Flat(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// 2-D convolution over a `c × h × w` activation, zero padded.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    /// Non-padding taps as `(input index, weight)`, grouped by output index;
    /// output `o` owns `taps[tap_start[o]..tap_start[o + 1]]`.
    taps: Vec<(u32, f64)>,
    tap_start: Vec<usize>,
}

impl Conv2d {
    fn index_taps(mut self) -> Self {
        let in_plane = self.in_h * self.in_w;
        let mut taps = Vec::new();
        let mut tap_start = Vec::with_capacity(self.out_len() + 1);
        for o in 0..self.out_channels {
            for r in 0..self.out_h {
                for c in 0..self.out_w {
                    tap_start.push(taps.len());
                    for i in 0..self.in_channels {
                        for kr in 0..self.kernel {
                            for kc in 0..self.kernel {
                                if let Some((y, x)) = self.source(r, c, kr, kc) {
                                    let idx = i * in_plane + y * self.in_w + x;
                                    taps.push((idx as u32, self.weight(o, i, kr, kc)));
                                }
                            }
                        }
                    }
                }
            }
        }
        tap_start.push(taps.len());
        self.taps = taps;
        self.tap_start = tap_start;
        self
    }

    fn output_taps(&self, o: usize) -> &[(u32, f64)] {
        &self.taps[self.tap_start[o]..self.tap_start[o + 1]]
    }

    fn weight(&self, o: usize, i: usize, kr: usize, kc: usize) -> f64 {
        self.weights[((o * self.in_channels + i) * self.kernel + kr) * self.kernel + kc]
    }

    /// Input position under kernel tap `(kr, kc)` of output `(r, c)`, if it
    /// is not padding.
    #[inline]
    fn source(&self, r: usize, c: usize, kr: usize, kc: usize) -> Option<(usize, usize)> {
        let y = (r * self.stride + kr).checked_sub(self.padding)?;
        let x = (c * self.stride + kc).checked_sub(self.padding)?;
        (y < self.in_h && x < self.in_w).then_some((y, x))
    }

    /// Calls `f(out_index, in_index, weight)` for every non-padding tap.
    #[inline]
    fn for_each_tap(&self, mut f: impl FnMut(usize, usize, f64)) {
        for o in 0..self.out_len() {
            for &(i, w) in self.output_taps(o) {
                f(o, i as usize, w);
            }
        }
    }

    fn out_plane(&self) -> usize {
        self.out_h * self.out_w
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub in_features: usize,
    pub out_features: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Dense {
    pub fn new(in_features: usize, out_features: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        check_len("dense.weights", weights.len(), in_features * out_features)?;
        check_len("dense.bias", bias.len(), out_features)?;
        check_finite("dense", &weights, &bias)?;
        Ok(Dense {
            in_features,
            out_features,
            weights,
            bias,
        })
    }

    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.in_features..(o + 1) * self.in_features]
    }
}

/// Dot product with four independent accumulators.
fn dot(w: &[f64], a: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (wc, wr) = w.split_at(w.len() - w.len() % 4);
    let (ac, ar) = a.split_at(wc.len());
    for (w4, a4) in wc.chunks_exact(4).zip(ac.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += w4[k] * a4[k];
        }
    }
    let tail: f64 = wr.iter().zip(ar).map(|(w, x)| w * x).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// An affine map `z = W a + b`.
pub trait Affine {
    fn in_len(&self) -> usize;
    fn out_len(&self) -> usize;
    fn bias(&self) -> Vec<f64>;
    fn apply(&self, a: &[f64]) -> Vec<f64>;
    /// Elementwise bounds of `W a + b` for `a ∈ [lo, hi]`, by splitting each
    /// weight by sign.
    fn apply_interval(&self, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>);
    /// `Wᵀ v` for a row vector `v` over the outputs.
    fn apply_transpose(&self, v: &[f64]) -> Vec<f64>;
}

impl Affine for Dense {
    fn in_len(&self) -> usize {
        self.in_features
    }

    fn out_len(&self) -> usize {
        self.out_features
    }

    fn bias(&self) -> Vec<f64> {
        self.bias.clone()
    }

    fn apply(&self, a: &[f64]) -> Vec<f64> {
        (0..self.out_features)
            .map(|o| self.bias[o] + dot(self.row(o), a))
            .collect()
    }

    fn apply_interval(&self, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut out_lo = self.bias.clone();
        let mut out_hi = self.bias.clone();
        for o in 0..self.out_features {
            let (mut l, mut h) = (0.0, 0.0);
            for ((&w, &a), &b) in self.row(o).iter().zip(lo).zip(hi) {
                if w >= 0.0 {
                    l += w * a;
                    h += w * b;
                } else {
                    l += w * b;
                    h += w * a;
                }
            }
            out_lo[o] += l;
            out_hi[o] += h;
        }
        (out_lo, out_hi)
    }

    fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.in_features];
        for (o, &vo) in v.iter().enumerate() {
            if vo == 0.0 {
                continue;
            }
            for (acc, w) in out.iter_mut().zip(self.row(o)) {
                *acc += vo * w;
            }
        }
        out
    }
}

impl Affine for Conv2d {
    fn in_len(&self) -> usize {
        self.in_channels * self.in_h * self.in_w
    }

    fn out_len(&self) -> usize {
        self.out_channels * self.out_plane()
    }

    fn bias(&self) -> Vec<f64> {
        let plane = self.out_plane();
        self.bias.iter().flat_map(|&b| std::iter::repeat_n(b, plane)).collect()
    }

    fn apply(&self, a: &[f64]) -> Vec<f64> {
        let plane = self.out_plane();
        (0..self.out_len())
            .map(|o| {
                let z: f64 = self.output_taps(o).iter().map(|&(i, w)| w * a[i as usize]).sum();
                z + self.bias[o / plane]
            })
            .collect()
    }

    fn apply_interval(&self, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let plane = self.out_plane();
        let mut out_lo = vec![0.0; self.out_len()];
        let mut out_hi = vec![0.0; self.out_len()];
        for o in 0..self.out_len() {
            let (mut l, mut h) = (0.0, 0.0);
            for &(i, w) in self.output_taps(o) {
                let (a, b) = (lo[i as usize], hi[i as usize]);
                if w >= 0.0 {
                    l += w * a;
                    h += w * b;
                } else {
                    l += w * b;
                    h += w * a;
                }
            }
            out_lo[o] = l + self.bias[o / plane];
            out_hi[o] = h + self.bias[o / plane];
        }
        (out_lo, out_hi)
    }

    fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.in_len()];
        self.for_each_tap(|o, i, w| out[i] += w * v[o]);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Conv2d(Conv2d),
    Dense(Dense),
    Relu,
    Flatten,
}

impl Layer {
    pub fn as_affine(&self) -> Option<&dyn Affine> {
        match self {
            Layer::Conv2d(c) => Some(c),
            Layer::Dense(d) => Some(d),
            Layer::Relu | Layer::Flatten => None,
        }
    }
}

/// A validated feedforward network. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    input: InputSpec,
    layers: Vec<Layer>,
    shapes: Vec<Shape>,
}

fn check_len(field: &str, actual: usize, expected: usize) -> Result<()> {
    if actual != expected {
        return Err(Error::InvalidWeights(format!(
            "{field}: expected {expected} values, found {actual}"
        )));
    }
    Ok(())
}

fn check_finite(field: &str, weights: &[f64], bias: &[f64]) -> Result<()> {
    if weights.iter().chain(bias).any(|v| !v.is_finite()) {
        return Err(Error::InvalidWeights(format!("{field}: non-finite weight")));
    }
    Ok(())
}

impl Network {
    /// Validates layer shapes against the input spec.
    pub fn from_spec(spec: WeightFile) -> Result<Self> {
        if spec.format_version != FORMAT_VERSION {
            return Err(Error::InvalidWeights(format!(
                "format_version: unsupported version {}",
                spec.format_version
            )));
        }
        let input = spec.input_spec;
        if input.is_empty() {
            return Err(Error::InvalidWeights("input_spec: zero-sized input".into()));
        }
        if !(input.scale.is_finite() && input.scale > 0.0) {
            return Err(Error::InvalidWeights(format!(
                "input_spec.scale: must be positive, got {}",
                input.scale
            )));
        }
        if !matches!(spec.layers.last(), Some(LayerSpec::LinearOutput { .. })) {
            return Err(Error::InvalidWeights("layers: last layer must be linear_output".into()));
        }
        let mut shape = Shape::Chw {
            c: input.channels,
            h: input.height,
            w: input.width,
        };
        let mut layers = Vec::with_capacity(spec.layers.len());
        let mut shapes = vec![shape];
        let count = spec.layers.len();
        for (idx, layer) in spec.layers.into_iter().enumerate() {
            let field = |name: &str| format!("layers[{idx}].{name}");
            let built = match layer {
                LayerSpec::Conv2d {
                    in_channels,
                    out_channels,
                    kernel_size,
                    stride,
                    padding,
                    weights,
                    bias,
                } => {
                    let Shape::Chw { c, h, w } = shape else {
                        return Err(Error::InvalidWeights(format!(
                            "{}: conv2d after flatten",
                            field("type")
                        )));
                    };
                    if c != in_channels {
                        return Err(Error::InvalidWeights(format!(
                            "{}: expected {c} input channels, found {in_channels}",
                            field("in_channels")
                        )));
                    }
                    if kernel_size == 0 || stride == 0 || h + 2 * padding < kernel_size || w + 2 * padding < kernel_size
                    {
                        return Err(Error::InvalidWeights(format!(
                            "{}: kernel does not fit input",
                            field("kernel_size")
                        )));
                    }
                    check_len(
                        &field("weights"),
                        weights.len(),
                        out_channels * in_channels * kernel_size * kernel_size,
                    )?;
                    check_len(&field("bias"), bias.len(), out_channels)?;
                    check_finite(&field("weights"), &weights, &bias)?;
                    let out_h = (h + 2 * padding - kernel_size) / stride + 1;
                    let out_w = (w + 2 * padding - kernel_size) / stride + 1;
                    shape = Shape::Chw {
                        c: out_channels,
                        h: out_h,
                        w: out_w,
                    };
                    Layer::Conv2d(
                        Conv2d {
                            in_channels,
                            out_channels,
                            kernel: kernel_size,
                            stride,
                            padding,
                            in_h: h,
                            in_w: w,
                            out_h,
                            out_w,
                            weights,
                            bias,
                            taps: Vec::new(),
                            tap_start: Vec::new(),
                        }
                        .index_taps(),
                    )
                }
                LayerSpec::Relu => {
                    if idx + 1 == count {
                        return Err(Error::InvalidWeights("layers: relu cannot be the output".into()));
                    }
                    Layer::Relu
                }
                LayerSpec::Flatten => {
                    shape = Shape::Flat(shape.len());
                    Layer::Flatten
                }
                LayerSpec::Dense {
                    in_features,
                    out_features,
                    weights,
                    bias,
                }
                | LayerSpec::LinearOutput {
                    in_features,
                    out_features,
                    weights,
                    bias,
                } => {
                    let Shape::Flat(n) = shape else {
                        return Err(Error::InvalidWeights(format!(
                            "{}: dense layer needs a flatten first",
                            field("type")
                        )));
                    };
                    if n != in_features {
                        return Err(Error::InvalidWeights(format!(
                            "{}: expected {n}, found {in_features}",
                            field("in_features")
                        )));
                    }
                    check_len(&field("weights"), weights.len(), in_features * out_features)?;
                    check_len(&field("bias"), bias.len(), out_features)?;
                    check_finite(&field("weights"), &weights, &bias)?;
                    shape = Shape::Flat(out_features);
                    Layer::Dense(Dense {
                        in_features,
                        out_features,
                        weights,
                        bias,
                    })
                }
            };
            layers.push(built);
            shapes.push(shape);
        }
        Ok(Network { input, layers, shapes })
    }

    /// Parses a weight file from JSON text. Errors name the JSON path of the
    /// offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: WeightFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::InvalidWeights(format!("{path}: {}", e.into_inner()))
        })?;
        Network::from_spec(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Network::from_json(&text)
    }

    pub fn to_spec(&self) -> WeightFile {
        let last = self.layers.len() - 1;
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(idx, layer)| match layer {
                Layer::Conv2d(c) => LayerSpec::Conv2d {
                    in_channels: c.in_channels,
                    out_channels: c.out_channels,
                    kernel_size: c.kernel,
                    stride: c.stride,
                    padding: c.padding,
                    weights: c.weights.clone(),
                    bias: c.bias.clone(),
                },
                Layer::Relu => LayerSpec::Relu,
                Layer::Flatten => LayerSpec::Flatten,
                Layer::Dense(d) if idx == last => LayerSpec::LinearOutput {
                    in_features: d.in_features,
                    out_features: d.out_features,
                    weights: d.weights.clone(),
                    bias: d.bias.clone(),
                },
                Layer::Dense(d) => LayerSpec::Dense {
                    in_features: d.in_features,
                    out_features: d.out_features,
                    weights: d.weights.clone(),
                    bias: d.bias.clone(),
                },
            })
            .collect();
        WeightFile {
            format_version: FORMAT_VERSION,
            input_spec: self.input,
            layers,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(&self.to_spec())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn input_spec(&self) -> &InputSpec {
        &self.input
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Activation shape before layer `i` (`shapes()[layers().len()]` is the output).
    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn input_len(&self) -> usize {
        self.input.len()
    }

    pub fn output_len(&self) -> usize {
        self.shapes.last().map_or(0, Shape::len)
    }

    /// Evaluates the network on raw (unscaled) input values.
    pub fn forward(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.input_len() {
            return Err(Error::ShapeMismatch {
                expected: self.input_len(),
                actual: raw.len(),
            });
        }
        let mut a: Vec<f64> = raw.iter().map(|v| v / self.input.scale).collect();
        for layer in &self.layers {
            match layer {
                Layer::Relu => a.iter_mut().for_each(|v| *v = v.max(0.0)),
                Layer::Flatten => {}
                Layer::Conv2d(c) => a = c.apply(&a),
                Layer::Dense(d) => a = d.apply(&a),
            }
        }
        Ok(a)
    }

    /// Two-class network whose scores are `(-y_k, +y_k)` for output `k` of
    /// `self`: class 1 wins exactly when `y_k > 0`.
    pub fn sign_classifier(&self, output: usize) -> Result<Network> {
        if output >= self.output_len() {
            return Err(Error::InvalidArgument(format!(
                "output {output} out of range for a network with {} outputs",
                self.output_len()
            )));
        }
        let mut spec = self.to_spec();
        match spec.layers.last_mut() {
            Some(LayerSpec::LinearOutput {
                in_features,
                out_features,
                weights,
                bias,
            }) => {
                let row = &weights[output * *in_features..(output + 1) * *in_features];
                let mut paired: Vec<f64> = row.iter().map(|w| -w).collect();
                paired.extend_from_slice(row);
                *bias = vec![-bias[output], bias[output]];
                *weights = paired;
                *out_features = 2;
            }
            _ => unreachable!("validated networks end in linear_output"),
        }
        Network::from_spec(spec)
    }

    /// Evaluates the network on an 8-bit image.
    pub fn forward_image(&self, image: &crate::scene::Image) -> Result<Vec<f64>> {
        self.forward(&image.to_f64())
    }

    /// Fully connected ReLU network on a flat input with `scale = 1`.
    /// Weights and biases are uniform in `[-1, 1]`.
    pub fn random_mlp(input: usize, hidden: &[usize], output: usize, rng: &mut impl Rng) -> Self {
        let mut layers = vec![LayerSpec::Flatten];
        let mut width = input;
        let mut dims: Vec<usize> = hidden.to_vec();
        dims.push(output);
        for (k, &next) in dims.iter().enumerate() {
            let weights = (0..width * next).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bias = (0..next).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if k + 1 == dims.len() {
                layers.push(LayerSpec::LinearOutput {
                    in_features: width,
                    out_features: next,
                    weights,
                    bias,
                });
            } else {
                layers.push(LayerSpec::Dense {
                    in_features: width,
                    out_features: next,
                    weights,
                    bias,
                });
                layers.push(LayerSpec::Relu);
            }
            width = next;
        }
        Network::from_spec(WeightFile {
            format_version: FORMAT_VERSION,
            input_spec: InputSpec {
                height: 1,
                width: input,
                channels: 1,
                scale: 1.0,
            },
            layers,
        })
        .expect("random_mlp builds consistent shapes")
    }

    /// Case-study convolutional architecture (conv16 → ReLU → conv32 → ReLU →
    /// dense100 → ReLU → linear) on `size × size` single-channel images, with
    /// small random weights. Used as a stand-in where trained weights are not
    /// needed.
    pub fn random_case_study(size: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let mut uniform = |n: usize, fan_in: usize| -> Vec<f64> {
            let bound = 1.0 / (fan_in as f64).sqrt();
            (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        let flat = 32 * (size / 4) * (size / 4);
        let layers = vec![
            LayerSpec::Conv2d {
                in_channels: 1,
                out_channels: 16,
                kernel_size: 4,
                stride: 2,
                padding: 1,
                weights: uniform(16 * 16, 16),
                bias: uniform(16, 16),
            },
            LayerSpec::Relu,
            LayerSpec::Conv2d {
                in_channels: 16,
                out_channels: 32,
                kernel_size: 4,
                stride: 2,
                padding: 1,
                weights: uniform(32 * 16 * 16, 256),
                bias: uniform(32, 256),
            },
            LayerSpec::Relu,
            LayerSpec::Flatten,
            LayerSpec::Dense {
                in_features: flat,
                out_features: 100,
                weights: uniform(flat * 100, flat),
                bias: uniform(100, flat),
            },
            LayerSpec::Relu,
            LayerSpec::LinearOutput {
                in_features: 100,
                out_features: outputs,
                weights: uniform(100 * outputs, 100),
                bias: uniform(outputs, 100),
            },
        ];
        Network::from_spec(WeightFile {
            format_version: FORMAT_VERSION,
            input_spec: InputSpec {
                height: size,
                width: size,
                channels: 1,
                scale: 255.0,
            },
            layers,
        })
        .expect("case-study architecture is consistent")
    }
}
