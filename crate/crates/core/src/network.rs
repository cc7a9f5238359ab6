//! Feed-forward network model: layers, traces, truncation and weight patches.
//!
//! Conventions used across the crate:
//!
//! * Layers are numbered 1..=k in the public API (layer 1 is the input
//!   layer), matching the network file format; internal vectors are 0-based.
//! * Edge layer `s` connects layer `s` to layer `s+1`, for `s` in 1..=k-1.
//! * Weight matrices are stored row-major with **rows = target neurons**,
//!   so `w[q][p]` is the weight of the edge from source neuron `p` (layer
//!   `s`) into target neuron `q` (layer `s+1`).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-layer activation. Hidden layers are always ReLU; the final layer of a
/// freshly loaded network is Identity, but truncating a network leaves a ReLU
/// on its new final layer so that forward simulation keeps its meaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// Dense row-major matrix. Small by design; no linear-algebra dependency so
/// that exact scalars work without friction.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        Ok(Mat { rows: nrows, cols: ncols, data: rows.into_iter().flatten().collect() })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &S {
        &self.data[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut S {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter(&self) -> impl Iterator<Item = &S> {
        self.data.iter()
    }

    /// Entry-wise negation (used to undo a patch).
    pub fn negated(&self) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| -v.clone()).collect(),
        }
    }
}

/// One layer: width, activation and per-neuron biases. The input layer keeps
/// an all-zero bias vector that is never used.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<S> {
    pub width: usize,
    pub activation: Activation,
    pub biases: Vec<S>,
}

/// A feed-forward network with dense edge layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<S> {
    name: String,
    layers: Vec<Layer<S>>,
    edge_layers: Vec<Mat<S>>,
}

/// Full record of one forward pass: pre-activation and post-activation
/// values for every layer. Index 0 holds layer 1 (the input, where both
/// vectors are the input itself).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace<S> {
    pub pre_activations: Vec<Vec<S>>,
    pub values: Vec<Vec<S>>,
}

impl<S: Scalar> LayerTrace<S> {
    /// Post-activation values of layer `p` (1-based).
    pub fn layer_values(&self, p: usize) -> &[S] {
        &self.values[p - 1]
    }

    /// Pre-activation values of layer `p` (1-based).
    pub fn layer_pre(&self, p: usize) -> &[S] {
        &self.pre_activations[p - 1]
    }

    /// Final-layer values.
    pub fn output(&self) -> &[S] {
        self.values.last().expect("trace has at least one layer")
    }

    /// Index (1-based neuron) of the largest output; ties resolve to the
    /// lowest index so the choice is deterministic.
    pub fn argmax(&self) -> usize {
        let out = self.output();
        let mut best = 0usize;
        for (i, v) in out.iter().enumerate() {
            if *v > out[best] {
                best = i;
            }
        }
        best + 1
    }
}

/// Additive change to one edge layer: `deltas[q][p]` is added to the weight
/// of the edge from source `p` into target `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch<S> {
    pub edge_layer: usize,
    pub deltas: Mat<S>,
    /// Largest absolute entry, cached at construction.
    pub bound: S,
}

impl<S: Scalar> Patch<S> {
    pub fn new(edge_layer: usize, deltas: Mat<S>) -> Self {
        let bound = deltas
            .iter()
            .fold(S::zero(), |acc, v| crate::scalar::smax(acc, v.abs()));
        Patch { edge_layer, deltas, bound }
    }

    /// The patch that undoes this one.
    pub fn negated(&self) -> Self {
        Patch::new(self.edge_layer, self.deltas.negated())
    }

    pub fn is_zero(&self) -> bool {
        self.bound.is_zero()
    }
}

impl<S: Scalar> Network<S> {
    /// Build and validate a network. `edge_layers[s-1]` must be a
    /// `widths[s] x widths[s-1]` matrix. Hidden layers must be ReLU; the
    /// final layer may be Identity (loaded networks) or ReLU (truncations).
    pub fn new(name: impl Into<String>, layers: Vec<Layer<S>>, edge_layers: Vec<Mat<S>>) -> Result<Self> {
        let name = name.into();
        if layers.len() < 2 {
            return Err(Error::Shape(format!(
                "network needs at least 2 layers, got {}",
                layers.len()
            )));
        }
        if edge_layers.len() != layers.len() - 1 {
            return Err(Error::Shape(format!(
                "expected {} edge layers for {} layers, got {}",
                layers.len() - 1,
                layers.len(),
                edge_layers.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.width == 0 {
                return Err(Error::Shape(format!("layer {} has width 0", i + 1)));
            }
            if layer.biases.len() != layer.width {
                return Err(Error::Shape(format!(
                    "layer {} has {} biases for width {}",
                    i + 1,
                    layer.biases.len(),
                    layer.width
                )));
            }
            if layer.biases.iter().any(|b| !b.is_finite_value()) {
                return Err(Error::NonFinite(format!("bias in layer {}", i + 1)));
            }
            let is_hidden = i > 0 && i + 1 < layers.len();
            if is_hidden && layer.activation != Activation::Relu {
                return Err(Error::Shape(format!("hidden layer {} must be relu", i + 1)));
            }
        }
        for (s, m) in edge_layers.iter().enumerate() {
            let (src, dst) = (layers[s].width, layers[s + 1].width);
            if m.rows() != dst || m.cols() != src {
                return Err(Error::Shape(format!(
                    "edge layer {} must be {}x{}, got {}x{}",
                    s + 1,
                    dst,
                    src,
                    m.rows(),
                    m.cols()
                )));
            }
            if m.iter().any(|w| !w.is_finite_value()) {
                return Err(Error::NonFinite(format!("weight in edge layer {}", s + 1)));
            }
        }
        Ok(Network { name, layers, edge_layers })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn edge_layer_count(&self) -> usize {
        self.edge_layers.len()
    }

    /// Weight matrix of edge layer `s` (1-based).
    pub fn edge_layer(&self, s: usize) -> &Mat<S> {
        &self.edge_layers[s - 1]
    }

    /// Width of layer `p` (1-based).
    pub fn width(&self, p: usize) -> usize {
        self.layers[p - 1].width
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].width
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].width
    }

    /// Activation of layer `p` (1-based).
    pub fn activation(&self, p: usize) -> Activation {
        self.layers[p - 1].activation
    }

    /// Simulate the network on `input`, recording every layer.
    pub fn forward(&self, input: &[S]) -> Result<LayerTrace<S>> {
        if input.len() != self.input_width() {
            return Err(Error::Dimension(format!(
                "input width {} does not match network input width {}",
                input.len(),
                self.input_width()
            )));
        }
        if input.iter().any(|v| !v.is_finite_value()) {
            return Err(Error::NonFinite("input vector".into()));
        }
        let mut pre_activations = vec![input.to_vec()];
        let mut values = vec![input.to_vec()];
        for s in 0..self.edge_layers.len() {
            let w = &self.edge_layers[s];
            let src = values.last().expect("nonempty");
            let layer = &self.layers[s + 1];
            let mut pre = Vec::with_capacity(layer.width);
            for q in 0..layer.width {
                let mut acc = layer.biases[q].clone();
                for (p, x) in src.iter().enumerate() {
                    acc = acc + w.at(q, p).clone() * x.clone();
                }
                pre.push(acc);
            }
            let post = match layer.activation {
                Activation::Relu => pre
                    .iter()
                    .map(|v| if *v > S::zero() { v.clone() } else { S::zero() })
                    .collect(),
                Activation::Identity => pre.clone(),
            };
            pre_activations.push(pre);
            values.push(post);
        }
        Ok(LayerTrace { pre_activations, values })
    }

    /// Keep layers 1..=j (j >= 2) and the edge layers between them; weights
    /// and biases are untouched. The new final layer keeps its original
    /// activation, so a ReLU hidden layer stays a ReLU when it becomes the
    /// output of the truncated network.
    pub fn truncate(&self, j: usize) -> Result<Network<S>> {
        if j < 2 || j > self.layer_count() {
            return Err(Error::Index(format!(
                "truncation layer {} outside 2..={}",
                j,
                self.layer_count()
            )));
        }
        Ok(Network {
            name: format!("{}[1..{}]", self.name, j),
            layers: self.layers[..j].to_vec(),
            edge_layers: self.edge_layers[..j - 1].to_vec(),
        })
    }

    /// Return a copy with `patch.deltas` added entry-wise to the chosen edge
    /// layer. Everything else is shared unchanged.
    pub fn apply_patch(&self, patch: &Patch<S>) -> Result<Network<S>> {
        let s = patch.edge_layer;
        if s < 1 || s > self.edge_layer_count() {
            return Err(Error::Index(format!(
                "edge layer {} outside 1..={}",
                s,
                self.edge_layer_count()
            )));
        }
        let target = &self.edge_layers[s - 1];
        if patch.deltas.rows() != target.rows() || patch.deltas.cols() != target.cols() {
            return Err(Error::Dimension(format!(
                "patch shape {}x{} does not match edge layer {} shape {}x{}",
                patch.deltas.rows(),
                patch.deltas.cols(),
                s,
                target.rows(),
                target.cols()
            )));
        }
        if patch.deltas.iter().any(|v| !v.is_finite_value()) {
            return Err(Error::NonFinite("patch delta".into()));
        }
        let mut edge_layers = self.edge_layers.clone();
        let m = &mut edge_layers[s - 1];
        for q in 0..m.rows() {
            for p in 0..m.cols() {
                let updated = m.at(q, p).clone() + patch.deltas.at(q, p).clone();
                *m.at_mut(q, p) = updated;
            }
        }
        Ok(Network { name: self.name.clone(), layers: self.layers.clone(), edge_layers })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn i(v: i64) -> Rational {
        Rational::from_int(v)
    }

    /// 2-2-2-2 demo network used across the test suite.
    pub fn tiny4() -> Network<Rational> {
        let layers = vec![
            Layer { width: 2, activation: Activation::Identity, biases: vec![i(0), i(0)] },
            Layer { width: 2, activation: Activation::Relu, biases: vec![i(0), i(0)] },
            Layer { width: 2, activation: Activation::Relu, biases: vec![i(0), i(0)] },
            Layer { width: 2, activation: Activation::Identity, biases: vec![i(0), i(0)] },
        ];
        let edges = vec![
            Mat::from_rows(vec![vec![i(1), i(1)], vec![i(-1), i(2)]]).unwrap(),
            Mat::from_rows(vec![vec![i(2), i(3)], vec![i(1), i(1)]]).unwrap(),
            Mat::from_rows(vec![vec![i(2), i(-8)], vec![i(-4), i(5)]]).unwrap(),
        ];
        Network::new("tiny4", layers, edges).unwrap()
    }

    #[test]
    fn forward_records_every_layer_exactly() {
        let net = tiny4();
        let trace = net.forward(&[r(1, 2), r(1, 2)]).unwrap();
        assert_eq!(trace.layer_values(2), &[i(1), r(1, 2)]);
        assert_eq!(trace.layer_values(3), &[r(7, 2), r(3, 2)]);
        assert_eq!(trace.output(), &[i(-5), r(-13, 2)]);
        assert_eq!(trace.argmax(), 1);
    }

    #[test]
    fn forward_zero_input_zero_bias_gives_zero() {
        let net = tiny4();
        let trace = net.forward(&[i(0), i(0)]).unwrap();
        assert!(trace.output().iter().all(|v| v == &i(0)));
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = tiny4();
        assert!(matches!(net.forward(&[i(1)]), Err(Error::Dimension(_))));
    }

    #[test]
    fn relu_clamps_negative_preactivations() {
        let net = tiny4();
        let trace = net.forward(&[i(0), i(-1)]).unwrap();
        // Pre-activations at layer 2 are <-1, -2>; both clamp to zero.
        assert_eq!(trace.layer_pre(2), &[i(-1), i(-2)]);
        assert_eq!(trace.layer_values(2), &[i(0), i(0)]);
    }

    #[test]
    fn truncate_keeps_prefix_and_relu_final_layer() {
        let net = tiny4();
        let cut = net.truncate(3).unwrap();
        assert_eq!(cut.layer_count(), 3);
        assert_eq!(cut.activation(3), Activation::Relu);
        assert_eq!(cut.edge_layer(1), net.edge_layer(1));
        assert_eq!(cut.edge_layer(2), net.edge_layer(2));
        // Prefix property: the truncated forward equals the full trace prefix.
        let input = [r(1, 2), r(1, 2)];
        let full = net.forward(&input).unwrap();
        let part = cut.forward(&input).unwrap();
        assert_eq!(&full.values[..3], &part.values[..]);
    }

    #[test]
    fn truncate_whole_network_is_identity() {
        let net = tiny4();
        let same = net.truncate(4).unwrap();
        assert_eq!(same.layers(), net.layers());
        assert_eq!(same.edge_layer(3), net.edge_layer(3));
    }

    #[test]
    fn truncate_rejects_bad_layer() {
        let net = tiny4();
        assert!(net.truncate(1).is_err());
        assert!(net.truncate(5).is_err());
    }

    #[test]
    fn apply_patch_changes_only_target_edge_layer() {
        let net = tiny4();
        let deltas =
            Mat::from_rows(vec![vec![i(0), r(-7, 4)], vec![i(0), r(-9, 8)]]).unwrap();
        let patch = Patch::new(1, deltas);
        assert_eq!(patch.bound, r(7, 4));
        let patched = net.apply_patch(&patch).unwrap();
        assert_eq!(patched.edge_layer(2), net.edge_layer(2));
        assert_eq!(patched.edge_layer(3), net.edge_layer(3));
        // Known witness: hidden layer becomes <1/8, 0> on <1/2, 1/2>.
        let trace = patched.forward(&[r(1, 2), r(1, 2)]).unwrap();
        assert_eq!(trace.layer_values(2), &[r(1, 8), i(0)]);
        // Applying the negated patch restores the original exactly.
        let restored = patched.apply_patch(&patch.negated()).unwrap();
        assert_eq!(restored.edge_layer(1), net.edge_layer(1));
    }

    #[test]
    fn zero_patch_is_identity() {
        let net = tiny4();
        let patch = Patch::new(2, Mat::zeros(2, 2));
        assert!(patch.is_zero());
        let patched = net.apply_patch(&patch).unwrap();
        assert_eq!(patched, net);
    }

    #[test]
    fn apply_patch_rejects_shape_mismatch() {
        let net = tiny4();
        let patch = Patch::new(1, Mat::zeros(3, 2));
        assert!(matches!(net.apply_patch(&patch), Err(Error::Dimension(_))));
        let patch = Patch::new(9, Mat::zeros(2, 2));
        assert!(matches!(net.apply_patch(&patch), Err(Error::Index(_))));
    }

    #[test]
    fn constructor_validates_shapes() {
        let layers = vec![
            Layer { width: 2, activation: Activation::Identity, biases: vec![i(0), i(0)] },
            Layer { width: 2, activation: Activation::Identity, biases: vec![i(0), i(0)] },
            Layer { width: 2, activation: Activation::Identity, biases: vec![i(0), i(0)] },
        ];
        let edges = vec![Mat::zeros(2, 2), Mat::zeros(2, 2)];
        // Hidden layer must be relu.
        assert!(Network::new("bad", layers, edges).is_err());

        let layers = vec![Layer {
            width: 1,
            activation: Activation::Identity,
            biases: vec![i(0)],
        }];
        assert!(Network::new("too-short", layers, vec![]).is_err());
    }

    #[test]
    fn minimal_identity_network_works() {
        let layers = vec![
            Layer { width: 1, activation: Activation::Identity, biases: vec![i(0)] },
            Layer { width: 1, activation: Activation::Identity, biases: vec![i(0)] },
        ];
        let edges = vec![Mat::from_rows(vec![vec![i(1)]]).unwrap()];
        let net = Network::new("wire", layers, edges).unwrap();
        let trace = net.forward(&[r(3, 7)]).unwrap();
        assert_eq!(trace.output(), &[r(3, 7)]);
    }
}
