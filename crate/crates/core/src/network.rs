//! Feedforward state-transition networks `f(x ⊕ u)`.
//!
//! The network is `W_n σ(… σ(W_1 (x ⊕ u) + b_1) …) + b_n` with one activation
//! shared by every hidden layer and a linear output layer. Parameters are
//! addressed either structurally ([`Layer`]) or through a flat vector whose
//! layout is, per layer in order, the row-major weight entries followed by
//! the bias entries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Mat;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NetworkError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("model file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    /// ELU with α = 1.
    Elu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative. ReLU takes slope 1 at the kink so that the linearization
    /// at a zero reference is the linear-region product.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }

    /// Slope κ at the origin. All supported activations have unit slope there.
    pub fn origin_slope(self) -> f64 {
        1.0
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Activation::Relu => "relu",
            Activation::Elu => "elu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        };
        f.write_str(s)
    }
}

impl FromStr for Activation {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "elu" => Ok(Activation::Elu),
            "tanh" => Ok(Activation::Tanh),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(NetworkError::Parse(format!("unknown activation '{other}'"))),
        }
    }
}

/// Layer widths of a state-transition network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDims {
    pub state_dim: usize,
    pub input_dim: usize,
    pub hidden: Vec<usize>,
}

impl NetDims {
    pub fn new(state_dim: usize, input_dim: usize, hidden: Vec<usize>) -> Result<Self, NetworkError> {
        let dims = NetDims { state_dim, input_dim, hidden };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.state_dim == 0 {
            return Err(NetworkError::Dimension("state dimension must be at least 1".into()));
        }
        if let Some((i, &h)) = self.hidden.iter().enumerate().find(|(_, &h)| h < self.state_dim) {
            return Err(NetworkError::Dimension(format!(
                "hidden layer {} has width {h}, below the state dimension {}; every hidden layer must be at least as wide as the state",
                i + 1,
                self.state_dim
            )));
        }
        Ok(())
    }

    /// Number of weight layers `n`.
    pub fn depth(&self) -> usize {
        self.hidden.len() + 1
    }

    /// `(rows, cols)` of each weight matrix.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut widths = Vec::with_capacity(self.hidden.len() + 2);
        widths.push(self.state_dim + self.input_dim);
        widths.extend_from_slice(&self.hidden);
        widths.push(self.state_dim);
        widths.windows(2).map(|w| (w[1], w[0])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weight: Mat,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedforwardNet {
    dims: NetDims,
    activation: Activation,
    layers: Vec<Layer>,
}

/// Reverse-mode derivatives of `upstreamᵀ f(x ⊕ u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vjp {
    pub weights: Vec<Mat>,
    pub biases: Vec<Vec<f64>>,
    pub dx: Vec<f64>,
    pub du: Vec<f64>,
}

impl FeedforwardNet {
    pub fn new(dims: NetDims, activation: Activation, layers: Vec<Layer>) -> Result<Self, NetworkError> {
        dims.validate()?;
        let shapes = dims.layer_shapes();
        if shapes.len() != layers.len() {
            return Err(NetworkError::Dimension(format!(
                "expected {} layers, got {}",
                shapes.len(),
                layers.len()
            )));
        }
        for (i, ((r, c), layer)) in shapes.iter().zip(&layers).enumerate() {
            if layer.weight.rows() != *r || layer.weight.cols() != *c {
                return Err(NetworkError::Dimension(format!(
                    "layer {} weight is {}x{}, expected {r}x{c}",
                    i + 1,
                    layer.weight.rows(),
                    layer.weight.cols()
                )));
            }
            if layer.bias.len() != *r {
                return Err(NetworkError::Dimension(format!(
                    "layer {} bias has length {}, expected {r}",
                    i + 1,
                    layer.bias.len()
                )));
            }
        }
        Ok(FeedforwardNet { dims, activation, layers })
    }

    /// All-zero parameters.
    pub fn zeros(dims: NetDims, activation: Activation) -> Result<Self, NetworkError> {
        dims.validate()?;
        let layers = dims
            .layer_shapes()
            .into_iter()
            .map(|(r, c)| Layer { weight: Mat::zeros(r, c), bias: vec![0.0; r] })
            .collect();
        FeedforwardNet::new(dims, activation, layers)
    }

    pub fn dims(&self) -> &NetDims {
        &self.dims
    }

    pub fn state_dim(&self) -> usize {
        self.dims.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.dims.input_dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.data().len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.num_params(), "parameter vector length mismatch");
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weight.data().len();
            l.weight.data_mut().copy_from_slice(&params[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[off..off + nb]);
            off += nb;
        }
    }

    /// `κⁿ W_n ⋯ W_1`, the linear-network product (shape `d_x × (d_x + d_u)`).
    pub fn weight_product(&self) -> Mat {
        let mut acc = self.layers[0].weight.clone();
        for l in &self.layers[1..] {
            acc = l.weight.matmul(&acc);
        }
        acc.scale(self.activation.origin_slope().powi(self.layers.len() as i32))
    }

    fn concat_input(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, NetworkError> {
        if x.len() != self.dims.state_dim {
            return Err(NetworkError::Dimension(format!(
                "state has length {}, expected {}",
                x.len(),
                self.dims.state_dim
            )));
        }
        if u.len() != self.dims.input_dim {
            return Err(NetworkError::Dimension(format!(
                "input has length {}, expected {}",
                u.len(),
                self.dims.input_dim
            )));
        }
        let mut z = Vec::with_capacity(x.len() + u.len());
        z.extend_from_slice(x);
        z.extend_from_slice(u);
        Ok(z)
    }

    pub fn forward(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, NetworkError> {
        let mut h = self.concat_input(x, u)?;
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut a = l.weight.matvec(&h);
            for (v, b) in a.iter_mut().zip(&l.bias) {
                *v += b;
            }
            if i < last {
                for v in &mut a {
                    *v = self.activation.apply(*v);
                }
            }
            h = a;
        }
        Ok(h)
    }

    /// Layer inputs (post-activation, starting with `x ⊕ u`) and hidden
    /// pre-activations, as needed by the backward pass.
    fn trace(&self, x: &[f64], u: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), NetworkError> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len() - 1);
        let mut h = self.concat_input(x, u)?;
        for l in &self.layers[..self.layers.len() - 1] {
            let mut a = l.weight.matvec(&h);
            for (v, b) in a.iter_mut().zip(&l.bias) {
                *v += b;
            }
            let next = a.iter().map(|&v| self.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut h, next));
            pre.push(a);
        }
        inputs.push(h);
        Ok((inputs, pre))
    }

    /// Reverse-mode product, adding the parameter cotangent into `grad`
    /// (flat layout) and returning the cotangent of `x ⊕ u`.
    pub fn vjp_accumulate(
        &self,
        x: &[f64],
        u: &[f64],
        upstream: &[f64],
        grad: &mut [f64],
    ) -> Result<Vec<f64>, NetworkError> {
        if upstream.len() != self.dims.state_dim {
            return Err(NetworkError::Dimension(format!(
                "cotangent has length {}, expected {}",
                upstream.len(),
                self.dims.state_dim
            )));
        }
        if grad.len() != self.num_params() {
            return Err(NetworkError::Dimension(format!(
                "gradient buffer has length {}, expected {}",
                grad.len(),
                self.num_params()
            )));
        }
        let (inputs, pre) = self.trace(x, u)?;

        // offsets of each layer in the flat layout
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.weight.data().len() + l.bias.len();
        }

        let mut delta = upstream.to_vec();
        for i in (0..self.layers.len()).rev() {
            let l = &self.layers[i];
            let input = &inputs[i];
            let cols = l.weight.cols();
            let base = offsets[i];
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[base + r * cols..base + (r + 1) * cols];
                for (g, &h) in row.iter_mut().zip(input) {
                    *g += d * h;
                }
            }
            let bias_off = base + l.weight.data().len();
            for (g, &d) in grad[bias_off..bias_off + delta.len()].iter_mut().zip(&delta) {
                *g += d;
            }
            let mut back = l.weight.tr_matvec(&delta);
            if i > 0 {
                for (b, &a) in back.iter_mut().zip(&pre[i - 1]) {
                    *b *= self.activation.derivative(a);
                }
            }
            delta = back;
        }
        Ok(delta)
    }

    pub fn vjp(&self, x: &[f64], u: &[f64], upstream: &[f64]) -> Result<Vjp, NetworkError> {
        let mut grad = vec![0.0; self.num_params()];
        let dz = self.vjp_accumulate(x, u, upstream, &mut grad)?;
        let mut weights = Vec::with_capacity(self.layers.len());
        let mut biases = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            let nw = l.weight.data().len();
            weights.push(Mat::from_vec(l.weight.rows(), l.weight.cols(), grad[off..off + nw].to_vec()).unwrap());
            off += nw;
            biases.push(grad[off..off + l.bias.len()].to_vec());
            off += l.bias.len();
        }
        let dx = dz[..self.dims.state_dim].to_vec();
        let du = dz[self.dims.state_dim..].to_vec();
        Ok(Vjp { weights, biases, dx, du })
    }

    /// Exact Jacobian `∂f/∂x` at `(x0, u0)`, chained layer by layer.
    pub fn jacobian_state(&self, x0: &[f64], u0: &[f64]) -> Result<Mat, NetworkError> {
        let (_, pre) = self.trace(x0, u0)?;
        let d = self.dims.state_dim;
        let mut jac = self.layers[0].weight.top_left(self.layers[0].weight.rows(), d);
        for (i, l) in self.layers.iter().enumerate().skip(1) {
            let slopes = &pre[i - 1];
            for r in 0..jac.rows() {
                let s = self.activation.derivative(slopes[r]);
                for c in 0..d {
                    jac[(r, c)] *= s;
                }
            }
            jac = l.weight.matmul(&jac);
        }
        Ok(jac)
    }
}

/// Provenance stored alongside a serialized model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub seed: Option<u64>,
    pub init_method: String,
    /// Solver order the model was built or trained for.
    pub solver: Option<u32>,
    pub step_size: Option<f64>,
}

/// On-disk JSON form of a [`FeedforwardNet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub state_dim: usize,
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub activation: Activation,
    /// Row-major weight entries per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    #[serde(default)]
    pub meta: ModelMeta,
}

impl ModelFile {
    pub fn from_net(net: &FeedforwardNet, meta: ModelMeta) -> Self {
        ModelFile {
            state_dim: net.dims.state_dim,
            input_dim: net.dims.input_dim,
            hidden_dims: net.dims.hidden.clone(),
            activation: net.activation,
            weights: net.layers.iter().map(|l| l.weight.data().to_vec()).collect(),
            biases: net.layers.iter().map(|l| l.bias.clone()).collect(),
            meta,
        }
    }

    pub fn to_net(&self) -> Result<FeedforwardNet, NetworkError> {
        let dims = NetDims::new(self.state_dim, self.input_dim, self.hidden_dims.clone())?;
        let shapes = dims.layer_shapes();
        if self.weights.len() != shapes.len() || self.biases.len() != shapes.len() {
            return Err(NetworkError::Dimension(format!(
                "model declares {} layers but lists {} weight and {} bias arrays",
                shapes.len(),
                self.weights.len(),
                self.biases.len()
            )));
        }
        let mut layers = Vec::with_capacity(shapes.len());
        for (i, ((r, c), (w, b))) in shapes.iter().zip(self.weights.iter().zip(&self.biases)).enumerate() {
            let weight = Mat::from_vec(*r, *c, w.clone())
                .map_err(|e| NetworkError::Dimension(format!("layer {}: {e}", i + 1)))?;
            layers.push(Layer { weight, bias: b.clone() });
        }
        FeedforwardNet::new(dims, self.activation, layers)
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        serde_json::from_str(text)
            .map_err(|e| NetworkError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }
}
