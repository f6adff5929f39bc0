//! Weight initialization for state-transition networks.
//!
//! Stability-informed initialization places the eigenvalues of the
//! zero-bias linearization `κⁿ W_n ⋯ W_1` at a sampled [`EigenSet`]:
//!
//! * each eigenvalue is split into `n` per-layer factors (principal n-th
//!   roots; 2×2 rotation-scaling blocks for conjugate pairs),
//! * the factors form block-diagonal cores `Λ_i`, zero-padded to the layer
//!   shapes, with random input couplings in the first layer,
//! * Haar orthogonal matrices `Π_i` are threaded between layers,
//!   `W_1 = Π_1 Λ_1`, `W_i = Π_i Λ_i Π_{i-1}ᵀ`, `W_n = Λ_n Π_{n-1}ᵀ`, so they
//!   cancel in the product while making every weight dense,
//! * biases are drawn from `U(-ε, ε)`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{eigenvalues, hausdorff_distance, principal_nth_root, sample_haar_orthogonal, Cplx, LinalgError, Mat};
use crate::network::{Activation, FeedforwardNet, Layer, NetDims, NetworkError};
use crate::stability::{sample_stable_eigenvalues, EigenSet, Mode, SamplerConfig, StabilityError};

/// Default bias half-width ε.
pub const DEFAULT_BIAS_BOUND: f64 = 1e-4;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum InitError {
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("eigenvalue set has {found} members but the state dimension is {expected}")]
    EigenCount { expected: usize, found: usize },
}

/// Draw from the open interval `(-bound, bound)`; `bound = 0` yields 0.
pub(crate) fn open_uniform<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> f64 {
    if bound <= 0.0 {
        return 0.0;
    }
    loop {
        let v = rng.random_range(-bound..bound);
        if v.abs() < bound {
            return v;
        }
    }
}

/// Per-layer factor of one mode. The product of the `n` layer factors is the
/// eigenvalue (or conjugate pair).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootFactor {
    /// `μ + jω`; real modes have `ω = 0`.
    pub root: Cplx,
    /// Negate the factor in the last layer. Used for negative real
    /// eigenvalues at even depth, which have no real n-th root.
    pub flip_last: bool,
}

impl RootFactor {
    fn for_mode(mode: Mode, depth: usize) -> Self {
        let n = depth as u32;
        match mode {
            Mode::Pair(lambda) => RootFactor { root: principal_nth_root(lambda, n), flip_last: false },
            Mode::Real(lambda) => {
                let mag = lambda.abs().powf(1.0 / n as f64);
                if lambda >= 0.0 {
                    RootFactor { root: Cplx::new(mag, 0.0), flip_last: false }
                } else if n % 2 == 1 {
                    RootFactor { root: Cplx::new(-mag, 0.0), flip_last: false }
                } else {
                    RootFactor { root: Cplx::new(mag, 0.0), flip_last: true }
                }
            }
        }
    }

    /// Product of all layer factors.
    pub fn realized(&self, depth: usize) -> Cplx {
        let p = self.root.powu(depth as u32);
        if self.flip_last {
            -p
        } else {
            p
        }
    }

    fn is_pair(&self) -> bool {
        self.root.im != 0.0
    }

    /// State rows occupied by this factor.
    fn width(&self) -> usize {
        if self.is_pair() {
            2
        } else {
            1
        }
    }
}

/// Everything needed to assemble the `Λ_i` factors deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiiPlan {
    pub eigenset: EigenSet,
    pub dims: NetDims,
    pub activation: Activation,
    pub root_factors: Vec<RootFactor>,
    /// ζ, the half-width of the input-coupling distribution.
    pub input_bound: f64,
    /// ε, the bias half-width.
    pub bias_bound: f64,
    /// ν entries, `d_x × d_u`, placed in the input columns of `Λ_1`.
    pub input_coupling: Mat,
}

impl SiiPlan {
    pub fn new<R: Rng + ?Sized>(
        eigenset: EigenSet,
        dims: NetDims,
        activation: Activation,
        bias_bound: f64,
        rng: &mut R,
    ) -> Result<Self, InitError> {
        dims.validate()?;
        if eigenset.len() != dims.state_dim {
            return Err(InitError::EigenCount { expected: dims.state_dim, found: eigenset.len() });
        }
        let depth = dims.depth();
        let root_factors: Vec<RootFactor> =
            eigenset.modes().into_iter().map(|m| RootFactor::for_mode(m, depth)).collect();
        // ζ: mean |μ| over the state rows (a pair contributes both of its rows).
        let total: f64 = root_factors.iter().map(|r| r.root.re.abs() * r.width() as f64).sum();
        let input_bound = total / dims.state_dim as f64;
        let mut input_coupling = Mat::zeros(dims.state_dim, dims.input_dim);
        for v in input_coupling.data_mut() {
            *v = open_uniform(rng, input_bound);
        }
        Ok(SiiPlan { eigenset, dims, activation, root_factors, input_bound, bias_bound, input_coupling })
    }

    pub fn depth(&self) -> usize {
        self.dims.depth()
    }

    /// `Λ_i` for the 1-based layer index `i`.
    pub fn build_lambda(&self, layer: usize) -> Result<Mat, InitError> {
        let shapes = self.dims.layer_shapes();
        if layer == 0 || layer > shapes.len() {
            return Err(InitError::Network(NetworkError::Dimension(format!(
                "layer index {layer} out of range 1..={}",
                shapes.len()
            ))));
        }
        let (rows, cols) = shapes[layer - 1];
        let d = self.dims.state_dim;
        if rows < d {
            return Err(InitError::Network(NetworkError::Dimension(format!(
                "layer {layer} has {rows} rows, fewer than the state dimension {d}"
            ))));
        }
        let last = layer == shapes.len();
        let mut m = Mat::zeros(rows, cols);
        let mut k = 0;
        for rf in &self.root_factors {
            let sign = if rf.flip_last && last { -1.0 } else { 1.0 };
            let (mu, omega) = (sign * rf.root.re, sign * rf.root.im);
            if rf.is_pair() {
                m[(k, k)] = mu;
                m[(k, k + 1)] = omega;
                m[(k + 1, k)] = -omega;
                m[(k + 1, k + 1)] = mu;
                k += 2;
            } else {
                m[(k, k)] = mu;
                k += 1;
            }
        }
        if layer == 1 {
            for r in 0..d {
                for j in 0..self.dims.input_dim {
                    m[(r, d + j)] = self.input_coupling[(r, j)];
                }
            }
        }
        Ok(m)
    }

    /// Samples the Haar factors and biases and assembles the network.
    pub fn assemble<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<FeedforwardNet, InitError> {
        let n = self.depth();
        let shapes = self.dims.layer_shapes();
        let lambdas = (1..=n).map(|i| self.build_lambda(i)).collect::<Result<Vec<_>, _>>()?;
        let pis = shapes[..n - 1]
            .iter()
            .map(|&(rows, _)| sample_haar_orthogonal(rows, rng))
            .collect::<Result<Vec<_>, _>>()?;

        let inv_kappa = 1.0 / self.activation.origin_slope();
        let mut layers = Vec::with_capacity(n);
        for i in 0..n {
            let mut w = lambdas[i].clone();
            if i > 0 {
                w = w.matmul(&pis[i - 1].transpose());
            }
            if i < n - 1 {
                w = pis[i].matmul(&w);
            }
            let w = w.scale(inv_kappa);
            let bias = (0..shapes[i].0).map(|_| open_uniform(rng, self.bias_bound)).collect();
            layers.push(Layer { weight: w, bias });
        }
        Ok(FeedforwardNet::new(self.dims.clone(), self.activation, layers)?)
    }
}

/// A network built by stability-informed initialization together with its plan.
#[derive(Debug, Clone)]
pub struct SiiNet {
    pub net: FeedforwardNet,
    pub plan: SiiPlan,
}

/// Stability-informed initialization: samples eigenvalues inside the
/// order-`p` region for step `h` and builds a network realizing them.
pub fn sii_initialize<R: Rng + ?Sized>(
    dims: &NetDims,
    activation: Activation,
    p: u32,
    h: f64,
    use_complex: bool,
    rng: &mut R,
) -> Result<SiiNet, InitError> {
    let cfg = SamplerConfig::new(p, h, dims.state_dim, use_complex);
    sii_initialize_with(dims, activation, &cfg, DEFAULT_BIAS_BOUND, rng)
}

pub fn sii_initialize_with<R: Rng + ?Sized>(
    dims: &NetDims,
    activation: Activation,
    cfg: &SamplerConfig,
    bias_bound: f64,
    rng: &mut R,
) -> Result<SiiNet, InitError> {
    dims.validate()?;
    let eigenset = sample_stable_eigenvalues(cfg, rng)?;
    sii_from_eigenset(dims, activation, eigenset, bias_bound, rng)
}

/// Builds a network whose zero-bias linearization has exactly `eigenset`.
pub fn sii_from_eigenset<R: Rng + ?Sized>(
    dims: &NetDims,
    activation: Activation,
    eigenset: EigenSet,
    bias_bound: f64,
    rng: &mut R,
) -> Result<SiiNet, InitError> {
    let plan = SiiPlan::new(eigenset, dims.clone(), activation, bias_bound, rng)?;
    let net = plan.assemble(rng)?;
    Ok(SiiNet { net, plan })
}

/// Default uniform initialization: every weight and bias of layer `i` from
/// `U(-1/√d_in, 1/√d_in)`, `d_in` being the layer's input width.
pub fn default_initialize<R: Rng + ?Sized>(
    dims: &NetDims,
    activation: Activation,
    rng: &mut R,
) -> Result<FeedforwardNet, InitError> {
    dims.validate()?;
    let layers = dims
        .layer_shapes()
        .into_iter()
        .map(|(rows, cols)| {
            let bound = 1.0 / (cols as f64).sqrt();
            let data = (0..rows * cols).map(|_| open_uniform(rng, bound)).collect();
            let bias = (0..rows).map(|_| open_uniform(rng, bound)).collect();
            Layer { weight: Mat::from_vec(rows, cols, data).expect("shape from dims"), bias }
        })
        .collect();
    Ok(FeedforwardNet::new(dims.clone(), activation, layers)?)
}

/// Eigenvalues of the state block of `κⁿ W_n ⋯ W_1`.
pub fn linearized_eigenvalues(net: &FeedforwardNet) -> Result<Vec<Cplx>, InitError> {
    let prod = net.weight_product();
    Ok(eigenvalues(&prod.top_left(net.state_dim(), net.state_dim()))?)
}

/// Hausdorff distance between the linearization's eigenvalues and `eigenset`,
/// relative to the largest target modulus.
pub fn verify_linearization(net: &FeedforwardNet, eigenset: &EigenSet) -> Result<f64, InitError> {
    let achieved = linearized_eigenvalues(net)?;
    let scale = eigenset.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let dist = hausdorff_distance(&achieved, &eigenset.values);
    Ok(if scale > 0.0 { dist / scale } else { dist })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Cplx> for ComplexValue {
    fn from(z: Cplx) -> Self {
        ComplexValue { re: z.re, im: z.im }
    }
}

/// Initialization report written next to a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitReport {
    pub method: String,
    pub seed: u64,
    pub solver_order: u32,
    pub step_size: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_eigenvalues: Option<Vec<ComplexValue>>,
    pub achieved_eigenvalues: Vec<ComplexValue>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_mismatch: Option<f64>,
}

impl InitReport {
    pub fn for_sii(sii: &SiiNet, seed: u64) -> Result<Self, InitError> {
        let achieved = linearized_eigenvalues(&sii.net)?;
        Ok(InitReport {
            method: "sii".into(),
            seed,
            solver_order: sii.plan.eigenset.solver_order,
            step_size: sii.plan.eigenset.step_size,
            target_eigenvalues: Some(sii.plan.eigenset.values.iter().map(|&v| v.into()).collect()),
            achieved_eigenvalues: achieved.into_iter().map(Into::into).collect(),
            max_mismatch: Some(verify_linearization(&sii.net, &sii.plan.eigenset)?),
        })
    }

    pub fn for_default(net: &FeedforwardNet, seed: u64, solver_order: u32, step_size: f64) -> Result<Self, InitError> {
        let achieved = linearized_eigenvalues(net)?;
        Ok(InitReport {
            method: "default".into(),
            seed,
            solver_order,
            step_size,
            target_eigenvalues: None,
            achieved_eigenvalues: achieved.into_iter().map(Into::into).collect(),
            max_mismatch: None,
        })
    }
}
