//! Desk-scale studies: teacher–student regression, learned-pole placement on
//! linear references, and the solver-swap demo.
//!
//! Training is discretize-then-optimize: the student is rolled out with a
//! fixed-step explicit solver and the summed squared error is backpropagated
//! through every Runge–Kutta stage.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::init::{default_initialize, sii_from_eigenset, sii_initialize, InitError, DEFAULT_BIAS_BOUND};
use crate::linalg::{eigenvalues, sample_haar_orthogonal, Cplx, LinalgError, Mat};
use crate::network::{Activation, FeedforwardNet, ModelFile, ModelMeta, NetDims, NetworkError};
use crate::parallel;
use crate::solver::{
    fmt_f64, integrate_dopri, integrate_fixed, norm, rk_step_recorded, ButcherTableau, InputSignal, InterpMode,
    SolverError, SolverKind, Trajectory, VectorField,
};
use crate::stability::{
    amplification, model_poles, sample_stable_eigenvalues, sample_unstable_eigenvalues, EigenSet, Mode, PoleRecord,
    SamplerConfig, StabilityError,
};

/// Teacher integration tolerances.
pub const TEACHER_RTOL: f64 = 1e-6;
pub const TEACHER_ATOL: f64 = 1e-8;

/// A rollout whose state norm exceeds this is treated as diverged.
pub const DIVERGENCE_NORM: f64 = 1e6;

/// Substeps per sample used when generating linear-reference data with RK4.
const REFERENCE_SUBSTEPS: usize = 10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("simulation of sequence {sequence} failed: {source}")]
    Simulation { sequence: usize, source: SolverError },
    #[error("training diverged in epoch {epoch}: {diverged} of {windows} windows")]
    TrainingDiverged { epoch: usize, diverged: usize, windows: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}

/// `ẋ = A x + B u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    pub a: Mat,
    pub b: Mat,
}

impl LinearSystem {
    pub fn new(a: Mat, b: Mat) -> Result<Self, ExperimentError> {
        if !a.is_square() {
            return Err(ExperimentError::InvalidConfig(format!("A must be square, got {}x{}", a.rows(), a.cols())));
        }
        if b.rows() != a.rows() {
            return Err(ExperimentError::InvalidConfig(format!(
                "B has {} rows but A is {}x{}",
                b.rows(),
                a.rows(),
                a.cols()
            )));
        }
        Ok(LinearSystem { a, b })
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn poles(&self) -> Result<Vec<Cplx>, ExperimentError> {
        Ok(eigenvalues(&self.a)?)
    }
}

impl VectorField for LinearSystem {
    fn eval(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut dx = self.a.matvec(x);
        if self.b.cols() > 0 {
            for (d, v) in dx.iter_mut().zip(self.b.matvec(u)) {
                *d += v;
            }
        }
        dx
    }
}

/// Real block-diagonal matrix with the given eigenvalues: a 1×1 entry per real
/// mode and `[[μ, ω], [-ω, μ]]` per conjugate pair.
pub fn modal_matrix(eigs: &EigenSet) -> Mat {
    let d = eigs.len();
    let mut m = Mat::zeros(d, d);
    let mut k = 0;
    for mode in eigs.modes() {
        match mode {
            Mode::Real(v) => {
                m[(k, k)] = v;
                k += 1;
            }
            Mode::Pair(z) => {
                m[(k, k)] = z.re;
                m[(k, k + 1)] = z.im;
                m[(k + 1, k)] = -z.im;
                m[(k + 1, k + 1)] = z.re;
                k += 2;
            }
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// One input sequence and the state trajectory it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub input: InputSignal,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sequences: Vec<Sequence>,
    pub dt: f64,
    pub split: Split,
}

impl Dataset {
    /// Hash of every bit of every time, input and state.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.dt.to_bits().hash(&mut h);
        for s in &self.sequences {
            for t in s.input.times() {
                t.to_bits().hash(&mut h);
            }
            for v in s.input.values().iter().flatten() {
                v.to_bits().hash(&mut h);
            }
            for t in &s.trajectory.times {
                t.to_bits().hash(&mut h);
            }
            for v in s.trajectory.states.iter().flatten() {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

/// PWM waveform sampled at `k Δt` for `k = 0..n`, plus Gaussian noise.
///
/// `w(t) = amplitude` while `(t mod period) / period < duty`, else 0.
pub fn gen_pwm_input<R: Rng + ?Sized>(
    n: usize,
    dt: f64,
    period: f64,
    duty: f64,
    amplitude: f64,
    noise_std: f64,
    rng: &mut R,
) -> Result<InputSignal, ExperimentError> {
    if n == 0 || !(duty > 0.0 && duty < 1.0) || !(period > 0.0) || !(dt > 0.0) || !(noise_std >= 0.0) {
        return Err(ExperimentError::InvalidConfig(format!(
            "pwm needs n >= 1, 0 < duty < 1, period > 0, dt > 0, noise >= 0 (got n={n}, duty={duty}, period={period}, dt={dt}, noise={noise_std})"
        )));
    }
    let noise = Normal::new(0.0, noise_std).expect("checked std");
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let values = times
        .iter()
        .map(|&t| {
            let w = if t.rem_euclid(period) / period < duty { amplitude } else { 0.0 };
            let v = if noise_std > 0.0 { noise.sample(rng) } else { 0.0 };
            vec![w + v]
        })
        .collect();
    Ok(InputSignal::new(times, values, InterpMode::Linear)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeacherMode {
    InsideRegion,
    OutsideRegion,
}

/// Teacher network built with the block technique, with eigenvalues inside
/// or outside the order-`p` region for step `h`.
pub fn make_teacher<R: Rng + ?Sized>(
    dims: &NetDims,
    activation: Activation,
    p: u32,
    h: f64,
    mode: TeacherMode,
    rng: &mut R,
) -> Result<FeedforwardNet, ExperimentError> {
    dims.validate()?;
    let cfg = SamplerConfig::new(p, h, dims.state_dim, true);
    let eigs = match mode {
        TeacherMode::InsideRegion => sample_stable_eigenvalues(&cfg, rng)?,
        TeacherMode::OutsideRegion => sample_unstable_eigenvalues(&cfg, rng)?,
    };
    Ok(sii_from_eigenset(dims, activation, eigs, DEFAULT_BIAS_BOUND, rng)?.net)
}

/// Dormand–Prince simulation sampled at `k Δt`, `k = 0..=n`.
pub fn simulate_teacher<F: VectorField + ?Sized>(
    teacher: &F,
    x0: &[f64],
    sig: &InputSignal,
    dt: f64,
    n: usize,
) -> Result<Trajectory, SolverError> {
    if n == 0 {
        return Ok(Trajectory { times: vec![0.0], states: vec![x0.to_vec()] });
    }
    integrate_dopri(teacher, x0, sig, n as f64 * dt, TEACHER_RTOL, TEACHER_ATOL, dt)
}

/// Fixed-step RK4 simulation with `REFERENCE_SUBSTEPS` substeps per sample.
fn simulate_reference(sys: &LinearSystem, x0: &[f64], sig: &InputSignal, dt: f64, n: usize) -> Result<Trajectory, SolverError> {
    let fine = integrate_fixed(&ButcherTableau::rk4(), sys, x0, sig, dt / REFERENCE_SUBSTEPS as f64, n * REFERENCE_SUBSTEPS)?;
    Ok(Trajectory {
        times: (0..=n).map(|k| k as f64 * dt).collect(),
        states: fine.states.into_iter().step_by(REFERENCE_SUBSTEPS).collect(),
    })
}

/// Input waveform parameters; period and duty are drawn per sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PwmConfig {
    pub period_range: (f64, f64),
    pub duty_range: (f64, f64),
    pub amplitude: f64,
    pub noise_std: f64,
}

impl Default for PwmConfig {
    fn default() -> Self {
        PwmConfig { period_range: (0.5, 2.0), duty_range: (0.2, 0.8), amplitude: 1.0, noise_std: 0.1 }
    }
}

/// Sequence counts and sampling grid shared by both data generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub dt: f64,
    /// Steps per sequence; each sequence has `samples + 1` points.
    pub samples: usize,
    pub train_sequences: usize,
    pub test_sequences: usize,
    pub pwm: PwmConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { dt: 0.1, samples: 100, train_sequences: 20, test_sequences: 5, pwm: PwmConfig::default() }
    }
}

impl DataConfig {
    fn validate(&self) -> Result<(), ExperimentError> {
        let p = &self.pwm;
        if !(self.dt > 0.0) || self.samples == 0 || self.train_sequences == 0 || self.test_sequences == 0 {
            return Err(ExperimentError::InvalidConfig(
                "data needs dt > 0 and at least one sample, train sequence and test sequence".into(),
            ));
        }
        if !(p.period_range.0 > 0.0 && p.period_range.0 <= p.period_range.1) {
            return Err(ExperimentError::InvalidConfig(format!("bad period range {:?}", p.period_range)));
        }
        if !(p.duty_range.0 > 0.0 && p.duty_range.0 <= p.duty_range.1 && p.duty_range.1 < 1.0) {
            return Err(ExperimentError::InvalidConfig(format!("bad duty range {:?}", p.duty_range)));
        }
        Ok(())
    }
}

fn uniform_in<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Generates train and test splits: PWM inputs with `d_u` channels,
/// `x0 ~ U[0, 1)`, trajectories from `simulate`.
fn generate_datasets<R, S>(
    cfg: &DataConfig,
    state_dim: usize,
    input_dim: usize,
    rng: &mut R,
    simulate: S,
) -> Result<(Dataset, Dataset), ExperimentError>
where
    R: Rng + ?Sized,
    S: Fn(&[f64], &InputSignal) -> Result<Trajectory, SolverError>,
{
    cfg.validate()?;
    let total = cfg.train_sequences + cfg.test_sequences;
    let mut sequences = Vec::with_capacity(total);
    for i in 0..total {
        let input = if input_dim == 0 {
            InputSignal::none()
        } else {
            let channels = (0..input_dim)
                .map(|_| {
                    let period = uniform_in(rng, cfg.pwm.period_range);
                    let duty = uniform_in(rng, cfg.pwm.duty_range);
                    gen_pwm_input(cfg.samples + 1, cfg.dt, period, duty, cfg.pwm.amplitude, cfg.pwm.noise_std, rng)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let times = channels[0].times().to_vec();
            let values = (0..times.len()).map(|k| channels.iter().map(|c| c.values()[k][0]).collect()).collect();
            InputSignal::new(times, values, InterpMode::Linear)?
        };
        let x0: Vec<f64> = (0..state_dim).map(|_| rng.random_range(0.0..1.0)).collect();
        let trajectory = simulate(&x0, &input).map_err(|source| ExperimentError::Simulation { sequence: i, source })?;
        sequences.push(Sequence { input, trajectory });
    }
    let test = sequences.split_off(cfg.train_sequences);
    Ok((
        Dataset { sequences, dt: cfg.dt, split: Split::Train },
        Dataset { sequences: test, dt: cfg.dt, split: Split::Test },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub solver_order: u32,
    pub step_size: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Samples per training window; `None` uses the whole sequence.
    pub horizon: Option<usize>,
    /// Windows per parameter update.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            solver_order: 1,
            step_size: 0.1,
            epochs: 300,
            learning_rate: 1e-3,
            optimizer: Optimizer::Adam,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            horizon: None,
            batch_size: 1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), ExperimentError> {
        if SolverKind::from_order(self.solver_order).is_none() {
            return Err(ExperimentError::InvalidConfig(format!("solver order must be 1..=4, got {}", self.solver_order)));
        }
        if !(self.step_size > 0.0) || self.epochs == 0 || self.batch_size == 0 || self.horizon == Some(0) {
            return Err(ExperimentError::InvalidConfig(
                "step size, epochs, batch size and horizon must be positive".into(),
            ));
        }
        if !(self.learning_rate >= 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(ExperimentError::InvalidConfig("invalid optimizer hyperparameters".into()));
        }
        Ok(())
    }

    /// Solver steps per sample interval.
    fn substeps(&self, dt: f64) -> Result<usize, ExperimentError> {
        let r = dt / self.step_size;
        let n = r.round();
        if n < 1.0 || (r - n).abs() > 1e-9 * r {
            return Err(ExperimentError::InvalidConfig(format!(
                "sampling period {dt} is not a multiple of the step size {}",
                self.step_size
            )));
        }
        Ok(n as usize)
    }
}

/// A stretch of one sequence: start index and number of predicted samples.
#[derive(Debug, Clone, Copy)]
struct Window {
    seq: usize,
    start: usize,
    len: usize,
}

fn windows(data: &Dataset, horizon: Option<usize>) -> Result<Vec<Window>, ExperimentError> {
    let mut out = Vec::new();
    for (seq, s) in data.sequences.iter().enumerate() {
        let steps = s.trajectory.len().saturating_sub(1);
        if steps == 0 {
            continue;
        }
        let hz = horizon.unwrap_or(steps);
        if hz > steps {
            return Err(ExperimentError::InvalidConfig(format!("horizon {hz} exceeds sequence length {steps}")));
        }
        let mut start = 0;
        while start + hz <= steps {
            out.push(Window { seq, start, len: hz });
            start += hz;
        }
    }
    if out.is_empty() {
        return Err(ExperimentError::InvalidConfig("dataset has no usable windows".into()));
    }
    Ok(out)
}

/// Summed squared error of one rollout; with `grad`, also accumulates its
/// parameter gradient. `None` means the rollout diverged.
fn window_loss(
    net: &FeedforwardNet,
    tab: &ButcherTableau,
    data: &Dataset,
    w: Window,
    h: f64,
    substeps: usize,
    grad: Option<&mut [f64]>,
) -> Option<f64> {
    let seq = &data.sequences[w.seq];
    let targets = &seq.trajectory.states;
    let d = net.state_dim();
    let t0 = w.start as f64 * data.dt;
    let mut x = targets[w.start].clone();
    let keep = grad.is_some();
    let mut records = Vec::with_capacity(if keep { w.len * substeps } else { 0 });
    let mut residuals = Vec::with_capacity(w.len);
    let mut loss = 0.0;
    for k in 0..w.len {
        for s in 0..substeps {
            let t = t0 + (k * substeps + s) as f64 * h;
            let rec = rk_step_recorded(tab, net, t, &x, h, &seq.input).ok()?;
            x = rec.next.clone();
            if keep {
                records.push(rec);
            }
        }
        if !(norm(&x) <= DIVERGENCE_NORM) {
            return None;
        }
        let r: Vec<f64> = x.iter().zip(&targets[w.start + k + 1]).map(|(a, b)| a - b).collect();
        loss += r.iter().map(|v| v * v).sum::<f64>();
        residuals.push(r);
    }
    let Some(grad) = grad else { return Some(loss) };

    // reverse pass through every stage of every step
    let mut lam = vec![0.0; d];
    for m in (0..records.len()).rev() {
        if (m + 1) % substeps == 0 {
            let k = (m + 1) / substeps - 1;
            for (l, r) in lam.iter_mut().zip(&residuals[k]) {
                *l += 2.0 * r;
            }
        }
        let rec = &records[m];
        let stages = tab.stages();
        let mut dk: Vec<Vec<f64>> = tab.b.iter().map(|&b| lam.iter().map(|l| h * b * l).collect()).collect();
        let mut dx = lam.clone();
        for i in (0..stages).rev() {
            if dk[i].iter().all(|v| *v == 0.0) {
                continue;
            }
            let dz = net
                .vjp_accumulate(&rec.stage_states[i], &rec.stage_inputs[i], &dk[i], grad)
                .expect("dimensions fixed by the rollout");
            let dy = &dz[..d];
            for (a, b) in dx.iter_mut().zip(dy) {
                *a += b;
            }
            for j in 0..i {
                let aij = tab.a[i][j];
                if aij != 0.0 {
                    for (a, b) in dk[j].iter_mut().zip(dy) {
                        *a += h * aij * b;
                    }
                }
            }
        }
        lam = dx;
    }
    Some(loss)
}

/// Mean summed squared error over the dataset's windows with its gradient.
/// Diverged windows are skipped; the second value counts them.
pub fn loss_and_gradient(
    net: &FeedforwardNet,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(f64, Vec<f64>, usize), ExperimentError> {
    cfg.validate()?;
    let tab = ButcherTableau::for_order(cfg.solver_order)?;
    let substeps = cfg.substeps(data.dt)?;
    let ws = windows(data, cfg.horizon)?;
    let mut grad = vec![0.0; net.num_params()];
    let (mut loss, mut ok) = (0.0, 0usize);
    for &w in &ws {
        if let Some(l) = window_loss(net, &tab, data, w, cfg.step_size, substeps, Some(&mut grad)) {
            loss += l;
            ok += 1;
        }
    }
    if ok == 0 {
        return Ok((f64::INFINITY, grad, ws.len()));
    }
    let inv = 1.0 / ok as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    Ok((loss * inv, grad, ws.len() - ok))
}

/// Mean window loss; infinite if any window diverges.
pub fn evaluate_loss(net: &FeedforwardNet, data: &Dataset, cfg: &TrainConfig) -> Result<f64, ExperimentError> {
    cfg.validate()?;
    let tab = ButcherTableau::for_order(cfg.solver_order)?;
    let substeps = cfg.substeps(data.dt)?;
    let ws = windows(data, cfg.horizon)?;
    let mut total = 0.0;
    for &w in &ws {
        match window_loss(net, &tab, data, w, cfg.step_size, substeps, None) {
            Some(l) => total += l,
            None => return Ok(f64::INFINITY),
        }
    }
    Ok(total / ws.len() as f64)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub net: FeedforwardNet,
    /// Parameters at the minimum test loss.
    pub best_net: FeedforwardNet,
    /// Test loss before training, then after each epoch.
    pub loss_curve: Vec<f64>,
    pub min_test_loss: f64,
    pub epoch_of_min: usize,
    pub diverged_windows: usize,
}

impl TrainOutcome {
    pub fn running_min(&self) -> Vec<f64> {
        running_min(&self.loss_curve)
    }
}

pub fn running_min(curve: &[f64]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    curve
        .iter()
        .map(|&v| {
            if v < best {
                best = v;
            }
            best
        })
        .collect()
}

struct OptimizerState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl OptimizerState {
    fn new(n: usize) -> Self {
        OptimizerState { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, cfg: &TrainConfig, params: &mut [f64], grad: &[f64]) {
        match cfg.optimizer {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= cfg.learning_rate * g;
                }
            }
            Optimizer::Adam => {
                self.t += 1;
                let c1 = 1.0 - cfg.beta1.powi(self.t);
                let c2 = 1.0 - cfg.beta2.powi(self.t);
                for i in 0..params.len() {
                    let g = grad[i];
                    self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
                    self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
                    let mh = self.m[i] / c1;
                    let vh = self.v[i] / c2;
                    params[i] -= cfg.learning_rate * mh / (vh.sqrt() + cfg.eps);
                }
            }
        }
    }
}

/// Trains `student` on `train`, evaluating on `test` before training and
/// after every epoch. Windows are shuffled per epoch with `cfg.seed`.
pub fn train_student(
    student: FeedforwardNet,
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, ExperimentError> {
    cfg.validate()?;
    let tab = ButcherTableau::for_order(cfg.solver_order)?;
    let substeps = cfg.substeps(train.dt)?;
    if (test.dt - train.dt).abs() > 1e-12 * train.dt {
        return Err(ExperimentError::InvalidConfig("train and test sampling periods differ".into()));
    }
    let mut order = windows(train, cfg.horizon)?;
    windows(test, cfg.horizon)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = student;
    let mut params = net.params();
    let mut opt = OptimizerState::new(params.len());
    let mut grad = vec![0.0; params.len()];

    let first = evaluate_loss(&net, test, cfg)?;
    let mut loss_curve = vec![first];
    let mut best_net = net.clone();
    let (mut best, mut epoch_of_min) = (first, 0);
    let mut diverged_windows = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut diverged = 0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut ok = 0;
            for &w in batch {
                match window_loss(&net, &tab, train, w, cfg.step_size, substeps, Some(&mut grad)) {
                    Some(_) => ok += 1,
                    None => diverged += 1,
                }
            }
            if ok == 0 {
                continue;
            }
            let inv = 1.0 / ok as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            opt.step(cfg, &mut params, &grad);
            net.set_params(&params);
        }
        diverged_windows += diverged;
        if 2 * diverged > order.len() {
            return Err(ExperimentError::TrainingDiverged { epoch, diverged, windows: order.len() });
        }
        let l = evaluate_loss(&net, test, cfg)?;
        loss_curve.push(l);
        if l < best {
            best = l;
            epoch_of_min = epoch;
            best_net = net.clone();
        }
    }
    Ok(TrainOutcome { net, best_net, loss_curve, min_test_loss: best, epoch_of_min, diverged_windows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    Sii,
    Default,
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMethod::Sii => "sii",
            InitMethod::Default => "default",
        })
    }
}

/// Study configuration. Unset fields take the desk-scale defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub master_seed: u64,
    pub seeds: usize,
    pub state_dim: usize,
    pub input_dim: usize,
    pub activation: Activation,
    pub teacher_hidden: Vec<usize>,
    pub student_hidden: Vec<usize>,
    pub teacher_mode: TeacherMode,
    /// Solver order and step whose region the teacher is placed against.
    pub teacher_order: u32,
    pub teacher_step: f64,
    /// Solver orders trained in the linear-pole study.
    pub solvers: Vec<u32>,
    pub data: DataConfig,
    pub train: TrainConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig::teacher_student()
    }
}

impl StudyConfig {
    /// Matched 2×32 teacher and student, teacher inside the Euler region.
    pub fn teacher_student() -> Self {
        StudyConfig {
            master_seed: 0,
            seeds: 30,
            state_dim: 4,
            input_dim: 1,
            activation: Activation::Elu,
            teacher_hidden: vec![32, 32],
            student_hidden: vec![32, 32],
            teacher_mode: TeacherMode::InsideRegion,
            teacher_order: 1,
            teacher_step: 0.1,
            solvers: vec![1],
            data: DataConfig::default(),
            train: TrainConfig::default(),
        }
    }

    /// Teacher outside all regions, under-parameterized 1×16 student.
    pub fn teacher_student_outside() -> Self {
        StudyConfig {
            teacher_mode: TeacherMode::OutsideRegion,
            teacher_order: 4,
            student_hidden: vec![16],
            ..StudyConfig::teacher_student()
        }
    }

    /// Three-state linear references outside each of EF, MP and RK3.
    pub fn linear_poles() -> Self {
        StudyConfig {
            seeds: 20,
            state_dim: 3,
            input_dim: 1,
            teacher_hidden: vec![],
            student_hidden: vec![16],
            teacher_mode: TeacherMode::OutsideRegion,
            solvers: vec![1, 2, 3],
            ..StudyConfig::teacher_student()
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.seeds == 0 {
            return Err(ExperimentError::InvalidConfig("at least one seed is required".into()));
        }
        if self.solvers.iter().any(|&p| SolverKind::from_order(p).is_none()) {
            return Err(ExperimentError::InvalidConfig(format!("solver orders must be 1..=4, got {:?}", self.solvers)));
        }
        if !(self.teacher_step > 0.0) {
            return Err(ExperimentError::InvalidConfig("teacher step must be positive".into()));
        }
        self.data.validate()?;
        self.train.validate()?;
        Ok(())
    }

    fn student_dims(&self) -> Result<NetDims, ExperimentError> {
        Ok(NetDims::new(self.state_dim, self.input_dim, self.student_hidden.clone())?)
    }

    fn seed_values(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.master_seed.wrapping_add(i)).collect()
    }
}

/// RNG for one seed; separate streams keep the teacher, data and each
/// student's initialization independent of one another.
fn seed_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_DATA: u64 = 0;
const STREAM_SII: u64 = 1;
const STREAM_DEFAULT: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub seed: u64,
    pub init_method: InitMethod,
    pub min_test_loss: f64,
    pub epoch_of_min: usize,
    pub diverged_windows: usize,
    pub loss_curve: Vec<f64>,
    /// Set when training or data generation failed for this seed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub init_method: InitMethod,
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// A file produced for one seed, relative to that seed's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    /// Sorted by seed, then method.
    pub records: Vec<StudyRecord>,
    pub summary: Vec<MethodSummary>,
    pub failed_seeds: Vec<u64>,
    pub artifacts: Vec<(u64, Vec<Artifact>)>,
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

impl StudyResult {
    fn assemble(mut records: Vec<StudyRecord>, mut artifacts: Vec<(u64, Vec<Artifact>)>) -> Self {
        records.sort_by_key(|r| (r.seed, r.init_method));
        artifacts.sort_by_key(|a| a.0);
        let mut failed_seeds: Vec<u64> = records.iter().filter(|r| r.error.is_some()).map(|r| r.seed).collect();
        failed_seeds.dedup();
        let mut methods: Vec<InitMethod> = records.iter().map(|r| r.init_method).collect();
        methods.sort();
        methods.dedup();
        let summary = methods
            .into_iter()
            .map(|m| {
                let mut v: Vec<f64> = records
                    .iter()
                    .filter(|r| r.init_method == m && !failed_seeds.contains(&r.seed))
                    .map(|r| r.min_test_loss)
                    .collect();
                v.sort_by(f64::total_cmp);
                MethodSummary {
                    init_method: m,
                    count: v.len(),
                    median: quantile(&v, 0.5),
                    q1: quantile(&v, 0.25),
                    q3: quantile(&v, 0.75),
                }
            })
            .collect();
        StudyResult { records, summary, failed_seeds, artifacts }
    }

    pub fn median_of(&self, method: InitMethod) -> Option<f64> {
        self.summary.iter().find(|s| s.init_method == method).map(|s| s.median)
    }

    /// `seed,init_method,min_test_loss,epoch_of_min,diverged_windows`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("seed,init_method,min_test_loss,epoch_of_min,diverged_windows\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.seed,
                r.init_method,
                fmt_f64(r.min_test_loss),
                r.epoch_of_min,
                r.diverged_windows
            ));
        }
        out
    }

    /// Per-method median and quartiles over the seeds that succeeded.
    pub fn stats_csv(&self) -> String {
        let mut out = String::from("init_method,count,median,q1,q3,failed_seeds\n");
        for s in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.init_method,
                s.count,
                fmt_f64(s.median),
                fmt_f64(s.q1),
                fmt_f64(s.q3),
                self.failed_seeds.len()
            ));
        }
        out
    }

    /// Writes `summary.csv`, `stats.csv` and every seed's artifacts under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.csv"), self.summary_csv())?;
        fs::write(dir.join("stats.csv"), self.stats_csv())?;
        for (seed, files) in &self.artifacts {
            let sd = dir.join(seed.to_string());
            fs::create_dir_all(&sd)?;
            for a in files {
                fs::write(sd.join(&a.name), &a.contents)?;
            }
        }
        Ok(())
    }
}

fn model_json(net: &FeedforwardNet, seed: u64, method: &str, p: u32, h: f64) -> String {
    let meta = ModelMeta { seed: Some(seed), init_method: method.into(), solver: Some(p), step_size: Some(h) };
    ModelFile::from_net(net, meta).to_json()
}

fn poles_json(poles: &[PoleRecord]) -> String {
    serde_json::to_string_pretty(poles).expect("pole serialization cannot fail")
}

fn losses_csv(columns: &[(&str, &[f64])]) -> String {
    let mut out = String::from("epoch");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let rows = columns.iter().map(|c| c.1.len()).max().unwrap_or(0);
    for e in 0..rows {
        out.push_str(&e.to_string());
        for (_, c) in columns {
            out.push(',');
            out.push_str(&c.get(e).map_or(String::new(), |v| fmt_f64(*v)));
        }
        out.push('\n');
    }
    out
}

fn failed_record(seed: u64, method: InitMethod, e: &ExperimentError) -> StudyRecord {
    StudyRecord {
        seed,
        init_method: method,
        min_test_loss: f64::NAN,
        epoch_of_min: 0,
        diverged_windows: 0,
        loss_curve: Vec::new(),
        error: Some(e.to_string()),
    }
}

fn record_from(seed: u64, method: InitMethod, o: &TrainOutcome) -> StudyRecord {
    StudyRecord {
        seed,
        init_method: method,
        min_test_loss: o.min_test_loss,
        epoch_of_min: o.epoch_of_min,
        diverged_windows: o.diverged_windows,
        loss_curve: o.loss_curve.clone(),
        error: None,
    }
}

/// Teacher, paired datasets and both students for one seed.
fn teacher_student_seed(cfg: &StudyConfig, seed: u64) -> (Vec<StudyRecord>, Vec<Artifact>) {
    let fail_both = |e: ExperimentError| {
        (vec![failed_record(seed, InitMethod::Sii, &e), failed_record(seed, InitMethod::Default, &e)], Vec::new())
    };
    let mut rng = seed_rng(seed, STREAM_DATA);
    let setup = (|| {
        let tdims = NetDims::new(cfg.state_dim, cfg.input_dim, cfg.teacher_hidden.clone())?;
        let teacher = make_teacher(&tdims, cfg.activation, cfg.teacher_order, cfg.teacher_step, cfg.teacher_mode, &mut rng)?;
        let (train, test) = generate_datasets(&cfg.data, cfg.state_dim, cfg.input_dim, &mut rng, |x0, sig| {
            simulate_teacher(&teacher, x0, sig, cfg.data.dt, cfg.data.samples)
        })?;
        Ok::<_, ExperimentError>((teacher, train, test))
    })();
    let (teacher, train, test) = match setup {
        Ok(v) => v,
        Err(e) => return fail_both(e),
    };
    let sdims = match cfg.student_dims() {
        Ok(d) => d,
        Err(e) => return fail_both(e),
    };
    let (p, h) = (cfg.train.solver_order, cfg.train.step_size);
    let tcfg = TrainConfig { seed, ..cfg.train.clone() };

    let mut artifacts = vec![
        Artifact { name: "model.json".into(), contents: model_json(&teacher, seed, "teacher", cfg.teacher_order, cfg.teacher_step) },
    ];
    if let Ok(poles) = model_poles(&teacher, h, p) {
        artifacts.push(Artifact { name: "poles.json".into(), contents: poles_json(&poles) });
    }

    let mut records = Vec::with_capacity(2);
    let mut curves: Vec<(InitMethod, Vec<f64>)> = Vec::new();
    for method in [InitMethod::Sii, InitMethod::Default] {
        let outcome = (|| {
            let student = match method {
                InitMethod::Sii => sii_initialize(&sdims, cfg.activation, p, h, true, &mut seed_rng(seed, STREAM_SII))?.net,
                InitMethod::Default => default_initialize(&sdims, cfg.activation, &mut seed_rng(seed, STREAM_DEFAULT))?,
            };
            train_student(student, &train, &test, &tcfg)
        })();
        match outcome {
            Ok(o) => {
                records.push(record_from(seed, method, &o));
                artifacts.push(Artifact {
                    name: format!("student_{method}.json"),
                    contents: model_json(&o.best_net, seed, &method.to_string(), p, h),
                });
                if let Ok(poles) = model_poles(&o.best_net, h, p) {
                    artifacts.push(Artifact { name: format!("poles_{method}.json"), contents: poles_json(&poles) });
                }
                curves.push((method, o.loss_curve));
            }
            Err(e) => records.push(failed_record(seed, method, &e)),
        }
    }
    let cols: Vec<(&str, &[f64])> = curves
        .iter()
        .map(|(m, c)| (if *m == InitMethod::Sii { "sii" } else { "default" }, c.as_slice()))
        .collect();
    artifacts.push(Artifact { name: "losses.csv".into(), contents: losses_csv(&cols) });
    (records, artifacts)
}

/// Trains one SII and one default student per seed on data from a shared
/// teacher. Per-seed failures are recorded, not fatal.
pub fn run_teacher_student_study(cfg: &StudyConfig) -> Result<StudyResult, ExperimentError> {
    cfg.validate()?;
    cfg.student_dims()?;
    let per_seed = parallel::map(&cfg.seed_values(), |&s| teacher_student_seed(cfg, s));
    let (records, artifacts): (Vec<_>, Vec<_>) = per_seed
        .into_iter()
        .zip(cfg.seed_values())
        .map(|((r, a), s)| (r, (s, a)))
        .unzip();
    Ok(StudyResult::assemble(records.into_iter().flatten().collect(), artifacts))
}

/// `A = Qᵀ Λ Q` with eigenvalues outside (or inside) the order-`p` region for
/// step `h`, `Q` Haar orthogonal, `B ~ U(-1, 1)` of shape `d × d_u`.
pub fn make_random_linear_system<R: Rng + ?Sized>(
    d: usize,
    input_dim: usize,
    p: u32,
    h: f64,
    mode: TeacherMode,
    rng: &mut R,
) -> Result<(LinearSystem, EigenSet), ExperimentError> {
    if d == 0 {
        return Err(ExperimentError::InvalidConfig("state dimension must be at least 1".into()));
    }
    let cfg = SamplerConfig::new(p, h, d, true);
    let eigs = match mode {
        TeacherMode::InsideRegion => sample_stable_eigenvalues(&cfg, rng)?,
        TeacherMode::OutsideRegion => sample_unstable_eigenvalues(&cfg, rng)?,
    };
    let q = sample_haar_orthogonal(d, rng)?;
    let a = q.transpose().matmul(&modal_matrix(&eigs)).matmul(&q);
    let b_data = (0..d * input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = Mat::from_vec(d, input_dim, b_data)?;
    Ok((LinearSystem::new(a, b)?, eigs))
}

/// One row of the pole table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleRow {
    pub solver: SolverKind,
    pub seed: u64,
    /// `learned` or `reference`.
    pub kind: String,
    pub pole: PoleRecord,
    pub abs_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleStudyResult {
    /// One training study per solver, in configured order.
    pub per_solver: Vec<(SolverKind, StudyResult)>,
    pub poles: Vec<PoleRow>,
}

impl PoleStudyResult {
    pub fn learned(&self, solver: SolverKind) -> impl Iterator<Item = &PoleRow> {
        self.poles.iter().filter(move |r| r.solver == solver && r.kind == "learned")
    }

    pub fn poles_csv(&self) -> String {
        let mut out = String::from("solver,seed,kind,re,im,z_re,z_im,inside,absR\n");
        for r in &self.poles {
            let p = &r.pole;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.solver,
                r.seed,
                r.kind,
                fmt_f64(p.re),
                fmt_f64(p.im),
                fmt_f64(p.z_re),
                fmt_f64(p.z_im),
                p.inside,
                fmt_f64(r.abs_r)
            ));
        }
        out
    }

    /// Writes `poles.csv` and one results tree per solver under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("poles.csv"), self.poles_csv())?;
        for (solver, res) in &self.per_solver {
            res.write(&dir.join(solver.to_string()))?;
        }
        Ok(())
    }
}

fn pole_rows(solver: SolverKind, seed: u64, kind: &str, poles: &[PoleRecord]) -> Vec<PoleRow> {
    poles
        .iter()
        .map(|&pole| PoleRow {
            solver,
            seed,
            kind: kind.into(),
            pole,
            abs_r: amplification(solver.order(), pole.z()).expect("valid order"),
        })
        .collect()
}

fn linear_pole_seed(cfg: &StudyConfig, solver: SolverKind, seed: u64) -> (StudyRecord, Vec<Artifact>, Vec<PoleRow>) {
    let p = solver.order();
    let h = cfg.train.step_size;
    let run = || {
        let mut rng = seed_rng(seed, STREAM_DATA);
        let (sys, eigs) = make_random_linear_system(cfg.state_dim, cfg.input_dim, p, h, cfg.teacher_mode, &mut rng)?;
        let (train, test) = generate_datasets(&cfg.data, cfg.state_dim, cfg.input_dim, &mut rng, |x0, sig| {
            simulate_reference(&sys, x0, sig, cfg.data.dt, cfg.data.samples)
        })?;
        let student = default_initialize(&cfg.student_dims()?, cfg.activation, &mut seed_rng(seed, STREAM_DEFAULT))?;
        let tcfg = TrainConfig { solver_order: p, seed, ..cfg.train.clone() };
        let outcome = train_student(student, &train, &test, &tcfg)?;
        let learned = model_poles(&outcome.best_net, h, p)?;
        let reference: Vec<PoleRecord> = eigs.values.iter().map(|&l| PoleRecord::classify(l, h, p)).collect();
        Ok::<_, ExperimentError>((outcome, learned, reference))
    };
    match run() {
        Ok((o, learned, reference)) => {
            let artifacts = vec![
                Artifact { name: "model.json".into(), contents: model_json(&o.best_net, seed, "default", p, h) },
                Artifact { name: "poles.json".into(), contents: poles_json(&learned) },
                Artifact { name: "reference_poles.json".into(), contents: poles_json(&reference) },
                Artifact { name: "losses.csv".into(), contents: losses_csv(&[("default", &o.loss_curve)]) },
            ];
            let mut rows = pole_rows(solver, seed, "learned", &learned);
            rows.extend(pole_rows(solver, seed, "reference", &reference));
            (record_from(seed, InitMethod::Default, &o), artifacts, rows)
        }
        Err(e) => (failed_record(seed, InitMethod::Default, &e), Vec::new(), Vec::new()),
    }
}

/// For each configured solver and seed: a linear reference with poles outside
/// the solver's region, RK4-generated data, a default-initialized student
/// trained with that solver, and its poles at the minimum test loss.
pub fn run_linear_pole_study(cfg: &StudyConfig) -> Result<PoleStudyResult, ExperimentError> {
    cfg.validate()?;
    cfg.student_dims()?;
    let solvers: Vec<SolverKind> = cfg.solvers.iter().map(|&p| SolverKind::from_order(p).expect("validated")).collect();
    let jobs: Vec<(SolverKind, u64)> =
        solvers.iter().flat_map(|&s| cfg.seed_values().into_iter().map(move |seed| (s, seed))).collect();
    let results = parallel::map(&jobs, |&(s, seed)| linear_pole_seed(cfg, s, seed));

    let mut per_solver = Vec::new();
    let mut poles = Vec::new();
    for &solver in &solvers {
        let mut records = Vec::new();
        let mut artifacts = Vec::new();
        for ((s, seed), (rec, art, rows)) in jobs.iter().zip(&results) {
            if *s == solver {
                records.push(rec.clone());
                artifacts.push((*seed, art.clone()));
                poles.extend(rows.iter().cloned());
            }
        }
        per_solver.push((solver, StudyResult::assemble(records, artifacts)));
    }
    Ok(PoleStudyResult { per_solver, poles })
}

/// Configuration of the solver-swap demo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwapConfig {
    /// Poles as `[re, im]`; conjugates must be listed.
    pub poles: Vec<[f64; 2]>,
    pub step_size: f64,
    pub steps: usize,
    /// Size of the initial perturbation along every state.
    pub perturbation: f64,
    pub solvers: Vec<u32>,
}

impl Default for SwapConfig {
    fn default() -> Self {
        // hλ = -0.21 ± 2.4i: inside the RK4 region, outside the Euler one
        SwapConfig {
            poles: vec![[-2.1, 24.0], [-2.1, -24.0]],
            step_size: 0.1,
            steps: 50,
            perturbation: 1e-3,
            solvers: vec![4, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapRun {
    pub solver: SolverKind,
    pub trajectory: Trajectory,
    /// `‖x_{k+1}‖ / ‖x_k‖` per step.
    pub growth: Vec<f64>,
    /// `max |R_p(hλ)|` over the poles.
    pub spectral_radius: f64,
    pub poles: Vec<PoleRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapDemo {
    pub system: LinearSystem,
    pub runs: Vec<SwapRun>,
}

impl SwapDemo {
    pub fn run(&self, solver: SolverKind) -> Option<&SwapRun> {
        self.runs.iter().find(|r| r.solver == solver)
    }

    /// `solver,step,t,norm,growth`.
    pub fn growth_csv(&self) -> String {
        let mut out = String::from("solver,step,t,norm,growth\n");
        for r in &self.runs {
            for (k, (t, x)) in r.trajectory.times.iter().zip(&r.trajectory.states).enumerate() {
                let g = if k == 0 { String::new() } else { fmt_f64(r.growth[k - 1]) };
                out.push_str(&format!("{},{},{},{},{}\n", r.solver, k, fmt_f64(*t), fmt_f64(norm(x)), g));
            }
        }
        out
    }

    /// `solver,re,im,z_re,z_im,inside,absR`.
    pub fn poles_csv(&self) -> String {
        let mut out = String::from("solver,re,im,z_re,z_im,inside,absR\n");
        for r in &self.runs {
            for p in &r.poles {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.solver,
                    fmt_f64(p.re),
                    fmt_f64(p.im),
                    fmt_f64(p.z_re),
                    fmt_f64(p.z_im),
                    p.inside,
                    fmt_f64(amplification(r.solver.order(), p.z()).expect("valid order"))
                ));
            }
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("growth.csv"), self.growth_csv())?;
        fs::write(dir.join("poles.csv"), self.poles_csv())?;
        for r in &self.runs {
            fs::write(dir.join(format!("trajectory_{}.csv", r.solver)), r.trajectory.to_csv())?;
        }
        Ok(())
    }
}

/// Simulates the small-perturbation response of a linear system with the
/// given poles under each configured solver.
pub fn run_solver_swap_demo(cfg: &SwapConfig) -> Result<SwapDemo, ExperimentError> {
    let values: Vec<Cplx> = cfg.poles.iter().map(|&[re, im]| Cplx::new(re, im)).collect();
    if values.iter().any(|v| !(v.re < 0.0)) {
        return Err(ExperimentError::InvalidConfig("demo poles must have negative real parts".into()));
    }
    if !(cfg.step_size > 0.0) {
        return Err(ExperimentError::InvalidConfig("step size must be positive".into()));
    }
    let eigs = EigenSet::new(values, cfg.step_size, 1)?;
    let d = eigs.len();
    let system = LinearSystem::new(modal_matrix(&eigs), Mat::zeros(d, 0))?;
    let x0 = vec![cfg.perturbation; d];
    let mut runs = Vec::new();
    for &p in &cfg.solvers {
        let solver = SolverKind::from_order(p)
            .ok_or_else(|| ExperimentError::InvalidConfig(format!("solver order must be 1..=4, got {p}")))?;
        let trajectory = integrate_fixed(&solver.tableau(), &system, &x0, &InputSignal::none(), cfg.step_size, cfg.steps)?;
        let growth = trajectory.states.windows(2).map(|w| norm(&w[1]) / norm(&w[0])).collect();
        let poles: Vec<PoleRecord> = eigs.values.iter().map(|&l| PoleRecord::classify(l, cfg.step_size, p)).collect();
        let spectral_radius = poles.iter().map(|r| amplification(p, r.z()).expect("valid order")).fold(0.0, f64::max);
        runs.push(SwapRun { solver, trajectory, growth, spectral_radius, poles });
    }
    Ok(SwapDemo { system, runs })
}
