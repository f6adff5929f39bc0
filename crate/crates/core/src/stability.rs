//! Absolute-stability regions of explicit Runge–Kutta methods and
//! rejection sampling of eigenvalues against them.
//!
//! An explicit `p`-stage method of order `p ≤ 4` maps `x` to `R_p(hλ) x` on
//! the scalar test equation `ẋ = λx`, with `R_p(z) = 1 + z + … + zᵖ/p!`.
//! A point `z = hλ` is inside the region when `|R_p(z)| < 1` (strict).

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{eigenvalues, Cplx, LinalgError};
use crate::network::{FeedforwardNet, NetworkError};

/// Default acceptance margin for [`sample_stable_eigenvalues`].
pub const DEFAULT_MARGIN: f64 = 0.05;
/// Sampling rectangle for the scaled eigenvalue `z = hλ`.
pub const MU_RANGE: (f64, f64) = (-3.0, -0.1);
pub const OMEGA_RANGE: (f64, f64) = (-3.0, 3.0);

const MAX_REJECTIONS: usize = 10_000_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StabilityError {
    #[error("unsupported solver order {0} (supported: 1-4)")]
    UnsupportedOrder(u32),
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible sampling problem: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

fn check_order(p: u32) -> Result<(), StabilityError> {
    if (1..=4).contains(&p) {
        Ok(())
    } else {
        Err(StabilityError::UnsupportedOrder(p))
    }
}

/// Truncated exponential `1 + z + z²/2 + … + zᵖ/p!` (Horner form).
pub(crate) fn poly_unchecked(p: u32, z: Cplx) -> Cplx {
    let mut acc = Cplx::new(1.0, 0.0);
    for k in (1..=p).rev() {
        acc = Cplx::new(1.0, 0.0) + z * acc / k as f64;
    }
    acc
}

pub fn stability_poly(p: u32, z: Cplx) -> Result<Cplx, StabilityError> {
    check_order(p)?;
    Ok(poly_unchecked(p, z))
}

/// `|R_p(z)|`, the per-step amplification of the order-`p` method at `z = hλ`.
pub fn amplification(p: u32, z: Cplx) -> Result<f64, StabilityError> {
    stability_poly(p, z).map(|r| r.norm())
}

/// `|R_p(z)| < 1 - margin`. Orders outside 1..=4 are never inside.
pub fn in_region(p: u32, z: Cplx, margin: f64) -> bool {
    (1..=4).contains(&p) && poly_unchecked(p, z).norm() < 1.0 - margin
}

/// One real eigenvalue or one complex-conjugate pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Real(f64),
    /// Stored with the sampled sign of the imaginary part; its conjugate is implied.
    Pair(Cplx),
}

/// Conjugation-closed continuous-time eigenvalues, with conjugate pairs adjacent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSet {
    pub values: Vec<Cplx>,
    pub step_size: f64,
    pub solver_order: u32,
}

impl EigenSet {
    /// Validates that every non-real value is immediately followed by its conjugate.
    pub fn new(values: Vec<Cplx>, step_size: f64, solver_order: u32) -> Result<Self, StabilityError> {
        check_order(solver_order)?;
        if !(step_size > 0.0) {
            return Err(StabilityError::InvalidConfig(format!("step size must be positive, got {step_size}")));
        }
        let mut i = 0;
        while i < values.len() {
            if values[i].im != 0.0 {
                if i + 1 >= values.len() || values[i + 1] != values[i].conj() {
                    return Err(StabilityError::InvalidConfig(format!(
                        "eigenvalue {} at position {i} is not followed by its conjugate",
                        values[i]
                    )));
                }
                i += 2;
            } else {
                i += 1;
            }
        }
        Ok(EigenSet { values, step_size, solver_order })
    }

    pub fn from_modes(modes: &[Mode], step_size: f64, solver_order: u32) -> Result<Self, StabilityError> {
        let mut values = Vec::new();
        for m in modes {
            match *m {
                Mode::Real(v) => values.push(Cplx::new(v, 0.0)),
                Mode::Pair(z) => {
                    values.push(z);
                    values.push(z.conj());
                }
            }
        }
        EigenSet::new(values, step_size, solver_order)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn modes(&self) -> Vec<Mode> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.values.len() {
            let v = self.values[i];
            if v.im != 0.0 {
                out.push(Mode::Pair(v));
                i += 2;
            } else {
                out.push(Mode::Real(v.re));
                i += 1;
            }
        }
        out
    }

    /// Scaled values `z = hλ`.
    pub fn scaled(&self) -> Vec<Cplx> {
        self.values.iter().map(|v| v * self.step_size).collect()
    }

    /// Re-checks `Re λ < 0`, conjugate closure and `|R_p(hλ)| < 1 - margin` for every member.
    pub fn satisfies_inside(&self, margin: f64) -> bool {
        self.is_conjugate_closed()
            && self.values.iter().all(|v| v.re < 0.0 && in_region(self.solver_order, v * self.step_size, margin))
    }

    pub fn is_conjugate_closed(&self) -> bool {
        self.values.iter().all(|v| self.values.iter().any(|w| *w == v.conj()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub order: u32,
    pub step_size: f64,
    pub state_dim: usize,
    pub use_complex: bool,
    pub margin: f64,
    pub mu_range: (f64, f64),
    pub omega_range: (f64, f64),
}

impl SamplerConfig {
    pub fn new(order: u32, step_size: f64, state_dim: usize, use_complex: bool) -> Self {
        SamplerConfig {
            order,
            step_size,
            state_dim,
            use_complex,
            margin: DEFAULT_MARGIN,
            mu_range: MU_RANGE,
            omega_range: OMEGA_RANGE,
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn validate(&self) -> Result<(), StabilityError> {
        check_order(self.order)?;
        if self.state_dim == 0 {
            return Err(StabilityError::InvalidConfig("state dimension must be at least 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(StabilityError::InvalidConfig(format!("step size must be positive, got {}", self.step_size)));
        }
        if !(0.0..1.0).contains(&self.margin) {
            return Err(StabilityError::InvalidConfig(format!("margin must lie in [0, 1), got {}", self.margin)));
        }
        let (lo, hi) = self.mu_range;
        if !(lo < hi && hi < 0.0) {
            return Err(StabilityError::InvalidConfig(format!("real-part range ({lo}, {hi}) must be negative and non-empty")));
        }
        if !(self.omega_range.0 < self.omega_range.1) {
            return Err(StabilityError::InvalidConfig("imaginary-part range is empty".into()));
        }
        Ok(())
    }
}

/// Shared rejection loop. A conjugate pair is only attempted while at least two
/// slots remain, so the result always has exactly `state_dim` members.
fn rejection_sample<R, A>(cfg: &SamplerConfig, rng: &mut R, accept: A) -> Result<EigenSet, StabilityError>
where
    R: Rng + ?Sized,
    A: Fn(Cplx) -> bool,
{
    let d = cfg.state_dim;
    let mut values = Vec::with_capacity(d);
    let mut rejections = 0usize;
    while values.len() < d {
        let mu = rng.random_range(cfg.mu_range.0..cfg.mu_range.1);
        let omega = if cfg.use_complex && values.len() + 2 <= d {
            rng.random_range(cfg.omega_range.0..cfg.omega_range.1)
        } else {
            0.0
        };
        let z = Cplx::new(mu, omega);
        if accept(z) {
            values.push(z / cfg.step_size);
            if omega != 0.0 {
                values.push(z.conj() / cfg.step_size);
            }
        } else {
            rejections += 1;
            if rejections > MAX_REJECTIONS {
                return Err(StabilityError::Infeasible(format!(
                    "no acceptable eigenvalue after {MAX_REJECTIONS} rejections"
                )));
            }
        }
    }
    EigenSet::new(values, cfg.step_size, cfg.order)
}

/// Rejection-samples `state_dim` eigenvalues whose scaled values lie inside the
/// order-`p` region with the configured margin. Samples are drawn and tested in
/// the `z = hλ` plane and stored as `z / h`.
pub fn sample_stable_eigenvalues<R: Rng + ?Sized>(cfg: &SamplerConfig, rng: &mut R) -> Result<EigenSet, StabilityError> {
    cfg.validate()?;
    let (p, margin) = (cfg.order, cfg.margin);
    rejection_sample(cfg, rng, |z| in_region(p, z, margin))
}

/// Like [`sample_stable_eigenvalues`] but keeps only points outside the region
/// (`|R_p(z)| ≥ 1`); real parts stay negative, so the continuous-time system
/// remains stable while the discretization does not.
pub fn sample_unstable_eigenvalues<R: Rng + ?Sized>(cfg: &SamplerConfig, rng: &mut R) -> Result<EigenSet, StabilityError> {
    cfg.validate()?;
    let p = cfg.order;
    check_complement_nonempty(cfg)?;
    rejection_sample(cfg, rng, |z| !in_region(p, z, 0.0))
}

/// Grid scan for a point of the sampling rectangle that lies outside the region.
/// Real modes are always possible, so the real segment alone must have one.
fn check_complement_nonempty(cfg: &SamplerConfig) -> Result<(), StabilityError> {
    const N: usize = 512;
    let (lo, hi) = cfg.mu_range;
    let found = (0..=N).any(|i| {
        let mu = lo + (hi - lo) * i as f64 / N as f64;
        !in_region(cfg.order, Cplx::new(mu, 0.0), 0.0)
    });
    if found {
        Ok(())
    } else {
        Err(StabilityError::Infeasible(format!(
            "the real segment ({lo}, {hi}) lies entirely inside the order-{} region",
            cfg.order
        )))
    }
}

/// `|R_p(z)|` sampled on a uniform grid, row-major with the imaginary axis outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    pub order: u32,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub abs_r: Vec<f64>,
}

impl RegionGrid {
    pub fn value(&self, im_index: usize, re_index: usize) -> f64 {
        self.abs_r[im_index * self.re.len() + re_index]
    }

    /// CSV with header `re,im,absR`.
    pub fn to_csv(&self) -> String {
        use crate::solver::fmt_f64;
        let mut out = String::from("re,im,absR\n");
        for (j, im) in self.im.iter().enumerate() {
            for (i, re) in self.re.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", fmt_f64(*re), fmt_f64(*im), fmt_f64(self.value(j, i))));
            }
        }
        out
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn region_grid(
    p: u32,
    re_range: (f64, f64),
    im_range: (f64, f64),
    resolution: usize,
) -> Result<RegionGrid, StabilityError> {
    check_order(p)?;
    if resolution < 2 {
        return Err(StabilityError::InvalidConfig("grid resolution must be at least 2".into()));
    }
    if !(re_range.0 < re_range.1 && im_range.0 < im_range.1) {
        return Err(StabilityError::InvalidConfig("grid ranges must be non-empty (lo < hi)".into()));
    }
    let re = linspace(re_range.0, re_range.1, resolution);
    let im = linspace(im_range.0, im_range.1, resolution);
    let rows: Vec<Vec<f64>> = crate::parallel::map(&im, |&y| {
        re.iter().map(|&x| poly_unchecked(p, Cplx::new(x, y)).norm()).collect()
    });
    Ok(RegionGrid { order: p, re, im, abs_r: rows.concat() })
}

/// A linearized model pole and its classification against a solver region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub re: f64,
    pub im: f64,
    pub z_re: f64,
    pub z_im: f64,
    pub inside: bool,
}

impl PoleRecord {
    pub fn classify(lambda: Cplx, h: f64, p: u32) -> Self {
        let z = lambda * h;
        PoleRecord { re: lambda.re, im: lambda.im, z_re: z.re, z_im: z.im, inside: in_region(p, z, 0.0) }
    }

    pub fn lambda(&self) -> Cplx {
        Cplx::new(self.re, self.im)
    }

    pub fn z(&self) -> Cplx {
        Cplx::new(self.z_re, self.z_im)
    }
}

/// Eigenvalues of `∂f/∂x` at `x = 0, u = 0` (biases included), scaled by `h`
/// and classified against the order-`p` region.
pub fn model_poles(net: &FeedforwardNet, h: f64, p: u32) -> Result<Vec<PoleRecord>, StabilityError> {
    check_order(p)?;
    let jac = net.jacobian_state(&vec![0.0; net.state_dim()], &vec![0.0; net.input_dim()])?;
    let eig = eigenvalues(&jac)?;
    Ok(eig.into_iter().map(|l| PoleRecord::classify(l, h, p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::network::{Activation, Layer, NetDims};
    use crate::solver::{rk_step, ButcherTableau, InputSignal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: explicit power sum, no Horner.
    fn r_direct(p: u32, z: Cplx) -> Cplx {
        let mut acc = Cplx::new(0.0, 0.0);
        let mut fact = 1.0;
        for k in 0..=p {
            if k > 0 {
                fact *= k as f64;
            }
            acc += z.powu(k) / fact;
        }
        acc
    }

    /// Bisection for the left end of the real-axis stability interval.
    fn real_boundary(p: u32) -> f64 {
        let (mut inside, mut outside) = (-1.0, -4.0);
        for _ in 0..100 {
            let mid = 0.5 * (inside + outside);
            if r_direct(p, Cplx::new(mid, 0.0)).norm() < 1.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    }

    #[test]
    fn polynomial_examples() {
        assert_eq!(stability_poly(1, Cplx::new(-2.0, 0.0)).unwrap(), Cplx::new(-1.0, 0.0));
        assert_eq!(stability_poly(2, Cplx::new(-2.0, 0.0)).unwrap(), Cplx::new(1.0, 0.0));
        let r3 = stability_poly(3, Cplx::new(0.0, 3f64.sqrt())).unwrap();
        assert!((r3 - Cplx::new(-0.5, 3f64.sqrt() / 2.0)).norm() < 1e-14);
        assert!((r3.norm() - 1.0).abs() < 1e-14);
        assert_eq!(stability_poly(5, Cplx::new(0.0, 0.0)), Err(StabilityError::UnsupportedOrder(5)));
        assert_eq!(stability_poly(0, Cplx::new(0.0, 0.0)), Err(StabilityError::UnsupportedOrder(0)));
    }

    #[test]
    fn horner_matches_power_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let z = Cplx::new(rng.random_range(-4.0..1.0), rng.random_range(-4.0..4.0));
            for p in 1..=4 {
                assert!((stability_poly(p, z).unwrap() - r_direct(p, z)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn region_membership_examples() {
        assert!(in_region(1, Cplx::new(-1.0, 0.0), 0.0));
        assert!(!in_region(1, Cplx::new(-2.0, 0.0), 0.0));
        assert!(!in_region(4, Cplx::new(-2.8, 0.0), 0.0));
        assert!(in_region(4, Cplx::new(-2.7, 0.0), 0.0));
        assert!(!in_region(1, Cplx::new(0.0, 0.0), 0.0));
        let b4 = real_boundary(4);
        assert!((b4 + 2.785).abs() < 0.001, "{b4}");
    }

    #[test]
    fn unit_interval_is_inside_every_region() {
        for p in 1..=4 {
            for i in 1..1000 {
                let z = Cplx::new(-(i as f64) / 1000.0, 0.0);
                assert!(in_region(p, z, 0.0), "p={p} z={z}");
            }
        }
    }

    #[test]
    fn real_extent_grows_with_order() {
        let b: Vec<f64> = (1..=4).map(real_boundary).collect();
        assert!((b[0] + 2.0).abs() < 1e-9 && (b[1] + 2.0).abs() < 1e-9);
        assert!(b[3] < b[0] - 0.5);
        assert!(b[2] < b[1]);
    }

    #[test]
    fn rk_step_equals_polynomial_times_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let none = InputSignal::none();
        for p in 1..=4 {
            let tab = ButcherTableau::for_order(p).unwrap();
            for _ in 0..200 {
                let lam: f64 = rng.random_range(-30.0..5.0);
                let h: f64 = rng.random_range(0.001..0.5);
                let x: f64 = rng.random_range(-2.0..2.0);
                let f = move |s: &[f64], _u: &[f64]| vec![lam * s[0]];
                let next = rk_step(&tab, &f, 0.0, &[x], h, &none).unwrap()[0];
                let expect = r_direct(p, Cplx::new(h * lam, 0.0)).re * x;
                assert!((next - expect).abs() < 1e-12 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn stable_sampler_postconditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in 1..=4 {
            for &h in &[0.05, 0.1, 0.5] {
                for d in 1..=7 {
                    for use_complex in [false, true] {
                        let cfg = SamplerConfig::new(p, h, d, use_complex);
                        let e = sample_stable_eigenvalues(&cfg, &mut rng).unwrap();
                        assert_eq!(e.len(), d);
                        assert!(e.satisfies_inside(cfg.margin));
                        for v in &e.values {
                            let z = v * h;
                            assert!(z.re > -3.0 && z.re < -0.1);
                            assert!(r_direct(p, z).norm() < 1.0 - cfg.margin);
                        }
                        if !use_complex {
                            assert!(e.values.iter().all(|v| v.im == 0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn complex_pairs_appear_when_room() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = SamplerConfig::new(4, 0.1, 2, true);
        let any_pair = (0..50).any(|_| {
            sample_stable_eigenvalues(&cfg, &mut rng).unwrap().modes().iter().any(|m| matches!(m, Mode::Pair(_)))
        });
        assert!(any_pair);
        // one slot: never complex
        let cfg1 = SamplerConfig::new(4, 0.1, 1, true);
        for _ in 0..50 {
            assert_eq!(sample_stable_eigenvalues(&cfg1, &mut rng).unwrap().values[0].im, 0.0);
        }
    }

    #[test]
    fn sampled_value_is_divided_by_step() {
        // d = 1, p = 1: λ = z / h, so h·λ recovers the sampled point in (-3, -0.1).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = sample_stable_eigenvalues(&SamplerConfig::new(1, 0.2, 1, false), &mut rng).unwrap();
        let z = e.values[0] * 0.2;
        assert!(z.re > -1.95 && z.re < -0.1 + 1e-12);
        assert!((e.values[0] - z / 0.2).norm() < 1e-15);
        // z = -1 maps to λ = -5
        assert_eq!(Cplx::new(-1.0, 0.0) / 0.2, Cplx::new(-5.0, 0.0));
    }

    #[test]
    fn unstable_sampler_postconditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for p in 1..=4 {
            for d in 1..=5 {
                let cfg = SamplerConfig::new(p, 1.0, d, true);
                let e = sample_unstable_eigenvalues(&cfg, &mut rng).unwrap();
                assert_eq!(e.len(), d);
                assert!(e.is_conjugate_closed());
                for v in &e.values {
                    assert!(v.re < 0.0);
                    assert!(r_direct(p, *v).norm() >= 1.0);
                }
            }
        }
        assert!(!in_region(1, Cplx::new(-2.5, 0.0), 0.0));
        let z = Cplx::new(-0.5, 2.8);
        assert!(r_direct(2, z).norm() > 1.0);
    }

    #[test]
    fn unstable_sampler_detects_infeasible_rectangle() {
        let mut cfg = SamplerConfig::new(1, 1.0, 2, false);
        cfg.mu_range = (-1.5, -0.5);
        let err = sample_unstable_eigenvalues(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, StabilityError::Infeasible(_)));
    }

    #[test]
    fn sampler_config_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_stable_eigenvalues(&SamplerConfig::new(5, 0.1, 2, true), &mut rng).is_err());
        assert!(sample_stable_eigenvalues(&SamplerConfig::new(1, 0.1, 0, true), &mut rng).is_err());
        assert!(sample_stable_eigenvalues(&SamplerConfig::new(1, 0.1, 2, true).with_margin(1.0), &mut rng).is_err());
        let mut cfg = SamplerConfig::new(1, 0.1, 2, true);
        cfg.mu_range = (-1.0, 0.5);
        assert!(sample_stable_eigenvalues(&cfg, &mut rng).is_err());
    }

    #[test]
    fn eigenset_requires_adjacent_conjugates() {
        let z = Cplx::new(-1.0, 2.0);
        assert!(EigenSet::new(vec![z, z.conj()], 0.1, 1).is_ok());
        assert!(EigenSet::new(vec![z], 0.1, 1).is_err());
        assert!(EigenSet::new(vec![z, Cplx::new(-1.0, 0.0), z.conj()], 0.1, 1).is_err());
        let e = EigenSet::from_modes(&[Mode::Real(-2.0), Mode::Pair(z)], 0.1, 1).unwrap();
        assert_eq!(e.values.len(), 3);
        assert_eq!(e.modes(), vec![Mode::Real(-2.0), Mode::Pair(z)]);
    }

    #[test]
    fn grid_examples() {
        let g = region_grid(1, (-2.0, 0.0), (-1.0, 1.0), 3).unwrap();
        assert_eq!(g.abs_r.len(), 9);
        // center cell is z = -1
        assert_eq!(g.value(1, 1), 0.0);
        assert_eq!(g.to_csv().lines().count(), 10);

        // level-1 contour of p = 1 is the unit circle around -1
        let g = region_grid(1, (-2.5, 0.5), (-1.5, 1.5), 61).unwrap();
        for (j, &y) in g.im.iter().enumerate() {
            for (i, &x) in g.re.iter().enumerate() {
                let dist = ((x + 1.0).powi(2) + y * y).sqrt();
                assert!((g.value(j, i) - dist).abs() < 1e-12);
            }
        }

        // p = 4 level-1 crossing on the real axis
        let g = region_grid(4, (-3.0, 0.0), (-0.5, 0.5), 3001).unwrap();
        let mid = g.im.len() / 2;
        assert!(g.im[mid].abs() < 1e-12);
        let crossing = (1..g.re.len())
            .find(|&i| g.value(mid, i - 1) >= 1.0 && g.value(mid, i) < 1.0)
            .map(|i| g.re[i])
            .unwrap();
        assert!((crossing - real_boundary(4)).abs() < 0.01);
        assert!((crossing + 2.785).abs() < 0.01);

        assert!(region_grid(1, (0.0, 1.0), (0.0, 1.0), 1).is_err());
        assert!(region_grid(1, (1.0, 0.0), (0.0, 1.0), 5).is_err());
    }

    fn linear_net(w: Vec<Vec<f64>>) -> FeedforwardNet {
        let d = w.len();
        let dims = NetDims::new(d, 0, vec![]).unwrap();
        FeedforwardNet::new(dims, Activation::Identity, vec![Layer { weight: Mat::from_rows(&w).unwrap(), bias: vec![0.0; d] }])
            .unwrap()
    }

    #[test]
    fn pole_classification() {
        let net = linear_net(vec![vec![-30.0]]);
        let poles = model_poles(&net, 0.1, 1).unwrap();
        assert_eq!(poles.len(), 1);
        assert!((poles[0].z_re + 3.0).abs() < 1e-12);
        assert!(!poles[0].inside);

        let zero = linear_net(vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        let poles = model_poles(&zero, 0.1, 4).unwrap();
        assert!(poles.iter().all(|p| p.lambda().norm() == 0.0 && !p.inside));

        let json = serde_json::to_string(&poles[0]).unwrap();
        assert!(json.contains("\"z_re\"") && json.contains("\"inside\""));
    }
}
