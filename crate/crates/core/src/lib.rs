//! Runge-Kutta stability regions and stability-informed initialization for
//! neural ordinary differential equations.
//!
//! A neural ODE `ẋ = f_θ(x, u)` discretized with an explicit Runge-Kutta
//! method of order `p` and step `h` is locally stable around an equilibrium
//! when every eigenvalue `λ` of the Jacobian satisfies `|R_p(hλ)| < 1`.
//! [`init`] builds networks whose linearization has eigenvalues sampled inside
//! that region; [`stability`] evaluates regions and classifies poles.

pub mod experiments;
pub mod init;
pub mod linalg;
pub mod network;
pub mod parallel;
pub mod solver;
pub mod stability;

pub use init::{default_initialize, sii_initialize, InitReport, SiiNet};
pub use linalg::{Cplx, Mat};
pub use network::{Activation, FeedforwardNet, NetDims};
pub use solver::{ButcherTableau, InputSignal, SolverKind, Trajectory};
pub use stability::{in_region, stability_poly, EigenSet, SamplerConfig};
