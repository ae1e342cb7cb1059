//! Mutual-information / MMSE trade-off for continuous-time Gauss–Markov
//! sources observed through a designable Gaussian sensor.
//!
//! For a source `dX = A X dt + B dW` and sensor `dY = C X dt + dV` the
//! Kalman–Bucy filter has stationary error covariance `P` solving
//! `AP + PAᵀ − PCᵀCP + BBᵀ = 0`, information rate `½ Tr(C P Cᵀ)` and MMSE
//! rate `Tr(P)`. The smallest information rate compatible with an MMSE
//! budget `D` is the value of a small semidefinite program in `(P, Q)`:
//!
//! ```text
//! minimize   Tr(A) + ½ Tr(Q)
//! subject to AP + PAᵀ + BBᵀ ⪰ 0,   [[Q, Bᵀ], [B, P]] ⪰ 0,   Tr(P) ≤ D
//! ```
//!
//! and any `C` with `CᵀC = P⁻¹(AP + PAᵀ + BBᵀ)P⁻¹` attains it.
//!
//! Modules:
//! - [`linalg`]: dense symmetric kernels (Jacobi eigensolver, PSD roots, Lyapunov).
//! - [`model`]: system / sensor types and PBH-style certificates.
//! - [`sdp`]: log-det barrier interior-point solver for the program above.
//! - [`riccati`]: Riccati ODE integration and algebraic Riccati solves.
//! - [`design`]: SDP → gain reconstruction → Riccati cross-check, curve sweeps.
//! - [`validate`]: Monte Carlo Kalman–Bucy simulation and the Duncan integral check.
//! - [`zdsc`]: quantize-and-hold zero-delay coding experiment.
//!
//! The crate is `no_std` and needs only `alloc`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod design;
pub mod linalg;
pub mod model;
pub mod riccati;
pub mod sdp;
pub mod validate;
pub mod zdsc;

pub use design::{TradeoffCurve, TradeoffPoint, design_sensor, recover_gain, sweep_curve};
pub use linalg::{Mat, SymMatrix};
pub use model::{SensorGain, SystemModel, Tolerances};
pub use riccati::{AreSolution, RiccatiTrajectory, integrate_rde, rates_from_p, solve_care};
pub use sdp::{SdpProblem, SdpSolution, build_sdp};
pub use validate::{SimConfig, SimResult, duncan_check, simulate};
pub use zdsc::{ZdscResult, ZdscScheme};
