//! Trajectory optimization for constrained, discrete-time optimal control.
//!
//! The solver stack, bottom to top:
//!
//! * [`dense`] — a minimal dense linear-algebra kernel (Cholesky and
//!   quasi-definite LDL^T factorizations over `f64`).
//! * [`reglqr`] — a closed-form extended Riccati recursion for LQR saddle
//!   systems with a `-delta * I` dual regularization block.
//! * [`ipm`] — a regularized primal-dual interior point method whose search
//!   directions are certified descent directions of an augmented
//!   barrier-Lagrangian merit function.
//! * [`ocp`] — the optimal-control frontend: stagewise condensation of the
//!   interior-point Newton system down to a regularized LQR problem, and
//!   expansion of the LQR solution back into a full primal-dual step.
//! * [`oracle`] — brute-force dense KKT assembly and solves used to certify
//!   the structured paths.
//! * [`models`] — built-in benchmark problems (double integrator, unicycle,
//!   dense QPs).

pub mod dense;
pub mod ipm;
pub mod models;
pub mod ocp;
pub mod oracle;
pub mod reglqr;
