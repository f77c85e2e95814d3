//! Regularized LQR solver.
//!
//! Solves saddle-point systems of the form
//!
//! ```text
//! [ P   C^T ] [x]     [s]
//! [ C  -d I ] [y] = - [c]
//! ```
//!
//! where `P` is the block-diagonal stage cost Hessian, `C` stacks the
//! initial-state row `-I` and the dynamics rows `[A_i  B_i  -I]`, and
//! `d >= 0` regularizes the dual block. The solver runs a closed-form
//! extension of the Riccati recursion: a backward pass producing stage
//! feedback policies and cost-to-go terms, a forward rollout, and a dual
//! recovery pass. At `d = 0` it reduces to the standard LQR recursion.

#![allow(non_snake_case)]

use crate::dense::{symmetric_eigenvalues, CholeskyFactor, DenseError, Matrix, Vector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegLqrError {
    #[error("stage {stage}: control-space matrix G_i is not positive definite ({source})")]
    GiNotPositiveDefinite { stage: usize, source: DenseError },
    #[error(
        "stage {stage}: I + delta*V is not positive definite, upstream data is corrupt ({source})"
    )]
    InnerNotPositiveDefinite { stage: usize, source: DenseError },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

/// One stage of the problem: cost blocks, dynamics, and the residual
/// attached to the dynamics row that produces `x_{i+1}`.
#[derive(Debug, Clone)]
pub struct LqrStage {
    pub Q: Matrix,
    pub M: Matrix,
    pub R: Matrix,
    pub q: Vector,
    pub r: Vector,
    pub A: Matrix,
    pub B: Matrix,
    pub c_next: Vector,
}

/// A regularized LQR problem over a horizon of `stages.len()` steps.
///
/// `c0` is the residual of the initial-state row (Jacobian `-I`), and
/// `delta >= 0` is the dual regularization; `delta = 0` selects the
/// standard-LQR branch.
#[derive(Debug, Clone)]
pub struct RegLqrProblem {
    pub stages: Vec<LqrStage>,
    pub Q_N: Matrix,
    pub q_N: Vector,
    pub c0: Vector,
    pub delta: f64,
}

/// Per-stage feedback `u = K x + k` and cost-to-go `V, v` from the
/// backward pass. The terminal entry carries only `V = Q_N`, `v = q_N`
/// (its `K` has zero rows).
#[derive(Debug, Clone)]
pub struct StagePolicy {
    pub K: Matrix,
    pub k: Vector,
    pub V: Matrix,
    pub v: Vector,
}

#[derive(Debug, Clone)]
pub struct RegLqrSolution {
    pub x: Vec<Vector>,
    pub u: Vec<Vector>,
    pub y: Vec<Vector>,
}

impl RegLqrProblem {
    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    pub fn nx(&self) -> usize {
        self.Q_N.rows()
    }

    pub fn nu(&self) -> usize {
        self.stages.first().map_or(0, |s| s.R.rows())
    }

    /// Checks dimensional consistency and basic well-posedness. Definiteness
    /// of the blocks is only probed in debug builds; release builds rely on
    /// Cholesky failures during the backward pass.
    pub fn validate(&self) -> Result<(), RegLqrError> {
        let nx = self.nx();
        let nu = self.nu();
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(RegLqrError::InvalidProblem(format!(
                "delta must be finite and >= 0, got {}",
                self.delta
            )));
        }
        if self.Q_N.rows() != nx || self.Q_N.cols() != nx || self.q_N.len() != nx {
            return Err(RegLqrError::InvalidProblem(
                "terminal block dimensions inconsistent".into(),
            ));
        }
        if self.c0.len() != nx {
            return Err(RegLqrError::InvalidProblem(format!(
                "c0 has length {}, expected {}",
                self.c0.len(),
                nx
            )));
        }
        for (i, st) in self.stages.iter().enumerate() {
            let bad = |what: &str| {
                Err(RegLqrError::InvalidProblem(format!(
                    "stage {i}: {what} has inconsistent dimensions"
                )))
            };
            if st.Q.rows() != nx || st.Q.cols() != nx {
                return bad("Q");
            }
            if st.M.rows() != nx || st.M.cols() != nu {
                return bad("M");
            }
            if st.R.rows() != nu || st.R.cols() != nu {
                return bad("R");
            }
            if st.q.len() != nx || st.r.len() != nu {
                return bad("q/r");
            }
            if st.A.rows() != nx || st.A.cols() != nx {
                return bad("A");
            }
            if st.B.rows() != nx || st.B.cols() != nu {
                return bad("B");
            }
            if st.c_next.len() != nx {
                return bad("c_next");
            }
        }
        if cfg!(debug_assertions) {
            self.debug_check_definiteness()?;
        }
        Ok(())
    }

    fn debug_check_definiteness(&self) -> Result<(), RegLqrError> {
        let nx = self.nx();
        let nu = self.nu();
        let tol = -1e-9;
        for (i, st) in self.stages.iter().enumerate() {
            let mut joint = Matrix::zeros(nx + nu, nx + nu);
            joint.set_block(0, 0, &st.Q);
            joint.set_block(0, nx, &st.M);
            joint.set_block(nx, 0, &st.M.transpose());
            joint.set_block(nx, nx, &st.R);
            let eigs = symmetric_eigenvalues(&joint);
            if let Some(min) = eigs.first() {
                let scale = 1.0 + joint.max_abs();
                if *min < tol * scale {
                    return Err(RegLqrError::InvalidProblem(format!(
                        "stage {i}: [[Q,M],[M^T,R]] has eigenvalue {min:e} < 0"
                    )));
                }
            }
        }
        let eigs = symmetric_eigenvalues(&self.Q_N);
        if let Some(min) = eigs.first() {
            if *min < tol * (1.0 + self.Q_N.max_abs()) {
                return Err(RegLqrError::InvalidProblem(format!(
                    "terminal Q has eigenvalue {min:e} < 0"
                )));
            }
        }
        Ok(())
    }
}

/// Factors `I + delta * V`; `None` at `delta = 0` where the solve is the
/// identity.
fn inner_factor(
    V: &Matrix,
    delta: f64,
    stage: usize,
) -> Result<Option<CholeskyFactor>, RegLqrError> {
    if delta == 0.0 {
        return Ok(None);
    }
    let mut F = &(V * delta) + &Matrix::identity(V.rows());
    F = F.symmetrized();
    CholeskyFactor::factor(&F)
        .map(Some)
        .map_err(|source| RegLqrError::InnerNotPositiveDefinite { stage, source })
}

fn inner_solve_vec(
    factor: &Option<CholeskyFactor>,
    rhs: &Vector,
    stage: usize,
) -> Result<Vector, RegLqrError> {
    match factor {
        None => Ok(rhs.clone()),
        Some(f) => f
            .solve(rhs)
            .map_err(|source| RegLqrError::InnerNotPositiveDefinite { stage, source }),
    }
}

/// Backward pass of the extended Riccati recursion.
///
/// Returns `N + 1` policies; index `N` carries only the terminal cost-to-go
/// `V_N = Q_N`, `v_N = q_N`. For each interior stage, working backwards:
///
/// ```text
/// W = (I + delta V')^{-1} V'        g = v' + W (c' - delta v')
/// G = B^T W B + R                   h = r + B^T g
/// H = B^T W A + M^T
/// K = -G^{-1} H                     k = -G^{-1} h
/// V = A^T W A + Q + K^T H           v = q + A^T g + K^T h
/// ```
///
/// with primes denoting stage `i + 1` quantities. The inner inverse is
/// applied through a Cholesky solve against the columns of `V'`.
pub fn backward_pass(p: &RegLqrProblem) -> Result<Vec<StagePolicy>, RegLqrError> {
    p.validate()?;
    let N = p.horizon();
    let nx = p.nx();
    let delta = p.delta;

    let mut policies: Vec<StagePolicy> = Vec::with_capacity(N + 1);
    policies.push(StagePolicy {
        K: Matrix::zeros(0, nx),
        k: Vector::zeros(0),
        V: p.Q_N.symmetrized(),
        v: p.q_N.clone(),
    });

    for i in (0..N).rev() {
        let st = &p.stages[i];
        let next = policies.last().unwrap();
        let (V_next, v_next) = (&next.V, &next.v);

        let inner = inner_factor(V_next, delta, i)?;
        let W = match &inner {
            None => V_next.clone(),
            Some(f) => f
                .solve_matrix(V_next)
                .map_err(|source| RegLqrError::InnerNotPositiveDefinite { stage: i, source })?
                .symmetrized(),
        };

        let rhs = &st.c_next - &(v_next * delta);
        let g = v_next + &(&W * &rhs);

        let Bt = st.B.transpose();
        let At = st.A.transpose();
        let WB = &W * &st.B;
        let WA = &W * &st.A;

        let G = (&(&Bt * &WB) + &st.R).symmetrized();
        let g_chol = CholeskyFactor::factor(&G)
            .map_err(|source| RegLqrError::GiNotPositiveDefinite { stage: i, source })?;

        let H = &(&Bt * &WA) + &st.M.transpose();
        let h = &st.r + &st.B.t_mulv(&g);

        let K = -&g_chol
            .solve_matrix(&H)
            .map_err(|source| RegLqrError::GiNotPositiveDefinite { stage: i, source })?;
        let k = -&g_chol
            .solve(&h)
            .map_err(|source| RegLqrError::GiNotPositiveDefinite { stage: i, source })?;

        let V = (&(&(&At * &WA) + &st.Q) + &(&K.transpose() * &H)).symmetrized();
        let v = &(&st.q + &st.A.t_mulv(&g)) + &K.t_mulv(&h);

        policies.push(StagePolicy { K, k, V, v });
    }

    policies.reverse();
    Ok(policies)
}

/// Forward rollout under the policies from [`backward_pass`].
///
/// `x_0` solves `(I + delta V_0) x_0 = c_0 - delta v_0`; each subsequent
/// state solves `(I + delta V_{i+1}) x_{i+1} = A x_i + B u_i + c_{i+1} -
/// delta v_{i+1}` with `u_i = K_i x_i + k_i`.
pub fn forward_pass(
    p: &RegLqrProblem,
    policies: &[StagePolicy],
) -> Result<(Vec<Vector>, Vec<Vector>), RegLqrError> {
    let N = p.horizon();
    assert_eq!(policies.len(), N + 1, "policy list does not match horizon");
    let delta = p.delta;

    let rhs0 = &p.c0 - &(&policies[0].v * delta);
    let inner0 = inner_factor(&policies[0].V, delta, 0)?;
    let x0 = inner_solve_vec(&inner0, &rhs0, 0)?;

    let mut xs = Vec::with_capacity(N + 1);
    let mut us = Vec::with_capacity(N);
    xs.push(x0);
    for i in 0..N {
        let st = &p.stages[i];
        let pol = &policies[i];
        let u = &(&pol.K * &xs[i]) + &pol.k;
        let drive = &(&(&st.A * &xs[i]) + &(&st.B * &u)) + &st.c_next;
        let rhs = &drive - &(&policies[i + 1].v * delta);
        let inner = inner_factor(&policies[i + 1].V, delta, i + 1)?;
        let x_next = inner_solve_vec(&inner, &rhs, i + 1)?;
        us.push(u);
        xs.push(x_next);
    }
    Ok((xs, us))
}

/// Dual recovery: `y_i = V_i x_i + v_i` for every stage.
pub fn recover_duals(policies: &[StagePolicy], xs: &[Vector]) -> Vec<Vector> {
    assert_eq!(policies.len(), xs.len());
    policies
        .iter()
        .zip(xs)
        .map(|(pol, x)| &(&pol.V * x) + &pol.v)
        .collect()
}

/// Full solve: backward pass, forward rollout, dual recovery.
pub fn solve(p: &RegLqrProblem) -> Result<RegLqrSolution, RegLqrError> {
    let policies = backward_pass(p)?;
    let (x, u) = forward_pass(p, &policies)?;
    let y = recover_duals(&policies, &x);
    Ok(RegLqrSolution { x, u, y })
}
