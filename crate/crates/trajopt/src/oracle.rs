//! Brute-force dense KKT reference.
//!
//! Assembles the literal block saddle systems that the structured solver
//! paths factorize implicitly, and solves them with the shared dense kernel.
//! The oracle exists to certify the Riccati recursion and the stagewise
//! elimination chain; it is shipped in the library (not test-only) so the
//! CLI can expose a `--check` flag.

#![allow(non_snake_case)]

use crate::dense::{DenseError, Matrix, QuasiDefFactor, Vector};
use crate::ipm::{IpmIterate, ProblemEval, StepDirection};
use crate::reglqr::{RegLqrProblem, RegLqrSolution};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle system is singular: {0}")]
    Singular(DenseError),
}

impl From<DenseError> for OracleError {
    fn from(e: DenseError) -> Self {
        OracleError::Singular(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    State,
    Control,
    Slack,
    EqDual,
    IneqDual,
}

/// One contiguous row span of the assembled system.
#[derive(Debug, Clone)]
pub struct BlockSpan {
    pub kind: BlockKind,
    pub stage: Option<usize>,
    pub start: usize,
    pub len: usize,
}

/// A dense symmetric KKT system with its right-hand side, quasi-definite
/// sign pattern, and a row index map.
#[derive(Debug, Clone)]
pub struct DenseKkt {
    pub kkt: Matrix,
    pub rhs: Vector,
    pub signs: Vec<i8>,
    pub blocks: Vec<BlockSpan>,
}

impl DenseKkt {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// `max |K sol - rhs|`; the assembled systems use `rhs = -residual`, so
    /// this is the saddle-system residual of a candidate solution.
    pub fn residual_inf(&self, sol: &Vector) -> f64 {
        (&(&self.kkt * sol) - &self.rhs).norm_inf()
    }

    pub fn solve(&self) -> Result<Vector, OracleError> {
        let f = QuasiDefFactor::factor(&self.kkt, &self.signs)?;
        Ok(f.solve(&self.rhs)?)
    }

    fn check_partition(&self) {
        let mut covered = 0;
        for b in &self.blocks {
            assert_eq!(b.start, covered, "index map must cover rows in order");
            covered += b.len;
        }
        assert_eq!(covered, self.dim(), "index map must partition all rows");
    }
}

/// Assembles the full saddle system of a regularized LQR problem:
/// `K = [[P, C^T], [C, -delta I]]`, `rhs = -[s; c]`, with `C` laid out as
/// the initial-state row `-I` followed by the dynamics rows `[A_i B_i -I]`.
pub fn assemble_reglqr(p: &RegLqrProblem) -> DenseKkt {
    let N = p.horizon();
    let nx = p.nx();
    let nu = p.nu();
    let n_primal = (N + 1) * nx + N * nu;
    let n_dual = (N + 1) * nx;
    let dim = n_primal + n_dual;

    let x_off = |i: usize| i * (nx + nu);
    let u_off = |i: usize| i * (nx + nu) + nx;
    let y_off = |i: usize| n_primal + i * nx;

    let mut K = Matrix::zeros(dim, dim);
    let mut rhs = Vector::zeros(dim);
    let mut blocks = Vec::new();

    // P blocks and the gradient part of the rhs.
    for (i, st) in p.stages.iter().enumerate() {
        K.set_block(x_off(i), x_off(i), &st.Q);
        K.set_block(x_off(i), u_off(i), &st.M);
        K.set_block(u_off(i), x_off(i), &st.M.transpose());
        K.set_block(u_off(i), u_off(i), &st.R);
        for j in 0..nx {
            rhs[x_off(i) + j] = -st.q[j];
        }
        for j in 0..nu {
            rhs[u_off(i) + j] = -st.r[j];
        }
        blocks.push(BlockSpan {
            kind: BlockKind::State,
            stage: Some(i),
            start: x_off(i),
            len: nx,
        });
        blocks.push(BlockSpan {
            kind: BlockKind::Control,
            stage: Some(i),
            start: u_off(i),
            len: nu,
        });
    }
    K.set_block(x_off(N), x_off(N), &p.Q_N);
    for j in 0..nx {
        rhs[x_off(N) + j] = -p.q_N[j];
    }
    blocks.push(BlockSpan {
        kind: BlockKind::State,
        stage: Some(N),
        start: x_off(N),
        len: nx,
    });

    // C blocks: row 0 is the initial-state constraint, row i+1 the dynamics.
    let neg_eye = -&Matrix::identity(nx);
    let stamp_c = |K: &mut Matrix, row: usize, col: usize, block: &Matrix| {
        K.set_block(row, col, block);
        K.set_block(col, row, &block.transpose());
    };
    stamp_c(&mut K, y_off(0), x_off(0), &neg_eye);
    for j in 0..nx {
        rhs[y_off(0) + j] = -p.c0[j];
    }
    for (i, st) in p.stages.iter().enumerate() {
        stamp_c(&mut K, y_off(i + 1), x_off(i), &st.A);
        stamp_c(&mut K, y_off(i + 1), u_off(i), &st.B);
        stamp_c(&mut K, y_off(i + 1), x_off(i + 1), &neg_eye);
        for j in 0..nx {
            rhs[y_off(i + 1) + j] = -st.c_next[j];
        }
    }
    for i in 0..=N {
        for j in 0..nx {
            K[(y_off(i) + j, y_off(i) + j)] = -p.delta;
        }
        blocks.push(BlockSpan {
            kind: BlockKind::EqDual,
            stage: Some(i),
            start: y_off(i),
            len: nx,
        });
    }

    let mut signs = vec![1i8; n_primal];
    signs.extend(std::iter::repeat_n(-1i8, n_dual));

    let out = DenseKkt {
        kkt: K,
        rhs,
        signs,
        blocks,
    };
    out.check_partition();
    out
}

/// Packs a structured solution into the row layout of [`assemble_reglqr`].
pub fn pack_reglqr_solution(p: &RegLqrProblem, sol: &RegLqrSolution) -> Vector {
    let mut parts: Vec<&Vector> = Vec::new();
    for i in 0..p.horizon() {
        parts.push(&sol.x[i]);
        parts.push(&sol.u[i]);
    }
    parts.push(&sol.x[p.horizon()]);
    for y in &sol.y {
        parts.push(y);
    }
    Vector::concat(&parts)
}

/// Solves the assembled regularized LQR system directly and unpacks it.
pub fn oracle_solve_reglqr(p: &RegLqrProblem) -> Result<RegLqrSolution, OracleError> {
    let sys = assemble_reglqr(p);
    let sol = sys.solve()?;
    let N = p.horizon();
    let nx = p.nx();
    let nu = p.nu();
    let n_primal = (N + 1) * nx + N * nu;

    let mut x = Vec::with_capacity(N + 1);
    let mut u = Vec::with_capacity(N);
    for i in 0..N {
        x.push(sol.segment(i * (nx + nu), nx));
        u.push(sol.segment(i * (nx + nu) + nx, nu));
    }
    x.push(sol.segment(N * (nx + nu), nx));
    let y = (0..=N)
        .map(|i| sol.segment(n_primal + i * nx, nx))
        .collect();
    Ok(RegLqrSolution { x, u, y })
}

/// Assembles the full interior-point Newton system in the variable order
/// `(dx, ds, dy, dz)`:
///
/// ```text
/// [ P     0     C^T     G^T   ]        [ grad_x L      ]
/// [ 0   S^-1 Z   0       I    ]        [ -mu S^-1 e + z]
/// [ C     0   -1/eta I   0    ]  d = - [ c              ]
/// [ G     I     0     -1/eta I]        [ g + s          ]
/// ```
pub fn assemble_ipm_4x4(ev: &ProblemEval, it: &IpmIterate) -> DenseKkt {
    let n = ev.num_vars();
    let me = ev.num_eq();
    let mi = ev.num_ineq();
    let dim = n + mi + me + mi;

    let s_off = n;
    let y_off = n + mi;
    let z_off = n + mi + me;

    let mut K = Matrix::zeros(dim, dim);
    K.set_block(0, 0, &ev.p_hess);
    K.set_block(0, y_off, &ev.c_jac.transpose());
    K.set_block(y_off, 0, &ev.c_jac);
    K.set_block(0, z_off, &ev.g_jac.transpose());
    K.set_block(z_off, 0, &ev.g_jac);
    for j in 0..mi {
        K[(s_off + j, s_off + j)] = it.z[j] / it.s[j];
        K[(s_off + j, z_off + j)] = 1.0;
        K[(z_off + j, s_off + j)] = 1.0;
        K[(z_off + j, z_off + j)] = -1.0 / it.eta;
    }
    for j in 0..me {
        K[(y_off + j, y_off + j)] = -1.0 / it.eta;
    }

    let grad_l = ev.grad_lagrangian(it);
    let mut rhs = Vector::zeros(dim);
    for j in 0..n {
        rhs[j] = -grad_l[j];
    }
    for j in 0..mi {
        rhs[s_off + j] = -(-it.mu / it.s[j] + it.z[j]);
    }
    for j in 0..me {
        rhs[y_off + j] = -ev.vals.c[j];
    }
    for j in 0..mi {
        rhs[z_off + j] = -(ev.vals.g[j] + it.s[j]);
    }

    let mut signs = vec![1i8; n + mi];
    signs.extend(std::iter::repeat_n(-1i8, me + mi));

    let blocks = vec![
        BlockSpan {
            kind: BlockKind::State,
            stage: None,
            start: 0,
            len: n,
        },
        BlockSpan {
            kind: BlockKind::Slack,
            stage: None,
            start: s_off,
            len: mi,
        },
        BlockSpan {
            kind: BlockKind::EqDual,
            stage: None,
            start: y_off,
            len: me,
        },
        BlockSpan {
            kind: BlockKind::IneqDual,
            stage: None,
            start: z_off,
            len: mi,
        },
    ];

    let out = DenseKkt {
        kkt: K,
        rhs,
        signs,
        blocks,
    };
    out.check_partition();
    out
}

fn unpack_direction(sol: &Vector, n: usize, me: usize, mi: usize) -> StepDirection {
    StepDirection {
        dx: sol.segment(0, n),
        ds: sol.segment(n, mi),
        dy: sol.segment(n + mi, me),
        dz: sol.segment(n + mi + me, mi),
    }
}

/// Solves the full Newton system by brute force.
pub fn oracle_solve_ipm_4x4(
    ev: &ProblemEval,
    it: &IpmIterate,
) -> Result<StepDirection, OracleError> {
    let sys = assemble_ipm_4x4(ev, it);
    let sol = sys.solve()?;
    Ok(unpack_direction(
        &sol,
        ev.num_vars(),
        ev.num_eq(),
        ev.num_ineq(),
    ))
}

/// Checks the equivalence between the Newton system with the Lagrangian
/// gradient on the right-hand side and the shifted system whose right-hand
/// side is the augmented-merit gradient and whose dual unknowns are
/// `dy - eta c` and `dz - eta (g + s)`. Solves both and returns the largest
/// absolute discrepancy after undoing the shift.
pub fn check_lemma(ev: &ProblemEval, it: &IpmIterate) -> Result<f64, OracleError> {
    let n = ev.num_vars();
    let me = ev.num_eq();
    let mi = ev.num_ineq();
    let sys = assemble_ipm_4x4(ev, it);
    let factor = QuasiDefFactor::factor(&sys.kkt, &sys.signs)?;
    let direct = factor.solve(&sys.rhs)?;

    // Augmented-merit gradient right-hand side.
    let gs = &ev.vals.g + &it.s;
    let grad_x_aug = {
        let mut v = ev.grad_lagrangian(it);
        v.axpy(it.eta, &ev.c_jac.t_mulv(&ev.vals.c));
        v.axpy(it.eta, &ev.g_jac.t_mulv(&gs));
        v
    };
    let mut rhs = Vector::zeros(sys.dim());
    for j in 0..n {
        rhs[j] = -grad_x_aug[j];
    }
    for j in 0..mi {
        let grad_s_aug = -it.mu / it.s[j] + it.z[j] + it.eta * gs[j];
        rhs[n + j] = -grad_s_aug;
    }
    let shifted = factor.solve(&rhs)?;

    // Undo the dual shift and compare.
    let mut max_diff: f64 = 0.0;
    for j in 0..(n + mi) {
        max_diff = max_diff.max((direct[j] - shifted[j]).abs());
    }
    for j in 0..me {
        let unshifted = shifted[n + mi + j] + it.eta * ev.vals.c[j];
        max_diff = max_diff.max((direct[n + mi + j] - unshifted).abs());
    }
    for j in 0..mi {
        let unshifted = shifted[n + mi + me + j] + it.eta * gs[j];
        max_diff = max_diff.max((direct[n + mi + me + j] - unshifted).abs());
    }
    Ok(max_diff)
}
