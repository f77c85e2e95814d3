//! Shared generators for the property tests: seeded random SPD matrices,
//! regularized LQR instances, linear OCP models, and interior-point iterates.

#![allow(dead_code)]
#![allow(non_snake_case)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trajopt::dense::{Matrix, Vector};
use trajopt::ipm::IpmIterate;
use trajopt::models::{LinearOcp, LinearOcpStage, LinearOcpTerminal};
use trajopt::ocp::OcpDims;
use trajopt::reglqr::{LqrStage, RegLqrProblem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_| uniform(rng, -scale, scale))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
    Matrix::from_fn(r, c, |_, _| uniform(rng, -scale, scale))
}

/// Random orthogonal matrix by modified Gram-Schmidt on a random matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut cols: Vec<Vector> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = random_vector(rng, n, 1.0);
        for c in &cols {
            let proj = c.dot(&v);
            v.axpy(-proj, c);
        }
        let norm = v.norm2();
        if norm > 1e-6 {
            cols.push(&v * (1.0 / norm));
        }
    }
    Matrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Random SPD matrix with eigenvalues log-spaced over `[1/cond, 1]`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, cond: f64) -> Matrix {
    let q = random_orthogonal(rng, n);
    let eigs: Vec<f64> = (0..n)
        .map(|i| {
            let t = if n > 1 {
                i as f64 / (n - 1) as f64
            } else {
                0.0
            };
            cond.powf(-t)
        })
        .collect();
    let mut scaled = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            scaled[(i, j)] = q[(i, j)] * eigs[j];
        }
    }
    (&scaled * &q.transpose()).symmetrized()
}

/// Jointly PSD cost blocks `[[Q, M], [M', R]]` with `R` shifted to be PD and
/// an optional ridge on the whole block (keeps the dense oracle's unpivoted
/// factorization well posed).
pub fn random_cost_blocks(
    rng: &mut ChaCha8Rng,
    nx: usize,
    nu: usize,
    ridge: f64,
) -> (Matrix, Matrix, Matrix) {
    let m = nx + nu;
    let t = random_matrix(rng, m, m, 1.0);
    let mut joint = (&t.transpose() * &t).symmetrized();
    joint = &joint * (1.0 / m as f64);
    joint.add_scaled_identity(ridge);
    let q = joint.block(0, 0, nx, nx);
    let mm = joint.block(0, nx, nx, nu);
    let mut r = joint.block(nx, nx, nu, nu);
    r.add_scaled_identity(1.0);
    (q, mm, r)
}

pub fn random_reglqr(
    rng: &mut ChaCha8Rng,
    horizon: usize,
    nx: usize,
    nu: usize,
    delta: f64,
    ridge: f64,
) -> RegLqrProblem {
    let dyn_scale = 0.8 / (nx as f64).sqrt();
    let stages = (0..horizon)
        .map(|_| {
            let (q_mat, m_mat, r_mat) = random_cost_blocks(rng, nx, nu, ridge);
            LqrStage {
                Q: q_mat,
                M: m_mat,
                R: r_mat,
                q: random_vector(rng, nx, 1.0),
                r: random_vector(rng, nu, 1.0),
                A: random_matrix(rng, nx, nx, dyn_scale),
                B: random_matrix(rng, nx, nu, dyn_scale),
                c_next: random_vector(rng, nx, 1.0),
            }
        })
        .collect();
    let mut q_n = random_spd(rng, nx, 100.0);
    q_n.add_scaled_identity(ridge);
    RegLqrProblem {
        stages,
        Q_N: q_n,
        q_N: random_vector(rng, nx, 1.0),
        c0: random_vector(rng, nx, 1.0),
        delta,
    }
}

/// Relative infinity-norm error between two stacked solutions.
pub fn rel_inf(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm_inf() / (1.0 + b.norm_inf())
}

pub fn stack(vs: &[Vector]) -> Vector {
    let refs: Vec<&Vector> = vs.iter().collect();
    Vector::concat(&refs)
}

/// Random affine-dynamics OCP with random linear stage constraints.
pub fn random_linear_ocp(
    rng: &mut ChaCha8Rng,
    horizon: usize,
    nx: usize,
    nu: usize,
    max_eq: usize,
    max_ineq: usize,
) -> LinearOcp {
    let dyn_scale = 0.8 / (nx as f64).sqrt();
    let stages = (0..horizon)
        .map(|_| {
            let (q_mat, m_mat, r_mat) = random_cost_blocks(rng, nx, nu, 1e-3);
            let me = rng.gen_range(0..=max_eq);
            let mi = rng.gen_range(0..=max_ineq);
            LinearOcpStage {
                Q: q_mat,
                M: m_mat,
                R: r_mat,
                q: random_vector(rng, nx, 0.5),
                r: random_vector(rng, nu, 0.5),
                A: random_matrix(rng, nx, nx, dyn_scale),
                B: random_matrix(rng, nx, nu, dyn_scale),
                w: random_vector(rng, nx, 0.5),
                eq_x: random_matrix(rng, me, nx, 1.0),
                eq_u: random_matrix(rng, me, nu, 1.0),
                eq_0: random_vector(rng, me, 0.5),
                ineq_x: random_matrix(rng, mi, nx, 1.0),
                ineq_u: random_matrix(rng, mi, nu, 1.0),
                ineq_0: random_vector(rng, mi, 0.5),
            }
        })
        .collect();
    let me = rng.gen_range(0..=max_eq);
    let mi = rng.gen_range(0..=max_ineq);
    let mut q_n = random_spd(rng, nx, 100.0);
    q_n.add_scaled_identity(1e-3);
    LinearOcp {
        s0: random_vector(rng, nx, 1.0),
        stages,
        terminal: LinearOcpTerminal {
            Q: q_n,
            q: random_vector(rng, nx, 0.5),
            eq_x: random_matrix(rng, me, nx, 1.0),
            eq_0: random_vector(rng, me, 0.5),
            ineq_x: random_matrix(rng, mi, nx, 1.0),
            ineq_0: random_vector(rng, mi, 0.5),
        },
    }
}

/// Random strictly interior iterate for an OCP of the given dimensions.
pub fn random_ocp_iterate(rng: &mut ChaCha8Rng, dims: &OcpDims, eta: f64) -> IpmIterate {
    IpmIterate {
        x: random_vector(rng, dims.num_vars(), 1.0),
        s: Vector::from_fn(dims.num_ineq(), |_| uniform(rng, 0.2, 2.0)),
        y: random_vector(rng, dims.num_eq(), 1.0),
        z: Vector::from_fn(dims.num_ineq(), |_| uniform(rng, 0.2, 2.0)),
        mu: uniform(rng, 1e-3, 0.5),
        eta,
    }
}
