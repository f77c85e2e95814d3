//! Seeded random instance generation.
//!
//! Cost blocks are built positive semi-definite by construction (Gram
//! products), with the identity added to `R` so it is positive definite with
//! unit eigenvalue floor. The same seed always yields the same instance.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trajopt::dense::{Matrix, Vector};
use trajopt::reglqr::{LqrStage, RegLqrProblem};

fn uniform_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.gen_range(-scale..scale))
}

fn uniform_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_| rng.gen_range(-scale..scale))
}

/// Gram product `T' T / dim`: symmetric positive semi-definite.
fn random_gram(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let t = uniform_matrix(rng, n, n, 1.0);
    (&(&t.transpose() * &t) * (1.0 / n as f64)).symmetrized()
}

pub fn generate(seed: u64, horizon: usize, nx: usize, nu: usize, delta: f64) -> RegLqrProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dyn_scale = 0.8 / (nx as f64).sqrt();
    let stages = (0..horizon)
        .map(|_| {
            // Joint PSD block [[Q, M], [M', R0]]; R = R0 + I stays jointly
            // PSD and makes R positive definite.
            let joint = random_gram(&mut rng, nx + nu);
            let q_cost = joint.block(0, 0, nx, nx);
            let cross = joint.block(0, nx, nx, nu);
            let mut r_cost = joint.block(nx, nx, nu, nu);
            r_cost.add_scaled_identity(1.0);
            LqrStage {
                Q: q_cost,
                M: cross,
                R: r_cost,
                q: uniform_vector(&mut rng, nx, 1.0),
                r: uniform_vector(&mut rng, nu, 1.0),
                A: uniform_matrix(&mut rng, nx, nx, dyn_scale),
                B: uniform_matrix(&mut rng, nx, nu, dyn_scale),
                c_next: uniform_vector(&mut rng, nx, 1.0),
            }
        })
        .collect();
    RegLqrProblem {
        stages,
        Q_N: random_gram(&mut rng, nx),
        q_N: uniform_vector(&mut rng, nx, 1.0),
        c0: uniform_vector(&mut rng, nx, 1.0),
        delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use trajopt::dense::symmetric_eigenvalues;

    #[test]
    fn same_seed_same_instance() {
        let a = generate(7, 3, 2, 1, 0.1);
        let b = generate(7, 3, 2, 1, 0.1);
        assert_eq!(a.c0, b.c0);
        for (sa, sb) in a.stages.iter().zip(&b.stages) {
            assert_eq!(sa.A, sb.A);
            assert_eq!(sa.Q, sb.Q);
        }
    }

    #[test]
    fn generated_blocks_have_required_definiteness() {
        for seed in 0..20 {
            let p = generate(seed, 4, 3, 2, 0.01);
            for st in &p.stages {
                let q_min = symmetric_eigenvalues(&st.Q)[0];
                assert!(q_min >= -1e-12, "seed {seed}: Q min eigenvalue {q_min}");
                let r_min = symmetric_eigenvalues(&st.R)[0];
                assert!(
                    r_min >= 1.0 - 1e-12,
                    "seed {seed}: R min eigenvalue {r_min}"
                );
            }
            let qn_min = symmetric_eigenvalues(&p.Q_N)[0];
            assert!(qn_min >= -1e-12, "seed {seed}: QN min eigenvalue {qn_min}");
        }
    }
}
