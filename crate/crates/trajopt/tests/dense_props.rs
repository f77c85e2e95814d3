//! Randomized properties of the dense kernel.

mod common;

use common::{random_matrix, random_spd, rng, uniform};
use trajopt::dense::{CholeskyFactor, Matrix, QuasiDefFactor, Vector};

#[test]
fn cholesky_reconstruction_and_solve_residuals() {
    let mut rng = rng(11);
    for trial in 0..200 {
        let n = 1 + trial % 12;
        let cond = 10f64.powf(uniform(&mut rng, 0.0, 6.0));
        let a = random_spd(&mut rng, n, cond);
        let f = CholeskyFactor::factor(&a).unwrap_or_else(|e| {
            panic!("trial {trial}: SPD factorization failed: {e}");
        });
        let l = f.lower();
        let recon = l * &l.transpose();
        let rel = (&recon - &a).norm_fro() / a.norm_fro();
        assert!(rel <= 1e-11, "trial {trial}: reconstruction error {rel}");

        let b = Vector::from_fn(n, |_| uniform(&mut rng, -1.0, 1.0));
        let x = f.solve(&b).unwrap();
        let resid = (&(&a * &x) - &b).norm_inf() / (1.0 + b.norm_inf());
        assert!(resid <= 1e-9, "trial {trial}: solve residual {resid}");
    }
}

#[test]
fn quasi_definite_family_factors_cleanly() {
    // K = [[P, A'], [A, -delta I]] with P SPD is quasi-definite for every
    // delta > 0; the factorization must succeed with the declared signs.
    let mut rng = rng(12);
    for trial in 0..100 {
        let n = 1 + trial % 6;
        let m = 1 + trial % 4;
        let delta = [1e-8, 1e-4, 1e-2, 1.0][trial % 4];
        let p = random_spd(&mut rng, n, 1e3);
        let a = random_matrix(&mut rng, m, n, 1.0);

        let mut k = Matrix::zeros(n + m, n + m);
        k.set_block(0, 0, &p);
        k.set_block(n, 0, &a);
        k.set_block(0, n, &a.transpose());
        for j in 0..m {
            k[(n + j, n + j)] = -delta;
        }
        let mut signs = vec![1i8; n];
        signs.extend(std::iter::repeat_n(-1i8, m));

        let f = QuasiDefFactor::factor(&k, &signs)
            .unwrap_or_else(|e| panic!("trial {trial} (delta {delta}): {e}"));
        let recon_rel = {
            let l = f.unit_lower();
            let d = Matrix::diag(f.d());
            let recon = &(l * &d) * &l.transpose();
            (&recon - &k).norm_fro() / (1.0 + k.norm_fro())
        };
        assert!(
            recon_rel <= 1e-10,
            "trial {trial}: LDL' residual {recon_rel}"
        );

        let b = Vector::from_fn(n + m, |_| uniform(&mut rng, -1.0, 1.0));
        let x = f.solve(&b).unwrap();
        let resid = (&(&k * &x) - &b).norm_inf() / (1.0 + b.norm_inf());
        assert!(resid <= 1e-8, "trial {trial}: solve residual {resid}");
    }
}

#[test]
fn jacobi_eigenvalues_match_spd_construction() {
    let mut rng = rng(13);
    for _ in 0..20 {
        let n = 2 + (uniform(&mut rng, 0.0, 5.0) as usize);
        let cond = 1e4;
        let a = random_spd(&mut rng, n, cond);
        let eigs = trajopt::dense::symmetric_eigenvalues(&a);
        assert!(
            (eigs[n - 1] - 1.0).abs() < 1e-8,
            "max eigenvalue {}",
            eigs[n - 1]
        );
        assert!(
            (eigs[0] - 1.0 / cond).abs() < 1e-8,
            "min eigenvalue {}",
            eigs[0]
        );
    }
}
