//! Interior-point properties: the shifted-system equivalence, slack
//! elimination against the full dense solve, and descent certification of
//! every accepted step.

mod common;

use common::{random_matrix, random_spd, random_vector, rng, uniform};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use trajopt::dense::{Matrix, Vector};
use trajopt::ipm::{
    self, eval_augmented_barrier_lagrangian, ipm_solve_observed, IpmIterate, IpmObserver,
    IpmSettings, IterationInfo, NlpAdapter, SolveStatus,
};
use trajopt::models::DenseQp;
use trajopt::oracle::{check_lemma, oracle_solve_ipm_4x4};

fn random_qp(rng: &mut ChaCha8Rng, n: usize, me: usize, mi: usize) -> DenseQp {
    DenseQp {
        hessian: random_spd(rng, n, 100.0),
        linear: random_vector(rng, n, 1.0),
        eq_jac: random_matrix(rng, me, n, 1.0),
        eq_rhs: random_vector(rng, me, 1.0),
        ineq_jac: random_matrix(rng, mi, n, 1.0),
        ineq_rhs: random_vector(rng, mi, 1.0),
    }
}

fn random_iterate(rng: &mut ChaCha8Rng, n: usize, me: usize, mi: usize) -> IpmIterate {
    IpmIterate {
        x: random_vector(rng, n, 1.0),
        s: Vector::from_fn(mi, |_| uniform(rng, 0.2, 2.0)),
        y: random_vector(rng, me, 1.0),
        z: Vector::from_fn(mi, |_| uniform(rng, 0.2, 2.0)),
        mu: uniform(rng, 1e-3, 0.5),
        eta: [1e1, 1e2, 1e3, 1e4][rng.gen_range(0..4)],
    }
}

#[test]
fn lemma_equivalence_on_random_problems() {
    let mut rng = rng(31);
    for problem in 0..10 {
        let n = 1 + problem % 4;
        let me = problem % 3;
        let mi = 1 + problem % 3;
        let mut qp = random_qp(&mut rng, n, me, mi);
        for _ in 0..2 {
            let mut it = random_iterate(&mut rng, n, me, mi);
            // The identity is exact; moderate eta keeps the +-eta*c shift
            // from amplifying roundoff past the absolute tolerance.
            it.eta = [1e1, 1e2][problem % 2];
            let ev = qp.eval(&it.x).unwrap();
            let diff = check_lemma(&ev, &it).unwrap();
            assert!(
                diff <= 1e-9,
                "problem {problem}: lemma discrepancy {diff:e}"
            );
        }
    }
}

#[test]
fn slack_elimination_reproduces_full_solve() {
    // 3x3 solve plus closed-form slack recovery equals the 4x4 solve.
    let mut rng = rng(32);
    for trial in 0..40 {
        let n = 1 + trial % 4;
        let me = trial % 3;
        let mi = 1 + trial % 3;
        let mut qp = random_qp(&mut rng, n, me, mi);
        let it = random_iterate(&mut rng, n, me, mi);
        let ev = qp.eval(&it.x).unwrap();

        let mut ev3 = ev.clone();
        let d3 = ipm::compute_direction(&mut ev3, &it).unwrap();
        let d4 = oracle_solve_ipm_4x4(&ev, &it).unwrap();

        let scale = 1.0
            + d4.dx
                .norm_inf()
                .max(d4.ds.norm_inf())
                .max(d4.dy.norm_inf())
                .max(d4.dz.norm_inf());
        for (a, b, what) in [
            (&d3.dx, &d4.dx, "dx"),
            (&d3.ds, &d4.ds, "ds"),
            (&d3.dy, &d4.dy, "dy"),
            (&d3.dz, &d4.dz, "dz"),
        ] {
            let err = (a - b).norm_inf() / scale;
            assert!(err <= 1e-9, "trial {trial}: {what} error {err:e}");
        }
    }
}

/// Checks, at every iteration with a nonzero primal direction:
/// descent of the closed-form derivative, agreement with a central
/// finite-difference slope of the merit, strict merit decrease, and strict
/// positivity of the stepped slacks and duals.
struct DescentChecker {
    values: DenseQp,
    iterations_checked: usize,
}

impl IpmObserver for DescentChecker {
    fn on_iteration(&mut self, info: &IterationInfo<'_>) {
        let d = info.direction;
        let it = info.iterate;
        let primal_norm = d.primal_norm_inf();
        if primal_norm <= 1e-12 {
            return;
        }
        self.iterations_checked += 1;
        let dd = info.dir_derivative;
        assert!(
            dd < 0.0,
            "iteration {}: derivative {dd} not negative",
            info.iter
        );

        // Central finite differences of the merit along (dx, ds).
        let h = 1e-6;
        let mut merit_at = |t: f64| {
            let mut x = it.x.clone();
            x.axpy(t, &d.dx);
            let mut s = it.s.clone();
            s.axpy(t, &d.ds);
            let vals = self.values.eval_values(&x).unwrap();
            let probe = IpmIterate {
                x,
                s,
                y: it.y.clone(),
                z: it.z.clone(),
                mu: it.mu,
                eta: it.eta,
            };
            eval_augmented_barrier_lagrangian(&vals, &probe).unwrap()
        };
        let fd = (merit_at(h) - merit_at(-h)) / (2.0 * h);
        let tol = (1e-4 * dd.abs()).max(1e-6);
        assert!(
            (fd - dd).abs() <= tol,
            "iteration {}: fd slope {fd} vs closed form {dd}",
            info.iter
        );

        assert!(
            info.merit_after < info.merit_before,
            "iteration {}: merit did not decrease",
            info.iter
        );

        let mut s = it.s.clone();
        s.axpy(info.alpha_primal, &d.ds);
        assert!(s.as_slice().iter().all(|&v| v > 0.0), "slack left the cone");
        let mut z = it.z.clone();
        z.axpy(info.alpha_dual, &d.dz);
        assert!(z.as_slice().iter().all(|&v| v > 0.0), "dual left the cone");
    }
}

#[test]
fn every_accepted_step_is_certified_descent() {
    let mut rng = rng(33);
    let settings = IpmSettings::default();
    for trial in 0..8 {
        let n = 2 + trial % 3;
        let me = trial % 2;
        let mi = 1 + trial % 3;
        let mut qp = random_qp(&mut rng, n, me, mi);
        // Make the inequalities satisfiable with margin: g(0) = -b <= -0.1.
        for j in 0..mi {
            qp.ineq_rhs[j] = qp.ineq_rhs[j].abs() + 0.1;
        }
        let mut checker = DescentChecker {
            values: qp.clone(),
            iterations_checked: 0,
        };
        let x0 = random_vector(&mut rng, n, 0.5);
        let (_, report) = ipm_solve_observed(&mut qp, &settings, x0, &mut checker).unwrap();
        assert!(
            report.status.is_success(),
            "trial {trial}: status {:?}",
            report.status
        );
        assert!(
            checker.iterations_checked > 0,
            "trial {trial}: nothing checked"
        );
    }
}

#[test]
fn convergence_report_has_small_residuals() {
    let mut rng = rng(34);
    let settings = IpmSettings::default();
    for trial in 0..5 {
        let n = 2 + trial;
        let mut qp = random_qp(&mut rng, n, 1, 2);
        for j in 0..2 {
            qp.ineq_rhs[j] = qp.ineq_rhs[j].abs() + 0.1;
        }
        let (it, report) = ipm::ipm_solve(&mut qp, &settings, Vector::zeros(n)).unwrap();
        assert_eq!(report.status, SolveStatus::Converged, "trial {trial}");
        assert!(report.kkt.max_overall() <= settings.tol_kkt);
        assert!(it.s.as_slice().iter().all(|&v| v > 0.0));
        assert!(it.z.as_slice().iter().all(|&v| v > 0.0));
    }
}

#[test]
fn almost_converged_is_accepted_late() {
    // With the barrier floored at 1e-3, complementarity stalls near 1e-3:
    // above the 2e-4 tolerance but inside the 10x band, so the solve ends
    // AlmostConverged once 90% of the iteration budget is spent.
    let mut qp = DenseQp {
        hessian: Matrix::diag(&[2.0]),
        linear: Vector::zeros(1),
        eq_jac: Matrix::zeros(0, 1),
        eq_rhs: Vector::zeros(0),
        ineq_jac: Matrix::from_rows(&[vec![-1.0]]),
        ineq_rhs: Vector::from_vec(vec![-1.0]),
    };
    let settings = IpmSettings {
        mu_min: 1e-3,
        tol_kkt: 2e-4,
        max_iters: 30,
        ..IpmSettings::default()
    };
    let (_, report) = ipm::ipm_solve(&mut qp, &settings, Vector::from_vec(vec![3.0])).unwrap();
    assert_eq!(report.status, SolveStatus::AlmostConverged, "{report:?}");
    assert!(report.kkt.max_overall() <= 10.0 * settings.tol_kkt);
}

#[test]
fn max_iters_is_reported_not_raised() {
    let mut rng = rng(35);
    let mut qp = random_qp(&mut rng, 3, 1, 2);
    for j in 0..2 {
        qp.ineq_rhs[j] = qp.ineq_rhs[j].abs() + 0.1;
    }
    let settings = IpmSettings {
        max_iters: 1,
        ..IpmSettings::default()
    };
    let (_, report) = ipm::ipm_solve(&mut qp, &settings, Vector::zeros(3)).unwrap();
    assert_eq!(report.status, SolveStatus::MaxIters);
    assert_eq!(report.iterations, 1);
}
