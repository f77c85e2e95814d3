//! Built-in benchmark problems.
//!
//! [`LinearOcp`] covers affine-dynamics problems with quadratic costs and
//! linear stage constraints (enough for box bounds and state targets);
//! [`Unicycle`] exercises nonlinear dynamics with control bounds and a
//! terminal state equality; [`DenseQp`] is an unstructured quadratic program
//! fed straight to the interior point loop.

#![allow(non_snake_case)]

use crate::dense::{Matrix, Vector};
use crate::ipm::{IpmError, NlpAdapter, ProblemEval, ProblemValues};
use crate::ocp::{ConstraintEval, CostEval, DynamicsEval, OcpDefinition};

/// One stage of an affine-dynamics, quadratic-cost problem. Cost is
/// `x'Qx/2 + x'Mu + u'Ru/2 + q'x + r'u`; dynamics `x+ = Ax + Bu + w`;
/// constraints `eq_x x + eq_u u + eq_0 = 0` and `ineq_x x + ineq_u u +
/// ineq_0 <= 0`.
#[derive(Debug, Clone)]
pub struct LinearOcpStage {
    pub Q: Matrix,
    pub M: Matrix,
    pub R: Matrix,
    pub q: Vector,
    pub r: Vector,
    pub A: Matrix,
    pub B: Matrix,
    pub w: Vector,
    pub eq_x: Matrix,
    pub eq_u: Matrix,
    pub eq_0: Vector,
    pub ineq_x: Matrix,
    pub ineq_u: Matrix,
    pub ineq_0: Vector,
}

#[derive(Debug, Clone)]
pub struct LinearOcpTerminal {
    pub Q: Matrix,
    pub q: Vector,
    pub eq_x: Matrix,
    pub eq_0: Vector,
    pub ineq_x: Matrix,
    pub ineq_0: Vector,
}

#[derive(Debug, Clone)]
pub struct LinearOcp {
    pub s0: Vector,
    pub stages: Vec<LinearOcpStage>,
    pub terminal: LinearOcpTerminal,
}

impl OcpDefinition for LinearOcp {
    fn horizon(&self) -> usize {
        self.stages.len()
    }

    fn nx(&self) -> usize {
        self.s0.len()
    }

    fn nu(&self) -> usize {
        self.stages.first().map_or(0, |s| s.R.rows())
    }

    fn initial_state(&self) -> Vector {
        self.s0.clone()
    }

    fn stage_cost(&self, i: usize, x: &Vector, u: &Vector) -> CostEval {
        let st = &self.stages[i];
        let Qx = &st.Q * x;
        let Mu = &st.M * u;
        let Ru = &st.R * u;
        let value = 0.5 * x.dot(&Qx) + x.dot(&Mu) + 0.5 * u.dot(&Ru) + st.q.dot(x) + st.r.dot(u);
        let mut grad_x = Qx;
        grad_x.axpy(1.0, &Mu);
        grad_x.axpy(1.0, &st.q);
        let mut grad_u = st.M.t_mulv(x);
        grad_u.axpy(1.0, &Ru);
        grad_u.axpy(1.0, &st.r);
        CostEval {
            value,
            grad_x,
            grad_u,
            hess_xx: st.Q.clone(),
            hess_xu: st.M.clone(),
            hess_uu: st.R.clone(),
        }
    }

    fn terminal_cost(&self, x: &Vector) -> CostEval {
        let t = &self.terminal;
        let Qx = &t.Q * x;
        let value = 0.5 * x.dot(&Qx) + t.q.dot(x);
        let mut grad_x = Qx;
        grad_x.axpy(1.0, &t.q);
        CostEval::state_only(value, grad_x, t.Q.clone())
    }

    fn dynamics(&self, i: usize, x: &Vector, u: &Vector) -> DynamicsEval {
        let st = &self.stages[i];
        let mut value = &(&st.A * x) + &(&st.B * u);
        value.axpy(1.0, &st.w);
        DynamicsEval {
            value,
            jac_x: st.A.clone(),
            jac_u: st.B.clone(),
        }
    }

    fn num_stage_eq(&self, i: usize) -> usize {
        self.stages[i].eq_0.len()
    }

    fn stage_eq(&self, i: usize, x: &Vector, u: &Vector) -> ConstraintEval {
        let st = &self.stages[i];
        let mut value = &(&st.eq_x * x) + &(&st.eq_u * u);
        value.axpy(1.0, &st.eq_0);
        ConstraintEval {
            value,
            jac_x: st.eq_x.clone(),
            jac_u: st.eq_u.clone(),
        }
    }

    fn num_terminal_eq(&self) -> usize {
        self.terminal.eq_0.len()
    }

    fn terminal_eq(&self, x: &Vector) -> ConstraintEval {
        let t = &self.terminal;
        let mut value = &t.eq_x * x;
        value.axpy(1.0, &t.eq_0);
        ConstraintEval {
            value,
            jac_x: t.eq_x.clone(),
            jac_u: Matrix::zeros(t.eq_0.len(), 0),
        }
    }

    fn num_stage_ineq(&self, i: usize) -> usize {
        self.stages[i].ineq_0.len()
    }

    fn stage_ineq(&self, i: usize, x: &Vector, u: &Vector) -> ConstraintEval {
        let st = &self.stages[i];
        let mut value = &(&st.ineq_x * x) + &(&st.ineq_u * u);
        value.axpy(1.0, &st.ineq_0);
        ConstraintEval {
            value,
            jac_x: st.ineq_x.clone(),
            jac_u: st.ineq_u.clone(),
        }
    }

    fn num_terminal_ineq(&self) -> usize {
        self.terminal.ineq_0.len()
    }

    fn terminal_ineq(&self, x: &Vector) -> ConstraintEval {
        let t = &self.terminal;
        let mut value = &t.ineq_x * x;
        value.axpy(1.0, &t.ineq_0);
        ConstraintEval {
            value,
            jac_x: t.ineq_x.clone(),
            jac_u: Matrix::zeros(t.ineq_0.len(), 0),
        }
    }
}

/// Double integrator with box-bounded acceleration: state `(position,
/// velocity)`, exact zero-order-hold discretization at step `dt`, quadratic
/// stage and terminal costs, and `|u| <= u_max` per stage.
pub fn double_integrator(
    horizon: usize,
    dt: f64,
    x0: [f64; 2],
    u_max: f64,
    state_weights: [f64; 2],
    control_weight: f64,
    terminal_weights: [f64; 2],
) -> LinearOcp {
    let A = Matrix::from_rows(&[vec![1.0, dt], vec![0.0, 1.0]]);
    let B = Matrix::from_rows(&[vec![0.5 * dt * dt], vec![dt]]);
    let stage = LinearOcpStage {
        Q: Matrix::diag(&state_weights),
        M: Matrix::zeros(2, 1),
        R: Matrix::diag(&[control_weight]),
        q: Vector::zeros(2),
        r: Vector::zeros(1),
        A,
        B,
        w: Vector::zeros(2),
        eq_x: Matrix::zeros(0, 2),
        eq_u: Matrix::zeros(0, 1),
        eq_0: Vector::zeros(0),
        ineq_x: Matrix::zeros(2, 2),
        ineq_u: Matrix::from_rows(&[vec![1.0], vec![-1.0]]),
        ineq_0: Vector::from_vec(vec![-u_max, -u_max]),
    };
    LinearOcp {
        s0: Vector::from_vec(x0.to_vec()),
        stages: vec![stage; horizon],
        terminal: LinearOcpTerminal {
            Q: Matrix::diag(&terminal_weights),
            q: Vector::zeros(2),
            eq_x: Matrix::zeros(0, 2),
            eq_0: Vector::zeros(0),
            ineq_x: Matrix::zeros(0, 2),
            ineq_0: Vector::zeros(0),
        },
    }
}

/// Kinematic unicycle: state `(px, py, heading)`, controls `(speed, turn
/// rate)`, explicit Euler discretization, box control bounds, and a terminal
/// equality pinning the state to `goal`.
#[derive(Debug, Clone)]
pub struct Unicycle {
    pub horizon: usize,
    pub dt: f64,
    pub x0: Vector,
    pub goal: Vector,
    pub v_max: f64,
    pub omega_max: f64,
    pub control_weights: [f64; 2],
    pub track_weight: f64,
    pub terminal_weight: f64,
}

impl Unicycle {
    pub fn new(horizon: usize, dt: f64, x0: [f64; 3], goal: [f64; 3]) -> Self {
        Self {
            horizon,
            dt,
            x0: Vector::from_vec(x0.to_vec()),
            goal: Vector::from_vec(goal.to_vec()),
            v_max: 1.0,
            omega_max: 2.0,
            control_weights: [0.5, 0.2],
            track_weight: 0.1,
            terminal_weight: 1.0,
        }
    }
}

impl OcpDefinition for Unicycle {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn nx(&self) -> usize {
        3
    }

    fn nu(&self) -> usize {
        2
    }

    fn initial_state(&self) -> Vector {
        self.x0.clone()
    }

    fn stage_cost(&self, _i: usize, x: &Vector, u: &Vector) -> CostEval {
        let [wv, ww] = self.control_weights;
        let tw = self.track_weight;
        let err = x - &self.goal;
        let value = 0.5 * (wv * u[0] * u[0] + ww * u[1] * u[1]) + 0.5 * tw * err.norm2_sq();
        CostEval {
            value,
            grad_x: &err * tw,
            grad_u: Vector::from_vec(vec![wv * u[0], ww * u[1]]),
            hess_xx: &Matrix::identity(3) * tw,
            hess_xu: Matrix::zeros(3, 2),
            hess_uu: Matrix::diag(&[wv, ww]),
        }
    }

    fn terminal_cost(&self, x: &Vector) -> CostEval {
        let tw = self.terminal_weight;
        let err = x - &self.goal;
        CostEval::state_only(
            0.5 * tw * err.norm2_sq(),
            &err * tw,
            &Matrix::identity(3) * tw,
        )
    }

    fn dynamics(&self, _i: usize, x: &Vector, u: &Vector) -> DynamicsEval {
        let h = self.dt;
        let (theta, v, omega) = (x[2], u[0], u[1]);
        let (sin, cos) = theta.sin_cos();
        let value = Vector::from_vec(vec![
            x[0] + h * v * cos,
            x[1] + h * v * sin,
            x[2] + h * omega,
        ]);
        let jac_x = Matrix::from_rows(&[
            vec![1.0, 0.0, -h * v * sin],
            vec![0.0, 1.0, h * v * cos],
            vec![0.0, 0.0, 1.0],
        ]);
        let jac_u = Matrix::from_rows(&[vec![h * cos, 0.0], vec![h * sin, 0.0], vec![0.0, h]]);
        DynamicsEval {
            value,
            jac_x,
            jac_u,
        }
    }

    fn num_stage_ineq(&self, _i: usize) -> usize {
        4
    }

    fn stage_ineq(&self, _i: usize, _x: &Vector, u: &Vector) -> ConstraintEval {
        ConstraintEval {
            value: Vector::from_vec(vec![
                u[0] - self.v_max,
                -u[0] - self.v_max,
                u[1] - self.omega_max,
                -u[1] - self.omega_max,
            ]),
            jac_x: Matrix::zeros(4, 3),
            jac_u: Matrix::from_rows(&[
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ]),
        }
    }

    fn num_terminal_eq(&self) -> usize {
        3
    }

    fn terminal_eq(&self, x: &Vector) -> ConstraintEval {
        ConstraintEval {
            value: x - &self.goal,
            jac_x: Matrix::identity(3),
            jac_u: Matrix::zeros(3, 0),
        }
    }
}

/// Unstructured quadratic program: `min x'Hx/2 + q'x` subject to
/// `A_eq x - b_eq = 0` and `A_in x - b_in <= 0`. Used directly by the
/// interior point loop through the dense KKT path.
#[derive(Debug, Clone)]
pub struct DenseQp {
    pub hessian: Matrix,
    pub linear: Vector,
    pub eq_jac: Matrix,
    pub eq_rhs: Vector,
    pub ineq_jac: Matrix,
    pub ineq_rhs: Vector,
}

impl DenseQp {
    pub fn unconstrained(hessian: Matrix, linear: Vector) -> Self {
        let n = linear.len();
        Self {
            hessian,
            linear,
            eq_jac: Matrix::zeros(0, n),
            eq_rhs: Vector::zeros(0),
            ineq_jac: Matrix::zeros(0, n),
            ineq_rhs: Vector::zeros(0),
        }
    }
}

impl NlpAdapter for DenseQp {
    fn num_vars(&self) -> usize {
        self.linear.len()
    }

    fn num_eq(&self) -> usize {
        self.eq_rhs.len()
    }

    fn num_ineq(&self) -> usize {
        self.ineq_rhs.len()
    }

    fn eval(&mut self, x: &Vector) -> Result<ProblemEval, IpmError> {
        let vals = self.eval_values(x)?;
        let mut grad_f = &self.hessian * x;
        grad_f.axpy(1.0, &self.linear);
        Ok(ProblemEval {
            vals,
            grad_f,
            c_jac: self.eq_jac.clone(),
            g_jac: self.ineq_jac.clone(),
            p_hess: self.hessian.clone(),
        })
    }

    fn eval_values(&mut self, x: &Vector) -> Result<ProblemValues, IpmError> {
        let hx = &self.hessian * x;
        let f = 0.5 * x.dot(&hx) + self.linear.dot(x);
        let c = &(&self.eq_jac * x) - &self.eq_rhs;
        let g = &(&self.ineq_jac * x) - &self.ineq_rhs;
        Ok(ProblemValues { f, c, g })
    }
}
