//! Optimal-control frontend.
//!
//! A problem is defined through per-stage callbacks (costs, dynamics,
//! equality and inequality constraints with first derivatives). The frontend
//! flattens the trajectory into one decision vector for the interior point
//! loop and overrides its direction computation: the Newton KKT system is
//! condensed stage by stage — inequality duals and non-dynamics equality
//! duals are eliminated in closed form — leaving a regularized LQR problem
//! with `delta = 1 / eta` that the Riccati recursion solves, after which the
//! eliminated components are expanded back into a full primal-dual step.
//!
//! Variable layout: `[x_0, u_0, x_1, u_1, ..., x_N]`. Equality rows: the
//! initial-state row, the `N` dynamics rows, then stagewise equality rows in
//! stage order. Inequality rows are stagewise in stage order. Constraint
//! callbacks return `c(x, u) = 0` / `g(x, u) <= 0` values; the initial-state
//! row is `s_0 - x_0` (Jacobian `-I`) and the dynamics rows are
//! `d_i(x_i, u_i) - x_{i+1}` (Jacobian `[A_i  B_i  -I]`).

#![allow(non_snake_case)]

use crate::dense::{Matrix, Vector};
use crate::ipm::{
    self, recover_slack_step, IpmError, IpmIterate, IpmObserver, IpmSettings, NlpAdapter,
    ProblemEval, ProblemValues, SolveReport, StepDirection,
};
use crate::reglqr::{self, LqrStage, RegLqrError, RegLqrProblem, RegLqrSolution};

/// Problem definition callbacks. Values and first derivatives are returned
/// together; Hessian blocks are Gauss-Newton style and must be symmetric
/// positive semi-definite.
pub trait OcpDefinition {
    fn horizon(&self) -> usize;
    fn nx(&self) -> usize;
    fn nu(&self) -> usize;
    fn initial_state(&self) -> Vector;

    fn stage_cost(&self, i: usize, x: &Vector, u: &Vector) -> CostEval;
    fn terminal_cost(&self, x: &Vector) -> CostEval;
    fn dynamics(&self, i: usize, x: &Vector, u: &Vector) -> DynamicsEval;

    fn num_stage_eq(&self, _i: usize) -> usize {
        0
    }
    fn stage_eq(&self, _i: usize, _x: &Vector, _u: &Vector) -> ConstraintEval {
        ConstraintEval::empty(self.nx(), self.nu())
    }
    fn num_terminal_eq(&self) -> usize {
        0
    }
    fn terminal_eq(&self, _x: &Vector) -> ConstraintEval {
        ConstraintEval::empty(self.nx(), 0)
    }
    fn num_stage_ineq(&self, _i: usize) -> usize {
        0
    }
    fn stage_ineq(&self, _i: usize, _x: &Vector, _u: &Vector) -> ConstraintEval {
        ConstraintEval::empty(self.nx(), self.nu())
    }
    fn num_terminal_ineq(&self) -> usize {
        0
    }
    fn terminal_ineq(&self, _x: &Vector) -> ConstraintEval {
        ConstraintEval::empty(self.nx(), 0)
    }
}

#[derive(Debug, Clone)]
pub struct CostEval {
    pub value: f64,
    pub grad_x: Vector,
    pub grad_u: Vector,
    pub hess_xx: Matrix,
    pub hess_xu: Matrix,
    pub hess_uu: Matrix,
}

impl CostEval {
    /// Terminal-stage cost: no control component.
    pub fn state_only(value: f64, grad_x: Vector, hess_xx: Matrix) -> Self {
        let nx = grad_x.len();
        Self {
            value,
            grad_x,
            grad_u: Vector::zeros(0),
            hess_xx,
            hess_xu: Matrix::zeros(nx, 0),
            hess_uu: Matrix::zeros(0, 0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DynamicsEval {
    pub value: Vector,
    pub jac_x: Matrix,
    pub jac_u: Matrix,
}

#[derive(Debug, Clone)]
pub struct ConstraintEval {
    pub value: Vector,
    pub jac_x: Matrix,
    pub jac_u: Matrix,
}

impl ConstraintEval {
    pub fn empty(nx: usize, nu: usize) -> Self {
        Self {
            value: Vector::zeros(0),
            jac_x: Matrix::zeros(0, nx),
            jac_u: Matrix::zeros(0, nu),
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Numeric snapshot of all callbacks at one stage of a trajectory.
/// `dynamics` is `None` for the terminal stage.
#[derive(Debug, Clone)]
pub struct StageEval {
    pub cost: CostEval,
    pub dynamics: Option<DynamicsEval>,
    pub eq: ConstraintEval,
    pub ineq: ConstraintEval,
}

/// Static dimension table derived from the model.
#[derive(Debug, Clone)]
pub struct OcpDims {
    pub horizon: usize,
    pub nx: usize,
    pub nu: usize,
    pub eq_per_stage: Vec<usize>,
    pub ineq_per_stage: Vec<usize>,
}

impl OcpDims {
    pub fn of<M: OcpDefinition>(model: &M) -> Self {
        let n = model.horizon();
        let mut eq_per_stage: Vec<usize> = (0..n).map(|i| model.num_stage_eq(i)).collect();
        eq_per_stage.push(model.num_terminal_eq());
        let mut ineq_per_stage: Vec<usize> = (0..n).map(|i| model.num_stage_ineq(i)).collect();
        ineq_per_stage.push(model.num_terminal_ineq());
        Self {
            horizon: n,
            nx: model.nx(),
            nu: model.nu(),
            eq_per_stage,
            ineq_per_stage,
        }
    }

    pub fn num_vars(&self) -> usize {
        (self.horizon + 1) * self.nx + self.horizon * self.nu
    }

    /// Dynamics-type rows: the initial-state row plus one row block per step.
    pub fn num_dyn_eq(&self) -> usize {
        (self.horizon + 1) * self.nx
    }

    pub fn num_eq(&self) -> usize {
        self.num_dyn_eq() + self.eq_per_stage.iter().sum::<usize>()
    }

    pub fn num_ineq(&self) -> usize {
        self.ineq_per_stage.iter().sum()
    }

    pub fn x_offset(&self, i: usize) -> usize {
        i * (self.nx + self.nu)
    }

    pub fn u_offset(&self, i: usize) -> usize {
        i * (self.nx + self.nu) + self.nx
    }

    /// Row offset of stage `i`'s equality block within the equality vector.
    pub fn stage_eq_offset(&self, i: usize) -> usize {
        self.num_dyn_eq() + self.eq_per_stage[..i].iter().sum::<usize>()
    }

    /// Row offset of stage `i`'s inequality block within the inequality vector.
    pub fn stage_ineq_offset(&self, i: usize) -> usize {
        self.ineq_per_stage[..i].iter().sum()
    }
}

pub fn pack_trajectory(xs: &[Vector], us: &[Vector]) -> Vector {
    let mut parts: Vec<&Vector> = Vec::with_capacity(xs.len() + us.len());
    for i in 0..us.len() {
        parts.push(&xs[i]);
        parts.push(&us[i]);
    }
    parts.push(&xs[us.len()]);
    Vector::concat(&parts)
}

pub fn unpack_trajectory(dims: &OcpDims, v: &Vector) -> (Vec<Vector>, Vec<Vector>) {
    let mut xs = Vec::with_capacity(dims.horizon + 1);
    let mut us = Vec::with_capacity(dims.horizon);
    for i in 0..dims.horizon {
        xs.push(v.segment(dims.x_offset(i), dims.nx));
        us.push(v.segment(dims.u_offset(i), dims.nu));
    }
    xs.push(v.segment(dims.x_offset(dims.horizon), dims.nx));
    (xs, us)
}

fn check_finite(v: &[f64], stage: usize) -> Result<(), IpmError> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(IpmError::NonFiniteCallback { stage: Some(stage) });
    }
    Ok(())
}

fn check_constraint_dims(
    ce: &ConstraintEval,
    rows: usize,
    nx: usize,
    nu: usize,
    stage: usize,
    what: &str,
) -> Result<(), IpmError> {
    if ce.len() != rows
        || ce.jac_x.rows() != rows
        || ce.jac_x.cols() != nx
        || ce.jac_u.rows() != rows
        || ce.jac_u.cols() != nu
    {
        return Err(IpmError::Dimension(format!(
            "stage {stage}: {what} returned inconsistent dimensions"
        )));
    }
    Ok(())
}

/// Invokes every callback once per stage and validates shapes and finiteness.
pub fn evaluate<M: OcpDefinition>(
    model: &M,
    xs: &[Vector],
    us: &[Vector],
) -> Result<Vec<StageEval>, IpmError> {
    let dims = OcpDims::of(model);
    if xs.len() != dims.horizon + 1 || us.len() != dims.horizon {
        return Err(IpmError::Dimension(format!(
            "trajectory has {} states / {} controls, expected {} / {}",
            xs.len(),
            us.len(),
            dims.horizon + 1,
            dims.horizon
        )));
    }
    let (nx, nu) = (dims.nx, dims.nu);

    let mut evals = Vec::with_capacity(dims.horizon + 1);
    for i in 0..dims.horizon {
        let cost = model.stage_cost(i, &xs[i], &us[i]);
        if cost.grad_x.len() != nx
            || cost.grad_u.len() != nu
            || cost.hess_xx.rows() != nx
            || cost.hess_xu.cols() != nu
            || cost.hess_uu.rows() != nu
        {
            return Err(IpmError::Dimension(format!(
                "stage {i}: cost returned inconsistent dimensions"
            )));
        }
        check_finite(cost.grad_x.as_slice(), i)?;
        check_finite(cost.grad_u.as_slice(), i)?;
        check_finite(&[cost.value], i)?;
        check_finite(cost.hess_xx.data(), i)?;
        check_finite(cost.hess_xu.data(), i)?;
        check_finite(cost.hess_uu.data(), i)?;

        let dynamics = model.dynamics(i, &xs[i], &us[i]);
        if dynamics.value.len() != nx
            || dynamics.jac_x.rows() != nx
            || dynamics.jac_x.cols() != nx
            || dynamics.jac_u.rows() != nx
            || dynamics.jac_u.cols() != nu
        {
            return Err(IpmError::Dimension(format!(
                "stage {i}: dynamics returned inconsistent dimensions"
            )));
        }
        check_finite(dynamics.value.as_slice(), i)?;
        check_finite(dynamics.jac_x.data(), i)?;
        check_finite(dynamics.jac_u.data(), i)?;

        let eq = model.stage_eq(i, &xs[i], &us[i]);
        check_constraint_dims(&eq, dims.eq_per_stage[i], nx, nu, i, "stage_eq")?;
        check_finite(eq.value.as_slice(), i)?;
        let ineq = model.stage_ineq(i, &xs[i], &us[i]);
        check_constraint_dims(&ineq, dims.ineq_per_stage[i], nx, nu, i, "stage_ineq")?;
        check_finite(ineq.value.as_slice(), i)?;

        evals.push(StageEval {
            cost,
            dynamics: Some(dynamics),
            eq,
            ineq,
        });
    }

    let n = dims.horizon;
    let cost = model.terminal_cost(&xs[n]);
    if cost.grad_x.len() != nx || cost.hess_xx.rows() != nx {
        return Err(IpmError::Dimension(
            "terminal cost returned inconsistent dimensions".into(),
        ));
    }
    check_finite(cost.grad_x.as_slice(), n)?;
    check_finite(cost.hess_xx.data(), n)?;
    let eq = model.terminal_eq(&xs[n]);
    check_constraint_dims(&eq, dims.eq_per_stage[n], nx, 0, n, "terminal_eq")?;
    check_finite(eq.value.as_slice(), n)?;
    let ineq = model.terminal_ineq(&xs[n]);
    check_constraint_dims(&ineq, dims.ineq_per_stage[n], nx, 0, n, "terminal_ineq")?;
    check_finite(ineq.value.as_slice(), n)?;
    evals.push(StageEval {
        cost,
        dynamics: None,
        eq,
        ineq,
    });
    Ok(evals)
}

/// Per-stage bookkeeping kept through condensation so the eliminated dual
/// and slack components can be reconstructed from the LQR solution.
#[derive(Debug, Clone)]
pub struct CondensedStage {
    pub ineq_jac_x: Matrix,
    pub ineq_jac_u: Matrix,
    pub eq_jac_x: Matrix,
    pub eq_jac_u: Matrix,
    /// Diagonal of `(Z^-1 S + 1/eta I)^-1` restricted to this stage.
    pub sigma: Vector,
    /// Inequality residual `g + mu Z^-1 e` restricted to this stage.
    pub r_z: Vector,
    /// Stage equality residual `c(x, u)`.
    pub r_c: Vector,
}

#[derive(Debug, Clone)]
pub struct Condensed {
    pub problem: RegLqrProblem,
    pub stages: Vec<CondensedStage>,
    pub dims: OcpDims,
}

/// Condenses the interior-point Newton system onto the dynamics-coupled
/// blocks, producing a regularized LQR problem with `delta = 1 / eta`.
///
/// Inequality rows are folded in with weights `sigma = (Z^-1 S + 1/eta)^-1`
/// and stage equality rows with weight `eta` (the `W = 0` specialization of
/// the same elimination). `shift` adds `shift * I` to the stage Hessian
/// diagonal, mirroring any positive-definiteness correction.
pub fn condense(
    dims: &OcpDims,
    evals: &[StageEval],
    xs: &[Vector],
    s0: &Vector,
    it: &IpmIterate,
    shift: f64,
) -> Condensed {
    let n = dims.horizon;
    let delta = it.delta();
    let eta = it.eta;

    let mut stages = Vec::with_capacity(n + 1);
    let mut lqr_stages = Vec::with_capacity(n);

    let stage_bookkeeping = |i: usize| -> CondensedStage {
        let ev = &evals[i];
        let zi0 = dims.stage_ineq_offset(i);
        let pi = dims.ineq_per_stage[i];
        let sigma = Vector::from_fn(pi, |j| {
            let s = it.s[zi0 + j];
            let z = it.z[zi0 + j];
            1.0 / (s / z + delta)
        });
        let r_z = Vector::from_fn(pi, |j| ev.ineq.value[j] + it.mu / it.z[zi0 + j]);
        CondensedStage {
            ineq_jac_x: ev.ineq.jac_x.clone(),
            ineq_jac_u: ev.ineq.jac_u.clone(),
            eq_jac_x: ev.eq.jac_x.clone(),
            eq_jac_u: ev.eq.jac_u.clone(),
            sigma,
            r_z,
            r_c: ev.eq.value.clone(),
        }
    };

    // sigma-weighted fold-in: J_a' diag(w) J_b and J_a' diag(w) r.
    let weighted_gram = |ja: &Matrix, w: &Vector, jb: &Matrix| -> Matrix {
        let mut out = Matrix::zeros(ja.cols(), jb.cols());
        for k in 0..w.len() {
            let wk = w[k];
            for a in 0..ja.cols() {
                let jak = ja[(k, a)] * wk;
                if jak == 0.0 {
                    continue;
                }
                for b in 0..jb.cols() {
                    out[(a, b)] += jak * jb[(k, b)];
                }
            }
        }
        out
    };
    let weighted_vec = |ja: &Matrix, w: &Vector, r: &Vector| -> Vector {
        let mut out = Vector::zeros(ja.cols());
        for k in 0..w.len() {
            let wk = w[k] * r[k];
            for a in 0..ja.cols() {
                out[a] += ja[(k, a)] * wk;
            }
        }
        out
    };

    for i in 0..n {
        let ev = &evals[i];
        let bk = stage_bookkeeping(i);
        let dynamics = ev.dynamics.as_ref().expect("interior stage has dynamics");
        let y_next = it.y.segment((i + 1) * dims.nx, dims.nx);
        let y_here = it.y.segment(i * dims.nx, dims.nx);
        let y_eq = it.y.segment(dims.stage_eq_offset(i), dims.eq_per_stage[i]);
        let z_here =
            it.z.segment(dims.stage_ineq_offset(i), dims.ineq_per_stage[i]);
        let eta_vec = Vector::filled(dims.eq_per_stage[i], eta);

        let mut Q = &ev.cost.hess_xx + &weighted_gram(&bk.ineq_jac_x, &bk.sigma, &bk.ineq_jac_x);
        Q = &Q + &weighted_gram(&bk.eq_jac_x, &eta_vec, &bk.eq_jac_x);
        Q.add_scaled_identity(shift);
        let mut M = &ev.cost.hess_xu + &weighted_gram(&bk.ineq_jac_x, &bk.sigma, &bk.ineq_jac_u);
        M = &M + &weighted_gram(&bk.eq_jac_x, &eta_vec, &bk.eq_jac_u);
        let mut R = &ev.cost.hess_uu + &weighted_gram(&bk.ineq_jac_u, &bk.sigma, &bk.ineq_jac_u);
        R = &R + &weighted_gram(&bk.eq_jac_u, &eta_vec, &bk.eq_jac_u);
        R.add_scaled_identity(shift);

        // Stagewise slice of grad_x L plus the fold-in terms.
        let mut q = ev.cost.grad_x.clone();
        q.axpy(-1.0, &y_here);
        q.axpy(1.0, &dynamics.jac_x.t_mulv(&y_next));
        q.axpy(1.0, &bk.eq_jac_x.t_mulv(&y_eq));
        q.axpy(1.0, &bk.ineq_jac_x.t_mulv(&z_here));
        q.axpy(1.0, &weighted_vec(&bk.ineq_jac_x, &bk.sigma, &bk.r_z));
        q.axpy(eta, &bk.eq_jac_x.t_mulv(&bk.r_c));

        let mut r = ev.cost.grad_u.clone();
        r.axpy(1.0, &dynamics.jac_u.t_mulv(&y_next));
        r.axpy(1.0, &bk.eq_jac_u.t_mulv(&y_eq));
        r.axpy(1.0, &bk.ineq_jac_u.t_mulv(&z_here));
        r.axpy(1.0, &weighted_vec(&bk.ineq_jac_u, &bk.sigma, &bk.r_z));
        r.axpy(eta, &bk.eq_jac_u.t_mulv(&bk.r_c));

        let c_next = &dynamics.value - &xs[i + 1];

        lqr_stages.push(LqrStage {
            Q: Q.symmetrized(),
            M,
            R: R.symmetrized(),
            q,
            r,
            A: dynamics.jac_x.clone(),
            B: dynamics.jac_u.clone(),
            c_next,
        });
        stages.push(bk);
    }

    // Terminal stage folds into Q_N, q_N the same way, with no controls.
    let bk = stage_bookkeeping(n);
    let ev = &evals[n];
    let y_here = it.y.segment(n * dims.nx, dims.nx);
    let y_eq = it.y.segment(dims.stage_eq_offset(n), dims.eq_per_stage[n]);
    let z_here =
        it.z.segment(dims.stage_ineq_offset(n), dims.ineq_per_stage[n]);
    let eta_vec = Vector::filled(dims.eq_per_stage[n], eta);

    let mut Q_N = &ev.cost.hess_xx + &weighted_gram(&bk.ineq_jac_x, &bk.sigma, &bk.ineq_jac_x);
    Q_N = &Q_N + &weighted_gram(&bk.eq_jac_x, &eta_vec, &bk.eq_jac_x);
    Q_N.add_scaled_identity(shift);
    let mut q_N = ev.cost.grad_x.clone();
    q_N.axpy(-1.0, &y_here);
    q_N.axpy(1.0, &bk.eq_jac_x.t_mulv(&y_eq));
    q_N.axpy(1.0, &bk.ineq_jac_x.t_mulv(&z_here));
    q_N.axpy(1.0, &weighted_vec(&bk.ineq_jac_x, &bk.sigma, &bk.r_z));
    q_N.axpy(eta, &bk.eq_jac_x.t_mulv(&bk.r_c));
    stages.push(bk);

    let c0 = s0 - &xs[0];

    Condensed {
        problem: RegLqrProblem {
            stages: lqr_stages,
            Q_N: Q_N.symmetrized(),
            q_N,
            c0,
            delta,
        },
        stages,
        dims: dims.clone(),
    }
}

/// Expands a regularized LQR solution of the condensed system back into a
/// full primal-dual step: the LQR duals are the dynamics-row dual steps, the
/// eliminated stage duals follow `dz = sigma (G dx + r_z)` (with `sigma =
/// eta` for stage equalities), and the slack step is recovered in closed
/// form.
pub fn expand(cnd: &Condensed, sol: &RegLqrSolution, it: &IpmIterate) -> StepDirection {
    let dims = &cnd.dims;
    let n = dims.horizon;
    let empty = Vector::zeros(0);

    let dx = pack_trajectory(&sol.x, &sol.u);

    let mut dy = Vector::zeros(dims.num_eq());
    for (i, y) in sol.y.iter().enumerate() {
        dy.set_segment(i * dims.nx, y);
    }
    let mut dz = Vector::zeros(dims.num_ineq());
    for i in 0..=n {
        let bk = &cnd.stages[i];
        let du = if i < n { &sol.u[i] } else { &empty };
        if !bk.r_c.is_empty() {
            let mut step = &(&bk.eq_jac_x * &sol.x[i]) + &(&bk.eq_jac_u * du);
            step.axpy(1.0, &bk.r_c);
            dy.set_segment(dims.stage_eq_offset(i), &(&step * it.eta));
        }
        if !bk.r_z.is_empty() {
            let mut step = &(&bk.ineq_jac_x * &sol.x[i]) + &(&bk.ineq_jac_u * du);
            step.axpy(1.0, &bk.r_z);
            let scaled = Vector::from_fn(step.len(), |j| bk.sigma[j] * step[j]);
            dz.set_segment(dims.stage_ineq_offset(i), &scaled);
        }
    }

    let ds = recover_slack_step(it, &dz);
    StepDirection { dx, ds, dy, dz }
}

/// Adapter that plugs an [`OcpDefinition`] into the interior point loop,
/// overriding the direction computation with the condensed Riccati path.
pub struct OcpAdapter<'m, M: OcpDefinition> {
    model: &'m M,
    dims: OcpDims,
    s0: Vector,
    cache: Option<(Vector, Vec<StageEval>)>,
}

impl<'m, M: OcpDefinition> OcpAdapter<'m, M> {
    pub fn new(model: &'m M) -> Self {
        let dims = OcpDims::of(model);
        let s0 = model.initial_state();
        Self {
            model,
            dims,
            s0,
            cache: None,
        }
    }

    pub fn dims(&self) -> &OcpDims {
        &self.dims
    }

    fn refresh_cache(&mut self, x: &Vector) -> Result<(), IpmError> {
        let stale = self
            .cache
            .as_ref()
            .is_none_or(|(cached_x, _)| cached_x != x);
        if stale {
            let (xs, us) = unpack_trajectory(&self.dims, x);
            let evals = evaluate(self.model, &xs, &us)?;
            self.cache = Some((x.clone(), evals));
        }
        Ok(())
    }

    fn assemble(&self, x: &Vector, evals: &[StageEval]) -> ProblemEval {
        let dims = &self.dims;
        let n = dims.horizon;
        let nvar = dims.num_vars();
        let me = dims.num_eq();
        let mi = dims.num_ineq();
        let (xs, _us) = unpack_trajectory(dims, x);

        let mut f = 0.0;
        let mut grad_f = Vector::zeros(nvar);
        let mut c_val = Vector::zeros(me);
        let mut c_jac = Matrix::zeros(me, nvar);
        let mut g_val = Vector::zeros(mi);
        let mut g_jac = Matrix::zeros(mi, nvar);
        let mut p_hess = Matrix::zeros(nvar, nvar);

        // Initial-state row: s0 - x0, Jacobian -I.
        c_val.set_segment(0, &(&self.s0 - &xs[0]));
        for j in 0..dims.nx {
            c_jac[(j, dims.x_offset(0) + j)] = -1.0;
        }

        for (i, ev) in evals.iter().enumerate() {
            let xo = dims.x_offset(i);
            f += ev.cost.value;
            grad_f.set_segment(xo, &ev.cost.grad_x);
            p_hess.set_block(xo, xo, &ev.cost.hess_xx.symmetrized());
            if i < n {
                let uo = dims.u_offset(i);
                grad_f.set_segment(uo, &ev.cost.grad_u);
                p_hess.set_block(xo, uo, &ev.cost.hess_xu);
                p_hess.set_block(uo, xo, &ev.cost.hess_xu.transpose());
                p_hess.set_block(uo, uo, &ev.cost.hess_uu.symmetrized());

                let dynamics = ev.dynamics.as_ref().expect("interior stage has dynamics");
                let row = (i + 1) * dims.nx;
                c_val.set_segment(row, &(&dynamics.value - &xs[i + 1]));
                c_jac.set_block(row, xo, &dynamics.jac_x);
                c_jac.set_block(row, uo, &dynamics.jac_u);
                for j in 0..dims.nx {
                    c_jac[(row + j, dims.x_offset(i + 1) + j)] = -1.0;
                }
            }
            if !ev.eq.is_empty() {
                let row = dims.stage_eq_offset(i);
                c_val.set_segment(row, &ev.eq.value);
                c_jac.set_block(row, xo, &ev.eq.jac_x);
                if i < n {
                    c_jac.set_block(row, dims.u_offset(i), &ev.eq.jac_u);
                }
            }
            if !ev.ineq.is_empty() {
                let row = dims.stage_ineq_offset(i);
                g_val.set_segment(row, &ev.ineq.value);
                g_jac.set_block(row, xo, &ev.ineq.jac_x);
                if i < n {
                    g_jac.set_block(row, dims.u_offset(i), &ev.ineq.jac_u);
                }
            }
        }

        ProblemEval {
            vals: ProblemValues {
                f,
                c: c_val,
                g: g_val,
            },
            grad_f,
            c_jac,
            g_jac,
            p_hess,
        }
    }
}

impl<'m, M: OcpDefinition> NlpAdapter for OcpAdapter<'m, M> {
    fn num_vars(&self) -> usize {
        self.dims.num_vars()
    }

    fn num_eq(&self) -> usize {
        self.dims.num_eq()
    }

    fn num_ineq(&self) -> usize {
        self.dims.num_ineq()
    }

    fn eval(&mut self, x: &Vector) -> Result<ProblemEval, IpmError> {
        self.refresh_cache(x)?;
        let (_, evals) = self.cache.as_ref().unwrap();
        Ok(self.assemble(x, evals))
    }

    fn eval_values(&mut self, x: &Vector) -> Result<ProblemValues, IpmError> {
        let (xs, us) = unpack_trajectory(&self.dims, x);
        let evals = evaluate(self.model, &xs, &us)?;
        let dims = &self.dims;
        let mut f = 0.0;
        let mut c = Vector::zeros(dims.num_eq());
        let mut g = Vector::zeros(dims.num_ineq());
        c.set_segment(0, &(&self.s0 - &xs[0]));
        for (i, ev) in evals.iter().enumerate() {
            f += ev.cost.value;
            if let Some(dynamics) = &ev.dynamics {
                c.set_segment((i + 1) * dims.nx, &(&dynamics.value - &xs[i + 1]));
            }
            if !ev.eq.is_empty() {
                c.set_segment(dims.stage_eq_offset(i), &ev.eq.value);
            }
            if !ev.ineq.is_empty() {
                g.set_segment(dims.stage_ineq_offset(i), &ev.ineq.value);
            }
        }
        Ok(ProblemValues { f, c, g })
    }

    /// Condense -> Riccati -> expand, escalating a diagonal Hessian shift on
    /// definiteness failures. The shift is mirrored into `ev.p_hess` so the
    /// descent identity stays exact.
    fn compute_direction(
        &mut self,
        ev: &mut ProblemEval,
        it: &IpmIterate,
    ) -> Result<StepDirection, IpmError> {
        self.refresh_cache(&it.x)?;
        let (xs, _) = unpack_trajectory(&self.dims, &it.x);
        let (_, evals) = self.cache.as_ref().unwrap();

        let mut shift = 0.0;
        loop {
            let cnd = condense(&self.dims, evals, &xs, &self.s0, it, shift);
            match reglqr::solve(&cnd.problem) {
                Ok(sol) => {
                    if shift > 0.0 {
                        ev.p_hess.add_scaled_identity(shift);
                    }
                    return Ok(expand(&cnd, &sol, it));
                }
                Err(
                    RegLqrError::GiNotPositiveDefinite { .. }
                    | RegLqrError::InnerNotPositiveDefinite { .. },
                ) => {
                    shift = if shift == 0.0 { 1e-8 } else { shift * 10.0 };
                    if shift > 1e10 {
                        return Err(IpmError::IndefiniteHessian { shift });
                    }
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
}

/// Final trajectory and multipliers, split back into stage blocks.
#[derive(Debug, Clone)]
pub struct OcpSolution {
    pub xs: Vec<Vector>,
    pub us: Vec<Vector>,
    /// Multipliers of the initial-state row and dynamics rows, one per stage.
    pub dyn_duals: Vec<Vector>,
    /// Multipliers of the stagewise equality constraints.
    pub eq_duals: Vec<Vector>,
    /// Multipliers of the stagewise inequality constraints.
    pub ineq_duals: Vec<Vector>,
    pub slacks: Vec<Vector>,
}

fn split_solution(dims: &OcpDims, it: &IpmIterate) -> OcpSolution {
    let (xs, us) = unpack_trajectory(dims, &it.x);
    let dyn_duals = (0..=dims.horizon)
        .map(|i| it.y.segment(i * dims.nx, dims.nx))
        .collect();
    let eq_duals = (0..=dims.horizon)
        .map(|i| it.y.segment(dims.stage_eq_offset(i), dims.eq_per_stage[i]))
        .collect();
    let ineq_duals = (0..=dims.horizon)
        .map(|i| {
            it.z.segment(dims.stage_ineq_offset(i), dims.ineq_per_stage[i])
        })
        .collect();
    let slacks = (0..=dims.horizon)
        .map(|i| {
            it.s.segment(dims.stage_ineq_offset(i), dims.ineq_per_stage[i])
        })
        .collect();
    OcpSolution {
        xs,
        us,
        dyn_duals,
        eq_duals,
        ineq_duals,
        slacks,
    }
}

/// Solves from the default initial trajectory (`x_i = s_0`, `u_i = 0`).
pub fn solve_ocp<M: OcpDefinition>(
    model: &M,
    settings: &IpmSettings,
) -> Result<(OcpSolution, SolveReport), IpmError> {
    let n = model.horizon();
    let xs0 = vec![model.initial_state(); n + 1];
    let us0 = vec![Vector::zeros(model.nu()); n];
    solve_ocp_observed(model, settings, &xs0, &us0, &mut ())
}

pub fn solve_ocp_from<M: OcpDefinition>(
    model: &M,
    settings: &IpmSettings,
    xs0: &[Vector],
    us0: &[Vector],
) -> Result<(OcpSolution, SolveReport), IpmError> {
    solve_ocp_observed(model, settings, xs0, us0, &mut ())
}

pub fn solve_ocp_observed<M: OcpDefinition, O: IpmObserver>(
    model: &M,
    settings: &IpmSettings,
    xs0: &[Vector],
    us0: &[Vector],
    observer: &mut O,
) -> Result<(OcpSolution, SolveReport), IpmError> {
    let mut adapter = OcpAdapter::new(model);
    let x0 = pack_trajectory(xs0, us0);
    let (it, report) = ipm::ipm_solve_observed(&mut adapter, settings, x0, observer)?;
    Ok((split_solution(adapter.dims(), &it), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{double_integrator, LinearOcp};

    fn default_di() -> LinearOcp {
        double_integrator(4, 0.1, [5.0, 0.0], 1.0, [1.0, 0.1], 0.1, [10.0, 10.0])
    }

    #[test]
    fn double_integrator_jacobians() {
        let model = default_di();
        let x = Vector::from_vec(vec![1.0, -2.0]);
        let u = Vector::from_vec(vec![0.3]);
        let dynamics = model.dynamics(0, &x, &u);
        let h = 0.1;
        assert_eq!(
            dynamics.jac_x,
            Matrix::from_rows(&[vec![1.0, h], vec![0.0, 1.0]])
        );
        assert_eq!(
            dynamics.jac_u,
            Matrix::from_rows(&[vec![h * h / 2.0], vec![h]])
        );
    }

    #[test]
    fn evaluate_constant_blocks_for_linear_quadratic_model() {
        let model = default_di();
        let xs = vec![Vector::from_vec(vec![1.0, 2.0]); 5];
        let us = vec![Vector::from_vec(vec![0.5]); 4];
        let evals = evaluate(&model, &xs, &us).unwrap();
        assert_eq!(evals.len(), 5);
        for ev in &evals[..4] {
            assert_eq!(ev.cost.hess_xx, Matrix::diag(&[1.0, 0.1]));
            assert_eq!(ev.cost.hess_uu, Matrix::diag(&[0.1]));
            let dynamics = ev.dynamics.as_ref().unwrap();
            assert_eq!(dynamics.jac_x[(0, 1)], 0.1);
        }
        assert_eq!(evals[4].cost.hess_xx, Matrix::diag(&[10.0, 10.0]));
        assert!(evals[4].dynamics.is_none());
    }

    #[test]
    fn condense_without_stage_constraints_is_identity() {
        // Strip the control bounds: condensation must reproduce the raw cost
        // blocks and dynamics rows.
        let mut model = default_di();
        for st in &mut model.stages {
            st.ineq_u = Matrix::zeros(0, 1);
            st.ineq_x = Matrix::zeros(0, 2);
            st.ineq_0 = Vector::zeros(0);
        }
        let dims = OcpDims::of(&model);
        let xs = vec![Vector::from_vec(vec![1.0, -1.0]); 5];
        let us = vec![Vector::from_vec(vec![0.2]); 4];
        let evals = evaluate(&model, &xs, &us).unwrap();
        let it = IpmIterate {
            x: pack_trajectory(&xs, &us),
            s: Vector::zeros(0),
            y: Vector::zeros(dims.num_eq()),
            z: Vector::zeros(0),
            mu: 0.1,
            eta: 100.0,
        };
        let cnd = condense(&dims, &evals, &xs, &model.initial_state(), &it, 0.0);
        assert_eq!(cnd.problem.delta, 0.01);
        for (i, st) in cnd.problem.stages.iter().enumerate() {
            assert_eq!(st.Q, model.stages[i].Q);
            assert_eq!(st.R, model.stages[i].R);
            assert_eq!(st.A, model.stages[i].A);
            assert_eq!(st.B, model.stages[i].B);
            // c_next = d(x, u) - x_next
            let dynamics = evals[i].dynamics.as_ref().unwrap();
            let expected = &dynamics.value - &xs[i + 1];
            assert!((&st.c_next - &expected).norm_inf() < 1e-15);
        }
        assert_eq!(cnd.problem.Q_N, model.terminal.Q);
        // c0 = s0 - x0
        let expected_c0 = &model.initial_state() - &xs[0];
        assert!((&cnd.problem.c0 - &expected_c0).norm_inf() < 1e-15);
    }

    #[test]
    fn scalar_bound_fold_in_matches_sigma_formula() {
        // One control bound u <= 1 on a stage: R gains exactly
        // 1 / (s/z + 1/eta) from the bound row [0, 1].
        let model = default_di();
        let dims = OcpDims::of(&model);
        let xs = vec![Vector::from_vec(vec![0.5, 0.0]); 5];
        let us = vec![Vector::from_vec(vec![0.0]); 4];
        let evals = evaluate(&model, &xs, &us).unwrap();
        let mi = dims.num_ineq();
        let it = IpmIterate {
            x: pack_trajectory(&xs, &us),
            s: Vector::filled(mi, 0.7),
            y: Vector::zeros(dims.num_eq()),
            z: Vector::filled(mi, 0.2),
            mu: 0.05,
            eta: 100.0,
        };
        let cnd = condense(&dims, &evals, &xs, &model.initial_state(), &it, 0.0);
        let sigma = 1.0 / (0.7 / 0.2 + 0.01);
        // Both bound rows (+u and -u) contribute sigma * 1^2 each.
        let expected_r = 0.1 + 2.0 * sigma;
        assert!((cnd.problem.stages[0].R[(0, 0)] - expected_r).abs() < 1e-12);
    }

    #[test]
    fn pack_unpack_roundtrip() {
        let dims = OcpDims {
            horizon: 2,
            nx: 2,
            nu: 1,
            eq_per_stage: vec![0, 0, 0],
            ineq_per_stage: vec![0, 0, 0],
        };
        let xs = vec![
            Vector::from_vec(vec![1.0, 2.0]),
            Vector::from_vec(vec![3.0, 4.0]),
            Vector::from_vec(vec![5.0, 6.0]),
        ];
        let us = vec![Vector::from_vec(vec![7.0]), Vector::from_vec(vec![8.0])];
        let v = pack_trajectory(&xs, &us);
        assert_eq!(v.as_slice(), &[1.0, 2.0, 7.0, 3.0, 4.0, 8.0, 5.0, 6.0]);
        let (xs2, us2) = unpack_trajectory(&dims, &v);
        assert_eq!(xs, xs2);
        assert_eq!(us, us2);
    }
}
