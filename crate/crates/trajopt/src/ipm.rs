//! Regularized primal-dual interior point method.
//!
//! Solves `min f(x)  s.t.  c(x) = 0,  g(x) + s = 0,  s >= 0` by Newton steps
//! on the barrier KKT conditions. Both dual blocks of the Newton system carry
//! a `-1/eta` regularization, where `eta` is the penalty parameter of the
//! augmented barrier-Lagrangian merit function
//!
//! ```text
//! A(x, s; y, z, mu, eta) = f - mu * sum(log s) + y'c + z'(g + s)
//!                          + eta/2 (|c|^2 + |g + s|^2).
//! ```
//!
//! With that coupling the primal search direction is a descent direction of
//! `A` whenever it is nonzero, which the line search exploits. The slack step
//! is eliminated from the Newton system and recovered in closed form, so the
//! factorized system is the 3x3 block form in `(dx, dy, dz)`.

use crate::dense::{CholeskyFactor, DenseError, Matrix, QuasiDefFactor, Vector};
use crate::reglqr::RegLqrError;
use thiserror::Error;

const MAX_BACKTRACKS: usize = 50;
const MAX_HESSIAN_SHIFT: f64 = 1e10;
/// Primal directions below this (relative) size are treated as zero.
const ZERO_DIRECTION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum IpmError {
    #[error("slack vector has a non-positive entry")]
    NonPositiveSlack,
    #[error("inequality dual vector has a non-positive entry")]
    NonPositiveDual,
    #[error("degenerate KKT system: {0}")]
    DegenerateKkt(String),
    #[error("line search failed after {backtracks} backtracks")]
    LineSearchFailed { backtracks: usize },
    #[error("Hessian shift exceeded {shift:e} without reaching positive definiteness")]
    IndefiniteHessian { shift: f64 },
    #[error("callback returned a non-finite value{}", stage.map(|s| format!(" at stage {s}")).unwrap_or_default())]
    NonFiniteCallback { stage: Option<usize> },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error(transparent)]
    Lqr(#[from] RegLqrError),
}

/// Primal-dual iterate. `s` and `z` stay strictly positive throughout.
#[derive(Debug, Clone)]
pub struct IpmIterate {
    pub x: Vector,
    pub s: Vector,
    pub y: Vector,
    pub z: Vector,
    pub mu: f64,
    pub eta: f64,
}

impl IpmIterate {
    pub fn validate(&self) -> Result<(), IpmError> {
        if self.s.as_slice().iter().any(|&v| v <= 0.0) {
            return Err(IpmError::NonPositiveSlack);
        }
        if self.z.as_slice().iter().any(|&v| v <= 0.0) {
            return Err(IpmError::NonPositiveDual);
        }
        if !(self.mu > 0.0 && self.eta > 0.0) {
            return Err(IpmError::InvalidSettings(
                "mu and eta must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Dual regularization used for the step: exactly `1 / eta`.
    pub fn delta(&self) -> f64 {
        1.0 / self.eta
    }
}

#[derive(Debug, Clone)]
pub struct IpmSettings {
    pub mu0: f64,
    pub mu_min: f64,
    /// Linear barrier shrink factor.
    pub kappa_mu: f64,
    /// Superlinear barrier exponent.
    pub theta_mu: f64,
    pub eta0: f64,
    pub eta_max: f64,
    /// Penalty growth factor applied when feasibility stagnates.
    pub kappa_eta: f64,
    /// Fraction-to-boundary coefficient.
    pub tau_ftb: f64,
    pub armijo_c: f64,
    /// Step shrink factor for backtracking.
    pub backtrack: f64,
    pub max_iters: usize,
    pub tol_kkt: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            mu0: 1e-1,
            mu_min: 1e-9,
            kappa_mu: 0.2,
            theta_mu: 1.5,
            eta0: 1e2,
            eta_max: 1e8,
            kappa_eta: 10.0,
            tau_ftb: 0.995,
            armijo_c: 1e-4,
            backtrack: 0.5,
            max_iters: 100,
            tol_kkt: 1e-6,
        }
    }
}

impl IpmSettings {
    pub fn validate(&self) -> Result<(), IpmError> {
        let positive = [
            self.mu0,
            self.mu_min,
            self.kappa_mu,
            self.theta_mu,
            self.eta0,
            self.eta_max,
            self.kappa_eta,
            self.tol_kkt,
        ];
        if positive.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(IpmError::InvalidSettings(
                "all parameters must be positive and finite".into(),
            ));
        }
        if !(self.tau_ftb > 0.0 && self.tau_ftb < 1.0) {
            return Err(IpmError::InvalidSettings(
                "tau_ftb must lie in (0, 1)".into(),
            ));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 0.5) {
            return Err(IpmError::InvalidSettings(
                "armijo_c must lie in (0, 0.5)".into(),
            ));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(IpmError::InvalidSettings(
                "backtrack must lie in (0, 1)".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(IpmError::InvalidSettings(
                "max_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StepDirection {
    pub dx: Vector,
    pub ds: Vector,
    pub dy: Vector,
    pub dz: Vector,
}

impl StepDirection {
    pub fn primal_norm_inf(&self) -> f64 {
        self.dx.norm_inf().max(self.ds.norm_inf())
    }
}

/// Constraint and cost values at a point; all that the merit function needs.
#[derive(Debug, Clone)]
pub struct ProblemValues {
    pub f: f64,
    pub c: Vector,
    pub g: Vector,
}

/// Full first-order (plus Hessian approximation) evaluation at a point.
/// `p_hess` is the positive-definite approximation of the Lagrangian Hessian
/// actually used for the step; direction solvers may add a diagonal shift to
/// it, keeping the descent identity consistent.
#[derive(Debug, Clone)]
pub struct ProblemEval {
    pub vals: ProblemValues,
    pub grad_f: Vector,
    pub c_jac: Matrix,
    pub g_jac: Matrix,
    pub p_hess: Matrix,
}

impl ProblemEval {
    pub fn num_vars(&self) -> usize {
        self.grad_f.len()
    }

    pub fn num_eq(&self) -> usize {
        self.vals.c.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.vals.g.len()
    }

    /// `grad f + C'y + G'z`.
    pub fn grad_lagrangian(&self, it: &IpmIterate) -> Vector {
        let mut g = self.grad_f.clone();
        g.axpy(1.0, &self.c_jac.t_mulv(&it.y));
        g.axpy(1.0, &self.g_jac.t_mulv(&it.z));
        g
    }
}

/// Problem interface consumed by the solve loop. `compute_direction` has a
/// dense default; structured frontends override it.
pub trait NlpAdapter {
    fn num_vars(&self) -> usize;
    fn num_eq(&self) -> usize;
    fn num_ineq(&self) -> usize;
    fn eval(&mut self, x: &Vector) -> Result<ProblemEval, IpmError>;
    fn eval_values(&mut self, x: &Vector) -> Result<ProblemValues, IpmError>;

    fn compute_direction(
        &mut self,
        ev: &mut ProblemEval,
        it: &IpmIterate,
    ) -> Result<StepDirection, IpmError> {
        compute_direction(ev, it)
    }
}

fn merit_core(
    vals: &ProblemValues,
    s: &Vector,
    y: &Vector,
    z: &Vector,
    mu: f64,
) -> Result<f64, IpmError> {
    assert_eq!(vals.c.len(), y.len(), "equality dual dimension mismatch");
    assert_eq!(vals.g.len(), z.len(), "inequality dual dimension mismatch");
    assert_eq!(vals.g.len(), s.len(), "slack dimension mismatch");
    let mut barrier = 0.0;
    for &si in s.as_slice() {
        if si <= 0.0 {
            return Err(IpmError::NonPositiveSlack);
        }
        barrier += si.ln();
    }
    let gs = &vals.g + s;
    Ok(vals.f - mu * barrier + y.dot(&vals.c) + z.dot(&gs))
}

/// Barrier-Lagrangian `L = f - mu sum(log s) + y'c + z'(g + s)`.
pub fn eval_barrier_lagrangian(vals: &ProblemValues, it: &IpmIterate) -> Result<f64, IpmError> {
    merit_core(vals, &it.s, &it.y, &it.z, it.mu)
}

/// Augmented barrier-Lagrangian `A = L + eta/2 (|c|^2 + |g + s|^2)` — the
/// line-search merit function.
pub fn eval_augmented_barrier_lagrangian(
    vals: &ProblemValues,
    it: &IpmIterate,
) -> Result<f64, IpmError> {
    let l = merit_core(vals, &it.s, &it.y, &it.z, it.mu)?;
    let gs = &vals.g + &it.s;
    Ok(l + 0.5 * it.eta * (vals.c.norm2_sq() + gs.norm2_sq()))
}

fn augmented_merit_at(
    vals: &ProblemValues,
    s: &Vector,
    y: &Vector,
    z: &Vector,
    mu: f64,
    eta: f64,
) -> Result<f64, IpmError> {
    let l = merit_core(vals, s, y, z, mu)?;
    let gs = &vals.g + s;
    Ok(l + 0.5 * eta * (vals.c.norm2_sq() + gs.norm2_sq()))
}

/// Ensures `p_hess` is positive definite, adding `lambda I` with escalating
/// `lambda` on Cholesky failure. Returns the shift that was applied.
fn ensure_positive_definite(p: &mut Matrix) -> Result<f64, IpmError> {
    let mut shift = 0.0;
    loop {
        match CholeskyFactor::factor(p) {
            Ok(_) => return Ok(shift),
            Err(_) => {
                let next = if shift == 0.0 { 1e-8 } else { shift * 10.0 };
                if next > MAX_HESSIAN_SHIFT {
                    return Err(IpmError::IndefiniteHessian { shift: next });
                }
                p.add_scaled_identity(next - shift);
                shift = next;
            }
        }
    }
}

/// Recovers the eliminated slack step: `ds = -Z^-1 S dz + mu Z^-1 e - s`.
pub fn recover_slack_step(it: &IpmIterate, dz: &Vector) -> Vector {
    Vector::from_fn(dz.len(), |i| {
        -(it.s[i] / it.z[i]) * dz[i] + it.mu / it.z[i] - it.s[i]
    })
}

/// Newton direction from the condensed 3x3 system
///
/// ```text
/// [ P   C^T        G^T          ] [dx]     [ grad_x L    ]
/// [ C  -1/eta I    0            ] [dy] = - [ c           ]
/// [ G   0        -(W + 1/eta I) ] [dz]     [ g + mu Z^-1 e]
/// ```
///
/// with `W = Z^-1 S`, factored by the dense quasi-definite kernel, followed
/// by the closed-form slack recovery. Structured frontends solve the same
/// system through stagewise elimination instead. If `p_hess` is not positive
/// definite it is shifted in place first.
pub fn compute_direction(ev: &mut ProblemEval, it: &IpmIterate) -> Result<StepDirection, IpmError> {
    it.validate()?;
    let n = ev.num_vars();
    let me = ev.num_eq();
    let mi = ev.num_ineq();
    ensure_positive_definite(&mut ev.p_hess)?;

    let dim = n + me + mi;
    let mut kkt = Matrix::zeros(dim, dim);
    kkt.set_block(0, 0, &ev.p_hess);
    kkt.set_block(0, n, &ev.c_jac.transpose());
    kkt.set_block(n, 0, &ev.c_jac);
    kkt.set_block(0, n + me, &ev.g_jac.transpose());
    kkt.set_block(n + me, 0, &ev.g_jac);
    let delta = it.delta();
    for j in 0..me {
        kkt[(n + j, n + j)] = -delta;
    }
    for j in 0..mi {
        kkt[(n + me + j, n + me + j)] = -(it.s[j] / it.z[j] + delta);
    }

    let grad_l = ev.grad_lagrangian(it);
    let mut rhs = Vector::zeros(dim);
    for j in 0..n {
        rhs[j] = -grad_l[j];
    }
    for j in 0..me {
        rhs[n + j] = -ev.vals.c[j];
    }
    for j in 0..mi {
        rhs[n + me + j] = -(ev.vals.g[j] + it.mu / it.z[j]);
    }

    let mut signs = vec![1i8; n];
    signs.extend(std::iter::repeat_n(-1i8, me + mi));
    let factor = QuasiDefFactor::factor(&kkt, &signs).map_err(degenerate)?;
    let sol = factor.solve(&rhs).map_err(degenerate)?;

    let dx = sol.segment(0, n);
    let dy = sol.segment(n, me);
    let dz = sol.segment(n + me, mi);
    let ds = recover_slack_step(it, &dz);
    Ok(StepDirection { dx, ds, dy, dz })
}

fn degenerate(e: DenseError) -> IpmError {
    IpmError::DegenerateKkt(e.to_string())
}

/// Closed-form directional derivative of the augmented barrier-Lagrangian
/// along `(dx, ds)`:
///
/// ```text
/// D = -dx' P dx - ds' S^-1 Z ds - eta (|C dx|^2 + |G dx + ds|^2)
/// ```
///
/// Strictly negative whenever the primal direction is nonzero, provided the
/// direction solved the Newton system with this `P`.
pub fn directional_derivative(ev: &ProblemEval, it: &IpmIterate, d: &StepDirection) -> f64 {
    let quad = d.dx.dot(&(&ev.p_hess * &d.dx));
    let mut slack_quad = 0.0;
    for i in 0..d.ds.len() {
        slack_quad += d.ds[i] * d.ds[i] * it.z[i] / it.s[i];
    }
    let cdx = &ev.c_jac * &d.dx;
    let mut gterm = &ev.g_jac * &d.dx;
    gterm.axpy(1.0, &d.ds);
    -(quad + slack_quad) - it.eta * (cdx.norm2_sq() + gterm.norm2_sq())
}

/// Largest `alpha <= 1` with `v + alpha dv >= (1 - tau) v` elementwise.
pub fn fraction_to_boundary(v: &Vector, dv: &Vector, tau: f64) -> f64 {
    assert_eq!(v.len(), dv.len());
    let mut alpha: f64 = 1.0;
    for i in 0..v.len() {
        if dv[i] < 0.0 {
            alpha = alpha.min(tau * v[i] / (-dv[i]));
        }
    }
    alpha
}

#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub alpha_primal: f64,
    pub alpha_dual: f64,
    pub backtracks: usize,
    pub merit_before: f64,
    pub merit_after: f64,
}

/// Backtracking Armijo line search on the merit evaluator, starting from the
/// fraction-to-boundary cap for the slacks. The dual step length is the
/// fraction-to-boundary cap for `z` and is not backtracked.
pub fn line_search(
    merit: &mut dyn FnMut(&Vector, &Vector) -> Result<f64, IpmError>,
    it: &IpmIterate,
    d: &StepDirection,
    dir_deriv: f64,
    settings: &IpmSettings,
) -> Result<LineSearchResult, IpmError> {
    debug_assert!(dir_deriv < 0.0, "line search requires a descent direction");
    let tau_max = fraction_to_boundary(&it.s, &d.ds, settings.tau_ftb);
    let alpha_dual = fraction_to_boundary(&it.z, &d.dz, settings.tau_ftb);
    let merit_before = merit(&it.x, &it.s)?;

    let mut alpha = tau_max;
    for backtracks in 0..MAX_BACKTRACKS {
        let mut xt = it.x.clone();
        xt.axpy(alpha, &d.dx);
        let mut st = it.s.clone();
        st.axpy(alpha, &d.ds);
        let m = merit(&xt, &st)?;
        if m <= merit_before + settings.armijo_c * alpha * dir_deriv {
            return Ok(LineSearchResult {
                alpha_primal: alpha,
                alpha_dual,
                backtracks,
                merit_before,
                merit_after: m,
            });
        }
        alpha *= settings.backtrack;
    }
    Err(IpmError::LineSearchFailed {
        backtracks: MAX_BACKTRACKS,
    })
}

/// Unscaled KKT residuals of the current iterate.
#[derive(Debug, Clone)]
pub struct KktResiduals {
    /// `|grad f + C'y + G'z|_inf`
    pub stationarity: f64,
    /// `|c|_inf`
    pub eq: f64,
    /// `|g + s|_inf`
    pub ineq: f64,
    /// `|S z|_inf`
    pub complementarity: f64,
    /// `|S z - mu e|_inf`
    pub complementarity_centered: f64,
}

impl KktResiduals {
    /// The convergence measure: worst residual with exact complementarity.
    pub fn max_overall(&self) -> f64 {
        self.stationarity
            .max(self.eq)
            .max(self.ineq)
            .max(self.complementarity)
    }

    /// Residual of the mu-centered barrier KKT system.
    pub fn barrier_residual(&self) -> f64 {
        self.stationarity
            .max(self.eq)
            .max(self.ineq)
            .max(self.complementarity_centered)
    }

    pub fn feasibility(&self) -> f64 {
        self.eq.max(self.ineq)
    }
}

pub fn kkt_residuals(ev: &ProblemEval, it: &IpmIterate) -> KktResiduals {
    let gs = &ev.vals.g + &it.s;
    let mut comp: f64 = 0.0;
    let mut comp_centered: f64 = 0.0;
    for i in 0..it.s.len() {
        let sz = it.s[i] * it.z[i];
        comp = comp.max(sz.abs());
        comp_centered = comp_centered.max((sz - it.mu).abs());
    }
    KktResiduals {
        stationarity: ev.grad_lagrangian(it).norm_inf(),
        eq: ev.vals.c.norm_inf(),
        ineq: gs.norm_inf(),
        complementarity: comp,
        complementarity_centered: comp_centered,
    }
}

/// Barrier and penalty schedule. The barrier shrinks once the centered KKT
/// residual is below `10 mu`; the penalty grows when the feasibility residual
/// has not decreased by at least a factor 0.9 over the last five iterations
/// (and is still above the convergence tolerance).
pub fn update_parameters(
    settings: &IpmSettings,
    it: &IpmIterate,
    res: &KktResiduals,
    feas_history: &[f64],
) -> (f64, f64) {
    let mu = it.mu;
    let mu_next = if res.barrier_residual() <= 10.0 * mu {
        settings
            .mu_min
            .max((settings.kappa_mu * mu).min(mu.powf(settings.theta_mu)))
    } else {
        mu
    };

    let eta = it.eta;
    let eta_next = if feas_history.len() >= 6 {
        let now = feas_history[feas_history.len() - 1];
        let before = feas_history[feas_history.len() - 6];
        if now > 0.9 * before && now > settings.tol_kkt {
            (settings.kappa_eta * eta).min(settings.eta_max)
        } else {
            eta
        }
    } else {
        eta
    };
    (mu_next, eta_next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    AlmostConverged,
    MaxIters,
    LineSearchFailed,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "Converged",
            SolveStatus::AlmostConverged => "AlmostConverged",
            SolveStatus::MaxIters => "MaxIters",
            SolveStatus::LineSearchFailed => "LineSearchFailed",
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, SolveStatus::Converged | SolveStatus::AlmostConverged)
    }
}

#[derive(Debug, Clone)]
pub struct IterRecord {
    pub iter: usize,
    pub merit: f64,
    pub alpha_primal: f64,
    pub alpha_dual: f64,
    pub backtracks: usize,
    pub stationarity: f64,
    pub eq: f64,
    pub ineq: f64,
    pub complementarity: f64,
    pub mu: f64,
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub kkt: KktResiduals,
    pub mu: f64,
    pub eta: f64,
    pub history: Vec<IterRecord>,
}

/// Per-iteration snapshot handed to observers; `iterate` is the point the
/// direction was computed at, with the parameters used for that step.
pub struct IterationInfo<'a> {
    pub iter: usize,
    pub iterate: &'a IpmIterate,
    pub direction: &'a StepDirection,
    pub dir_derivative: f64,
    pub merit_before: f64,
    pub merit_after: f64,
    pub alpha_primal: f64,
    pub alpha_dual: f64,
    pub residuals: &'a KktResiduals,
}

pub trait IpmObserver {
    fn on_iteration(&mut self, _info: &IterationInfo<'_>) {}
}

impl IpmObserver for () {}

/// Initial slacks: `s_i = max(-g_i(x0), 0.01)`, so feasible inequalities
/// start with `g + s = 0` and infeasible ones get a small interior slack.
fn initial_slacks(g: &Vector) -> Vector {
    Vector::from_fn(g.len(), |i| (-g[i]).max(1e-2))
}

pub fn ipm_solve<A: NlpAdapter>(
    adapter: &mut A,
    settings: &IpmSettings,
    x0: Vector,
) -> Result<(IpmIterate, SolveReport), IpmError> {
    ipm_solve_observed(adapter, settings, x0, &mut ())
}

pub fn ipm_solve_observed<A: NlpAdapter, O: IpmObserver>(
    adapter: &mut A,
    settings: &IpmSettings,
    x0: Vector,
    observer: &mut O,
) -> Result<(IpmIterate, SolveReport), IpmError> {
    settings.validate()?;
    let n = adapter.num_vars();
    let me = adapter.num_eq();
    let mi = adapter.num_ineq();
    if x0.len() != n {
        return Err(IpmError::Dimension(format!(
            "initial point has length {}, problem has {n} variables",
            x0.len()
        )));
    }

    let ev0 = adapter.eval(&x0)?;
    let s = initial_slacks(&ev0.vals.g);
    let z = Vector::from_fn(mi, |i| settings.mu0 / s[i]);
    let mut it = IpmIterate {
        x: x0,
        s,
        y: Vector::zeros(me),
        z,
        mu: settings.mu0,
        eta: settings.eta0,
    };

    let mut history: Vec<IterRecord> = Vec::new();
    let mut feas_history: Vec<f64> = Vec::new();
    let mut status = SolveStatus::MaxIters;

    for iter in 0..settings.max_iters {
        let mut ev = adapter.eval(&it.x)?;
        let res = kkt_residuals(&ev, &it);
        feas_history.push(res.feasibility());
        let kkt_max = res.max_overall();

        if kkt_max <= settings.tol_kkt && (mi == 0 || it.mu <= 10.0 * settings.mu_min) {
            status = SolveStatus::Converged;
            break;
        }
        if iter as f64 >= 0.9 * settings.max_iters as f64 && kkt_max <= 10.0 * settings.tol_kkt {
            status = SolveStatus::AlmostConverged;
            break;
        }

        let (mu_next, eta_next) = update_parameters(settings, &it, &res, &feas_history);
        it.mu = mu_next;
        it.eta = eta_next;
        // Residuals for the step taken with the updated parameters.
        let res = kkt_residuals(&ev, &it);

        let d = adapter.compute_direction(&mut ev, &it)?;

        let scale = 1.0 + it.x.norm_inf().max(it.s.norm_inf());
        if d.primal_norm_inf() <= ZERO_DIRECTION_TOL * scale {
            // Primal block solved for this barrier problem; move the
            // inequality duals and let the parameter schedule act.
            let alpha_dual = fraction_to_boundary(&it.z, &d.dz, settings.tau_ftb);
            let merit = eval_augmented_barrier_lagrangian(&ev.vals, &it)?;
            it.z.axpy(alpha_dual, &d.dz);
            history.push(IterRecord {
                iter,
                merit,
                alpha_primal: 0.0,
                alpha_dual,
                backtracks: 0,
                stationarity: res.stationarity,
                eq: res.eq,
                ineq: res.ineq,
                complementarity: res.complementarity,
                mu: it.mu,
                eta: it.eta,
            });
            observer.on_iteration(&IterationInfo {
                iter,
                iterate: &it,
                direction: &d,
                dir_derivative: 0.0,
                merit_before: merit,
                merit_after: merit,
                alpha_primal: 0.0,
                alpha_dual,
                residuals: &res,
            });
            continue;
        }

        let dd = directional_derivative(&ev, &it, &d);
        if dd.is_nan() || dd >= 0.0 {
            status = SolveStatus::LineSearchFailed;
            break;
        }

        let (y_fixed, z_fixed, mu_fixed, eta_fixed) = (it.y.clone(), it.z.clone(), it.mu, it.eta);
        let mut merit_fn = |x: &Vector, s: &Vector| -> Result<f64, IpmError> {
            let vals = adapter.eval_values(x)?;
            augmented_merit_at(&vals, s, &y_fixed, &z_fixed, mu_fixed, eta_fixed)
        };
        let ls = match line_search(&mut merit_fn, &it, &d, dd, settings) {
            Ok(ls) => ls,
            Err(IpmError::LineSearchFailed { .. }) => {
                status = SolveStatus::LineSearchFailed;
                break;
            }
            Err(e) => return Err(e),
        };

        observer.on_iteration(&IterationInfo {
            iter,
            iterate: &it,
            direction: &d,
            dir_derivative: dd,
            merit_before: ls.merit_before,
            merit_after: ls.merit_after,
            alpha_primal: ls.alpha_primal,
            alpha_dual: ls.alpha_dual,
            residuals: &res,
        });

        it.x.axpy(ls.alpha_primal, &d.dx);
        it.s.axpy(ls.alpha_primal, &d.ds);
        it.y.axpy(ls.alpha_primal, &d.dy);
        it.z.axpy(ls.alpha_dual, &d.dz);

        history.push(IterRecord {
            iter,
            merit: ls.merit_after,
            alpha_primal: ls.alpha_primal,
            alpha_dual: ls.alpha_dual,
            backtracks: ls.backtracks,
            stationarity: res.stationarity,
            eq: res.eq,
            ineq: res.ineq,
            complementarity: res.complementarity,
            mu: it.mu,
            eta: it.eta,
        });
    }

    let ev = adapter.eval(&it.x)?;
    let kkt = kkt_residuals(&ev, &it);
    let report = SolveReport {
        status,
        iterations: history.len(),
        kkt,
        mu: it.mu,
        eta: it.eta,
        history,
    };
    Ok((it, report))
}
