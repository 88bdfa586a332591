//! Implicit and explicit Euler–trapezium steppers.
//!
//! Implicit:
//! `y_{i+1} = y_i + h f(x_{i+1}, y_{i+1}) + h ∫_{x0}^{x_{i+1}} K(x_{i+1}, y(t), t) dt`
//!
//! Explicit:
//! `y_{i+1} = y_i + h f(x_i, y_i) + h ∫_{x0}^{x_i} K(x_i, y(t), t) dt`
//!
//! with the integrals replaced by the composite trapezium rule on the nodes.

use std::fmt;

use crate::error::{Result, VideError};
use crate::mesh::Mesh;
use crate::newton::{
    central_difference, newton_solve, newton_system, newton_third_order, second_difference,
    NewtonConfig, NewtonOutcome, NewtonSystemOutcome, NewtonVariant,
};
use crate::problem::{KernelDependence, Problem, ScalarVide, SystemVide};
use crate::quadrature::{
    trapezoid_window, trapezoid_window_system, window_prefix, window_prefix_system, HistoryView,
    RunningWindow,
};

/// A solve aborts once any component exceeds this magnitude.
pub const DIVERGENCE_LIMIT: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Implicit,
    Explicit,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Implicit => "implicit",
            Method::Explicit => "explicit",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = VideError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "implicit" => Ok(Method::Implicit),
            "explicit" => Ok(Method::Explicit),
            other => Err(VideError::Domain(format!("unknown method `{other}`"))),
        }
    }
}

/// Node values of a completed solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    mesh: Mesh,
    dim: usize,
    values: Vec<f64>,
    method: Method,
    newton_iterations: Vec<usize>,
}

impl Trajectory {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// First component at node `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.values[i * self.dim]
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Component `c` at every node.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.dim).copied().collect()
    }

    /// Node-major values, `dim` per node.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Newton iterations per implicit step; empty for explicit solves.
    pub fn newton_iterations(&self) -> &[usize] {
        &self.newton_iterations
    }
}

fn require_history(history: &HistoryView<'_>, i: usize) -> Result<()> {
    if history.k() != i {
        return Err(VideError::Domain(format!(
            "step {i} needs a history ending at node {i}, got {}",
            history.k()
        )));
    }
    if i + 1 >= history.mesh().n_nodes() {
        return Err(VideError::Domain(format!(
            "node {} is beyond the end of the mesh",
            i + 1
        )));
    }
    Ok(())
}

fn check_value(node: usize, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(VideError::Overflow { node, value: v });
    }
    Ok(v)
}

/// `y_{i+1}` from the explicit scheme. Reads `f` and `K` only at `x <= x_i`.
pub fn explicit_step(problem: &ScalarVide, history: &HistoryView<'_>, i: usize) -> Result<f64> {
    require_history(history, i)?;
    let mesh = history.mesh();
    let (h, x) = (mesh.h(), mesh.node(i));
    let y = history.value(i);
    let memory = trapezoid_window(&*problem.kernel, x, history);
    check_value(i + 1, y + h * problem.f(x, y) + h * memory)
}

/// `y_{i+1}` from the implicit scheme, solved by Newton from `y_i`.
pub fn implicit_step(
    problem: &ScalarVide,
    history: &HistoryView<'_>,
    i: usize,
    cfg: &NewtonConfig,
) -> Result<NewtonOutcome> {
    require_history(history, i)?;
    let mesh = history.mesh();
    let x_next = mesh.node(i + 1);
    let prefix = window_prefix(&*problem.kernel, x_next, history);
    solve_implicit_scalar(problem, history.value(i), x_next, mesh.h(), prefix, cfg)
        .map_err(|e| e.at_node(i + 1))
}

/// Newton solve of
/// `F(v) = v - y_i - h f(x, v) - (h^2/2) (prefix + K(x, v, x)) = 0`.
fn solve_implicit_scalar(
    problem: &ScalarVide,
    y_prev: f64,
    x: f64,
    h: f64,
    prefix: f64,
    cfg: &NewtonConfig,
) -> Result<NewtonOutcome> {
    let c = 0.5 * h * h;
    let f = &*problem.f;
    let k = &*problem.kernel;
    let residual = |v: f64| v - y_prev - h * f(x, v) - c * (prefix + k(x, v, x));
    let df = |v: f64| match &problem.df_dy {
        Some(d) => d(x, v),
        None => central_difference(|u| f(x, u), v, cfg.fd_step_scale),
    };
    let dk = |v: f64| match &problem.dk_dy {
        Some(d) => d(x, v, x),
        None => central_difference(|u| k(x, u, x), v, cfg.fd_step_scale),
    };
    let derivative = |v: f64| 1.0 - h * df(v) - c * dk(v);
    let out = match cfg.variant {
        NewtonVariant::SecondOrder => newton_solve(residual, derivative, y_prev, cfg)?,
        NewtonVariant::ThirdOrder => {
            let d2f = |v: f64| match &problem.d2f_dy2 {
                Some(d) => d(x, v),
                None => second_difference(|u| f(x, u), v, cfg.fd_step_scale),
            };
            let d2k = |v: f64| match &problem.d2k_dy2 {
                Some(d) => d(x, v, x),
                None => second_difference(|u| k(x, u, x), v, cfg.fd_step_scale),
            };
            let second = |v: f64| -h * d2f(v) - c * d2k(v);
            newton_third_order(residual, derivative, second, y_prev, cfg)?
        }
    };
    Ok(out)
}

/// Explicit step for a system, applied componentwise with vector `f` and `K`.
pub fn explicit_step_system(
    problem: &SystemVide,
    history: &HistoryView<'_>,
    i: usize,
) -> Result<Vec<f64>> {
    require_history(history, i)?;
    check_dim(problem, history)?;
    let mesh = history.mesh();
    let (h, x) = (mesh.h(), mesh.node(i));
    let y = history.state(i);
    let kernel = |x: f64, y: &[f64], t: f64| problem.eval_kernel(x, y, t);
    let memory = trapezoid_window_system(&kernel, x, history)?;
    let f = problem.eval_f(x, y)?;
    y.iter()
        .zip(f.iter().zip(&memory))
        .map(|(&yc, (&fc, &mc))| check_value(i + 1, yc + h * fc + h * mc))
        .collect()
}

/// Implicit step for a system: multivariate Newton on the step map, with
/// Jacobian `I - h J_f - (h^2/2) J_K` from the supplied Jacobians or from
/// columnwise central differences.
pub fn implicit_step_system(
    problem: &SystemVide,
    history: &HistoryView<'_>,
    i: usize,
    cfg: &NewtonConfig,
) -> Result<NewtonSystemOutcome> {
    require_history(history, i)?;
    check_dim(problem, history)?;
    let mesh = history.mesh();
    let x_next = mesh.node(i + 1);
    let kernel = |x: f64, y: &[f64], t: f64| problem.eval_kernel(x, y, t);
    let prefix = window_prefix_system(&kernel, x_next, history)?;
    solve_implicit_system(problem, history.state(i), x_next, mesh.h(), &prefix, cfg)
        .map_err(|e| e.at_node(i + 1))
}

fn check_dim(problem: &SystemVide, history: &HistoryView<'_>) -> Result<()> {
    if history.dim() != problem.dim() {
        return Err(VideError::Dimension {
            expected: problem.dim(),
            actual: history.dim(),
        });
    }
    Ok(())
}

fn solve_implicit_system(
    problem: &SystemVide,
    y_prev: &[f64],
    x: f64,
    h: f64,
    prefix: &[f64],
    cfg: &NewtonConfig,
) -> Result<NewtonSystemOutcome> {
    let m = problem.dim();
    let c = 0.5 * h * h;
    let residual = |v: &[f64]| -> Result<Vec<f64>> {
        let f = problem.eval_f(x, v)?;
        let k = problem.eval_kernel(x, v, x)?;
        Ok((0..m)
            .map(|r| v[r] - y_prev[r] - h * f[r] - c * (prefix[r] + k[r]))
            .collect())
    };
    let jacobian = |v: &[f64]| -> Result<Vec<f64>> {
        let jf = match &problem.jacobian_f {
            Some(j) => j(x, v),
            None => fd_jacobian(|u| problem.eval_f(x, u), v, cfg.fd_step_scale)?,
        };
        let jk = match &problem.jacobian_k {
            Some(j) => j(x, v, x),
            None => fd_jacobian(|u| problem.eval_kernel(x, u, x), v, cfg.fd_step_scale)?,
        };
        if jf.len() != m * m || jk.len() != m * m {
            return Err(VideError::Dimension {
                expected: m * m,
                actual: if jf.len() != m * m { jf.len() } else { jk.len() },
            });
        }
        let mut out: Vec<f64> = jf.iter().zip(&jk).map(|(a, b)| -h * a - c * b).collect();
        for r in 0..m {
            out[r * m + r] += 1.0;
        }
        Ok(out)
    };
    newton_system(residual, jacobian, y_prev, cfg)
}

/// Row-major Jacobian of `g` at `y` by columnwise central differences.
fn fd_jacobian<G>(g: G, y: &[f64], scale: f64) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let m = y.len();
    let mut jac = vec![0.0; m * m];
    let mut probe = y.to_vec();
    for col in 0..m {
        let d = scale * y[col].abs().max(1.0);
        probe[col] = y[col] + d;
        let plus = g(&probe)?;
        probe[col] = y[col] - d;
        let minus = g(&probe)?;
        probe[col] = y[col];
        for row in 0..m {
            jac[row * m + col] = (plus[row] - minus[row]) / (2.0 * d);
        }
    }
    Ok(jac)
}

/// Node-by-node driver shared by [`solve`] and the stability searches.
///
/// Kernels declared [`KernelDependence::IndependentOfX`] are integrated with
/// a running sum; all others recompute the full window every step.
pub struct Stepper<'p> {
    problem: &'p Problem,
    mesh: Mesh,
    method: Method,
    cfg: NewtonConfig,
    dim: usize,
    values: Vec<f64>,
    running: Option<RunningWindow>,
    newton_iterations: Vec<usize>,
}

impl<'p> Stepper<'p> {
    pub fn new(problem: &'p Problem, mesh: &Mesh, method: Method, cfg: &NewtonConfig) -> Result<Self> {
        cfg.validate()?;
        check_interval(problem, mesh)?;
        let dim = problem.dim();
        let initial = problem.initial();
        let mut values = Vec::with_capacity(mesh.n_nodes() * dim);
        values.extend_from_slice(&initial);
        let incremental = match problem {
            Problem::Scalar(p) => p.kernel_dependence() == KernelDependence::IndependentOfX,
            Problem::System(p) => p.kernel_dependence() == KernelDependence::IndependentOfX,
        };
        let mut stepper = Self {
            problem,
            mesh: *mesh,
            method,
            cfg: *cfg,
            dim,
            values,
            running: incremental.then(|| RunningWindow::new(dim)),
            newton_iterations: Vec::new(),
        };
        stepper.push_kernel(0)?;
        Ok(stepper)
    }

    /// Index of the last computed node.
    pub fn current(&self) -> usize {
        self.values.len() / self.dim - 1
    }

    pub fn is_done(&self) -> bool {
        self.current() + 1 >= self.mesh.n_nodes()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Compute the next node and return its state.
    pub fn advance(&mut self) -> Result<&[f64]> {
        let i = self.current();
        if self.is_done() {
            return Err(VideError::Domain("the mesh is already complete".into()));
        }
        let next = self.step_from(i).map_err(|e| e.at_node(i + 1))?;
        for &v in &next {
            if !v.is_finite() {
                return Err(VideError::Overflow { node: i + 1, value: v });
            }
            if v.abs() > DIVERGENCE_LIMIT {
                return Err(VideError::Divergence {
                    node: i + 1,
                    magnitude: v.abs(),
                    limit: DIVERGENCE_LIMIT,
                });
            }
        }
        self.values.extend_from_slice(&next);
        self.push_kernel(i + 1)?;
        Ok(self.state(i + 1))
    }

    pub fn into_trajectory(self) -> Trajectory {
        Trajectory {
            mesh: self.mesh,
            dim: self.dim,
            values: self.values,
            method: self.method,
            newton_iterations: self.newton_iterations,
        }
    }

    fn push_kernel(&mut self, j: usize) -> Result<()> {
        let Some(running) = self.running.as_mut() else {
            return Ok(());
        };
        let t = self.mesh.node(j);
        let y = &self.values[j * self.dim..(j + 1) * self.dim];
        match self.problem {
            Problem::Scalar(p) => running.push(&[p.kernel(t, y[0], t)]),
            Problem::System(p) => running.push(&p.eval_kernel(t, y, t)?),
        }
        Ok(())
    }

    fn step_from(&mut self, i: usize) -> Result<Vec<f64>> {
        let mesh = self.mesh;
        let h = mesh.h();
        let history = HistoryView::with_dim(&mesh, &self.values, self.dim)?;
        match (self.problem, self.method, &self.running) {
            (Problem::Scalar(p), Method::Explicit, None) => Ok(vec![explicit_step(p, &history, i)?]),
            (Problem::Scalar(p), Method::Explicit, Some(run)) => {
                let (x, y) = (mesh.node(i), history.value(i));
                Ok(vec![y + h * p.f(x, y) + h * run.closed(0, h)])
            }
            (Problem::Scalar(p), Method::Implicit, running) => {
                let out = match running {
                    None => implicit_step(p, &history, i, &self.cfg)?,
                    Some(run) => solve_implicit_scalar(
                        p,
                        history.value(i),
                        mesh.node(i + 1),
                        h,
                        run.prefix(0),
                        &self.cfg,
                    )?,
                };
                self.newton_iterations.push(out.iterations);
                Ok(vec![out.root])
            }
            (Problem::System(p), Method::Explicit, None) => explicit_step_system(p, &history, i),
            (Problem::System(p), Method::Explicit, Some(run)) => {
                let x = mesh.node(i);
                let y = history.state(i);
                let f = p.eval_f(x, y)?;
                Ok((0..self.dim)
                    .map(|c| y[c] + h * f[c] + h * run.closed(c, h))
                    .collect())
            }
            (Problem::System(p), Method::Implicit, running) => {
                let out = match running {
                    None => implicit_step_system(p, &history, i, &self.cfg)?,
                    Some(run) => {
                        let prefix: Vec<f64> = (0..self.dim).map(|c| run.prefix(c)).collect();
                        solve_implicit_system(
                            p,
                            history.state(i),
                            mesh.node(i + 1),
                            h,
                            &prefix,
                            &self.cfg,
                        )?
                    }
                };
                self.newton_iterations.push(out.iterations);
                Ok(out.root)
            }
        }
    }
}

fn check_interval(problem: &Problem, mesh: &Mesh) -> Result<()> {
    let (x0, x_end) = (problem.x0(), problem.x_end());
    let slack = 8.0 * f64::EPSILON * x0.abs().max(x_end.abs()).max(1.0);
    if mesh.x0() != x0 || (mesh.x_end() - x_end).abs() > slack {
        return Err(VideError::Domain(format!(
            "mesh [{}, {}] does not cover the problem interval [{x0}, {x_end}]",
            mesh.x0(),
            mesh.x_end()
        )));
    }
    Ok(())
}

/// March `method` over every node of `mesh`.
pub fn solve(problem: &Problem, mesh: &Mesh, method: Method, cfg: &NewtonConfig) -> Result<Trajectory> {
    let mut stepper = Stepper::new(problem, mesh, method, cfg)?;
    while !stepper.is_done() {
        stepper.advance()?;
    }
    Ok(stepper.into_trajectory())
}

/// [`solve`] for a scalar problem.
pub fn solve_scalar(
    problem: &ScalarVide,
    mesh: &Mesh,
    method: Method,
    cfg: &NewtonConfig,
) -> Result<Trajectory> {
    solve(&Problem::Scalar(problem.clone()), mesh, method, cfg)
}
