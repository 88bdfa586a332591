//! Scalar Newton iteration, its third-order variant, and the multivariate
//! form used by implicit steps on systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VideError};

/// Derivatives smaller than this are treated as zero.
pub const SINGULAR_DERIVATIVE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NewtonVariant {
    /// `y <- y - F/F'`
    #[default]
    SecondOrder,
    /// `y <- y - F/F' - F^2 F'' / (2 F'^3)`. Scalar problems only; systems
    /// fall back to [`NewtonVariant::SecondOrder`].
    ThirdOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Residual and step tolerance. The step test is scaled by `max(1, |y|)`.
    pub tol: f64,
    pub max_iter: usize,
    pub variant: NewtonVariant,
    /// Relative step for finite-difference derivatives.
    pub fd_step_scale: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            variant: NewtonVariant::SecondOrder,
            fd_step_scale: 1e-8,
        }
    }
}

impl NewtonConfig {
    pub fn third_order() -> Self {
        Self {
            variant: NewtonVariant::ThirdOrder,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.fd_step_scale > 0.0) || self.max_iter == 0 {
            return Err(VideError::Domain(format!("invalid Newton configuration {self:?}")));
        }
        Ok(())
    }
}

/// Converged root and the number of updates taken to reach it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub root: f64,
    pub iterations: usize,
}

/// Solve `F(y) = 0` from `y_init` with `y <- y - F/F'`.
///
/// Stops when `|F(y)| <= tol` or when an update moves `y` by at most
/// `tol * max(1, |y|)`.
pub fn newton_solve<F, D>(f: F, fprime: D, y_init: f64, cfg: &NewtonConfig) -> Result<NewtonOutcome>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    iterate(&f, &fprime, None::<&fn(f64) -> f64>, y_init, cfg)
}

/// Solve `F(y) = 0` with the third-order correction
/// `y <- y - F/F' - F^2 F'' / (2 F'^3)`.
pub fn newton_third_order<F, D, S>(
    f: F,
    fprime: D,
    fsecond: S,
    y_init: f64,
    cfg: &NewtonConfig,
) -> Result<NewtonOutcome>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    iterate(&f, &fprime, Some(&fsecond), y_init, cfg)
}

fn iterate<F, D, S>(
    f: &F,
    fprime: &D,
    fsecond: Option<&S>,
    y_init: f64,
    cfg: &NewtonConfig,
) -> Result<NewtonOutcome>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    let mut y = y_init;
    let mut residual = f(y);
    for k in 0..cfg.max_iter {
        if !residual.is_finite() {
            return Err(VideError::Numeric(format!("Newton residual is {residual} at {y}")));
        }
        if residual.abs() <= cfg.tol {
            return Ok(NewtonOutcome { root: y, iterations: k });
        }
        let d = fprime(y);
        if !(d.abs() >= SINGULAR_DERIVATIVE) {
            return Err(VideError::SingularDerivative { iterate: y, derivative: d });
        }
        let mut step = residual / d;
        if let Some(s) = fsecond {
            step += residual * residual * s(y) / (2.0 * d * d * d);
        }
        let next = y - step;
        if !next.is_finite() {
            return Err(VideError::Numeric(format!("Newton iterate became {next}")));
        }
        let moved = (next - y).abs();
        y = next;
        if moved <= cfg.tol * y.abs().max(1.0) {
            return Ok(NewtonOutcome { root: y, iterations: k + 1 });
        }
        residual = f(y);
    }
    if residual.abs() <= cfg.tol {
        return Ok(NewtonOutcome { root: y, iterations: cfg.max_iter });
    }
    Err(VideError::NewtonConvergence {
        iterations: cfg.max_iter,
        residual: residual.abs(),
    })
}

/// Converged state of the multivariate iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSystemOutcome {
    pub root: Vec<f64>,
    pub iterations: usize,
}

/// Solve `G(y) = 0` for `y in R^m` with `y <- y - J^{-1} G(y)`, where `J` is
/// supplied row-major. Each linear solve is a dense LU with partial pivoting.
/// Convergence is on the max-norm of the residual or of the update.
pub fn newton_system<G, J>(
    g: G,
    jacobian: J,
    y_init: &[f64],
    cfg: &NewtonConfig,
) -> Result<NewtonSystemOutcome>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
    J: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let m = y_init.len();
    let mut y = y_init.to_vec();
    let mut residual = g(&y)?;
    for k in 0..cfg.max_iter {
        let rnorm = max_norm(&residual);
        if !rnorm.is_finite() {
            return Err(VideError::Numeric("Newton residual is not finite".into()));
        }
        if rnorm <= cfg.tol {
            return Ok(NewtonSystemOutcome { root: y, iterations: k });
        }
        let jac = jacobian(&y)?;
        if jac.len() != m * m {
            return Err(VideError::Dimension { expected: m * m, actual: jac.len() });
        }
        let lu = DMatrix::from_row_slice(m, m, &jac).lu();
        let delta = lu
            .solve(&DVector::from_column_slice(&residual))
            .ok_or(VideError::SingularJacobian)?;
        let mut moved: f64 = 0.0;
        for (yi, di) in y.iter_mut().zip(delta.iter()) {
            *yi -= di;
            moved = moved.max(di.abs());
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(VideError::Numeric("Newton iterate is not finite".into()));
        }
        if moved <= cfg.tol * max_norm(&y).max(1.0) {
            return Ok(NewtonSystemOutcome { root: y, iterations: k + 1 });
        }
        residual = g(&y)?;
    }
    let rnorm = max_norm(&residual);
    if rnorm <= cfg.tol {
        return Ok(NewtonSystemOutcome { root: y, iterations: cfg.max_iter });
    }
    Err(VideError::NewtonConvergence { iterations: cfg.max_iter, residual: rnorm })
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Central difference `(g(y+d) - g(y-d)) / 2d` with `d = scale * max(1, |y|)`.
pub(crate) fn central_difference<G: Fn(f64) -> f64>(g: G, y: f64, scale: f64) -> f64 {
    let d = scale * y.abs().max(1.0);
    (g(y + d) - g(y - d)) / (2.0 * d)
}

/// Second central difference. Uses `sqrt(scale)` as the relative step, since
/// the `d^2` denominator needs a larger step than the first difference.
pub(crate) fn second_difference<G: Fn(f64) -> f64>(g: G, y: f64, scale: f64) -> f64 {
    let d = scale.sqrt() * y.abs().max(1.0);
    (g(y + d) - 2.0 * g(y) + g(y - d)) / (d * d)
}
