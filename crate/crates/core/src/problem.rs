//! Problem definitions for `y'(x) = f(x, y) + ∫_{x0}^{x} K(x, y(t), t) dt`,
//! in scalar form and as `m`-component first-order systems, plus the
//! reduction of an order-`n` equation to such a system.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, VideError};

/// `f(x, y)` and its `y`-derivatives.
pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// `K(x, y(t), t)` and its `y`-derivatives.
pub type KernelFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// Vector right-hand side `f(x, y) -> R^m`.
pub type VectorFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
/// Vector kernel `K(x, y(t), t) -> R^m`.
pub type VectorKernelFn = Arc<dyn Fn(f64, &[f64], f64) -> Vec<f64> + Send + Sync>;
/// Row-major `m x m` Jacobian of `f` with respect to `y`.
pub type JacobianFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
/// Row-major `m x m` Jacobian of `K` with respect to `y(t)`.
pub type KernelJacobianFn = Arc<dyn Fn(f64, &[f64], f64) -> Vec<f64> + Send + Sync>;

/// How the kernel depends on its first argument.
///
/// A kernel that ignores `x` lets the steppers keep a running trapezium sum
/// instead of recomputing the whole window every step. This is an opt-in
/// fast path; declaring it for a kernel that does read `x` gives wrong
/// answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelDependence {
    #[default]
    General,
    IndependentOfX,
}

fn check_interval(x0: f64, x_end: f64) -> Result<()> {
    if !x0.is_finite() || !x_end.is_finite() || x_end <= x0 {
        return Err(VideError::Domain(format!(
            "problem interval [{x0}, {x_end}] must satisfy x_end > x0"
        )));
    }
    Ok(())
}

/// Scalar first-order problem `y' = f(x, y) + ∫ K(x, y(t), t) dt`, `y(x0) = y0`.
#[derive(Clone)]
pub struct ScalarVide {
    pub(crate) f: ScalarFn,
    pub(crate) kernel: KernelFn,
    pub(crate) df_dy: Option<ScalarFn>,
    pub(crate) dk_dy: Option<KernelFn>,
    pub(crate) d2f_dy2: Option<ScalarFn>,
    pub(crate) d2k_dy2: Option<KernelFn>,
    pub(crate) x0: f64,
    pub(crate) x_end: f64,
    pub(crate) y0: f64,
    pub(crate) dependence: KernelDependence,
}

impl ScalarVide {
    pub fn new<F, K>(f: F, kernel: K, x0: f64, x_end: f64, y0: f64) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        K: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        check_interval(x0, x_end)?;
        if !y0.is_finite() {
            return Err(VideError::Domain(format!("initial value {y0} is not finite")));
        }
        Ok(Self {
            f: Arc::new(f),
            kernel: Arc::new(kernel),
            df_dy: None,
            dk_dy: None,
            d2f_dy2: None,
            d2k_dy2: None,
            x0,
            x_end,
            y0,
            dependence: KernelDependence::General,
        })
    }

    pub fn with_df_dy(mut self, d: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.df_dy = Some(Arc::new(d));
        self
    }

    pub fn with_dk_dy(
        mut self,
        d: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.dk_dy = Some(Arc::new(d));
        self
    }

    pub fn with_d2f_dy2(mut self, d: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d2f_dy2 = Some(Arc::new(d));
        self
    }

    pub fn with_d2k_dy2(
        mut self,
        d: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.d2k_dy2 = Some(Arc::new(d));
        self
    }

    pub fn with_kernel_dependence(mut self, dependence: KernelDependence) -> Self {
        self.dependence = dependence;
        self
    }

    /// Same equation on a different interval.
    pub fn with_interval(mut self, x0: f64, x_end: f64) -> Result<Self> {
        check_interval(x0, x_end)?;
        self.x0 = x0;
        self.x_end = x_end;
        Ok(self)
    }

    pub fn f(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }

    pub fn kernel(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.kernel)(x, y, t)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn x_end(&self) -> f64 {
        self.x_end
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn kernel_dependence(&self) -> KernelDependence {
        self.dependence
    }
}

impl fmt::Debug for ScalarVide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarVide")
            .field("x0", &self.x0)
            .field("x_end", &self.x_end)
            .field("y0", &self.y0)
            .field("df_dy", &self.df_dy.is_some())
            .field("dk_dy", &self.dk_dy.is_some())
            .field("dependence", &self.dependence)
            .finish_non_exhaustive()
    }
}

/// First-order system of `m` coupled equations
/// `y_j' = f_j(x, y) + ∫ K_j(x, y(t), t) dt`.
#[derive(Clone)]
pub struct SystemVide {
    pub(crate) m: usize,
    pub(crate) f: VectorFn,
    pub(crate) kernel: VectorKernelFn,
    pub(crate) jacobian_f: Option<JacobianFn>,
    pub(crate) jacobian_k: Option<KernelJacobianFn>,
    pub(crate) x0: f64,
    pub(crate) x_end: f64,
    pub(crate) y0: Vec<f64>,
    pub(crate) dependence: KernelDependence,
}

impl SystemVide {
    pub fn new<F, K>(f: F, kernel: K, x0: f64, x_end: f64, y0: Vec<f64>) -> Result<Self>
    where
        F: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        K: Fn(f64, &[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        check_interval(x0, x_end)?;
        if y0.is_empty() {
            return Err(VideError::Domain("a system needs at least one component".into()));
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(VideError::Domain("initial vector is not finite".into()));
        }
        Ok(Self {
            m: y0.len(),
            f: Arc::new(f),
            kernel: Arc::new(kernel),
            jacobian_f: None,
            jacobian_k: None,
            x0,
            x_end,
            y0,
            dependence: KernelDependence::General,
        })
    }

    pub fn with_jacobian_f(
        mut self,
        j: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian_f = Some(Arc::new(j));
        self
    }

    pub fn with_jacobian_k(
        mut self,
        j: impl Fn(f64, &[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian_k = Some(Arc::new(j));
        self
    }

    pub fn with_kernel_dependence(mut self, dependence: KernelDependence) -> Self {
        self.dependence = dependence;
        self
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn x_end(&self) -> f64 {
        self.x_end
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn kernel_dependence(&self) -> KernelDependence {
        self.dependence
    }

    /// Evaluate `f`, checking the component count.
    pub fn eval_f(&self, x: f64, y: &[f64]) -> Result<Vec<f64>> {
        let out = (self.f)(x, y);
        self.check_len(out.len())?;
        Ok(out)
    }

    /// Evaluate `K`, checking the component count.
    pub fn eval_kernel(&self, x: f64, y: &[f64], t: f64) -> Result<Vec<f64>> {
        let out = (self.kernel)(x, y, t);
        self.check_len(out.len())?;
        Ok(out)
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.m {
            return Err(VideError::Dimension {
                expected: self.m,
                actual: len,
            });
        }
        Ok(())
    }
}

impl fmt::Debug for SystemVide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemVide")
            .field("m", &self.m)
            .field("x0", &self.x0)
            .field("x_end", &self.x_end)
            .field("y0", &self.y0)
            .finish_non_exhaustive()
    }
}

impl From<ScalarVide> for SystemVide {
    fn from(p: ScalarVide) -> Self {
        let f = p.f.clone();
        let k = p.kernel.clone();
        let mut sys = SystemVide {
            m: 1,
            f: Arc::new(move |x, y: &[f64]| vec![f(x, y[0])]),
            kernel: Arc::new(move |x, y: &[f64], t| vec![k(x, y[0], t)]),
            jacobian_f: None,
            jacobian_k: None,
            x0: p.x0,
            x_end: p.x_end,
            y0: vec![p.y0],
            dependence: p.dependence,
        };
        if let Some(d) = p.df_dy {
            sys.jacobian_f = Some(Arc::new(move |x, y: &[f64]| vec![d(x, y[0])]));
        }
        if let Some(d) = p.dk_dy {
            sys.jacobian_k = Some(Arc::new(move |x, y: &[f64], t| vec![d(x, y[0], t)]));
        }
        sys
    }
}

/// Either problem form.
#[derive(Debug, Clone)]
pub enum Problem {
    Scalar(ScalarVide),
    System(SystemVide),
}

impl Problem {
    pub fn dim(&self) -> usize {
        match self {
            Problem::Scalar(_) => 1,
            Problem::System(s) => s.m,
        }
    }

    pub fn x0(&self) -> f64 {
        match self {
            Problem::Scalar(p) => p.x0,
            Problem::System(p) => p.x0,
        }
    }

    pub fn x_end(&self) -> f64 {
        match self {
            Problem::Scalar(p) => p.x_end,
            Problem::System(p) => p.x_end,
        }
    }

    pub fn initial(&self) -> Vec<f64> {
        match self {
            Problem::Scalar(p) => vec![p.y0],
            Problem::System(p) => p.y0.clone(),
        }
    }
}

impl From<ScalarVide> for Problem {
    fn from(p: ScalarVide) -> Self {
        Problem::Scalar(p)
    }
}

impl From<SystemVide> for Problem {
    fn from(p: SystemVide) -> Self {
        Problem::System(p)
    }
}

/// Rewrite `y^(n) = f(x, y) + ∫ K(x, y(t), t) dt` as the first-order chain
/// `y_1' = y_2, ..., y_{n-1}' = y_n, y_n' = f(x, y_1) + ∫ K(x, y_1(t), t) dt`.
///
/// `initial_values` are `y(x0), y'(x0), ..., y^(n-1)(x0)`. The kernel sees
/// only the first component.
pub fn reduce_order<F, K>(
    order: usize,
    f: F,
    kernel: K,
    initial_values: &[f64],
    x0: f64,
    x_end: f64,
) -> Result<SystemVide>
where
    F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    K: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
{
    if order == 0 {
        return Err(VideError::Domain("equation order must be at least 1".into()));
    }
    if initial_values.len() != order {
        return Err(VideError::Domain(format!(
            "order {order} needs {order} initial values, got {}",
            initial_values.len()
        )));
    }
    let n = order;
    let rhs = move |x: f64, y: &[f64]| {
        let mut out = Vec::with_capacity(n);
        out.extend_from_slice(&y[1..n]);
        out.push(f(x, y[0]));
        out
    };
    let memory = move |x: f64, y: &[f64], t: f64| {
        let mut out = vec![0.0; n];
        out[n - 1] = kernel(x, y[0], t);
        out
    };
    SystemVide::new(rhs, memory, x0, x_end, initial_values.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_reduction_is_the_scalar_problem() {
        let sys = reduce_order(1, |x, y| x - 3.0 * y, |x, y, t| x * y * t, &[0.5], 0.0, 2.0)
            .unwrap();
        assert_eq!(sys.dim(), 1);
        assert_eq!(sys.eval_f(0.7, &[1.5]).unwrap(), vec![0.7 - 4.5]);
        assert_eq!(sys.eval_kernel(0.7, &[1.5], 0.2).unwrap(), vec![0.7 * 1.5 * 0.2]);
        assert_eq!(sys.y0(), &[0.5]);
    }

    #[test]
    fn second_order_layout() {
        let sys = reduce_order(2, |_, y| -y, |x, y, t| (t - x).exp() * y, &[1.0, 0.0], 0.0, 1.0)
            .unwrap();
        assert_eq!(sys.eval_f(0.3, &[2.0, 5.0]).unwrap(), vec![5.0, -2.0]);
        let k = sys.eval_kernel(0.3, &[2.0, 5.0], 0.1).unwrap();
        assert_eq!(k[0], 0.0);
        assert_eq!(k[1], (0.1f64 - 0.3).exp() * 2.0);
    }

    #[test]
    fn third_order_chain() {
        let sys = reduce_order(3, |x, y| x + y, |_, y, _| 2.0 * y, &[1.0, 2.0, 3.0], 0.0, 1.0)
            .unwrap();
        assert_eq!(sys.eval_f(1.0, &[4.0, 5.0, 6.0]).unwrap(), vec![5.0, 6.0, 5.0]);
        assert_eq!(sys.eval_kernel(1.0, &[4.0, 5.0, 6.0], 0.5).unwrap(), vec![0.0, 0.0, 8.0]);
    }

    #[test]
    fn chain_structure_for_any_order() {
        for n in 1..8 {
            let init: Vec<f64> = (0..n).map(|j| j as f64).collect();
            let sys = reduce_order(n, |_, y| 10.0 * y, |_, _, _| 1.0, &init, 0.0, 1.0).unwrap();
            assert_eq!(sys.dim(), n);
            let state: Vec<f64> = (0..n).map(|j| 1.0 + j as f64 * 0.5).collect();
            let out = sys.eval_f(0.0, &state).unwrap();
            for j in 0..n - 1 {
                assert_eq!(out[j], state[j + 1]);
            }
            assert_eq!(out[n - 1], 10.0 * state[0]);
        }
    }

    #[test]
    fn mismatched_initial_values_are_rejected() {
        let err = reduce_order(3, |_, y| y, |_, y, _| y, &[1.0, 2.0], 0.0, 1.0).unwrap_err();
        assert!(matches!(err, VideError::Domain(_)));
        assert!(reduce_order(0, |_, y| y, |_, y, _| y, &[], 0.0, 1.0).is_err());
    }

    #[test]
    fn wrong_component_count_is_reported() {
        let sys = SystemVide::new(|_, _| vec![1.0], |_, _, _| vec![0.0, 0.0], 0.0, 1.0, vec![1.0, 1.0])
            .unwrap();
        assert_eq!(
            sys.eval_f(0.0, &[1.0, 1.0]).unwrap_err(),
            VideError::Dimension { expected: 2, actual: 1 }
        );
    }

    #[test]
    fn interval_must_be_non_empty() {
        assert!(ScalarVide::new(|_, y| y, |_, y, _| y, 1.0, 1.0, 0.0).is_err());
        assert!(ScalarVide::new(|_, y| y, |_, y, _| y, 0.0, 1.0, f64::INFINITY).is_err());
    }
}
