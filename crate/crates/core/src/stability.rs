//! Stability analysis on the test equation
//! `y' = λ(y - 1) + γ ∫_0^x y(t) dt`, `y(0) = 2`.
//!
//! Applying either scheme with stepsize `h` gives node values that depend
//! only on `z = hλ` and `w = h²γ`; these are the stability functions
//! `P_i(z, w)`. A point is practically stable when `|P_i| < 2` for every
//! `i` up to a cap (equality is tolerated only at the origin, where the
//! exact solution is the constant 2).

use nalgebra::{Complex, DMatrix, Schur};
use rayon::prelude::*;

use crate::error::{Result, VideError};
use crate::newton::NewtonConfig;
use crate::problem::SystemVide;
use crate::quadrature::CompensatedSum;
use crate::solver::Method;

/// Bound on `|P_i|`: the initial value of the test equation.
pub const DEFAULT_BOUND: f64 = 2.0;
/// Desk-scale iteration cap.
pub const DEFAULT_I_MAX: u64 = 10_000;
/// Desk-scale lattice resolution per axis.
pub const DEFAULT_RESOLUTION: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestEquationParams {
    pub lambda: f64,
    pub gamma: f64,
}

impl TestEquationParams {
    pub fn new(lambda: f64, gamma: f64) -> Self {
        Self { lambda, gamma }
    }

    /// `λ² + 4γ`; non-negative means real exponents, negative means an
    /// oscillatory solution.
    pub fn discriminant(&self) -> f64 {
        self.lambda * self.lambda + 4.0 * self.gamma
    }

    pub fn is_oscillatory(&self) -> bool {
        self.discriminant() < 0.0
    }
}

/// Exact solution of the test equation.
pub fn analytic_test_solution(params: TestEquationParams, x: f64) -> f64 {
    let lambda = params.lambda;
    let d = params.discriminant();
    if d >= 0.0 {
        let s = d.sqrt();
        ((lambda - s) / 2.0 * x).exp() + ((lambda + s) / 2.0 * x).exp()
    } else {
        2.0 * (lambda * x / 2.0).exp() * ((-d).sqrt() / 2.0 * x).cos()
    }
}

/// Iterator over `P_1, P_2, ...` for one scheme at a fixed `(z, w)`.
///
/// Implicit: `P_i = 2 (P_{i-1} - z - w + w Σ_{j<i} P_j) / (2 - 2z - w)`.
///
/// Explicit: `P_1 = z + 2`, `P_2 = z² + zw/2 + 2z + 2w + 2`, then
/// `P_i = (1 + z + w/2) P_{i-1} - z - w + w Σ_{j<=i-2} P_j`.
///
/// `P_0 = 2` in both cases. The running sum is kept in O(1).
#[derive(Debug, Clone)]
pub struct PRecursion {
    method: Method,
    z: f64,
    w: f64,
    i: u64,
    prev: f64,
    /// Σ P_j over the indices the next term needs.
    sum: CompensatedSum,
    /// Explicit only: `P_{i-1}` waits one step before entering the sum.
    pending: f64,
}

impl PRecursion {
    pub fn new(method: Method, z: f64, w: f64) -> Self {
        let mut sum = CompensatedSum::new();
        if method == Method::Implicit {
            sum.add(2.0);
        }
        Self { method, z, w, i: 0, prev: 2.0, sum, pending: 2.0 }
    }

    /// Index of the last value produced.
    pub fn index(&self) -> u64 {
        self.i
    }
}

impl Iterator for PRecursion {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let (z, w) = (self.z, self.w);
        self.i += 1;
        let p = match self.method {
            Method::Implicit => {
                let p = 2.0 * (self.prev - z - w + w * self.sum.value()) / (2.0 - 2.0 * z - w);
                self.sum.add(p);
                p
            }
            Method::Explicit => {
                let p = match self.i {
                    1 => z + 2.0,
                    2 => z * z + z * w / 2.0 + 2.0 * z + 2.0 * w + 2.0,
                    _ => {
                        (1.0 + z + w / 2.0) * self.prev - z - w + w * self.sum.value()
                    }
                };
                // Σ_{j=0}^{i-1} is what P_{i+1} needs
                self.sum.add(self.pending);
                self.pending = p;
                p
            }
        };
        self.prev = p;
        Some(p)
    }
}

/// `P_0..=P_n` for the implicit scheme.
pub fn implicit_sequence(z: f64, w: f64, n: usize) -> Vec<f64> {
    std::iter::once(2.0).chain(PRecursion::new(Method::Implicit, z, w).take(n)).collect()
}

/// `P_0..=P_n` for the explicit scheme.
pub fn explicit_sequence(z: f64, w: f64, n: usize) -> Vec<f64> {
    std::iter::once(2.0).chain(PRecursion::new(Method::Explicit, z, w).take(n)).collect()
}

/// Outcome of a practical-stability check at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Stable,
    /// `|P_i|` first reached the bound at this `i`.
    Unstable { first_exceed: u64 },
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::Stable)
    }

    pub fn first_exceed(&self) -> Option<u64> {
        match self {
            Verdict::Stable => None,
            Verdict::Unstable { first_exceed } => Some(*first_exceed),
        }
    }
}

/// Practical-stability verdict for `method` at `(z, w)`.
///
/// Exits on the first `i` with `|P_i| >= bound` (`> bound` at the origin),
/// so no value beyond a few times `bound` is ever formed.
pub fn p_verdict(method: Method, z: f64, w: f64, i_max: u64, bound: f64) -> Verdict {
    let at_origin = z == 0.0 && w == 0.0;
    let mut rec = PRecursion::new(method, z, w);
    for i in 1..=i_max {
        let p = rec.next().unwrap_or(f64::NAN).abs();
        let exceeded = if at_origin { !(p <= bound) } else { !(p < bound) };
        if exceeded {
            return Verdict::Unstable { first_exceed: i };
        }
    }
    Verdict::Stable
}

/// Implicit-scheme verdict.
pub fn implicit_p(z: f64, w: f64, i_max: u64, bound: f64) -> Verdict {
    p_verdict(Method::Implicit, z, w, i_max, bound)
}

/// Explicit-scheme verdict.
pub fn explicit_p(z: f64, w: f64, i_max: u64, bound: f64) -> Verdict {
    p_verdict(Method::Explicit, z, w, i_max, bound)
}

/// Rectangle and lattice for a region sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub z_min: f64,
    pub z_max: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub nz: usize,
    pub nw: usize,
    pub i_max: u64,
    pub bound: f64,
}

impl GridSpec {
    /// Desk-scale defaults on the given rectangle.
    pub fn new(z_min: f64, z_max: f64, w_min: f64, w_max: f64) -> Self {
        Self {
            z_min,
            z_max,
            w_min,
            w_max,
            nz: DEFAULT_RESOLUTION,
            nw: DEFAULT_RESOLUTION,
            i_max: DEFAULT_I_MAX,
            bound: DEFAULT_BOUND,
        }
    }

    pub fn with_resolution(mut self, nz: usize, nw: usize) -> Self {
        self.nz = nz;
        self.nw = nw;
        self
    }

    pub fn with_i_max(mut self, i_max: u64) -> Self {
        self.i_max = i_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nz < 2 || self.nw < 2 {
            return Err(VideError::Domain(format!(
                "grid needs at least 2 points per axis, got {}x{}",
                self.nz, self.nw
            )));
        }
        if self.i_max == 0 {
            return Err(VideError::Domain("iteration cap must be at least 1".into()));
        }
        if !(self.bound > 0.0) {
            return Err(VideError::Domain(format!("bound {} must be positive", self.bound)));
        }
        let finite = [self.z_min, self.z_max, self.w_min, self.w_max].iter().all(|v| v.is_finite());
        if !finite || !(self.z_min < self.z_max) || !(self.w_min < self.w_max) {
            return Err(VideError::Domain(format!(
                "rectangle [{}, {}] x [{}, {}] is empty or not finite",
                self.z_min, self.z_max, self.w_min, self.w_max
            )));
        }
        if self.z_max > 0.0 || self.w_max > 0.0 {
            return Err(VideError::Domain(format!(
                "rectangle [{}, {}] x [{}, {}] leaves the closed third quadrant",
                self.z_min, self.z_max, self.w_min, self.w_max
            )));
        }
        Ok(())
    }

    /// Lattice abscissa `p`, with the last point pinned to `z_max`.
    pub fn z_at(&self, p: usize) -> f64 {
        lattice(self.z_min, self.z_max, self.nz, p)
    }

    pub fn w_at(&self, q: usize) -> f64 {
        lattice(self.w_min, self.w_max, self.nw, q)
    }
}

fn lattice(lo: f64, hi: f64, n: usize, p: usize) -> f64 {
    if p + 1 == n {
        hi
    } else {
        lo + p as f64 * ((hi - lo) / (n - 1) as f64)
    }
}

/// Verdicts for every lattice point of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityGrid {
    pub spec: GridSpec,
    pub method: Method,
    /// Row-major with `w` as the row index (ascending) and `z` as the column.
    verdicts: Vec<Verdict>,
}

impl StabilityGrid {
    pub fn verdict(&self, iz: usize, iw: usize) -> Verdict {
        self.verdicts[iw * self.spec.nz + iz]
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    /// `(z, w, verdict)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, Verdict)> + '_ {
        self.verdicts.iter().enumerate().map(move |(idx, v)| {
            let (iw, iz) = (idx / self.spec.nz, idx % self.spec.nz);
            (self.spec.z_at(iz), self.spec.w_at(iw), *v)
        })
    }

    pub fn stable_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_stable()).count()
    }

    pub fn len(&self) -> usize {
        self.verdicts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }
}

fn sweep_impl(spec: &GridSpec, method: Method, parallel: bool) -> Result<StabilityGrid> {
    spec.validate()?;
    let s = *spec;
    let point = move |idx: usize| {
        let (iw, iz) = (idx / s.nz, idx % s.nz);
        p_verdict(method, s.z_at(iz), s.w_at(iw), s.i_max, s.bound)
    };
    let n = spec.nz * spec.nw;
    let verdicts = if parallel {
        (0..n).into_par_iter().map(point).collect()
    } else {
        (0..n).map(point).collect()
    };
    Ok(StabilityGrid { spec: *spec, method, verdicts })
}

/// Practical-stability sweep over the lattice, parallel across points.
pub fn sweep_region(spec: &GridSpec, method: Method) -> Result<StabilityGrid> {
    sweep_impl(spec, method, true)
}

/// Single-threaded [`sweep_region`].
pub fn sweep_region_serial(spec: &GridSpec, method: Method) -> Result<StabilityGrid> {
    sweep_impl(spec, method, false)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPathSample {
    pub h: f64,
    pub z: f64,
    pub w: f64,
}

/// The curve `h -> (hλ, h²γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPath {
    pub lambda: f64,
    pub gamma: f64,
    pub samples: Vec<HPathSample>,
}

impl HPath {
    /// Largest sampled `h` whose point, and every point with smaller sampled
    /// `h`, is practically stable for `method`. `None` if even the smallest
    /// sample fails.
    pub fn largest_stable_h(&self, method: Method, i_max: u64, bound: f64) -> Option<f64> {
        let mut sorted: Vec<&HPathSample> = self.samples.iter().collect();
        sorted.sort_by(|a, b| a.h.total_cmp(&b.h));
        let mut best = None;
        for s in sorted {
            if !p_verdict(method, s.z, s.w, i_max, bound).is_stable() {
                break;
            }
            best = Some(s.h);
        }
        best
    }
}

pub fn h_path(lambda: f64, gamma: f64, h_values: &[f64]) -> Result<HPath> {
    if let Some(bad) = h_values.iter().find(|h| !(**h >= 0.0) || !h.is_finite()) {
        return Err(VideError::Domain(format!("stepsize {bad} must be finite and non-negative")));
    }
    let samples = h_values
        .iter()
        .map(|&h| HPathSample { h, z: h * lambda, w: h * h * gamma })
        .collect();
    Ok(HPath { lambda, gamma, samples })
}

/// One `(λ_j, γ_j)` pair and, when both real parts are non-positive, its
/// stability-plane point `(-h|λ_j|, -h²|γ_j|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub lambda: Complex<f64>,
    pub gamma: Complex<f64>,
    pub zw: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairing {
    pub h: f64,
    pub pairs: Vec<EigenPair>,
}

fn spectrum(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| VideError::Numeric("eigenvalue iteration did not converge".into()))?;
    let mut eig: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    // descending magnitude, then descending real part, then descending imaginary part
    eig.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    Ok(eig)
}

/// Pair the spectra of `J_f` and `J_K` by rank after sorting each by
/// descending magnitude (ties: descending real part).
pub fn pair_eigenvalues(jf: &DMatrix<f64>, jk: &DMatrix<f64>, h: f64) -> Result<EigenPairing> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(VideError::Domain(format!("stepsize {h} must be positive")));
    }
    if !jf.is_square() || jf.shape() != jk.shape() || jf.nrows() == 0 {
        return Err(VideError::Domain(format!(
            "Jacobians must be square and of equal size, got {:?} and {:?}",
            jf.shape(),
            jk.shape()
        )));
    }
    let lambdas = spectrum(jf)?;
    let gammas = spectrum(jk)?;
    let pairs = lambdas
        .into_iter()
        .zip(gammas)
        .map(|(lambda, gamma)| {
            let zw = (lambda.re <= 0.0 && gamma.re <= 0.0)
                .then(|| (-h * lambda.norm(), -h * h * gamma.norm()));
            EigenPair { lambda, gamma, zw }
        })
        .collect();
    Ok(EigenPairing { h, pairs })
}

/// [`pair_eigenvalues`] on the Jacobians of a system at `(x, y)`, with the
/// kernel Jacobian taken at `t = x`. Missing Jacobians are approximated by
/// central differences.
pub fn pair_system_eigenvalues(
    problem: &SystemVide,
    x: f64,
    y: &[f64],
    h: f64,
    cfg: &NewtonConfig,
) -> Result<EigenPairing> {
    let m = problem.dim();
    problem.check_len(y.len())?;
    let fd = |g: &dyn Fn(&[f64]) -> Result<Vec<f64>>| -> Result<Vec<f64>> {
        let mut jac = vec![0.0; m * m];
        let mut probe = y.to_vec();
        for col in 0..m {
            let d = cfg.fd_step_scale * y[col].abs().max(1.0);
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
    };
    let jf = match &problem.jacobian_f {
        Some(j) => j(x, y),
        None => fd(&|u| problem.eval_f(x, u))?,
    };
    let jk = match &problem.jacobian_k {
        Some(j) => j(x, y, x),
        None => fd(&|u| problem.eval_kernel(x, u, x))?,
    };
    if jf.len() != m * m || jk.len() != m * m {
        return Err(VideError::Dimension { expected: m * m, actual: jf.len().min(jk.len()) });
    }
    pair_eigenvalues(
        &DMatrix::from_row_slice(m, m, &jf),
        &DMatrix::from_row_slice(m, m, &jk),
        h,
    )
}
