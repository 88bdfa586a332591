//! Richardson extrapolation over repeated mesh halving, and the node-count
//! searches built on it.
//!
//! Both base schemes are first order, so with `T_l^1` the base solve on the
//! `l`-th halving (restricted to coarse nodes),
//! `T_l^{k+1} = (2^k T_{l+1}^k - T_l^k) / (2^k - 1)` removes the `h^k` error
//! term. Five levels give `Y^1..Y^5 = T_0^1..T_0^5`, and `|Y^4 - Y^5|` serves
//! as the error estimate for `Y^4`.

use rayon::prelude::*;

use crate::error::{Result, VideError};
use crate::mesh::Mesh;
use crate::newton::NewtonConfig;
use crate::problem::Problem;
use crate::registry::ProblemRegistryEntry;
use crate::solver::{solve, Method, Stepper, Trajectory};

/// Number of meshes (and extrapolation columns) in a tableau.
pub const LEVELS: usize = 5;

/// Finest-level node count for a tableau whose coarse mesh has `coarse` nodes.
pub fn finest_nodes(coarse: usize) -> usize {
    (coarse - 1) * (1 << (LEVELS - 1)) + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct RichardsonTableau {
    pub method: Method,
    /// `N, 2N-1, 4N-3, 8N-7, 16N-15` nodes.
    pub base_meshes: Vec<Mesh>,
    dim: usize,
    /// `columns[k]` is `Y^{k+1}` at the coarse nodes, node-major.
    columns: Vec<Vec<f64>>,
    /// Max-norm of `Y^4 - Y^5` over coarse nodes and components.
    pub error_estimate: f64,
}

impl RichardsonTableau {
    pub fn coarse_mesh(&self) -> &Mesh {
        &self.base_meshes[0]
    }

    pub fn finest_mesh(&self) -> &Mesh {
        &self.base_meshes[LEVELS - 1]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Column `Y^order`, `order` in `1..=5`, node-major at the coarse nodes.
    pub fn column(&self, order: usize) -> &[f64] {
        assert!((1..=LEVELS).contains(&order), "column order {order} out of range");
        &self.columns[order - 1]
    }

    /// First component of `Y^order` at coarse node `i`.
    pub fn value(&self, order: usize, i: usize) -> f64 {
        self.column(order)[i * self.dim]
    }
}

fn restrict(t: &Trajectory, stride: usize) -> Vec<f64> {
    (0..t.n_nodes())
        .step_by(stride)
        .flat_map(|i| t.state(i).iter().copied())
        .collect()
}

/// Solve on the coarse mesh and four successive halvings, then extrapolate.
pub fn build_tableau(
    problem: &Problem,
    method: Method,
    coarse_nodes: usize,
    cfg: &NewtonConfig,
) -> Result<RichardsonTableau> {
    let coarse = Mesh::new(problem.x0(), problem.x_end(), coarse_nodes)?;
    let mut meshes = Vec::with_capacity(LEVELS);
    meshes.push(coarse);
    for l in 1..LEVELS {
        meshes.push(meshes[l - 1].halved());
    }
    let base: Vec<Trajectory> = meshes
        .par_iter()
        .map(|m| solve(problem, m, method, cfg))
        .collect::<Result<_>>()?;

    let mut table: Vec<Vec<f64>> = base
        .iter()
        .enumerate()
        .map(|(l, t)| restrict(t, 1 << l))
        .collect();
    let mut columns = vec![table[0].clone()];
    for k in 1..LEVELS {
        let factor = (1u64 << k) as f64;
        table = table
            .windows(2)
            .map(|pair| {
                pair[1]
                    .iter()
                    .zip(&pair[0])
                    .map(|(fine, coarse)| (factor * fine - coarse) / (factor - 1.0))
                    .collect()
            })
            .collect();
        columns.push(table[0].clone());
    }
    let error_estimate = columns[3]
        .iter()
        .zip(&columns[4])
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok(RichardsonTableau {
        method,
        base_meshes: meshes,
        dim: problem.dim(),
        columns,
        error_estimate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceOptions {
    /// Coarse node count of the first tableau tried.
    pub start_coarse: usize,
    /// Give up once the finest mesh would exceed this many nodes.
    pub max_finest: usize,
}

impl Default for ToleranceOptions {
    fn default() -> Self {
        Self { start_coarse: 2, max_finest: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceSearch {
    /// Finest-level node count of the accepted tableau.
    pub n_nodes: usize,
    pub tableau: RichardsonTableau,
    /// Coarse node count at which an `h^4` error model fitted to the accepted
    /// tableau would just meet the tolerance. Informational.
    pub model_nodes: usize,
}

/// Double the coarse mesh (`N -> 2N - 1`) until `|Y^4 - Y^5| <= eps`.
pub fn nodes_for_tolerance(
    problem: &Problem,
    method: Method,
    eps: f64,
    cfg: &NewtonConfig,
    opts: &ToleranceOptions,
) -> Result<ToleranceSearch> {
    if !(eps > 0.0) {
        return Err(VideError::Domain(format!("tolerance {eps} must be positive")));
    }
    if opts.start_coarse < 2 {
        return Err(VideError::Domain("a tableau needs at least 2 coarse nodes".into()));
    }
    let mut coarse = opts.start_coarse;
    let mut estimate = f64::INFINITY;
    while finest_nodes(coarse) <= opts.max_finest {
        let tableau = build_tableau(problem, method, coarse, cfg)?;
        estimate = tableau.error_estimate;
        if estimate <= eps {
            let model_nodes = model_nodes(&tableau, eps);
            return Ok(ToleranceSearch { n_nodes: finest_nodes(coarse), tableau, model_nodes });
        }
        coarse = 2 * coarse - 1;
    }
    Err(VideError::ToleranceUnreachable { eps, cap: opts.max_finest, estimate })
}

fn model_nodes(tableau: &RichardsonTableau, eps: f64) -> usize {
    let coarse = tableau.coarse_mesh();
    if tableau.error_estimate == 0.0 {
        return coarse.n_nodes();
    }
    let h = coarse.h() * (eps / tableau.error_estimate).powf(0.25);
    let span = coarse.x_end() - coarse.x0();
    ((span / h).ceil() as usize + 1).clamp(2, coarse.n_nodes())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    /// Smallest node count probed. Two nodes mean a single step, in which
    /// the memory term never contributes, so the default starts at three.
    pub start_nodes: usize,
    pub max_nodes: usize,
    /// A solve is stable when `|y_i| <= bound` at every node.
    pub bound: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { start_nodes: 3, max_nodes: 1_000_000, bound: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityBracket {
    /// Least node count found stable; `n_nodes - 1` failed.
    pub n_nodes: usize,
    pub h_s: f64,
    pub z: f64,
    pub w: f64,
    /// Number of probe solves performed.
    pub probes: usize,
}

/// Whether a plain solve on `n_nodes` keeps `|y_i| <= bound` at every node.
/// Stops at the first node that breaks the bound.
pub fn solve_is_bounded(
    problem: &Problem,
    method: Method,
    n_nodes: usize,
    bound: f64,
    cfg: &NewtonConfig,
) -> Result<bool> {
    let mesh = Mesh::new(problem.x0(), problem.x_end(), n_nodes)?;
    let mut stepper = Stepper::new(problem, &mesh, method, cfg)?;
    if problem.initial().iter().any(|v| v.abs() > bound) {
        return Ok(false);
    }
    while !stepper.is_done() {
        match stepper.advance() {
            Ok(state) => {
                if state.iter().any(|v| !(v.abs() <= bound)) {
                    return Ok(false);
                }
            }
            Err(e) if e.is_instability() => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

/// Least node count on the entry's interval for which a plain solve stays
/// within the bound: doubling from `start_nodes` to bracket, then bisection.
pub fn min_nodes_for_stability(
    entry: &ProblemRegistryEntry,
    method: Method,
    cfg: &NewtonConfig,
    opts: &StabilityOptions,
) -> Result<StabilityBracket> {
    if opts.start_nodes < 2 {
        return Err(VideError::Domain("node search must start at 2 or more nodes".into()));
    }
    let problem = Problem::Scalar(entry.problem.clone());
    let mut probes = 0usize;
    let mut passes = |n: usize| {
        probes += 1;
        solve_is_bounded(&problem, method, n, opts.bound, cfg)
    };

    let mut hi = opts.start_nodes;
    let mut lo = None;
    loop {
        if hi > opts.max_nodes {
            return Err(VideError::StabilityUnreachable { cap: opts.max_nodes });
        }
        if passes(hi)? {
            break;
        }
        lo = Some(hi);
        hi = 2 * hi - 1;
    }
    if let Some(mut lo) = lo {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if passes(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let (x0, x_end) = entry.interval();
    let h_s = (x_end - x0) / (hi - 1) as f64;
    Ok(StabilityBracket {
        n_nodes: hi,
        h_s,
        z: h_s * entry.lambda,
        w: h_s * h_s * entry.gamma,
        probes,
    })
}
