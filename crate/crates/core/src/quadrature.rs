//! Composite trapezium rule over the growing node window `[x0, x_k]`.
//!
//! The kernel's first argument is pinned to the evaluation abscissa, which
//! moves every step, so in general the whole window is re-evaluated on each
//! call: `k + 1` kernel evaluations for a window ending at node `k`.

use crate::error::{Result, VideError};
use crate::mesh::Mesh;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Read-only view of the solution history `y_0..=y_k` on a mesh.
///
/// For systems, `values` is node-major with `dim` entries per node.
#[derive(Debug, Clone, Copy)]
pub struct HistoryView<'a> {
    mesh: &'a Mesh,
    values: &'a [f64],
    dim: usize,
}

impl<'a> HistoryView<'a> {
    /// Scalar history.
    pub fn new(mesh: &'a Mesh, values: &'a [f64]) -> Result<Self> {
        Self::with_dim(mesh, values, 1)
    }

    pub fn with_dim(mesh: &'a Mesh, values: &'a [f64], dim: usize) -> Result<Self> {
        if dim == 0 || values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(VideError::Domain(format!(
                "history of {} values does not hold whole {dim}-component nodes",
                values.len()
            )));
        }
        if values.len() / dim > mesh.n_nodes() {
            return Err(VideError::Domain(format!(
                "history has {} nodes but the mesh only {}",
                values.len() / dim,
                mesh.n_nodes()
            )));
        }
        Ok(Self { mesh, values, dim })
    }

    pub fn mesh(&self) -> &'a Mesh {
        self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of the last filled node.
    pub fn k(&self) -> usize {
        self.values.len() / self.dim - 1
    }

    /// Scalar value at node `j` (first component for systems).
    pub fn value(&self, j: usize) -> f64 {
        self.values[j * self.dim]
    }

    /// State vector at node `j`.
    pub fn state(&self, j: usize) -> &'a [f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }
}

/// `(h/2) [K(x, y_0, t_0) + 2 Σ_{j=1}^{k-1} K(x, y_j, t_j) + K(x, y_k, t_k)]`
/// with `x = x_eval`; zero for a single-node window.
///
/// Only the first component of a system history is read.
pub fn trapezoid_window<K>(kernel: &K, x_eval: f64, history: &HistoryView<'_>) -> f64
where
    K: Fn(f64, f64, f64) -> f64 + ?Sized,
{
    let k = history.k();
    let mesh = history.mesh();
    let first = kernel(x_eval, history.value(0), mesh.node(0));
    if k == 0 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    acc.add(first);
    for j in 1..k {
        acc.add(2.0 * kernel(x_eval, history.value(j), mesh.node(j)));
    }
    acc.add(kernel(x_eval, history.value(k), mesh.node(k)));
    0.5 * mesh.h() * acc.value()
}

/// `K(x, y_0, t_0) + 2 Σ_{j=1}^{k} K(x, y_j, t_j)`: the weighted window sum
/// when node `k + 1` is still unknown. Closing the window with the unknown
/// value `v` gives `(h/2) (prefix + K(x, v, t_{k+1}))`.
pub fn window_prefix<K>(kernel: &K, x_eval: f64, history: &HistoryView<'_>) -> f64
where
    K: Fn(f64, f64, f64) -> f64 + ?Sized,
{
    let mesh = history.mesh();
    let mut acc = CompensatedSum::new();
    acc.add(kernel(x_eval, history.value(0), mesh.node(0)));
    for j in 1..=history.k() {
        acc.add(2.0 * kernel(x_eval, history.value(j), mesh.node(j)));
    }
    acc.value()
}

/// Vector form of [`trapezoid_window`] for an `m`-component kernel.
pub fn trapezoid_window_system<K>(
    kernel: &K,
    x_eval: f64,
    history: &HistoryView<'_>,
) -> Result<Vec<f64>>
where
    K: Fn(f64, &[f64], f64) -> Result<Vec<f64>> + ?Sized,
{
    let k = history.k();
    let m = history.dim();
    let mesh = history.mesh();
    let first = kernel(x_eval, history.state(0), mesh.node(0))?;
    check_len(m, first.len())?;
    if k == 0 {
        return Ok(vec![0.0; m]);
    }
    let mut acc = vec![CompensatedSum::new(); m];
    add_weighted(&mut acc, &first, 1.0);
    for j in 1..k {
        let v = kernel(x_eval, history.state(j), mesh.node(j))?;
        check_len(m, v.len())?;
        add_weighted(&mut acc, &v, 2.0);
    }
    let last = kernel(x_eval, history.state(k), mesh.node(k))?;
    check_len(m, last.len())?;
    add_weighted(&mut acc, &last, 1.0);
    let half_h = 0.5 * mesh.h();
    Ok(acc.iter().map(|a| half_h * a.value()).collect())
}

/// Vector form of [`window_prefix`].
pub fn window_prefix_system<K>(
    kernel: &K,
    x_eval: f64,
    history: &HistoryView<'_>,
) -> Result<Vec<f64>>
where
    K: Fn(f64, &[f64], f64) -> Result<Vec<f64>> + ?Sized,
{
    let m = history.dim();
    let mesh = history.mesh();
    let mut acc = vec![CompensatedSum::new(); m];
    for j in 0..=history.k() {
        let v = kernel(x_eval, history.state(j), mesh.node(j))?;
        check_len(m, v.len())?;
        add_weighted(&mut acc, &v, if j == 0 { 1.0 } else { 2.0 });
    }
    Ok(acc.iter().map(CompensatedSum::value).collect())
}

fn add_weighted(acc: &mut [CompensatedSum], v: &[f64], weight: f64) {
    for (a, &x) in acc.iter_mut().zip(v) {
        a.add(weight * x);
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(VideError::Dimension { expected, actual });
    }
    Ok(())
}

/// Running trapezium sums for kernels that ignore their first argument.
///
/// After pushing `K_0..=K_k` it holds `K_0 + 2 Σ_{j=1}^{k} K_j` per
/// component, from which both the closed window and the implicit prefix
/// follow in O(1).
#[derive(Debug, Clone)]
pub struct RunningWindow {
    sums: Vec<CompensatedSum>,
    last: Vec<f64>,
    len: usize,
}

impl RunningWindow {
    pub fn new(dim: usize) -> Self {
        Self {
            sums: vec![CompensatedSum::new(); dim],
            last: vec![0.0; dim],
            len: 0,
        }
    }

    /// Append the kernel values at the next node.
    pub fn push(&mut self, values: &[f64]) {
        let weight = if self.len == 0 { 1.0 } else { 2.0 };
        add_weighted(&mut self.sums, values, weight);
        self.last.copy_from_slice(values);
        self.len += 1;
    }

    /// Number of nodes pushed.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Component `c` of the implicit prefix.
    pub fn prefix(&self, c: usize) -> f64 {
        self.sums[c].value()
    }

    /// Component `c` of the closed window over all pushed nodes.
    pub fn closed(&self, c: usize, h: f64) -> f64 {
        if self.len <= 1 {
            return 0.0;
        }
        let s = self.sums[c];
        0.5 * h * ((s.sum - self.last[c]) + s.comp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use proptest::prelude::*;
    use std::cell::Cell;

    #[test]
    fn constant_kernel_is_exact() {
        let mesh = build_mesh(0.0, 1.0, 3).unwrap();
        let ys = [0.3, -1.0, 7.0];
        let h = HistoryView::new(&mesh, &ys).unwrap();
        assert_eq!(h.k(), 2);
        assert_eq!(trapezoid_window(&|_, _, _| 1.0, 1.0, &h), 1.0);
    }

    #[test]
    fn linear_in_t_is_exact() {
        let mesh = build_mesh(0.0, 1.0, 3).unwrap();
        let ys = [0.0; 3];
        let h = HistoryView::new(&mesh, &ys).unwrap();
        assert_eq!(trapezoid_window(&|_, _, t| t, 1.0, &h), 0.5);
    }

    #[test]
    fn solution_values_two_nodes() {
        let mesh = build_mesh(0.0, 1.0, 2).unwrap();
        let ys = [2.0, 2.0];
        let h = HistoryView::new(&mesh, &ys).unwrap();
        // (h/2)(y0 + y1), the same term the stability recursion carries as (w/2)(y0 + y1)
        assert_eq!(trapezoid_window(&|_, y, _| y, 1.0, &h), 2.0);
    }

    #[test]
    fn single_node_window_is_empty() {
        let mesh = build_mesh(0.0, 1.0, 5).unwrap();
        let ys = [4.0];
        let h = HistoryView::new(&mesh, &ys).unwrap();
        assert_eq!(trapezoid_window(&|_, y, _| y * 100.0, 0.0, &h), 0.0);
    }

    #[test]
    fn one_evaluation_per_node() {
        let mesh = build_mesh(0.0, 1.0, 50).unwrap();
        let ys: Vec<f64> = (0..37).map(|j| j as f64).collect();
        let h = HistoryView::new(&mesh, &ys).unwrap();
        let count = Cell::new(0usize);
        let kernel = |_: f64, y: f64, _: f64| {
            count.set(count.get() + 1);
            y
        };
        trapezoid_window(&kernel, 0.5, &h);
        assert_eq!(count.get(), 37);
        count.set(0);
        window_prefix(&kernel, 0.5, &h);
        assert_eq!(count.get(), 37);
    }

    #[test]
    fn moving_evaluation_point_recomputes_the_window() {
        let mesh = build_mesh(0.0, 1.0, 11).unwrap();
        let ys: Vec<f64> = (0..6).map(|j| 1.0 + j as f64).collect();
        let h = HistoryView::new(&mesh, &ys).unwrap();
        let kernel = |x: f64, y: f64, t: f64| (x - t).exp() * y;
        let at_k = trapezoid_window(&kernel, mesh.node(5), &h);
        let at_next = trapezoid_window(&kernel, mesh.node(6), &h);
        assert_ne!(at_k, at_next);
        // every term is scaled by exp(h) when x moves one node
        assert!((at_next - at_k * mesh.h().exp()).abs() < 1e-13);
    }

    #[test]
    fn prefix_closes_to_the_full_window() {
        let mesh = build_mesh(0.0, 2.0, 9).unwrap();
        let ys = [1.0, 0.5, -0.25, 3.0, 2.0];
        let kernel = |x: f64, y: f64, t: f64| x * y.sin() + t * t;
        let known = HistoryView::new(&mesh, &ys[..4]).unwrap();
        let full = HistoryView::new(&mesh, &ys).unwrap();
        let x = mesh.node(4);
        let prefix = window_prefix(&kernel, x, &known);
        let closed = 0.5 * mesh.h() * (prefix + kernel(x, ys[4], x));
        assert!((closed - trapezoid_window(&kernel, x, &full)).abs() < 1e-15);
    }

    #[test]
    fn running_window_matches_recomputation() {
        let mesh = build_mesh(0.0, 3.0, 301).unwrap();
        let ys: Vec<f64> = mesh.nodes().map(|x| (2.0 * x).cos() + 0.1 * x).collect();
        let kernel = |_: f64, y: f64, t: f64| y * y - t;
        let mut running = RunningWindow::new(1);
        for k in 0..ys.len() {
            let h = HistoryView::new(&mesh, &ys[..=k]).unwrap();
            running.push(&[kernel(0.0, ys[k], mesh.node(k))]);
            let full = trapezoid_window(&kernel, 0.0, &h);
            assert!((running.closed(0, mesh.h()) - full).abs() <= 1e-14 * (1.0 + full.abs()));
            let prefix = window_prefix(&kernel, 0.0, &h);
            assert!((running.prefix(0) - prefix).abs() <= 1e-14 * (1.0 + prefix.abs()));
        }
    }

    #[test]
    fn system_window_matches_scalar_per_component() {
        let mesh = build_mesh(0.0, 1.0, 6).unwrap();
        let states = [1.0, 2.0, 1.5, 2.5, 1.25, 3.0, 1.0, 3.5];
        let h = HistoryView::with_dim(&mesh, &states, 2).unwrap();
        assert_eq!(h.k(), 3);
        let kv = |x: f64, y: &[f64], t: f64| Ok(vec![x * y[0] + t, y[1] - y[0]]);
        let out = trapezoid_window_system(&kv, 0.4, &h).unwrap();
        let first: Vec<f64> = states.iter().step_by(2).copied().collect();
        let diff: Vec<f64> = states.chunks(2).map(|s| s[1] - s[0]).collect();
        let h0 = HistoryView::new(&mesh, &first).unwrap();
        let h1 = HistoryView::new(&mesh, &diff).unwrap();
        assert!((out[0] - trapezoid_window(&|x, y, t| x * y + t, 0.4, &h0)).abs() < 1e-15);
        assert!((out[1] - trapezoid_window(&|_, y, _| y, 0.4, &h1)).abs() < 1e-15);

        let bad = |_: f64, _: &[f64], _: f64| Ok(vec![1.0]);
        assert!(matches!(
            trapezoid_window_system(&bad, 0.0, &h),
            Err(VideError::Dimension { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn history_must_fit_the_mesh() {
        let mesh = build_mesh(0.0, 1.0, 3).unwrap();
        assert!(HistoryView::new(&mesh, &[1.0; 4]).is_err());
        assert!(HistoryView::new(&mesh, &[]).is_err());
        assert!(HistoryView::with_dim(&mesh, &[1.0; 3], 2).is_err());
    }

    proptest! {
        #[test]
        fn affine_kernels_integrate_exactly(
            a in -10.0f64..10.0,
            b in -10.0f64..10.0,
            len in 0.01f64..20.0,
            k in 1usize..400,
        ) {
            let mesh = build_mesh(0.0, len, k + 1).unwrap();
            let ys = vec![0.0; k + 1];
            let h = HistoryView::new(&mesh, &ys).unwrap();
            let got = trapezoid_window(&|_, _, t| a + b * t, 1.0, &h);
            let exact = a * len + 0.5 * b * len * len;
            let scale = a.abs() * len + 0.5 * b.abs() * len * len;
            // the last node carries the mesh's own representation error of len
            let node_err = (mesh.x_end() - len).abs() * (a.abs() + b.abs() * len);
            prop_assert!((got - exact).abs() <= 4.0 * f64::EPSILON * scale.max(1.0) * len.max(1.0) + node_err);
        }
    }
}
