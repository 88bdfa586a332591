use crate::error::{Result, VideError};

/// Equispaced node grid `x_i = x0 + i*h`, `i = 0..n_nodes`.
///
/// Nodes are always evaluated multiplicatively so that every module sees the
/// same abscissae bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    x0: f64,
    h: f64,
    n_nodes: usize,
}

impl Mesh {
    /// Mesh with `n_nodes` nodes spanning `[x0, x_end]`.
    pub fn new(x0: f64, x_end: f64, n_nodes: usize) -> Result<Self> {
        if n_nodes < 2 {
            return Err(VideError::Domain(format!(
                "a mesh needs at least 2 nodes, got {n_nodes}"
            )));
        }
        if !x0.is_finite() || !x_end.is_finite() || x_end <= x0 {
            return Err(VideError::Domain(format!(
                "mesh interval [{x0}, {x_end}] is empty or not finite"
            )));
        }
        let h = (x_end - x0) / (n_nodes - 1) as f64;
        Ok(Self { x0, h, n_nodes })
    }

    /// Mesh from an origin and a stepsize.
    pub fn with_step(x0: f64, h: f64, n_nodes: usize) -> Result<Self> {
        if n_nodes < 2 {
            return Err(VideError::Domain(format!(
                "a mesh needs at least 2 nodes, got {n_nodes}"
            )));
        }
        if !(h > 0.0) || !h.is_finite() || !x0.is_finite() {
            return Err(VideError::Domain(format!("invalid stepsize {h}")));
        }
        Ok(Self { x0, h, n_nodes })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Abscissa of the last node.
    pub fn x_end(&self) -> f64 {
        self.node(self.n_nodes - 1)
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_nodes).map(move |i| self.node(i))
    }

    /// The mesh with every step halved: `n -> 2n - 1` nodes, same interval.
    /// Node `i` of `self` is node `2i` of the result.
    pub fn halved(&self) -> Self {
        Self {
            x0: self.x0,
            h: self.h / 2.0,
            n_nodes: 2 * self.n_nodes - 1,
        }
    }
}

/// Equispaced mesh with `n_nodes` nodes over `[x0, x_end]`.
pub fn build_mesh(x0: f64, x_end: f64, n_nodes: usize) -> Result<Mesh> {
    Mesh::new(x0, x_end, n_nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ulps_apart(a: f64, b: f64) -> u64 {
        (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
    }

    #[test]
    fn unit_step_mesh() {
        let m = build_mesh(0.0, 10.0, 11).unwrap();
        assert_eq!(m.h(), 1.0);
        let nodes: Vec<f64> = m.nodes().collect();
        assert_eq!(nodes, (0..=10).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn table_two_example_one_step() {
        let m = build_mesh(0.0, 10.0, 505).unwrap();
        assert_eq!(m.h(), 10.0 / 504.0);
        assert!((m.h() - 0.0198).abs() < 5e-5);
    }

    #[test]
    fn two_node_minimum() {
        let m = build_mesh(0.0, 1.0, 2).unwrap();
        assert_eq!(m.h(), 1.0);
        assert_eq!(m.nodes().collect::<Vec<_>>(), vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(build_mesh(0.0, 1.0, 1), Err(VideError::Domain(_))));
        assert!(matches!(build_mesh(1.0, 1.0, 5), Err(VideError::Domain(_))));
        assert!(matches!(build_mesh(2.0, 1.0, 5), Err(VideError::Domain(_))));
        assert!(build_mesh(0.0, f64::NAN, 5).is_err());
    }

    #[test]
    fn halving_keeps_coarse_nodes() {
        let m = build_mesh(0.0, 10.0, 13).unwrap();
        let f = m.halved();
        assert_eq!(f.n_nodes(), 25);
        for i in 0..m.n_nodes() {
            assert!(ulps_apart(m.node(i), f.node(2 * i)) <= 1);
        }
    }

    proptest! {
        #[test]
        fn nodes_are_multiplicative_and_increasing(
            x0 in -100.0f64..100.0,
            len in 1e-3f64..1e3,
            n in 2usize..5000,
        ) {
            let m = build_mesh(x0, x0 + len, n).unwrap();
            prop_assert_eq!(m.node(0), x0);
            for i in 0..n {
                prop_assert_eq!(m.node(i), x0 + i as f64 * m.h());
                if i > 0 {
                    prop_assert!(m.node(i) > m.node(i - 1));
                }
            }
            prop_assert!(ulps_apart(m.x_end(), x0 + len) <= 2 || (m.x_end() - (x0 + len)).abs() <= 4.0 * f64::EPSILON * (x0.abs() + len));
        }
    }
}
