//! Gauss-Lobatto-Legendre nodes and nodal Lagrange bases.
//!
//! The univariate basis interpolates the `p + 1` GLL points on `[-1, 1]`;
//! multivariate bases are tensor products with the first coordinate running
//! fastest in the flat index.

use crate::error::{Error, Result};

const NEWTON_MAX_ITER: usize = 100;

/// Largest degree supported by the stack buffers in [`TensorBasis::eval_into`].
pub const MAX_TENSOR_DEGREE: usize = 15;

/// Legendre polynomial `P_n(x)` and its derivative, by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    let (mut dp_prev, mut dp) = (0.0, 1.0);
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        // P'_k = P'_{k-2} + (2k - 1) P_{k-1}
        let dp_next = dp_prev + (2.0 * kf - 1.0) * p;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp)
}

/// The `p + 1` Gauss-Lobatto-Legendre points on `[-1, 1]`, increasing.
pub fn gll_nodes(p: usize) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::invalid("GLL nodes need degree p >= 1"));
    }
    let n = p + 1;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[p] = 1.0;
    let pf = p as f64;
    // Interior nodes are the roots of P_p'. Only the lower half is iterated,
    // the upper half follows by symmetry.
    for j in 1..=(p / 2) {
        if 2 * j == p {
            nodes[j] = 0.0;
            continue;
        }
        let mut x = -(std::f64::consts::PI * j as f64 / pf).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (lp, dlp) = legendre(p, x);
            // (1 - x^2) P'' = 2x P' - p(p+1) P
            let d2lp = (2.0 * x * dlp - pf * (pf + 1.0) * lp) / (1.0 - x * x);
            let step = dlp / d2lp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[j] = x;
        nodes[p - j] = -x;
    }
    Ok(nodes)
}

/// Lagrange basis of degree `p` interpolating the GLL points.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalBasis1D {
    degree: usize,
    nodes: Vec<f64>,
}

impl NodalBasis1D {
    pub fn new(degree: usize) -> Result<Self> {
        Ok(Self {
            degree,
            nodes: gll_nodes(degree)?,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Writes all basis values and derivatives at `xi` into the given slices.
    ///
    /// Values use the plain product form; derivatives the sum over products
    /// with one factor differentiated, so both are exact at the nodes.
    pub fn eval_into(&self, xi: f64, values: &mut [f64], derivatives: &mut [f64]) {
        let nodes = &self.nodes;
        let n = nodes.len();
        for i in 0..n {
            let mut value = 1.0;
            let mut derivative = 0.0;
            for m in 0..n {
                if m == i {
                    continue;
                }
                let inv = 1.0 / (nodes[i] - nodes[m]);
                // d/dxi of value * (xi - x_m) * inv
                derivative = derivative * (xi - nodes[m]) * inv + value * inv;
                value *= (xi - nodes[m]) * inv;
            }
            values[i] = value;
            derivatives[i] = derivative;
        }
    }

    pub fn lagrange_all(&self, xi: f64) -> (Vec<f64>, Vec<f64>) {
        let mut values = vec![0.0; self.len()];
        let mut derivatives = vec![0.0; self.len()];
        self.eval_into(xi, &mut values, &mut derivatives);
        (values, derivatives)
    }
}

/// Tensor-product basis on `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBasis {
    dim: usize,
    basis1d: NodalBasis1D,
}

impl TensorBasis {
    pub fn new(degree: usize, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if degree > MAX_TENSOR_DEGREE {
            return Err(Error::invalid(format!(
                "tensor bases support p <= {MAX_TENSOR_DEGREE}, got {degree}"
            )));
        }
        Ok(Self {
            dim,
            basis1d: NodalBasis1D::new(degree)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.basis1d.degree()
    }

    pub fn basis1d(&self) -> &NodalBasis1D {
        &self.basis1d
    }

    /// Number of basis functions, `(p + 1)^d`.
    pub fn len(&self) -> usize {
        self.basis1d.len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of a multi-index, first coordinate fastest.
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let n = self.basis1d.len();
        multi.iter().rev().fold(0, |acc, &i| acc * n + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let n = self.basis1d.len();
        (0..self.dim)
            .map(|_| {
                let i = flat % n;
                flat /= n;
                i
            })
            .collect()
    }

    /// Flat indices of the functions whose node lies on a lower face `x_i = -1`.
    ///
    /// For `p = 1` these are the Dirichlet DOFs of the single-DOF model problem.
    pub fn lower_face_dofs(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&f| self.multi_index(f).contains(&0))
            .collect()
    }

    /// Values (length `(p+1)^d`) and reference gradients (row-major, `d` per
    /// function) at `x`.
    pub fn eval(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut values = vec![0.0; self.len()];
        let mut gradients = vec![0.0; self.len() * self.dim];
        self.eval_into(x, &mut values, &mut gradients);
        (values, gradients)
    }

    pub fn eval_into(&self, x: &[f64], values: &mut [f64], gradients: &mut [f64]) {
        let d = self.dim;
        let n = self.basis1d.len();
        let mut vals1d = [[0.0; 16]; 3];
        let mut ders1d = [[0.0; 16]; 3];
        for k in 0..d {
            self.basis1d
                .eval_into(x[k], &mut vals1d[k][..n], &mut ders1d[k][..n]);
        }
        for f in 0..self.len() {
            let mut idx = [0usize; 3];
            let mut rest = f;
            for slot in idx.iter_mut().take(d) {
                *slot = rest % n;
                rest /= n;
            }
            let mut value = 1.0;
            for k in 0..d {
                value *= vals1d[k][idx[k]];
            }
            values[f] = value;
            for g in 0..d {
                let mut grad = ders1d[g][idx[g]];
                for k in 0..d {
                    if k != g {
                        grad *= vals1d[k][idx[k]];
                    }
                }
                gradients[f * d + g] = grad;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gll_small_degrees() {
        assert_eq!(gll_nodes(1).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(gll_nodes(2).unwrap(), vec![-1.0, 0.0, 1.0]);
        let n3 = gll_nodes(3).unwrap();
        let r = 1.0 / 5f64.sqrt();
        assert_abs_diff_eq!(n3[1], -r, epsilon = 1e-14);
        assert_abs_diff_eq!(n3[2], r, epsilon = 1e-14);
        assert!(gll_nodes(0).is_err());
    }

    #[test]
    fn gll_interior_nodes_are_legendre_derivative_roots() {
        for p in 2..=10 {
            let nodes = gll_nodes(p).unwrap();
            assert_eq!(nodes[0], -1.0);
            assert_eq!(nodes[p], 1.0);
            for w in nodes.windows(2) {
                assert!(w[0] < w[1]);
            }
            for j in 1..p {
                assert!(legendre(p, nodes[j]).1.abs() < 1e-12, "p={p} j={j}");
                assert_abs_diff_eq!(nodes[j], -nodes[p - j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn lagrange_examples() {
        let b2 = NodalBasis1D::new(2).unwrap();
        let (v, _) = b2.lagrange_all(0.0);
        assert_eq!(v, vec![0.0, 1.0, 0.0]);
        let (_, d) = b2.lagrange_all(1.0);
        assert_abs_diff_eq!(d[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(d[1], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d[2], 1.5, epsilon = 1e-14);

        let b1 = NodalBasis1D::new(1).unwrap();
        let (v, d) = b1.lagrange_all(0.5);
        assert_abs_diff_eq!(v[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(d[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn kronecker_property() {
        for p in 1..=10 {
            let b = NodalBasis1D::new(p).unwrap();
            for (j, &xj) in b.nodes().iter().enumerate() {
                let (v, _) = b.lagrange_all(xj);
                for (i, vi) in v.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((vi - expected).abs() < 1e-12, "p={p} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn tensor_examples() {
        let tb = TensorBasis::new(1, 2).unwrap();
        assert_eq!(tb.len(), 4);
        let (v, _) = tb.eval(&[1.0, 1.0]);
        assert_eq!(v, vec![0.0, 0.0, 0.0, 1.0]);
        let (v, _) = tb.eval(&[0.0, 0.0]);
        for vi in v {
            assert_abs_diff_eq!(vi, 0.25, epsilon = 1e-15);
        }

        let tb3 = TensorBasis::new(1, 3).unwrap();
        let (_, g) = tb3.eval(&[1.0, 1.0, 1.0]);
        let corner = tb3.flat_index(&[1, 1, 1]);
        assert_eq!(corner, 7);
        for k in 0..3 {
            assert_abs_diff_eq!(g[corner * 3 + k], 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn flat_index_is_first_coordinate_fastest() {
        let tb = TensorBasis::new(2, 3).unwrap();
        assert_eq!(tb.flat_index(&[1, 0, 0]), 1);
        assert_eq!(tb.flat_index(&[0, 1, 0]), 3);
        assert_eq!(tb.flat_index(&[0, 0, 1]), 9);
        for f in 0..tb.len() {
            assert_eq!(tb.flat_index(&tb.multi_index(f)), f);
        }
        let tb1 = TensorBasis::new(1, 2).unwrap();
        assert_eq!(tb1.lower_face_dofs(), vec![0, 1, 2]);
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(TensorBasis::new(2, 0).is_err());
        assert!(TensorBasis::new(2, 4).is_err());
    }
}
