//! Quadrature on reference hypercubes and adaptive cut-cell rules.

use crate::basis::{gll_nodes, legendre};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, ImplicitDomain};

/// Points and weights on `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    /// Flat point coordinates, `dim` per point.
    points: Vec<f64>,
    weights: Vec<f64>,
    /// Highest polynomial degree per direction that is integrated exactly.
    exactness: usize,
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, q: usize) -> &[f64] {
        &self.points[q * self.dim..(q + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exactness(&self) -> usize {
        self.exactness
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|q| self.weights[q] * f(self.point(q))).sum()
    }

    /// Coordinates of a one-dimensional rule.
    pub fn abscissae(&self) -> &[f64] {
        &self.points
    }
}

/// The `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre_1d(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::invalid("Gauss-Legendre rule needs n >= 1"));
    }
    let nf = n as f64;
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // i-th root from the left
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        if 2 * i + 1 == n {
            x = 0.0;
        }
        let dp = legendre(n, x).1;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = x;
        points[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Ok(QuadratureRule {
        dim: 1,
        points,
        weights,
        exactness: 2 * n - 1,
    })
}

/// GLL quadrature with `p + 1` points at the nodes of the degree-`p` basis.
pub fn gll_rule_1d(p: usize) -> Result<QuadratureRule> {
    let points = gll_nodes(p)?;
    let pf = p as f64;
    let weights = points
        .iter()
        .map(|&x| {
            let lp = legendre(p, x).0;
            2.0 / (pf * (pf + 1.0) * lp * lp)
        })
        .collect();
    Ok(QuadratureRule {
        dim: 1,
        points,
        weights,
        exactness: 2 * p - 1,
    })
}

/// Tensor product of a 1D rule, first coordinate fastest.
pub fn tensorize(rule1d: &QuadratureRule, dim: usize) -> Result<QuadratureRule> {
    if rule1d.dim != 1 {
        return Err(Error::invalid("tensorize expects a one-dimensional rule"));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::invalid(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    let n = rule1d.len();
    let total = n.pow(dim as u32);
    let mut points = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    for q in 0..total {
        let mut rest = q;
        let mut w = 1.0;
        for _ in 0..dim {
            let i = rest % n;
            rest /= n;
            points.push(rule1d.points[i]);
            w *= rule1d.weights[i];
        }
        weights.push(w);
    }
    Ok(QuadratureRule {
        dim,
        points,
        weights,
        exactness: rule1d.exactness,
    })
}

/// How an element relates to the physical domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum CutClass {
    /// Entirely physical.
    Inside,
    /// Entirely fictitious.
    Fictitious,
    Cut,
}

/// One leaf of a cut-cell rule, in reference coordinates of the element.
#[derive(Debug, Clone, PartialEq)]
pub struct CutLeaf {
    pub bounds: Aabb,
    pub level: usize,
    /// Flat point coordinates in `[-1, 1]^d`.
    pub points: Vec<f64>,
    /// Weights with respect to the reference element measure.
    pub weights: Vec<f64>,
    pub scales: Vec<f64>,
    pub inside: Vec<bool>,
}

impl CutLeaf {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, q: usize) -> &[f64] {
        let d = self.bounds.dim();
        &self.points[q * d..(q + 1) * d]
    }
}

/// Composite rule on the leaves of a quadtree (octree) refined toward the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct CutCellRule {
    dim: usize,
    depth: usize,
    leaves: Vec<CutLeaf>,
}

impl CutCellRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaves(&self) -> &[CutLeaf] {
        &self.leaves
    }

    pub fn num_points(&self) -> usize {
        self.leaves.iter().map(CutLeaf::len).sum()
    }

    /// Inside/fictitious only for a single-leaf rule whose points agree.
    pub fn classification(&self) -> CutClass {
        if self.leaves.len() == 1 {
            let leaf = &self.leaves[0];
            if leaf.inside.iter().all(|&b| b) {
                return CutClass::Inside;
            }
            if leaf.inside.iter().all(|&b| !b) {
                return CutClass::Fictitious;
            }
        }
        CutClass::Cut
    }

    /// Integral over the reference element of `scale * f`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.leaves
            .iter()
            .map(|leaf| {
                (0..leaf.len())
                    .map(|q| leaf.weights[q] * leaf.scales[q] * f(leaf.point(q)))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Builds the cut-cell rule of `element` for `domain`.
///
/// A sub-cell is split into `2^d` children while its level is below `depth`
/// and its corners, center and leaf quadrature points are not all on the
/// same side of the boundary.
/// Every leaf gets an `n1d`-point tensor Gauss-Legendre rule whose points
/// carry the pointwise indicator value.
pub fn cut_cell_rule<D: ImplicitDomain + ?Sized>(
    element: &Aabb,
    domain: &D,
    alpha: f64,
    depth: usize,
    n1d: usize,
) -> Result<CutCellRule> {
    let dim = element.dim();
    if domain.dim() != dim {
        return Err(Error::invalid(format!(
            "domain dimension {} does not match element dimension {dim}",
            domain.dim()
        )));
    }
    let gl = gauss_legendre_1d(n1d)?;
    let reference = Aabb::reference(dim)?;
    let mut leaves = Vec::new();
    let mut stack = vec![(reference, 0usize)];
    let mut x = [0.0; 3];
    while let Some((cell, level)) = stack.pop() {
        let leaf = leaf_rule(element, &cell, level, domain, alpha, &gl);
        if level < depth {
            let first = leaf.inside[0];
            let mut mixed = leaf.inside.iter().any(|&s| s != first);
            let mut probes = cell.corners();
            probes.push(cell.center());
            for probe in &probes {
                if mixed {
                    break;
                }
                element.map_from_reference(&probe[..dim], &mut x);
                mixed = domain.inside(&x[..dim]) != first;
            }
            if mixed {
                // reversed so leaves come out in child order
                for child in cell.children().into_iter().rev() {
                    stack.push((child, level + 1));
                }
                continue;
            }
        }
        leaves.push(leaf);
    }
    Ok(CutCellRule { dim, depth, leaves })
}

fn leaf_rule<D: ImplicitDomain + ?Sized>(
    element: &Aabb,
    cell: &Aabb,
    level: usize,
    domain: &D,
    alpha: f64,
    gl: &QuadratureRule,
) -> CutLeaf {
    let dim = cell.dim();
    let n = gl.len();
    let total = n.pow(dim as u32);
    let jac: f64 = (0..dim).map(|k| 0.5 * cell.extent(k)).product();
    let mut points = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut scales = Vec::with_capacity(total);
    let mut inside = Vec::with_capacity(total);
    let mut xi = [0.0; 3];
    let mut x = [0.0; 3];
    for q in 0..total {
        let mut rest = q;
        let mut w = jac;
        for k in 0..dim {
            let i = rest % n;
            rest /= n;
            w *= gl.weights[i];
            xi[k] = cell.lower()[k] + 0.5 * (gl.points[i] + 1.0) * cell.extent(k);
        }
        element.map_from_reference(&xi[..dim], &mut x);
        let is_inside = domain.inside(&x[..dim]);
        points.extend_from_slice(&xi[..dim]);
        weights.push(w);
        scales.push(if is_inside { 1.0 } else { alpha });
        inside.push(is_inside);
    }
    CutLeaf {
        bounds: *cell,
        level,
        points,
        weights,
        scales,
        inside,
    }
}
