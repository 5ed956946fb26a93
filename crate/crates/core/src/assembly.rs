//! Element and global mass/stiffness matrices for alpha-stabilized
//! discretizations of the scalar wave equation (unit density and wave speed).
//!
//! Element matrices are dense. The global system of a Cartesian grid shares
//! GLL nodes across element faces and is stored in compressed row form.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;

use crate::basis::{NodalBasis1D, TensorBasis};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, ImplicitDomain};
use crate::quadrature::{
    cut_cell_rule, gauss_legendre_1d, gll_rule_1d, tensorize, CutCellRule, CutClass, QuadratureRule,
};

/// How the mass matrix of an element was integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum IntegrationPolicy {
    /// Exact Gauss-Legendre integration of the corner-cut unit element.
    ExactCornerCut,
    /// Gauss-Legendre with `p + 1` points per direction on an uncut element.
    Consistent,
    /// GLL mass (diagonal) with Gauss-Legendre stiffness on an uncut element.
    Lumped,
    /// Adaptive cut-cell quadrature of the given depth.
    Quadtree { depth: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    pub degree: usize,
    pub dim: usize,
    pub bounds: Aabb,
    pub alpha: f64,
    pub policy: IntegrationPolicy,
    pub class: CutClass,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
}

impl ElementMatrices {
    pub fn size(&self) -> usize {
        self.mass.nrows()
    }

    /// Uniform indicator value of an uncut element.
    fn uniform_scale(&self) -> Option<f64> {
        match self.class {
            CutClass::Inside => Some(1.0),
            CutClass::Fictitious => Some(self.alpha),
            CutClass::Cut => None,
        }
    }
}

/// 1D matrices `int_a^b N_i N_j dx` and `int_a^b N_i' N_j' dx` for the basis
/// living on the element interval `[lo, hi]`.
fn interval_matrices(
    basis: &NodalBasis1D,
    gl: &QuadratureRule,
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = basis.len();
    let mut mass = DMatrix::zeros(n, n);
    let mut stiff = DMatrix::zeros(n, n);
    if b <= a {
        return (mass, stiff);
    }
    let dxi_dx = 2.0 / (hi - lo);
    let mut vals = vec![0.0; n];
    let mut ders = vec![0.0; n];
    for (&t, &w) in gl.abscissae().iter().zip(gl.weights()) {
        let x = a + 0.5 * (t + 1.0) * (b - a);
        let xi = -1.0 + 2.0 * (x - lo) / (hi - lo);
        basis.eval_into(xi, &mut vals, &mut ders);
        let wx = 0.5 * (b - a) * w;
        for i in 0..n {
            for j in 0..n {
                mass[(i, j)] += wx * vals[i] * vals[j];
                stiff[(i, j)] += wx * ders[i] * ders[j] * dxi_dx * dxi_dx;
            }
        }
    }
    (mass, stiff)
}

/// Tensor product of per-direction factors, first coordinate fastest.
fn kron(factors: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let sizes: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let total: usize = sizes.iter().product();
    DMatrix::from_fn(total, total, |r, c| {
        let (mut r, mut c) = (r, c);
        let mut v = 1.0;
        for (f, &n) in factors.iter().zip(&sizes) {
            v *= f[(r % n, c % n)];
            r /= n;
            c /= n;
        }
        v
    })
}

/// Mass and stiffness of `int scale * (...)` over a sub-box, built from 1D factors.
///
/// `mass1d[k]`/`stiff1d[k]` are the 1D integrals in direction `k`.
fn separable_matrices(mass1d: &[DMatrix<f64>], stiff1d: &[DMatrix<f64>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = mass1d.len();
    let mass = kron(&mass1d.iter().collect::<Vec<_>>());
    let n = mass.nrows();
    let mut stiffness = DMatrix::zeros(n, n);
    for g in 0..d {
        let factors: Vec<&DMatrix<f64>> = (0..d)
            .map(|k| if k == g { &stiff1d[k] } else { &mass1d[k] })
            .collect();
        stiffness += kron(&factors);
    }
    (mass, stiffness)
}

fn check_degree_dim(p: usize, d: usize) -> Result<()> {
    if !(1..=crate::basis::MAX_TENSOR_DEGREE).contains(&p) {
        return Err(Error::invalid(format!("degree must be in 1..=15, got {p}")));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::invalid(format!("dimension must be 1, 2 or 3, got {d}")));
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::invalid(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

/// Matrices of the unit element `[0, 1]^d` whose physical part is `[0, chi]^d`.
///
/// Both terms of the split `(1 - alpha) int_Omega + alpha int_element` are
/// integrated exactly with `p + 1` Gauss-Legendre points per direction.
pub fn element_matrices_cornercut(p: usize, d: usize, chi: f64, alpha: f64) -> Result<ElementMatrices> {
    check_degree_dim(p, d)?;
    check_unit("cut parameter", chi)?;
    check_unit("alpha", alpha)?;
    let basis = NodalBasis1D::new(p)?;
    let gl = gauss_legendre_1d(p + 1)?;
    let (m_cut, k_cut) = interval_matrices(&basis, &gl, 0.0, 1.0, 0.0, chi);
    let (m_full, k_full) = interval_matrices(&basis, &gl, 0.0, 1.0, 0.0, 1.0);
    let (mc, kc) = separable_matrices(&vec![m_cut; d], &vec![k_cut; d]);
    let (mf, kf) = separable_matrices(&vec![m_full; d], &vec![k_full; d]);
    let class = if chi >= 1.0 {
        CutClass::Inside
    } else if chi <= 0.0 {
        CutClass::Fictitious
    } else {
        CutClass::Cut
    };
    Ok(ElementMatrices {
        degree: p,
        dim: d,
        bounds: Aabb::unit(d)?,
        alpha,
        policy: IntegrationPolicy::ExactCornerCut,
        class,
        mass: mc * (1.0 - alpha) + mf * alpha,
        stiffness: kc * (1.0 - alpha) + kf * alpha,
    })
}

/// Uncut element on `bounds` with a uniform indicator value `scale`.
///
/// `lumped` selects GLL mass; stiffness always uses Gauss-Legendre.
pub fn element_matrices_uniform(
    p: usize,
    bounds: &Aabb,
    scale: f64,
    lumped: bool,
) -> Result<ElementMatrices> {
    let d = bounds.dim();
    check_degree_dim(p, d)?;
    let basis = NodalBasis1D::new(p)?;
    let gl = gauss_legendre_1d(p + 1)?;
    let mut m1 = Vec::with_capacity(d);
    let mut k1 = Vec::with_capacity(d);
    for k in 0..d {
        let (lo, hi) = (bounds.lower()[k], bounds.upper()[k]);
        let (m, s) = interval_matrices(&basis, &gl, lo, hi, lo, hi);
        m1.push(m);
        k1.push(s);
    }
    let (mut mass, stiffness) = separable_matrices(&m1, &k1);
    if lumped {
        mass = DMatrix::from_diagonal(&gll_mass_diagonal(p, bounds)?);
    }
    Ok(ElementMatrices {
        degree: p,
        dim: d,
        bounds: *bounds,
        alpha: scale,
        policy: if lumped {
            IntegrationPolicy::Lumped
        } else {
            IntegrationPolicy::Consistent
        },
        class: if scale == 1.0 {
            CutClass::Inside
        } else {
            CutClass::Fictitious
        },
        mass: mass * scale,
        stiffness: stiffness * scale,
    })
}

/// GLL quadrature of `N_i N_j` over `bounds`; diagonal by the Kronecker property.
fn gll_mass_diagonal(p: usize, bounds: &Aabb) -> Result<DVector<f64>> {
    let d = bounds.dim();
    let tb = TensorBasis::new(p, d)?;
    let rule = tensorize(&gll_rule_1d(p)?, d)?;
    let jac: f64 = (0..d).map(|k| 0.5 * bounds.extent(k)).product();
    let n = tb.len();
    let mut diag = DVector::zeros(n);
    let mut vals = vec![0.0; n];
    let mut grads = vec![0.0; n * d];
    for q in 0..rule.len() {
        tb.eval_into(rule.point(q), &mut vals, &mut grads);
        let w = rule.weights()[q] * jac;
        for i in 0..n {
            diag[i] += w * vals[i] * vals[i];
        }
    }
    Ok(diag)
}

/// Diagonal GLL mass of an uncut element, scaled by its indicator value.
///
/// Cut elements are rejected: lumping is only used where the indicator is uniform.
pub fn lumped_mass(em: &ElementMatrices) -> Result<DVector<f64>> {
    let scale = em
        .uniform_scale()
        .ok_or_else(|| Error::invalid("nodal lumping is not applied to cut elements"))?;
    Ok(gll_mass_diagonal(em.degree, &em.bounds)? * scale)
}

/// Accumulates `int scale N_i N_j` and `int scale grad N_i . grad N_j` over a
/// cut-cell rule.
///
/// Leaves with a uniform indicator are integrated through 1D factors, which
/// is exact for the leaf Gauss-Legendre rule; mixed leaves go point by point.
/// `pointwise_only` forces the point-by-point path everywhere.
pub fn integrate_cut_rule(
    tb: &TensorBasis,
    element: &Aabb,
    rule: &CutCellRule,
    pointwise_only: bool,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = tb.dim();
    let n = tb.len();
    let elem_jac: f64 = (0..d).map(|k| 0.5 * element.extent(k)).product();
    let mut inv_h2 = [0.0; 3];
    for k in 0..d {
        let g = 2.0 / element.extent(k);
        inv_h2[k] = g * g;
    }
    let mut mass = DMatrix::zeros(n, n);
    let mut stiff = DMatrix::zeros(n, n);
    let mut vals = vec![0.0; n];
    let mut grads = vec![0.0; n * d];
    let basis = tb.basis1d();
    // same per-direction point count as the leaf rules
    let n1d = rule
        .leaves()
        .first()
        .map(|leaf| (leaf.len() as f64).powf(1.0 / d as f64).round() as usize)
        .unwrap_or(1)
        .max(1);
    let gl = gauss_legendre_1d(n1d).expect("n1d >= 1");

    // Mixed-leaf points are batched into row blocks; each full block is
    // reduced with matrix products.
    const BLOCK: usize = 2048;
    let mut values = DMatrix::zeros(BLOCK, n);
    let mut gradients: Vec<DMatrix<f64>> = (0..d).map(|_| DMatrix::zeros(BLOCK, n)).collect();
    let mut weights = vec![0.0; BLOCK];
    let mut filled = 0;
    let flush = |filled: usize,
                 values: &DMatrix<f64>,
                 gradients: &[DMatrix<f64>],
                 weights: &[f64],
                 mass: &mut DMatrix<f64>,
                 stiff: &mut DMatrix<f64>| {
        if filled == 0 {
            return;
        }
        let v = values.rows(0, filled);
        let mut wv = v.clone_owned();
        for (mut row, &w) in wv.row_iter_mut().zip(weights) {
            row *= w;
        }
        mass.gemm_tr(1.0, &v, &wv, 1.0);
        for (k, g) in gradients.iter().enumerate() {
            let g = g.rows(0, filled);
            let mut wg = g.clone_owned();
            for (mut row, &w) in wg.row_iter_mut().zip(weights) {
                row *= w * inv_h2[k];
            }
            stiff.gemm_tr(1.0, &g, &wg, 1.0);
        }
    };

    // 1D factors per distinct interval, keyed by the bit patterns of its ends
    let mut factors: BTreeMap<(u64, u64), (DMatrix<f64>, DMatrix<f64>)> = BTreeMap::new();
    let mut factor = |lo: f64, hi: f64| -> (DMatrix<f64>, DMatrix<f64>) {
        factors
            .entry((lo.to_bits(), hi.to_bits()))
            .or_insert_with(|| interval_matrices(basis, &gl, -1.0, 1.0, lo, hi))
            .clone()
    };
    // Uniform leaves sharing their intervals in directions 1.. are summed in
    // direction 0 first: sum_l s_l (U_l x m0_l) = U x sum_l s_l m0_l.
    struct Group {
        upper_mass: DMatrix<f64>,
        upper_stiff: DMatrix<f64>,
        mass0: DMatrix<f64>,
        stiff0: DMatrix<f64>,
    }
    let mut groups: BTreeMap<Vec<u64>, Group> = BTreeMap::new();

    for leaf in rule.leaves() {
        let uniform = leaf.inside.iter().all(|&b| b == leaf.inside[0]);
        if uniform && !pointwise_only {
            let w = leaf.scales[0] * elem_jac;
            let (lo, hi) = (leaf.bounds.lower(), leaf.bounds.upper());
            let key: Vec<u64> = (1..d).flat_map(|k| [lo[k].to_bits(), hi[k].to_bits()]).collect();
            let (m0, k0) = factor(lo[0], hi[0]);
            let group = groups.entry(key).or_insert_with(|| {
                let mut m1 = Vec::with_capacity(d - 1);
                let mut k1 = Vec::with_capacity(d - 1);
                for k in 1..d {
                    let (m, s) = factor(lo[k], hi[k]);
                    // reference derivatives, mapped to physical ones here
                    m1.push(m);
                    k1.push(s * inv_h2[k]);
                }
                let (upper_mass, upper_stiff) = if d == 1 {
                    (DMatrix::from_element(1, 1, 1.0), DMatrix::zeros(1, 1))
                } else {
                    separable_matrices(&m1, &k1)
                };
                Group {
                    upper_mass,
                    upper_stiff,
                    mass0: DMatrix::zeros(m0.nrows(), m0.ncols()),
                    stiff0: DMatrix::zeros(m0.nrows(), m0.ncols()),
                }
            });
            group.mass0 += m0 * w;
            group.stiff0 += k0 * (w * inv_h2[0]);
            continue;
        }
        for q in 0..leaf.len() {
            tb.eval_into(leaf.point(q), &mut vals, &mut grads);
            weights[filled] = leaf.weights[q] * leaf.scales[q] * elem_jac;
            for i in 0..n {
                values[(filled, i)] = vals[i];
                for (k, g) in gradients.iter_mut().enumerate() {
                    g[(filled, i)] = grads[i * d + k];
                }
            }
            filled += 1;
            if filled == BLOCK {
                flush(filled, &values, &gradients, &weights, &mut mass, &mut stiff);
                filled = 0;
            }
        }
    }
    flush(filled, &values, &gradients, &weights, &mut mass, &mut stiff);
    for g in groups.values() {
        mass += kron(&[&g.mass0, &g.upper_mass]);
        stiff += kron(&[&g.stiff0, &g.upper_mass]);
        stiff += kron(&[&g.mass0, &g.upper_stiff]);
    }
    // exact symmetry regardless of summation order
    let m = (&mass + mass.transpose()) * 0.5;
    let k = (&stiff + stiff.transpose()) * 0.5;
    (m, k)
}

/// Element matrices integrated with the adaptive cut-cell rule of depth `depth`
/// and `p + 1` Gauss-Legendre points per direction on each leaf.
pub fn element_matrices_quadtree<D: ImplicitDomain + ?Sized>(
    p: usize,
    bounds: &Aabb,
    domain: &D,
    alpha: f64,
    depth: usize,
) -> Result<ElementMatrices> {
    check_degree_dim(p, bounds.dim())?;
    check_unit("alpha", alpha)?;
    let rule = cut_cell_rule(bounds, domain, alpha, depth, p + 1)?;
    let tb = TensorBasis::new(p, bounds.dim())?;
    let (mass, stiffness) = integrate_cut_rule(&tb, bounds, &rule, false);
    Ok(ElementMatrices {
        degree: p,
        dim: bounds.dim(),
        bounds: *bounds,
        alpha,
        policy: IntegrationPolicy::Quadtree { depth },
        class: rule.classification(),
        mass,
        stiffness,
    })
}

/// Removes the rows and columns of the constrained DOFs (homogeneous Dirichlet).
pub fn apply_dirichlet(
    mass: &DMatrix<f64>,
    stiffness: &DMatrix<f64>,
    constrained: &[usize],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let keep = free_dofs(mass.nrows(), constrained)?;
    let pick = |a: &DMatrix<f64>| DMatrix::from_fn(keep.len(), keep.len(), |i, j| a[(keep[i], keep[j])]);
    Ok((pick(mass), pick(stiffness)))
}

fn free_dofs(n: usize, constrained: &[usize]) -> Result<Vec<usize>> {
    let mut fixed = vec![false; n];
    for &c in constrained {
        if c >= n {
            return Err(Error::invalid(format!("constrained DOF {c} out of range 0..{n}")));
        }
        fixed[c] = true;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    if keep.is_empty() {
        return Err(Error::invalid("cannot constrain every degree of freedom"));
    }
    Ok(keep)
}

/// Regular 2D grid of square elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, h: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || !(h > 0.0) {
            return Err(Error::invalid("grid needs nx, ny >= 1 and h > 0"));
        }
        Ok(Self {
            nx,
            ny,
            h,
            origin: [0.0, 0.0],
        })
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    /// Elements in row-major order, x fastest.
    pub fn element_bounds(&self, e: usize) -> Aabb {
        let (ix, iy) = (e % self.nx, e / self.nx);
        let lo = [
            self.origin[0] + ix as f64 * self.h,
            self.origin[1] + iy as f64 * self.h,
        ];
        Aabb::new(&lo, &[lo[0] + self.h, lo[1] + self.h]).expect("h > 0")
    }

    /// `(nx p + 1)(ny p + 1)`
    pub fn num_dofs(&self, p: usize) -> usize {
        (self.nx * p + 1) * (self.ny * p + 1)
    }

    /// Global DOF numbers of element `e` in local tensor order.
    pub fn element_dofs(&self, e: usize, p: usize) -> Vec<usize> {
        let (ix, iy) = (e % self.nx, e / self.nx);
        let stride = self.nx * p + 1;
        let mut dofs = Vec::with_capacity((p + 1) * (p + 1));
        for b in 0..=p {
            for a in 0..=p {
                dofs.push((ix * p + a) + (iy * p + b) * stride);
            }
        }
        dofs
    }
}

/// Builds every element of the grid with the study policy: uncut and fully
/// fictitious elements get GLL-lumped mass and Gauss-Legendre stiffness,
/// cut elements consistent matrices from the cut-cell rule.
///
/// Elements are computed in parallel and returned in grid order.
pub fn assemble_elements<D: ImplicitDomain + ?Sized>(
    grid: &GridSpec,
    p: usize,
    domain: &D,
    alpha: f64,
    depth: usize,
) -> Result<Vec<ElementMatrices>> {
    if domain.dim() != 2 {
        return Err(Error::invalid("global assembly is two-dimensional"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!(
            "global assembly needs alpha in (0, 1], got {alpha}"
        )));
    }
    check_degree_dim(p, 2)?;
    let template = element_matrices_uniform(p, &grid.element_bounds(0), 1.0, true)?;
    let tb = TensorBasis::new(p, 2)?;
    (0..grid.num_elements())
        .into_par_iter()
        .map(|e| {
            let bounds = grid.element_bounds(e);
            let rule = cut_cell_rule(&bounds, domain, alpha, depth, p + 1)?;
            let class = rule.classification();
            let em = match class {
                CutClass::Inside | CutClass::Fictitious => {
                    let scale = if class == CutClass::Inside { 1.0 } else { alpha };
                    ElementMatrices {
                        bounds,
                        alpha,
                        class,
                        mass: &template.mass * scale,
                        stiffness: &template.stiffness * scale,
                        ..template.clone()
                    }
                }
                CutClass::Cut => {
                    let (mass, stiffness) = integrate_cut_rule(&tb, &bounds, &rule, false);
                    ElementMatrices {
                        degree: p,
                        dim: 2,
                        bounds,
                        alpha,
                        policy: IntegrationPolicy::Quadtree { depth },
                        class,
                        mass,
                        stiffness,
                    }
                }
            };
            Ok(em)
        })
        .collect()
}

/// Assembled mass and stiffness of a 2D grid.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub grid: GridSpec,
    pub degree: usize,
    pub mass: CsrMatrix<f64>,
    pub stiffness: CsrMatrix<f64>,
    pub classes: Vec<CutClass>,
}

impl GlobalSystem {
    /// Sums element matrices over the shared-node connectivity in element order.
    pub fn from_elements(grid: &GridSpec, p: usize, elements: &[ElementMatrices]) -> Result<Self> {
        if elements.len() != grid.num_elements() {
            return Err(Error::invalid("element count does not match the grid"));
        }
        let n = grid.num_dofs(p);
        let local = (p + 1) * (p + 1);
        let mut mass = CooMatrix::new(n, n);
        let mut stiff = CooMatrix::new(n, n);
        for (e, em) in elements.iter().enumerate() {
            if em.size() != local {
                return Err(Error::invalid(format!("element {e} has the wrong size")));
            }
            let dofs = grid.element_dofs(e, p);
            for (i, &gi) in dofs.iter().enumerate() {
                for (j, &gj) in dofs.iter().enumerate() {
                    let m = em.mass[(i, j)];
                    if m != 0.0 {
                        mass.push(gi, gj, m);
                    }
                    let k = em.stiffness[(i, j)];
                    if k != 0.0 {
                        stiff.push(gi, gj, k);
                    }
                }
            }
        }
        Ok(Self {
            grid: *grid,
            degree: p,
            mass: CsrMatrix::from(&mass),
            stiffness: CsrMatrix::from(&stiff),
            classes: elements.iter().map(|em| em.class).collect(),
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.mass.nrows()
    }

    /// Restricts both operators to the unconstrained DOFs.
    pub fn apply_dirichlet(&self, constrained: &[usize]) -> Result<(CsrMatrix<f64>, CsrMatrix<f64>)> {
        let keep = free_dofs(self.num_dofs(), constrained)?;
        let mut new_index = vec![usize::MAX; self.num_dofs()];
        for (i, &k) in keep.iter().enumerate() {
            new_index[k] = i;
        }
        let restrict = |a: &CsrMatrix<f64>| {
            let mut coo = CooMatrix::new(keep.len(), keep.len());
            for (r, c, &v) in a.triplet_iter() {
                let (nr, nc) = (new_index[r], new_index[c]);
                if nr != usize::MAX && nc != usize::MAX {
                    coo.push(nr, nc, v);
                }
            }
            CsrMatrix::from(&coo)
        };
        Ok((restrict(&self.mass), restrict(&self.stiffness)))
    }
}

/// Assembles the global system; see [`assemble_elements`] for the element policy.
pub fn assemble_global<D: ImplicitDomain + ?Sized>(
    grid: &GridSpec,
    p: usize,
    domain: &D,
    alpha: f64,
    depth: usize,
) -> Result<GlobalSystem> {
    let elements = assemble_elements(grid, p, domain, alpha, depth)?;
    GlobalSystem::from_elements(grid, p, &elements)
}

/// Dense copy of a sparse matrix.
pub fn to_dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for (r, c, &v) in a.triplet_iter() {
        out[(r, c)] += v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Ball, CornerCutDomain};
    use approx::assert_relative_eq;

    fn max_abs(a: &DMatrix<f64>) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn linear_full_element() {
        let em = element_matrices_cornercut(1, 1, 1.0, 0.3).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0]);
        let k = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!(max_abs(&(&em.mass - m)) < 1e-14);
        assert!(max_abs(&(&em.stiffness - k)) < 1e-14);
        assert_eq!(em.class, CutClass::Inside);
    }

    #[test]
    fn linear_corner_entry() {
        for &(chi, alpha) in &[(0.3, 1e-4), (0.9, 0.5), (1e-3, 1e-8)] {
            let em = element_matrices_cornercut(1, 1, chi, alpha).unwrap();
            let expected = ((1.0 - alpha) * chi.powi(3) + alpha) / 3.0;
            assert_relative_eq!(em.mass[(1, 1)], expected, max_relative = 1e-13);
        }
    }

    #[test]
    fn empty_element_is_alpha_times_full() {
        for d in 1..=3 {
            let empty = element_matrices_cornercut(2, d, 0.0, 1e-4).unwrap();
            let full = element_matrices_cornercut(2, d, 1.0, 1e-4).unwrap();
            assert!(max_abs(&(&empty.mass - &full.mass * 1e-4)) < 1e-18);
            assert!(max_abs(&(&empty.stiffness - &full.stiffness * 1e-4)) < 1e-18);
            assert_eq!(empty.class, CutClass::Fictitious);
        }
    }

    #[test]
    fn neumann_stiffness_kills_constants() {
        for d in 1..=3 {
            for p in 1..=4 {
                let em = element_matrices_cornercut(p, d, 0.37, 1e-6).unwrap();
                let ones = DVector::from_element(em.size(), 1.0);
                let r = &em.stiffness * ones;
                assert!(r.amax() < 1e-10 * max_abs(&em.stiffness), "p={p} d={d}");
                assert!(max_abs(&(&em.mass - em.mass.transpose())) < 1e-15);
            }
        }
    }

    #[test]
    fn quadtree_matches_exact_corner_cut_on_dyadic_cut() {
        let exact = element_matrices_cornercut(3, 2, 0.5, 1e-4).unwrap();
        let domain = CornerCutDomain::new(0.5, 2).unwrap();
        for depth in [1, 6] {
            let quad = element_matrices_quadtree(3, &Aabb::unit(2).unwrap(), &domain, 1e-4, depth).unwrap();
            assert_eq!(quad.class, CutClass::Cut);
            let scale_m = max_abs(&exact.mass);
            let scale_k = max_abs(&exact.stiffness);
            assert!(max_abs(&(&quad.mass - &exact.mass)) < 1e-12 * scale_m);
            assert!(max_abs(&(&quad.stiffness - &exact.stiffness)) < 1e-12 * scale_k);
        }
    }

    #[test]
    fn quadtree_uncut_cases() {
        let unit = Aabb::unit(2).unwrap();
        let full = element_matrices_cornercut(2, 2, 1.0, 1e-3).unwrap();
        let inside = CornerCutDomain::new(1.0, 2).unwrap();
        let em = element_matrices_quadtree(2, &unit, &inside, 1e-3, 5).unwrap();
        assert_eq!(em.class, CutClass::Inside);
        assert!(max_abs(&(&em.mass - &full.mass)) < 1e-12 * max_abs(&full.mass));
        assert!(max_abs(&(&em.stiffness - &full.stiffness)) < 1e-12 * max_abs(&full.stiffness));

        let far = Ball::new(&[5.0, 5.0], 0.5).unwrap();
        let em = element_matrices_quadtree(2, &unit, &far, 1e-3, 5).unwrap();
        assert_eq!(em.class, CutClass::Fictitious);
        assert!(max_abs(&(&em.mass - &full.mass * 1e-3)) < 1e-15);
    }

    #[test]
    fn separable_and_pointwise_paths_agree() {
        let element = Aabb::new(&[0.1, 0.3], &[0.3, 0.5]).unwrap();
        let disk = Ball::new(&[0.0, 0.25], 0.23).unwrap();
        let rule = cut_cell_rule(&element, &disk, 1e-4, 4, 3).unwrap();
        let tb = TensorBasis::new(2, 2).unwrap();
        let (m1, k1) = integrate_cut_rule(&tb, &element, &rule, false);
        let (m2, k2) = integrate_cut_rule(&tb, &element, &rule, true);
        assert!(max_abs(&(&m1 - &m2)) < 1e-13 * max_abs(&m2));
        assert!(max_abs(&(&k1 - &k2)) < 1e-13 * max_abs(&k2));

        for (lo, hi, center) in [
            (vec![0.1], vec![0.4], vec![0.0]),
            (vec![0.1, 0.2, 0.0], vec![0.3, 0.5, 0.1], vec![0.05, 0.25, 0.0]),
        ] {
            let element = Aabb::new(&lo, &hi).unwrap();
            let ball = Ball::new(&center, 0.17).unwrap();
            let rule = cut_cell_rule(&element, &ball, 1e-3, 3, 3).unwrap();
            assert_eq!(rule.classification(), CutClass::Cut);
            let tb = TensorBasis::new(2, lo.len()).unwrap();
            let (m1, k1) = integrate_cut_rule(&tb, &element, &rule, false);
            let (m2, k2) = integrate_cut_rule(&tb, &element, &rule, true);
            assert!(max_abs(&(&m1 - &m2)) < 1e-13 * max_abs(&m2), "d = {}", lo.len());
            assert!(max_abs(&(&k1 - &k2)) < 1e-13 * max_abs(&k2), "d = {}", lo.len());
        }
    }

    #[test]
    fn deep_rules_match_a_plain_point_loop() {
        let element = Aabb::new(&[0.1, 0.3], &[0.3, 0.5]).unwrap();
        let disk = Ball::new(&[0.0, 0.25], 0.23).unwrap();
        let rule = cut_cell_rule(&element, &disk, 1e-4, 7, 6).unwrap();
        assert!(rule.num_points() > 3 * 2048);
        let tb = TensorBasis::new(5, 2).unwrap();
        let n = tb.len();
        let jac = 0.25 * element.extent(0) * element.extent(1);
        let mut m_ref = DMatrix::zeros(n, n);
        let mut k_ref = DMatrix::zeros(n, n);
        let g = [2.0 / element.extent(0), 2.0 / element.extent(1)];
        for leaf in rule.leaves() {
            for q in 0..leaf.len() {
                let (v, grad) = tb.eval(leaf.point(q));
                let w = leaf.weights[q] * leaf.scales[q] * jac;
                for i in 0..n {
                    for j in 0..n {
                        m_ref[(i, j)] += w * v[i] * v[j];
                        k_ref[(i, j)] += w
                            * (grad[2 * i] * grad[2 * j] * g[0] * g[0]
                                + grad[2 * i + 1] * grad[2 * j + 1] * g[1] * g[1]);
                    }
                }
            }
        }
        for pointwise in [false, true] {
            let (m, k) = integrate_cut_rule(&tb, &element, &rule, pointwise);
            assert!(max_abs(&(&m - &m_ref)) < 1e-12 * max_abs(&m_ref));
            assert!(max_abs(&(&k - &k_ref)) < 1e-12 * max_abs(&k_ref));
        }
    }

    #[test]
    fn lumped_examples() {
        let em = element_matrices_cornercut(1, 1, 1.0, 1e-4).unwrap();
        let l = lumped_mass(&em).unwrap();
        assert_relative_eq!(l[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(l[1], 0.5, max_relative = 1e-15);

        let em = element_matrices_cornercut(2, 1, 1.0, 1e-4).unwrap();
        let l = lumped_mass(&em).unwrap();
        for (got, want) in l.iter().zip([1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-14);
        }

        let empty = element_matrices_cornercut(3, 2, 0.0, 1e-4).unwrap();
        let l = lumped_mass(&empty).unwrap();
        assert_relative_eq!(l.sum(), 1e-4, max_relative = 1e-13);

        let cut = element_matrices_cornercut(1, 1, 0.5, 1e-4).unwrap();
        assert!(lumped_mass(&cut).is_err());
    }

    #[test]
    fn dirichlet_examples() {
        let (chi, alpha) = (0.4, 1e-3);
        let em = element_matrices_cornercut(1, 1, chi, alpha).unwrap();
        let (m, k) = apply_dirichlet(&em.mass, &em.stiffness, &[0]).unwrap();
        assert_eq!(m.nrows(), 1);
        assert_relative_eq!(
            m[(0, 0)],
            ((1.0 - alpha) * chi.powi(3) + alpha) / 3.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(k[(0, 0)], (1.0 - alpha) * chi + alpha, max_relative = 1e-13);

        let em = element_matrices_cornercut(1, 2, chi, alpha).unwrap();
        let (m, _) = apply_dirichlet(&em.mass, &em.stiffness, &[0, 1, 2]).unwrap();
        assert_relative_eq!(
            m[(0, 0)],
            ((1.0 - alpha) * chi.powi(6) + alpha) / 9.0,
            max_relative = 1e-13
        );

        let (m, k) = apply_dirichlet(&em.mass, &em.stiffness, &[]).unwrap();
        assert_eq!(m, em.mass);
        assert_eq!(k, em.stiffness);

        assert!(apply_dirichlet(&em.mass, &em.stiffness, &[0, 1, 2, 3]).is_err());
        assert!(apply_dirichlet(&em.mass, &em.stiffness, &[9]).is_err());
    }

    #[test]
    fn global_small_grids() {
        let inside = CornerCutDomain::new(1.0, 2).unwrap();
        let grid = GridSpec::new(1, 1, 1.0).unwrap();
        let sys = assemble_global(&grid, 2, &inside, 1e-4, 3).unwrap();
        let single = element_matrices_uniform(2, &Aabb::unit(2).unwrap(), 1.0, true).unwrap();
        assert!(max_abs(&(to_dense(&sys.mass) - &single.mass)) < 1e-15);

        // 1D-like check along x: two p=1 elements share the middle node column
        let everything = Ball::new(&[0.0, 0.0], 100.0).unwrap();
        let grid = GridSpec::new(2, 1, 1.0).unwrap();
        let sys = assemble_global(&grid, 1, &everything, 1e-4, 2).unwrap();
        assert_eq!(sys.num_dofs(), 6);
        let m = to_dense(&sys.mass);
        // middle bottom node: two quarter contributions of the bilinear lumped mass
        assert_relative_eq!(m[(1, 1)], 0.5, max_relative = 1e-14);
        assert_relative_eq!(m[(0, 0)], 0.25, max_relative = 1e-14);

        assert_eq!(GridSpec::new(45, 15, 0.2).unwrap().num_dofs(5), 17176);
        assert!(assemble_global(&grid, 1, &everything, 0.0, 2).is_err());
    }

    #[test]
    fn global_equals_dense_element_sum() {
        let disk = Ball::new(&[0.9, 0.8], 0.6).unwrap();
        let grid = GridSpec::new(2, 2, 0.5).unwrap();
        let p = 2;
        let elements = assemble_elements(&grid, p, &disk, 1e-3, 3).unwrap();
        let sys = GlobalSystem::from_elements(&grid, p, &elements).unwrap();
        let n = grid.num_dofs(p);
        let mut m = DMatrix::zeros(n, n);
        let mut k = DMatrix::zeros(n, n);
        for (e, em) in elements.iter().enumerate() {
            let dofs = grid.element_dofs(e, p);
            for (i, &gi) in dofs.iter().enumerate() {
                for (j, &gj) in dofs.iter().enumerate() {
                    m[(gi, gj)] += em.mass[(i, j)];
                    k[(gi, gj)] += em.stiffness[(i, j)];
                }
            }
        }
        assert!(max_abs(&(to_dense(&sys.mass) - &m)) < 1e-12 * max_abs(&m));
        assert!(max_abs(&(to_dense(&sys.stiffness) - &k)) < 1e-12 * max_abs(&k));
        assert!(sys.classes.contains(&CutClass::Cut));

        let (mr, _) = sys.apply_dirichlet(&[0, 1]).unwrap();
        assert_eq!(mr.nrows(), n - 2);
    }
}
