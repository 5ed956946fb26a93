//! Largest eigenvalue of the pencil `K v = lambda M v` and the central
//! difference stability limit `2 / sqrt(lambda_max)`.

use nalgebra::{Cholesky, DMatrix, DMatrixViewMut, DVector, Dyn};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CscMatrix, CsrMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectrumResult {
    pub lambda_max: f64,
    /// `|K v - lambda M v| / (lambda |M v|)` for the returned eigenvector.
    pub residual: f64,
    pub iterations: usize,
}

impl SpectrumResult {
    pub fn critical_dt(&self) -> Result<f64> {
        critical_dt(self.lambda_max)
    }
}

/// Central difference stability limit.
pub fn critical_dt(lambda_max: f64) -> Result<f64> {
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return Err(Error::invalid(format!(
            "critical time step needs a positive finite eigenvalue, got {lambda_max}"
        )));
    }
    Ok(2.0 / lambda_max.sqrt())
}

fn relative_residual(mass: &impl SymOperator, stiffness: &impl SymOperator, v: &[f64], lambda: f64) -> f64 {
    let n = v.len();
    let mut kv = vec![0.0; n];
    let mut mv = vec![0.0; n];
    stiffness.apply(v, &mut kv);
    mass.apply(v, &mut mv);
    let num: f64 = kv
        .iter()
        .zip(&mv)
        .map(|(k, m)| (k - lambda * m).powi(2))
        .sum::<f64>()
        .sqrt();
    let den = norm(&mv) * lambda.abs();
    if den > 0.0 {
        num / den
    } else {
        num / norm(&mv).max(f64::MIN_POSITIVE)
    }
}

/// Dense solve: symmetric Jacobi scaling, Cholesky of `M`, and the full
/// spectrum of the reduced symmetric operator.
///
/// The eigenvector for the residual is recovered by shifted inverse iteration.
pub fn max_eig_dense(mass: &DMatrix<f64>, stiffness: &DMatrix<f64>) -> Result<SpectrumResult> {
    let n = mass.nrows();
    if n == 0 || mass.ncols() != n || stiffness.shape() != (n, n) {
        return Err(Error::invalid("mass and stiffness must be square of equal size"));
    }
    let mut scale = DVector::zeros(n);
    for i in 0..n {
        let m = mass[(i, i)];
        if !(m > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("diagonal entry {i} is {m}")));
        }
        scale[i] = 1.0 / m.sqrt();
    }
    let ms = DMatrix::from_fn(n, n, |i, j| {
        0.5 * (mass[(i, j)] + mass[(j, i)]) * scale[i] * scale[j]
    });
    let ks = DMatrix::from_fn(n, n, |i, j| {
        0.5 * (stiffness[(i, j)] + stiffness[(j, i)]) * scale[i] * scale[j]
    });
    let chol = ms
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    let l = chol.l();
    let half = l
        .solve_lower_triangular(&ks)
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let reduced = l
        .solve_lower_triangular(&half.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let lambda = reduced
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);

    // Inverse iteration on (sigma I - C), positive definite for sigma > lambda.
    let spread = reduced
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let sigma = lambda + 1e-10 * spread.max(lambda.abs());
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            sigma - reduced[(i, j)]
        } else {
            -reduced[(i, j)]
        }
    });
    let mut y = DVector::from_element(n, 1.0);
    if let Some(fact) = shifted.cholesky() {
        for _ in 0..3 {
            y = fact.solve(&y);
            let nrm = y.norm();
            if nrm > 0.0 && nrm.is_finite() {
                y /= nrm;
            }
        }
    }
    // v = D L^{-T} y
    let v = l
        .transpose()
        .solve_upper_triangular(&y)
        .map(|z| z.component_mul(&scale))
        .unwrap_or_else(|| DVector::from_element(n, 1.0));
    let residual = relative_residual(mass, stiffness, v.as_slice(), lambda);
    Ok(SpectrumResult {
        lambda_max: lambda,
        residual,
        iterations: 1,
    })
}

/// Symmetric operator with a matrix-vector product and a diagonal.
pub trait SymOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;

    /// Cholesky factor for direct solves, if the storage supports one.
    /// `Ok(None)` selects preconditioned conjugate gradients instead.
    fn factor(&self) -> Result<Option<MassFactor>> {
        Ok(None)
    }
}

/// Cholesky factor of a symmetric positive definite operator.
pub enum MassFactor {
    Sparse(CscCholesky<f64>),
    Dense(Cholesky<f64, Dyn>),
}

impl MassFactor {
    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        x.copy_from_slice(b);
        let n = x.len();
        let mut view = DMatrixViewMut::from_slice(x, n, 1);
        match self {
            MassFactor::Sparse(c) => c.solve_mut(view),
            MassFactor::Dense(c) => c.solve_mut(&mut view),
        }
    }
}

impl SymOperator for CsrMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, row) in self.row_iter().enumerate() {
            let mut acc = 0.0;
            for (&c, &v) in row.col_indices().iter().zip(row.values()) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows()];
        for (r, c, &v) in self.triplet_iter() {
            if r == c {
                d[r] += v;
            }
        }
        d
    }

    fn factor(&self) -> Result<Option<MassFactor>> {
        CscCholesky::factor(&CscMatrix::from(self))
            .map(|c| Some(MassFactor::Sparse(c)))
            .map_err(|e| Error::NotPositiveDefinite(format!("sparse Cholesky failed: {e:?}")))
    }
}

impl SymOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let out = self * DVector::from_column_slice(x);
        y.copy_from_slice(out.as_slice());
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows()).map(|i| self[(i, i)]).collect()
    }

    fn factor(&self) -> Result<Option<MassFactor>> {
        Cholesky::new(self.clone())
            .map(|c| Some(MassFactor::Dense(c)))
            .ok_or_else(|| Error::NotPositiveDefinite("dense Cholesky failed".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LanczosOptions {
    /// Relative change of successive estimates that counts as converged.
    pub tol: f64,
    /// Required relative eigenpair residual on convergence.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Relative tolerance of the conjugate gradient solves with `M`.
    pub inner_tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            residual_tol: 1e-5,
            max_iter: 5000,
            inner_tol: 1e-12,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Jacobi-preconditioned conjugate gradients for `M x = b`.
pub fn solve_pcg(
    mass: &impl SymOperator,
    inv_diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = b.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(0);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        mass.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "conjugate gradients met p^T M p = {pap}"
            )));
        }
        let step = rz / pap;
        axpy(step, &p, x);
        axpy(-step, &ap, &mut r);
        if norm(&r) <= tol * bnorm {
            return Ok(it + 1);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        estimate: f64::NAN,
        residual: norm(&r) / bnorm,
        iterations: max_iter,
    })
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of a symmetric tridiagonal matrix by bisection.
fn tridiagonal_max_eig(diag: &[f64], off: &[f64]) -> f64 {
    let m = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < m { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) == m {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Eigenvector of the tridiagonal matrix for the eigenvalue `theta`, by
/// inverse iteration with the slightly larger shift.
fn tridiagonal_eigvec(diag: &[f64], off: &[f64], theta: f64) -> Vec<f64> {
    let m = diag.len();
    let scale = diag
        .iter()
        .chain(off)
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let sigma = theta + 1e-12 * scale;
    let mut y = vec![1.0; m];
    let mut c = vec![0.0; m];
    let mut dprime = vec![0.0; m];
    for _ in 0..3 {
        // Thomas algorithm on (sigma I - T), which is positive definite.
        for i in 0..m {
            let a = sigma - diag[i];
            let sub = if i > 0 { -off[i - 1] } else { 0.0 };
            let denom = a - if i > 0 { sub * c[i - 1] } else { 0.0 };
            let denom = if denom.abs() < f64::MIN_POSITIVE {
                f64::MIN_POSITIVE
            } else {
                denom
            };
            c[i] = if i + 1 < m { -off[i] / denom } else { 0.0 };
            dprime[i] = (y[i] - if i > 0 { sub * dprime[i - 1] } else { 0.0 }) / denom;
        }
        for i in (0..m).rev() {
            y[i] = dprime[i] - if i + 1 < m { c[i] * y[i + 1] } else { 0.0 };
        }
        let nrm = norm(&y);
        if nrm > 0.0 && nrm.is_finite() {
            y.iter_mut().for_each(|v| *v /= nrm);
        }
    }
    y
}

/// Lanczos iteration for the `M`-self-adjoint operator `M^{-1} K` with full
/// reorthogonalization.
///
/// Starts from the `M`-normalized all-ones vector. If the Krylov space
/// becomes invariant before the residual test passes, the iteration restarts
/// with a seeded random vector orthogonal to everything seen so far.
pub fn max_eig_iterative(
    mass: &impl SymOperator,
    stiffness: &impl SymOperator,
    opts: &LanczosOptions,
) -> Result<SpectrumResult> {
    let n = mass.dim();
    if n == 0 || stiffness.dim() != n {
        return Err(Error::invalid("mass and stiffness must be square of equal size"));
    }
    let diag = mass.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!(
            "diagonal entry {i} is {}",
            diag[i]
        )));
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let cg_max = 10 * n + 100;
    let factor = mass.factor()?;
    let solve = |b: &[f64], x: &mut [f64]| -> Result<()> {
        match &factor {
            Some(f) => f.solve(b, x),
            None => {
                solve_pcg(mass, &inv_diag, b, x, opts.inner_tol, cg_max)?;
            }
        }
        Ok(())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut mbasis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut q = vec![1.0; n];
    let mut mq = vec![0.0; n];
    mass.apply(&q, &mut mq);
    let qn = dot(&q, &mq).sqrt();
    q.iter_mut().for_each(|v| *v /= qn);
    mq.iter_mut().for_each(|v| *v /= qn);

    let mut kq = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut mw = vec![0.0; n];
    let mut theta_prev = f64::NAN;
    let mut best = (f64::NAN, f64::INFINITY);
    let limit = opts.max_iter.min(n);

    for j in 0..limit {
        stiffness.apply(&q, &mut kq);
        solve(&kq, &mut w)?;
        let a = dot(&q, &kq);
        axpy(-a, &q, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), betas.last()) {
            axpy(-b, prev, &mut w);
        }
        basis.push(q.clone());
        mbasis.push(mq.clone());
        alphas.push(a);
        for _ in 0..2 {
            for (qi, mqi) in basis.iter().zip(&mbasis) {
                let c = dot(mqi, &w);
                axpy(-c, qi, &mut w);
            }
        }
        mass.apply(&w, &mut mw);
        let beta = dot(&w, &mw).max(0.0).sqrt();

        let theta = tridiagonal_max_eig(&alphas, &betas);
        let exhausted = j + 1 == limit;
        let stalled = beta <= 1e-12 * theta.abs().max(a.abs()).max(f64::MIN_POSITIVE);
        let settled = (theta - theta_prev).abs() <= opts.tol * theta.abs();
        if settled || stalled || exhausted {
            let s = tridiagonal_eigvec(&alphas, &betas, theta);
            let mut v = vec![0.0; n];
            for (si, qi) in s.iter().zip(&basis) {
                axpy(*si, qi, &mut v);
            }
            let residual = relative_residual(mass, stiffness, &v, theta);
            if residual < best.1 {
                best = (theta, residual);
            }
            if (settled || basis.len() == n) && residual <= opts.residual_tol {
                return Ok(SpectrumResult {
                    lambda_max: theta,
                    residual,
                    iterations: j + 1,
                });
            }
            if exhausted {
                break;
            }
        }
        theta_prev = theta;

        if stalled {
            theta_prev = f64::NAN;
            // invariant subspace: continue from a fresh direction
            for v in w.iter_mut() {
                *v = rng.gen::<f64>() - 0.5;
            }
            for _ in 0..2 {
                for (qi, mqi) in basis.iter().zip(&mbasis) {
                    let c = dot(mqi, &w);
                    axpy(-c, qi, &mut w);
                }
            }
            mass.apply(&w, &mut mw);
            let nrm = dot(&w, &mw).max(0.0).sqrt();
            if nrm == 0.0 {
                break;
            }
            q.iter_mut().zip(&w).for_each(|(qi, wi)| *qi = wi / nrm);
            mq.iter_mut().zip(&mw).for_each(|(qi, wi)| *qi = wi / nrm);
            betas.push(0.0);
        } else {
            q.iter_mut().zip(&w).for_each(|(qi, wi)| *qi = wi / beta);
            mq.iter_mut().zip(&mw).for_each(|(qi, wi)| *qi = wi / beta);
            betas.push(beta);
        }
    }
    Err(Error::NotConverged {
        estimate: best.0,
        residual: best.1,
        iterations: basis.len(),
    })
}
