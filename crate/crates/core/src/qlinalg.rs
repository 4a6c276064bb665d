//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Eigendecomposition and SVD are delegated to `nalgebra`; this module fixes the
//! conventions on top (descending order, deterministic tie-break, support cut).

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub const TOL_HERM: f64 = 1e-10;
pub const TOL_TR: f64 = 1e-10;
pub const TOL_PSD: f64 = 1e-10;
pub const TOL_EIG: f64 = 1e-10;
pub const TOL_PROJ: f64 = 1e-9;
/// Eigenvalues with magnitude at most this fraction of the largest magnitude are
/// treated as zero by support-restricted functions.
pub const SUPPORT_CUT_REL: f64 = 1e-12;
/// Largest principal-angle sine still read as a shared direction.
const INTERSECT_SIN: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Builds a matrix from row-major entries.
pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<CMatrix> {
    if rows * cols != entries.len() {
        return Err(Error::DimensionMismatch(format!(
            "{rows}x{cols} matrix needs {} entries, got {}",
            rows * cols,
            entries.len()
        )));
    }
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(CMatrix::from_row_slice(rows, cols, entries))
}

pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<CMatrix> {
    let v: Vec<C64> = entries.iter().map(|&x| r(x)).collect();
    from_rows(rows, cols, &v)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn real_diag(d: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&x| r(x))))
}

/// `|v><v|` for a (not necessarily normalised) vector.
pub fn outer(v: &[C64]) -> CMatrix {
    let col = DVector::from_column_slice(v);
    &col * col.adjoint()
}

/// Kronecker product; entry `(i_a*rows_b + i_b, j_a*cols_b + j_b)` is `a[i_a,j_a]*b[i_b,j_b]`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor_all<'a, I>(factors: I) -> CMatrix
where
    I: IntoIterator<Item = &'a CMatrix>,
{
    let mut acc = CMatrix::from_element(1, 1, r(1.0));
    for f in factors {
        acc = acc.kronecker(f);
    }
    acc
}

pub fn tensor_power(a: &CMatrix, n: usize) -> CMatrix {
    let mut acc = CMatrix::from_element(1, 1, r(1.0));
    for _ in 0..n {
        acc = acc.kronecker(a);
    }
    acc
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn ensure_square(m: &CMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() })
    }
}

fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn ensure_hermitian(m: &CMatrix, tol: f64) -> Result<()> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let scale = max_abs_entry(m).max(1.0);
    let err = hermiticity_error(m);
    if err > tol * scale {
        return Err(Error::NotHermitian(err));
    }
    Ok(())
}

/// Partial trace keeping the (0-based) factors listed in `keep`, in their original order.
pub fn partial_trace(m: &CMatrix, factor_dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    ensure_square(m)?;
    let total: usize = factor_dims.iter().product();
    if total != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "factor dims {factor_dims:?} multiply to {total}, matrix is {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if let Some(&k) = keep.iter().find(|&&k| k >= factor_dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "keep index {k} out of range for {} factors",
            factor_dims.len()
        )));
    }
    let nf = factor_dims.len();
    let kept: Vec<bool> = (0..nf).map(|f| keep.contains(&f)).collect();
    let dk: usize = (0..nf).filter(|&f| kept[f]).map(|f| factor_dims[f]).product();
    let dt = total / dk;

    // For each full index: (kept index, traced index).
    let mut split = vec![(0usize, 0usize); total];
    let mut digits = vec![0usize; nf];
    for (idx, slot) in split.iter_mut().enumerate() {
        let mut rem = idx;
        for f in (0..nf).rev() {
            digits[f] = rem % factor_dims[f];
            rem /= factor_dims[f];
        }
        let (mut ki, mut ti) = (0usize, 0usize);
        for f in 0..nf {
            if kept[f] {
                ki = ki * factor_dims[f] + digits[f];
            } else {
                ti = ti * factor_dims[f] + digits[f];
            }
        }
        *slot = (ki, ti);
    }
    let mut by_traced: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(dk); dt];
    for (idx, &(ki, ti)) in split.iter().enumerate() {
        by_traced[ti].push((idx, ki));
    }
    let mut out = CMatrix::zeros(dk, dk);
    for group in &by_traced {
        for &(i, ki) in group {
            for &(j, kj) in group {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|x| x)
    }

    /// `V f(Λ) V†` over all eigenvalues.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let vals: Vec<f64> = self.eigenvalues.iter().map(|&x| f(x)).collect();
        self.with_values(&vals)
    }

    /// `V diag(vals) V†`.
    pub fn with_values(&self, vals: &[f64]) -> CMatrix {
        let d = self.dim();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &fj) in vals.iter().enumerate().take(d) {
            for i in 0..d {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * v.adjoint()
    }

    /// Threshold below which an eigenvalue counts as zero.
    pub fn support_cut(&self) -> f64 {
        let m = self.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        SUPPORT_CUT_REL * m
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.eigenvectors.column(j).iter().copied().collect()
    }
}

fn normalize_phase(v: &mut [C64]) {
    let max = v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap_or(0);
    let phase = v[pivot] / v[pivot].norm();
    let inv = phase.conj();
    for z in v.iter_mut() {
        *z *= inv;
    }
}

fn lex_cmp(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

pub fn hermitian_eig(h: &CMatrix) -> Result<SpectralDecomposition> {
    hermitian_eig_tol(h, TOL_HERM)
}

/// Hermitian eigendecomposition, descending. Eigenvalues equal within `TOL_EIG`
/// (relative to the spectral radius) are ordered by their eigenvectors,
/// compared lexicographically after fixing each vector's phase.
pub fn hermitian_eig_tol(h: &CMatrix, tol_herm: f64) -> Result<SpectralDecomposition> {
    ensure_hermitian(h, tol_herm)?;
    let d = h.nrows();
    if d == 0 {
        return Ok(SpectralDecomposition { eigenvalues: vec![], eigenvectors: CMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::new(hermitian_part(h));
    let mut pairs: Vec<(f64, Vec<C64>)> = (0..d)
        .map(|j| {
            let mut v: Vec<C64> = eig.eigenvectors.column(j).iter().copied().collect();
            normalize_phase(&mut v);
            (eig.eigenvalues[j], v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let scale = pairs.iter().fold(0.0f64, |a, p| a.max(p.0.abs())).max(1.0);
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && (pairs[end - 1].0 - pairs[end].0).abs() <= TOL_EIG * scale {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|a, b| lex_cmp(&b.1, &a.1));
        }
        start = end;
    }
    let mut vecs = CMatrix::zeros(d, d);
    let mut vals = Vec::with_capacity(d);
    for (j, (val, v)) in pairs.into_iter().enumerate() {
        vals.push(val);
        for i in 0..d {
            vecs[(i, j)] = v[i];
        }
    }
    Ok(SpectralDecomposition { eigenvalues: vals, eigenvectors: vecs })
}

pub fn eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eig(h)?.eigenvalues)
}

pub fn min_eigenvalue(h: &CMatrix) -> Result<f64> {
    let vals = eigenvalues(h)?;
    Ok(vals.last().copied().unwrap_or(0.0))
}

/// Applies `f` spectrally. With `support_only`, eigenvalues of magnitude at most the
/// support cut are dropped (mapped to zero) instead of passed to `f`.
pub fn matrix_function<F: Fn(f64) -> f64>(h: &CMatrix, f: F, support_only: bool) -> Result<CMatrix> {
    let sd = hermitian_eig(h)?;
    matrix_function_sd(&sd, f, support_only)
}

pub fn matrix_function_sd<F: Fn(f64) -> f64>(
    sd: &SpectralDecomposition,
    f: F,
    support_only: bool,
) -> Result<CMatrix> {
    let cut = sd.support_cut();
    let mut vals = Vec::with_capacity(sd.dim());
    for &lam in &sd.eigenvalues {
        if support_only && lam.abs() <= cut {
            vals.push(0.0);
            continue;
        }
        let y = f(lam);
        if !y.is_finite() {
            return Err(Error::FunctionUndefined(lam));
        }
        vals.push(y);
    }
    Ok(sd.with_values(&vals))
}

/// Projector onto the eigenvectors with eigenvalue magnitude above the support cut.
pub fn support_projector(h: &CMatrix) -> Result<CMatrix> {
    matrix_function(h, |_| 1.0, true)
}

/// `h^{-1/2}` on the support of a PSD matrix.
pub fn inverse_sqrt_on_support(h: &CMatrix) -> Result<CMatrix> {
    let sd = hermitian_eig(h)?;
    let cut = sd.support_cut();
    matrix_function_sd(&sd, |x| if x > cut { x.powf(-0.5) } else { 0.0 }, true)
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.is_square() && hermiticity_error(m) <= 1e-13 * max_abs_entry(m).max(1.0) {
        if let Ok(vals) = eigenvalues(m) {
            return vals.iter().map(|x| x.abs()).sum();
        }
    }
    singular_values(m).iter().sum()
}

pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs_entry(&(a * b - b * a))
}

/// Validated density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

#[derive(Debug, Clone, Copy)]
pub struct StateTolerances {
    pub herm: f64,
    pub trace: f64,
    pub psd: f64,
}

impl Default for StateTolerances {
    fn default() -> Self {
        Self { herm: TOL_HERM, trace: TOL_TR, psd: TOL_PSD }
    }
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, StateTolerances::default())
    }

    pub fn with_tolerances(m: CMatrix, tol: StateTolerances) -> Result<Self> {
        ensure_square(&m)?;
        ensure_finite(&m)?;
        let herr = hermiticity_error(&m);
        if herr > tol.herm {
            return Err(Error::NotHermitian(herr));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::InvalidTrace(tr.re));
        }
        let m = hermitian_part(&m);
        let min = min_eigenvalue(&m)?;
        if min < -tol.psd {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { m })
    }

    /// Skips validation; for states produced by operations that preserve validity.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self { m: hermitian_part(&m) }
    }

    pub fn pure(v: &[C64]) -> Result<Self> {
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("zero or non-finite state vector".into()));
        }
        let w: Vec<C64> = v.iter().map(|z| z / norm).collect();
        Ok(Self::from_trusted(outer(&w)))
    }

    pub fn basis(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(Error::OutOfRange(format!("basis index {i} for dimension {d}")));
        }
        let mut v = vec![r(0.0); d];
        v[i] = r(1.0);
        Self::pure(&v)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::from_trusted(identity(d).scale(1.0 / d as f64))
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        Self::new(real_diag(p))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self::from_trusted(tensor(&self.m, &other.m))
    }

    pub fn tensor_power(&self, n: usize) -> DensityMatrix {
        Self::from_trusted(tensor_power(&self.m, n))
    }

    pub fn partial_trace(&self, factor_dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
        Ok(Self::from_trusted(partial_trace(&self.m, factor_dims, keep)?))
    }

    /// Convex combination; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let d = first.1.dim();
        let mut acc = CMatrix::zeros(d, d);
        let mut total = 0.0;
        for (w, s) in parts {
            if s.dim() != d {
                return Err(Error::DimensionMismatch(format!("mixture of dims {d} and {}", s.dim())));
            }
            if *w < 0.0 {
                return Err(Error::InvalidArgument(format!("negative mixture weight {w}")));
            }
            acc += s.matrix().scale(*w);
            total += w;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {total}")));
        }
        Ok(Self::from_trusted(acc))
    }
}

/// Clips eigenvalues at zero and renormalises. Fails if an eigenvalue is below `-tol`.
pub fn psd_project(m: &CMatrix, tol: f64) -> Result<DensityMatrix> {
    ensure_hermitian(m, TOL_HERM)?;
    let sd = hermitian_eig(m)?;
    if let Some(&min) = sd.eigenvalues.last() {
        if min < -tol {
            return Err(Error::NotPsd(min));
        }
    }
    let total: f64 = sd.eigenvalues.iter().map(|&x| x.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::InvalidTrace(total));
    }
    Ok(DensityMatrix::from_trusted(sd.apply(|x| x.max(0.0) / total)))
}

/// Uhlmann root fidelity `‖√ρ √σ‖₁`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    let sr = matrix_function(rho.matrix(), |x| x.max(0.0).sqrt(), false)?;
    let ss = matrix_function(sigma.matrix(), |x| x.max(0.0).sqrt(), false)?;
    Ok(singular_values(&(sr * ss)).iter().sum())
}

pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", a.dim(), b.dim())));
    }
    Ok(trace_norm(&(a.matrix() - b.matrix())))
}

/// Orthogonal projector.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    m: CMatrix,
}

impl Projector {
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure_square(&m)?;
        ensure_finite(&m)?;
        let herr = hermiticity_error(&m);
        if herr > TOL_HERM {
            return Err(Error::NotHermitian(herr));
        }
        let err = max_abs_diff(&(&m * &m), &m);
        if err > TOL_PROJ {
            return Err(Error::NotProjector(err));
        }
        Ok(Self { m: hermitian_part(&m) })
    }

    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self { m: hermitian_part(&m) }
    }

    /// Projector onto the span of the given orthonormal columns.
    pub fn from_orthonormal_columns(v: &CMatrix) -> Self {
        Self::from_trusted(v * v.adjoint())
    }

    pub fn identity(d: usize) -> Self {
        Self { m: identity(d) }
    }

    pub fn zero(d: usize) -> Self {
        Self { m: CMatrix::zeros(d, d) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn rank(&self) -> usize {
        self.m.trace().re.round().max(0.0) as usize
    }

    /// Orthonormal columns spanning the range.
    pub fn range_basis(&self) -> Result<CMatrix> {
        let sd = hermitian_eig(&self.m)?;
        let keep: Vec<usize> = (0..sd.eigenvalues.len()).filter(|&i| sd.eigenvalues[i] > 0.5).collect();
        Ok(sd.eigenvectors.select_columns(keep.iter()))
    }

    /// Projector onto the intersection of the two ranges.
    ///
    /// With `V` a basis of `range P`, the intersection is `V · null((I - Q) V)`. The singular
    /// values of `(I - Q) V` are the sines of the principal angles, so shared directions are
    /// separated from near misses by `θ` rather than the `θ²` seen in `P + Q`, and the result
    /// lies in `range P` by construction.
    pub fn intersect(&self, other: &Projector) -> Result<Projector> {
        let d = self.dim();
        if d != other.dim() {
            return Err(Error::DimensionMismatch(format!("{} vs {}", d, other.dim())));
        }
        let v = self.range_basis()?;
        if v.ncols() == 0 || other.rank() == 0 {
            return Ok(Projector::zero(d));
        }
        let resid = (identity(d) - &other.m) * &v;
        let svd = resid.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors were requested");
        let keep: Vec<usize> =
            (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] <= INTERSECT_SIN).collect();
        let w = v_t.select_rows(keep.iter()).adjoint();
        Ok(Projector::from_orthonormal_columns(&(&v * w)))
    }
}
