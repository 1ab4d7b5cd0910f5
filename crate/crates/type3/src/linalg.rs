//! Tolerance-controlled subspace algebra on small dense matrices.
//!
//! Everything here is built on one rank-revealing SVD routine so that rank
//! decisions are made in a single place. Subspaces are represented either
//! implicitly (as the column span of an arbitrary matrix) or explicitly as
//! an orthonormal [`Basis`]. Zero-column and rank-0 matrices are legal
//! everywhere; the projector of a rank-0 space is the zero matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense real matrix used throughout the crate.
pub type Mat = DMatrix<f64>;
/// Dense real column vector.
pub type Col = DVector<f64>;

/// Numerical tolerances controlling rank and subspace-equality decisions.
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    /// Relative singular-value cutoff: a singular value counts toward the
    /// rank when it exceeds `rank_rel * sigma_max * max(rows, cols)`.
    pub rank_rel: f64,
    /// Absolute Frobenius cutoff on projector differences when deciding
    /// whether two subspaces are equal. Projector entries are O(1), so an
    /// absolute threshold is scale-free.
    pub subspace_abs: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Tol {
            rank_rel: 1e-12,
            subspace_abs: 1e-8,
        }
    }
}

impl Tol {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rank_rel", self.rank_rel), ("subspace_abs", self.subspace_abs)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::input(format!(
                    "tolerance {name} must lie strictly between 0 and 1, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Orthonormal column basis of a subspace of R^m.
///
/// Invariant: `vectors' * vectors = I` to machine precision and
/// `rank <= ambient_dim`. A rank-0 basis has zero columns.
#[derive(Debug, Clone)]
pub struct Basis {
    vectors: Mat,
}

impl Basis {
    pub fn empty(ambient_dim: usize) -> Self {
        Basis {
            vectors: Mat::zeros(ambient_dim, 0),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn rank(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    pub fn vectors(&self) -> &Mat {
        &self.vectors
    }

    pub fn column(&self, i: usize) -> Col {
        self.vectors.column(i).into_owned()
    }

    /// Orthogonal projection matrix onto the spanned subspace.
    pub fn projector(&self) -> Mat {
        if self.is_empty() {
            return Mat::zeros(self.ambient_dim(), self.ambient_dim());
        }
        &self.vectors * self.vectors.transpose()
    }

    /// Residual of `m` after projecting onto this basis: `(I - VV')m`.
    pub fn residual(&self, m: &Mat) -> Mat {
        if self.is_empty() {
            return m.clone();
        }
        m - &self.vectors * (self.vectors.transpose() * m)
    }
}

/// Column-wise concatenation. Blocks with zero columns are allowed.
pub fn hcat(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    debug_assert!(blocks.iter().all(|b| b.nrows() == rows));
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Row-wise (vertical) concatenation.
pub fn vcat(blocks: &[&Mat]) -> Mat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    debug_assert!(blocks.iter().all(|b| b.ncols() == cols));
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

fn ensure_finite(a: &Mat) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::input("matrix contains non-finite entries"))
    }
}

fn ensure_same_rows(a: &Mat, b: &Mat) -> Result<()> {
    if a.nrows() == b.nrows() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "row counts differ: {} vs {}",
            a.nrows(),
            b.nrows()
        )))
    }
}

/// Maximum one-sided Jacobi sweeps; small dense matrices converge in well
/// under ten.
const SVD_MAX_SWEEPS: usize = 64;
/// Relative off-diagonal threshold below which a column pair counts as
/// orthogonal.
const SVD_CONV: f64 = 1e-14;

fn column_moments(w: &Mat, p: usize, q: usize) -> (f64, f64, f64) {
    let m = w.nrows();
    let data = w.as_slice();
    let (cp, cq) = (&data[p * m..(p + 1) * m], &data[q * m..(q + 1) * m]);
    let mut app = 0.0;
    let mut aqq = 0.0;
    let mut apq = 0.0;
    for i in 0..m {
        app += cp[i] * cp[i];
        aqq += cq[i] * cq[i];
        apq += cp[i] * cq[i];
    }
    (app, aqq, apq)
}

fn rotate_columns(w: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    let m = w.nrows();
    let data = w.as_mut_slice();
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let (head, tail) = data.split_at_mut(hi * m);
    let cl = &mut head[lo * m..(lo + 1) * m];
    let ch = &mut tail[..m];
    let (cp, cq) = if p < q { (cl, ch) } else { (ch, cl) };
    for i in 0..m {
        let wp = cp[i];
        let wq = cq[i];
        cp[i] = c * wp - s * wq;
        cq[i] = s * wp + c * wq;
    }
}

/// One-sided Jacobi SVD: returns `(u, sigma, v)` with `a = u Σ v'`,
/// `u` of size m×p and `v` of size k×p for p = min(m, k), singular values
/// sorted descending. Jacobi rotations orthogonalize the columns of a
/// working copy; the method is slower than bidiagonalization but accurate
/// and free of convergence cliffs on (near-)rank-deficient input, which is
/// what the rank decisions here live on.
pub(crate) fn jacobi_svd(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (m, k) = a.shape();
    if m < k {
        let (u, s, v) = jacobi_svd(&a.transpose());
        return (v, s, u);
    }
    let mut w = a.clone();
    let mut v = Mat::identity(k, k);
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k.saturating_sub(1) {
            for q in p + 1..k {
                let (app, aqq, apq) = column_moments(&w, p, q);
                if apq * apq <= SVD_CONV * SVD_CONV * app * aqq {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    let norms: Vec<f64> = (0..k).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));
    let mut u = Mat::zeros(m, k);
    let mut v_sorted = Mat::zeros(k, k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        if s > 0.0 {
            u.column_mut(dst).copy_from(&(w.column(src) / s));
        }
        v_sorted.column_mut(dst).copy_from(&v.column(src));
    }
    (u, sigma, v_sorted)
}

/// Rank-revealing orthonormal basis with an explicit scale anchor.
///
/// The cutoff is `rank_rel * max(sigma_max, anchor) * max(rows, cols)`.
/// The anchor matters for matrices that are "zero up to rounding" — e.g.
/// the residual `(I - P)S` when `sp(S)` is contained in the projected
/// space. Without it, a relative cutoff applied to pure rounding noise
/// would report spurious rank. Internal pipelines anchor such products at
/// the scale of the matrices they came from; pass `0.0` for the plain
/// relative rule.
pub(crate) fn basis_anchored(a: &Mat, tol: &Tol, anchor: f64) -> Basis {
    let (m, k) = a.shape();
    if m == 0 || k == 0 {
        return Basis::empty(m);
    }
    let (u, sigma, _) = jacobi_svd(a);
    let smax = sigma.first().copied().unwrap_or(0.0);
    let thr = tol.rank_rel * smax.max(anchor) * m.max(k) as f64;
    let rank = sigma.iter().take_while(|&&s| s > thr).count();
    Basis {
        vectors: u.columns(0, rank).into_owned(),
    }
}

/// Orthonormal basis of the column span of `a`.
///
/// The rank is the number of singular values above
/// `rank_rel * sigma_max * max(rows, cols)`.
pub fn orthonormal_basis(a: &Mat, tol: &Tol) -> Result<Basis> {
    ensure_finite(a)?;
    Ok(basis_anchored(a, tol, 0.0))
}

/// Numerical rank of `a` under the same cutoff as [`orthonormal_basis`].
pub fn rank(a: &Mat, tol: &Tol) -> Result<usize> {
    Ok(orthonormal_basis(a, tol)?.rank())
}

/// Orthogonal projection matrix onto the column span of `a`.
pub fn projector(a: &Mat, tol: &Tol) -> Result<Mat> {
    Ok(orthonormal_basis(a, tol)?.projector())
}

/// True iff `sp(A) = sp(B)`, decided by the Frobenius distance between the
/// two orthogonal projectors.
pub fn subspace_equal(a: &Mat, b: &Mat, tol: &Tol) -> Result<bool> {
    ensure_same_rows(a, b)?;
    let pa = projector(a, tol)?;
    let pb = projector(b, tol)?;
    Ok((pa - pb).norm() < tol.subspace_abs)
}

/// True iff `sp(inner)` is contained in `sp(outer)`, decided by the
/// relative residual of `inner` after projection onto `sp(outer)`.
pub fn contains_span(outer: &Mat, inner: &Mat, tol: &Tol) -> Result<bool> {
    ensure_same_rows(outer, inner)?;
    if inner.ncols() == 0 {
        return Ok(true);
    }
    let u = orthonormal_basis(outer, tol)?;
    let resid = u.residual(inner);
    Ok(resid.norm() < tol.subspace_abs * inner.norm().max(1.0))
}

/// Basis of `sp(outer) ∩ sp(inner)⊥`, requiring `sp(inner) ⊆ sp(outer)`.
///
/// Computed as the span of `(I - P_inner) * outer`; the returned rank is
/// checked against `rank(outer) - rank(inner)`.
pub fn relative_complement(inner: &Mat, outer: &Mat, tol: &Tol) -> Result<Basis> {
    ensure_same_rows(inner, outer)?;
    if !contains_span(outer, inner, tol)? {
        return Err(Error::Precondition(
            "relative_complement requires sp(inner) ⊆ sp(outer)".into(),
        ));
    }
    let u_inner = orthonormal_basis(inner, tol)?;
    let u_outer = orthonormal_basis(outer, tol)?;
    let scale = outer.norm();
    let comp = basis_anchored(&u_inner.residual(outer), tol, scale);
    if comp.rank() + u_inner.rank() != u_outer.rank() {
        return Err(Error::Degeneracy(format!(
            "relative complement rank {} inconsistent with {} - {}",
            comp.rank(),
            u_outer.rank(),
            u_inner.rank()
        )));
    }
    Ok(comp)
}

/// Basis of the null space of `c` in R^k (k = columns of `c`), obtained as
/// the orthogonal complement of the row space.
pub(crate) fn null_space(c: &Mat, tol: &Tol) -> Basis {
    let k = c.ncols();
    if k == 0 {
        return Basis::empty(0);
    }
    if c.nrows() == 0 {
        return Basis {
            vectors: Mat::identity(k, k),
        };
    }
    let rowspace = basis_anchored(&c.transpose(), tol, 0.0);
    // I - P has unit singular values on the complement; anchor at 1.
    basis_anchored(&rowspace.residual(&Mat::identity(k, k)), tol, 1.0)
}

/// Basis of `sp(A) ∩ sp(B)`.
///
/// Implemented via the null space of the concatenated orthonormal bases
/// `[U_A, -U_B]`: any null vector `(x; y)` satisfies `U_A x = U_B y`, which
/// is exactly a vector in the intersection.
pub fn subspace_intersect(a: &Mat, b: &Mat, tol: &Tol) -> Result<Basis> {
    ensure_same_rows(a, b)?;
    let ua = orthonormal_basis(a, tol)?;
    let ub = orthonormal_basis(b, tol)?;
    Ok(intersect_bases(&ua, &ub, tol))
}

pub(crate) fn intersect_bases(ua: &Basis, ub: &Basis, tol: &Tol) -> Basis {
    let m = ua.ambient_dim();
    if ua.is_empty() || ub.is_empty() {
        return Basis::empty(m);
    }
    let c = hcat(&[ua.vectors(), &(-ub.vectors())]);
    let null = null_space(&c, tol);
    if null.is_empty() {
        return Basis::empty(m);
    }
    let x_part = null.vectors().rows(0, ua.rank()).into_owned();
    basis_anchored(&(ua.vectors() * x_part), tol, 1.0)
}

/// Moore–Penrose pseudoinverse via SVD, with the shared rank cutoff.
pub fn generalized_inverse(a: &Mat, tol: &Tol) -> Result<Mat> {
    ensure_finite(a)?;
    let (m, k) = a.shape();
    if m == 0 || k == 0 {
        return Ok(Mat::zeros(k, m));
    }
    let (u, sigma, v) = jacobi_svd(a);
    let smax = sigma.first().copied().unwrap_or(0.0);
    let thr = tol.rank_rel * smax * m.max(k) as f64;
    let mut out = Mat::zeros(k, m);
    for (i, &s) in sigma.iter().enumerate() {
        if s > thr {
            out += v.column(i) * u.column(i).transpose() / s;
        }
    }
    Ok(out)
}

/// Quadratic form `y' P y`.
pub fn quadratic_form(y: &Col, p: &Mat) -> Result<f64> {
    if p.nrows() != p.ncols() {
        return Err(Error::Dimension(format!(
            "quadratic form needs a square matrix, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    if y.len() != p.nrows() {
        return Err(Error::Dimension(format!(
            "vector length {} does not match matrix size {}",
            y.len(),
            p.nrows()
        )));
    }
    Ok((p * y).dot(y))
}
