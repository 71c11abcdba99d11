//! One-sided Jacobi SVD and the rank-truncated pseudo-inverse built on it.
//!
//! The decomposition orthogonalises the columns of a working copy of `A`
//! with plane rotations (Hestenes / Demmel–Veselić), accumulating the same
//! rotations into `V`. Column pairs `(i, j)`, `i < j`, are visited in cyclic
//! row order; before row `i` starts, the remaining column of largest norm is
//! swapped into position `i` (de Rijk pivoting), which cuts the sweep count
//! on ill-conditioned inputs roughly in half. After the last sweep the column
//! norms are the singular values and the normalised columns are the left
//! singular vectors.

use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, Matrix};

/// Stopping and truncation policy shared by [`jacobi_svd`] and [`pinv`].
///
/// The rank tolerance is not configurable: it is always
/// `max(rows, cols) * ulp(σ_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinvConfig {
    pub max_sweeps: usize,
    /// A column pair counts as orthogonal once
    /// `|⟨a_i, a_j⟩| <= off_diag_tol * ‖a_i‖ ‖a_j‖`.
    pub off_diag_tol: f64,
}

impl Default for PinvConfig {
    fn default() -> Self {
        PinvConfig {
            max_sweeps: 15,
            off_diag_tol: 1e-12,
        }
    }
}

impl PinvConfig {
    pub fn with_max_sweeps(max_sweeps: usize) -> Self {
        PinvConfig {
            max_sweeps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidSpec("max_sweeps must be >= 1".into()));
        }
        if !(self.off_diag_tol >= 0.0) {
            return Err(Error::InvalidSpec("off_diag_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Thin SVD `A = U diag(s) Vᵀ` with `r = min(rows, cols)` triplets.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows × r`, orthonormal columns.
    pub u: Matrix,
    /// Non-increasing, non-negative.
    pub s: Vec<f64>,
    /// `cols × r`, orthonormal columns.
    pub v: Matrix,
    pub sweeps_used: usize,
    /// True when the sweep loop stopped on the off-diagonal tolerance
    /// rather than on the sweep cap.
    pub converged: bool,
}

impl SvdResult {
    /// `U diag(s) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let us = Matrix::from_fn(self.u.rows(), self.u.cols(), |i, k| self.u[(i, k)] * self.s[k]);
        us.matmul(&self.v.transpose()).expect("svd factor shapes agree")
    }
}

/// One-sided Jacobi SVD. Inputs with more columns than rows are decomposed
/// through their transpose with `U` and `V` swapped afterwards.
pub fn jacobi_svd(a: &Matrix, cfg: &PinvConfig) -> Result<SvdResult> {
    cfg.validate()?;
    if !a.is_finite() {
        return Err(Error::Numeric {
            context: "jacobi_svd input".into(),
        });
    }
    if a.rows() < a.cols() {
        let t = jacobi_svd_tall(&a.transpose(), cfg);
        return Ok(SvdResult {
            u: t.v,
            s: t.s,
            v: t.u,
            sweeps_used: t.sweeps_used,
            converged: t.converged,
        });
    }
    Ok(jacobi_svd_tall(a, cfg))
}

fn jacobi_svd_tall(a: &Matrix, cfg: &PinvConfig) -> SvdResult {
    let (m, n) = a.shape();
    // Column-major working copies: column k lives at [k*m .. (k+1)*m].
    let mut work = a.transpose().into_vec();
    let mut vcols = Matrix::identity(n).into_vec();
    let mut norms: Vec<f64> = (0..n).map(|k| dot(&work[k * m..(k + 1) * m], &work[k * m..(k + 1) * m])).collect();

    let mut sweeps_used = 0;
    let mut converged = n < 2;
    while !converged && sweeps_used < cfg.max_sweeps {
        sweeps_used += 1;
        let mut rotated = false;
        for i in 0..n - 1 {
            // Pivot the largest remaining column into position i.
            let mut best = i;
            for k in i + 1..n {
                if norms[k] > norms[best] {
                    best = k;
                }
            }
            if best != i {
                swap_columns(&mut work, m, i, best);
                swap_columns(&mut vcols, n, i, best);
                norms.swap(i, best);
            }
            for j in (i + 1)..n {
                if rotate_pair(&mut work, m, i, j, cfg.off_diag_tol, &mut vcols, n, &mut norms) {
                    rotated = true;
                }
            }
        }
        converged = !rotated;
    }
    if n < 2 {
        sweeps_used = sweeps_used.max(1);
    }

    let mut sigma: Vec<f64> = (0..n)
        .map(|k| {
            let col = &work[k * m..(k + 1) * m];
            dot(col, col).sqrt()
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));

    let mut u = Matrix::zeros(m, n);
    let mut v = Matrix::zeros(n, n);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = sigma[src];
        if s > 0.0 {
            let col = &work[src * m..(src + 1) * m];
            for i in 0..m {
                u[(i, dst)] = col[i] / s;
            }
        } else {
            missing.push(dst);
        }
        let vcol = &vcols[src * n..(src + 1) * n];
        for i in 0..n {
            v[(i, dst)] = vcol[i];
        }
    }
    let sorted: Vec<f64> = order.iter().map(|&k| sigma[k]).collect();
    sigma = sorted;
    complete_orthonormal(&mut u, &missing);

    for k in 0..n {
        let mut best = 0;
        for i in 0..m {
            if u[(i, k)].abs() > u[(best, k)].abs() {
                best = i;
            }
        }
        if u[(best, k)] < 0.0 {
            for i in 0..m {
                u[(i, k)] = -u[(i, k)];
            }
            for i in 0..n {
                v[(i, k)] = -v[(i, k)];
            }
        }
    }

    SvdResult {
        u,
        s: sigma,
        v,
        sweeps_used,
        converged,
    }
}

/// Applies one Jacobi rotation to columns `i < j` if they are not yet
/// orthogonal. Returns whether a rotation was applied.
#[allow(clippy::too_many_arguments)]
fn rotate_pair(work: &mut [f64], m: usize, i: usize, j: usize, tol: f64, vcols: &mut [f64], n: usize, norms: &mut [f64]) -> bool {
    let (head, tail) = work.split_at_mut(j * m);
    let ci = &mut head[i * m..(i + 1) * m];
    let cj = &mut tail[..m];

    let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
    for (&x, &y) in ci.iter().zip(cj.iter()) {
        alpha += x * x;
        beta += y * y;
        gamma += x * y;
    }
    if gamma == 0.0 || gamma.abs() <= tol * (alpha.sqrt() * beta.sqrt()) {
        return false;
    }

    let zeta = (beta - alpha) / (2.0 * gamma);
    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = c * t;

    let (mut ni, mut nj) = (0.0, 0.0);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
        ni += *x * *x;
        nj += *y * *y;
    }
    norms[i] = ni;
    norms[j] = nj;

    let (vhead, vtail) = vcols.split_at_mut(j * n);
    let vi = &mut vhead[i * n..(i + 1) * n];
    let vj = &mut vtail[..n];
    for (x, y) in vi.iter_mut().zip(vj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
    true
}

fn swap_columns(cols: &mut [f64], len: usize, a: usize, b: usize) {
    let (lo, hi) = (a.min(b), a.max(b));
    let (head, tail) = cols.split_at_mut(hi * len);
    head[lo * len..(lo + 1) * len].swap_with_slice(&mut tail[..len]);
}

/// Fills the listed columns of `u` with unit vectors orthogonal to every
/// other column (Gram–Schmidt over the canonical basis, two passes).
fn complete_orthonormal(u: &mut Matrix, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let (m, n) = u.shape();
    let mut filled: Vec<bool> = vec![true; n];
    for &k in missing {
        filled[k] = false;
    }
    let mut candidate = 0;
    for &k in missing {
        loop {
            assert!(candidate < m, "cannot complete orthonormal basis");
            let mut w = vec![0.0; m];
            w[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for (c, &done) in filled.iter().enumerate() {
                    if !done {
                        continue;
                    }
                    let proj: f64 = (0..m).map(|i| u[(i, c)] * w[i]).sum();
                    for (i, wi) in w.iter_mut().enumerate() {
                        *wi -= proj * u[(i, c)];
                    }
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > 0.5 {
                for (i, wi) in w.iter().enumerate() {
                    u[(i, k)] = wi / norm;
                }
                filled[k] = true;
                break;
            }
        }
    }
}

/// Gap between `x` and the next larger representable magnitude.
pub fn ulp_spacing(x: f64) -> f64 {
    let x = x.abs();
    if !x.is_finite() {
        return f64::NAN;
    }
    x.next_up() - x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankStatus {
    /// Every singular value cleared the tolerance.
    Full,
    /// Some, but not all, singular values were dropped.
    Truncated,
    /// Nothing cleared the tolerance; the pseudo-inverse is zero.
    RankDeficient,
}

#[derive(Debug, Clone)]
pub struct Pinv {
    /// `cols × rows`.
    pub matrix: Matrix,
    pub rank: usize,
    pub tolerance: f64,
    pub status: RankStatus,
    pub sweeps_used: usize,
}

/// Moore–Penrose pseudo-inverse through [`jacobi_svd`].
///
/// Keeps the singular values with `σ > max(rows, cols) * ulp(σ_max)` and
/// returns `V diag(1/σ) Uᵀ` over them.
pub fn pinv(a: &Matrix, cfg: &PinvConfig) -> Result<Pinv> {
    let svd = jacobi_svd(a, cfg)?;
    Ok(pinv_from_svd(&svd, a.rows(), a.cols()))
}

pub fn pinv_from_svd(svd: &SvdResult, rows: usize, cols: usize) -> Pinv {
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let tolerance = rows.max(cols) as f64 * ulp_spacing(smax);
    let rank = svd.s.iter().take_while(|&&s| s > tolerance).count();

    let (m, r) = svd.u.shape();
    let n = svd.v.rows();
    // Rows of `scaled` are u_k / σ_k.
    let mut scaled = vec![0.0; rank * m];
    for k in 0..rank {
        let inv = 1.0 / svd.s[k];
        for i in 0..m {
            scaled[k * m + i] = svd.u[(i, k)] * inv;
        }
    }
    let mut x = Matrix::zeros(n, m);
    for i in 0..n {
        let out = x.row_mut(i);
        for k in 0..rank {
            let vik = svd.v[(i, k)];
            if vik == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(&scaled[k * m..(k + 1) * m]) {
                *o += vik * w;
            }
        }
    }

    let status = if rank == 0 && r > 0 {
        RankStatus::RankDeficient
    } else if rank < r {
        RankStatus::Truncated
    } else {
        RankStatus::Full
    };
    Pinv {
        matrix: x,
        rank,
        tolerance,
        status,
        sweeps_used: svd.sweeps_used,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::rel_frobenius;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = stream_rng(seed, 7);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn orthonormality_defect(q: &Matrix) -> f64 {
        let g = q.t_matmul(q).unwrap();
        g.sub(&Matrix::identity(q.cols())).unwrap().max_abs()
    }

    #[test]
    fn identity_decomposes_to_itself() {
        let svd = jacobi_svd(&Matrix::identity(3), &PinvConfig::default()).unwrap();
        assert_eq!(svd.s, vec![1.0, 1.0, 1.0]);
        assert_eq!(svd.u, Matrix::identity(3));
        assert_eq!(svd.v, Matrix::identity(3));
    }

    #[test]
    fn diagonal_values_come_back_sorted() {
        let svd = jacobi_svd(&Matrix::diag(&[1.0, 3.0, 2.0]), &PinvConfig::default()).unwrap();
        assert_eq!(svd.s, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn wide_input_goes_through_transpose() {
        let a = random(3, 7, 2);
        let svd = jacobi_svd(&a, &PinvConfig::default()).unwrap();
        assert_eq!(svd.u.shape(), (3, 3));
        assert_eq!(svd.v.shape(), (7, 3));
        assert!(rel_frobenius(&svd.reconstruct(), &a) < 1e-12);
        assert!(orthonormality_defect(&svd.u) < 1e-12);
        assert!(orthonormality_defect(&svd.v) < 1e-12);
    }

    #[test]
    fn zero_matrix_still_has_orthonormal_factors() {
        let svd = jacobi_svd(&Matrix::zeros(4, 3), &PinvConfig::default()).unwrap();
        assert_eq!(svd.s, vec![0.0; 3]);
        assert!(orthonormality_defect(&svd.u) < 1e-15);
    }

    #[test]
    fn rank_one_input_completes_u() {
        let a = Matrix::from_fn(5, 3, |i, j| (i + 1) as f64 * (j + 1) as f64);
        let svd = jacobi_svd(&a, &PinvConfig::default()).unwrap();
        assert!(orthonormality_defect(&svd.u) < 1e-9);
        assert!(rel_frobenius(&svd.reconstruct(), &a) < 1e-12);
    }

    #[test]
    fn sign_convention_makes_dominant_entry_positive() {
        let a = random(6, 4, 9).scale(-1.0);
        let svd = jacobi_svd(&a, &PinvConfig::default()).unwrap();
        for k in 0..4 {
            let col = svd.u.column(k);
            let dom = col.iter().copied().fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
            assert!(dom >= 0.0);
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut a = Matrix::identity(2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(jacobi_svd(&a, &PinvConfig::default()), Err(Error::Numeric { .. })));
        assert!(jacobi_svd(&Matrix::identity(2), &PinvConfig::with_max_sweeps(0)).is_err());
    }

    #[test]
    fn sweep_cap_is_respected() {
        let a = random(30, 30, 4);
        let svd = jacobi_svd(&a, &PinvConfig::with_max_sweeps(2)).unwrap();
        assert_eq!(svd.sweeps_used, 2);
        assert!(!svd.converged);
    }

    #[test]
    fn ulp_matches_binade_spacing() {
        assert_eq!(ulp_spacing(1.0), f64::EPSILON);
        assert_eq!(ulp_spacing(1.5), f64::EPSILON);
        assert_eq!(ulp_spacing(2.0), 2.0 * f64::EPSILON);
        assert_eq!(ulp_spacing(0.0), f64::from_bits(1));
    }

    #[test]
    fn pinv_of_identity_and_zero() {
        let p = pinv(&Matrix::identity(4), &PinvConfig::default()).unwrap();
        assert_eq!(p.matrix, Matrix::identity(4));
        assert_eq!(p.status, RankStatus::Full);

        let z = pinv(&Matrix::zeros(3, 2), &PinvConfig::default()).unwrap();
        assert_eq!(z.matrix, Matrix::zeros(2, 3));
        assert_eq!(z.rank, 0);
        assert_eq!(z.status, RankStatus::RankDeficient);
    }

    #[test]
    fn pinv_truncates_dependent_columns() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]).unwrap();
        // Third column is the sum of the first two.
        let p = pinv(&a, &PinvConfig::default()).unwrap();
        assert_eq!(p.rank, 2);
        assert_eq!(p.status, RankStatus::Truncated);
        let axa = a.matmul(&p.matrix).unwrap().matmul(&a).unwrap();
        assert!(rel_frobenius(&axa, &a) < 1e-12);
    }
}
