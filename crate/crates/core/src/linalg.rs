//! Dense helpers shared by the LTI, network and synthesis code: balanced
//! eigenvalues, orthonormal complements, 2x2 complex closed forms and the
//! structural deflation of singular pencils.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const SCHUR_MAX_ITER: usize = 100_000;

/// Relative rank tolerance used by the pencil deflation.
pub const RANK_RTOL: f64 = 1e-10;

/// Diagonal similarity scaling by powers of two (Parlett-Reinsch).
/// Returns the balanced matrix; eigenvalues are unchanged.
pub fn balance(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    if n < 2 {
        return m;
    }
    const RADIX: f64 = 2.0;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / RADIX {
                f *= RADIX;
                cc *= RADIX;
                rr /= RADIX;
            }
            while cc >= rr * RADIX {
                f /= RADIX;
                cc /= RADIX;
                rr *= RADIX;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
    m
}

/// Eigenvalues of a real square matrix (balanced, real Schur form).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("eigenvalue input"));
    }
    let b = balance(a);
    let schur = nalgebra::Schur::try_new(b, f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::EigenFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Sort eigenvalues by real part descending, then by imaginary part.
pub fn sort_by_real_desc(v: &mut [Complex64]) {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
}

/// Singular values (descending) of a real matrix of any shape.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Singular values (descending) of a complex matrix.
pub fn singular_values_c(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with tolerance `rtol * sigma_max` (and an absolute floor).
pub fn rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > rtol * smax && x > 1e-300).count()
}

/// Orthonormal basis of the complement of span(`q`) in R^n, where `q` has
/// orthonormal columns.
pub fn orthonormal_complement(q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = q.nrows();
    let k = q.ncols();
    if k == 0 {
        return DMatrix::identity(n, n);
    }
    if k >= n {
        return DMatrix::zeros(n, 0);
    }
    let proj = DMatrix::<f64>::identity(n, n) - q * q.transpose();
    let eig = SymmetricEigen::new(proj);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut out = DMatrix::zeros(n, n - k);
    for (col, &i) in idx.iter().take(n - k).enumerate() {
        out.set_column(col, &eig.eigenvectors.column(i));
    }
    out
}

/// Rank-revealing split of `m` (r x q): returns (U1, sigma1, V1, U2, V2) with
/// `m = U1 diag(sigma1) V1^T`, U2 spanning the left complement and V2 the null space.
pub struct RankSplit {
    pub u1: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v1: DMatrix<f64>,
    pub u2: DMatrix<f64>,
    pub v2: DMatrix<f64>,
}

pub fn rank_split(m: &DMatrix<f64>, rtol: f64) -> RankSplit {
    let (r, q) = m.shape();
    if r == 0 || q == 0 {
        return RankSplit {
            u1: DMatrix::zeros(r, 0),
            sigma: Vec::new(),
            v1: DMatrix::zeros(q, 0),
            u2: DMatrix::identity(r, r),
            v2: DMatrix::identity(q, q),
        };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > rtol * smax && s[i] > 1e-300).collect();
    let rho = keep.len();
    let mut u1 = DMatrix::zeros(r, rho);
    let mut v1 = DMatrix::zeros(q, rho);
    let mut sigma = Vec::with_capacity(rho);
    for (c, &i) in keep.iter().enumerate() {
        u1.set_column(c, &u.column(i));
        v1.set_column(c, &vt.row(i).transpose());
        sigma.push(s[i]);
    }
    let u2 = orthonormal_complement(&u1);
    let v2 = orthonormal_complement(&v1);
    RankSplit { u1, sigma, v1, u2, v2 }
}

/// Finite eigenvalues of the semi-explicit pencil
///
/// ```text
///   x' = a11 x + a12 v
///   0  = a21 x + a22 v
/// ```
///
/// by repeated elimination of the solvable part of the algebraic block and
/// restriction of the dynamics to the hidden constraint manifold. Each pass
/// removes at least one differential variable, so the loop terminates.
pub fn semi_explicit_finite_eigenvalues(
    a11: &DMatrix<f64>,
    a12: &DMatrix<f64>,
    a21: &DMatrix<f64>,
    a22: &DMatrix<f64>,
) -> Result<Vec<Complex64>> {
    let (mut a11, mut a12, mut a21, mut a22) = (a11.clone(), a12.clone(), a21.clone(), a22.clone());
    loop {
        let n = a11.nrows();
        let r = a21.nrows();
        let q = a12.ncols();
        if r == 0 && q == 0 {
            return eigenvalues(&a11);
        }
        let split = rank_split(&a22, RANK_RTOL);
        let rho = split.sigma.len();
        let mut hat = a11.clone();
        if rho > 0 {
            let sinv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                rho,
                split.sigma.iter().map(|s| 1.0 / s),
            ));
            hat -= &a12 * &split.v1 * sinv * split.u1.transpose() * &a21;
        }
        let b2 = &a12 * &split.v2;
        let k = split.u2.transpose() * &a21;
        let r2 = k.nrows();
        let q2 = b2.ncols();
        if r2 == 0 {
            if q2 == 0 {
                return eigenvalues(&hat);
            }
            return Err(Error::SingularPencil(format!(
                "{q2} algebraic variable(s) are not determined by any constraint"
            )));
        }
        if n == 0 {
            return Err(Error::SingularPencil("constraints without differential variables".into()));
        }
        let ks = rank_split(&k.transpose(), RANK_RTOL);
        if ks.sigma.len() < r2 {
            return Err(Error::SingularPencil(format!(
                "{} redundant algebraic constraint(s)",
                r2 - ks.sigma.len()
            )));
        }
        // Null space of K = complement of range(K^T).
        let null = ks.u2;
        let nt = null.transpose();
        a11 = &nt * &hat * &null;
        a12 = &nt * &b2;
        a21 = &k * &hat * &null;
        a22 = &k * &b2;
    }
}

/// Finite eigenvalues of the regular pencil `A - lambda E` for arbitrary
/// (possibly singular) E. E is first compressed to `diag(S, 0)` by an SVD.
pub fn finite_generalized_eigenvalues(e: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if e.shape() != (n, n) || a.ncols() != n {
        return Err(Error::DimensionMismatch("pencil matrices must be square and equal-sized".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let split = rank_split(e, RANK_RTOL);
    let r = split.sigma.len();
    // Left basis [U1 U2], right basis [V1 V2].
    let mut left = DMatrix::zeros(n, n);
    let mut right = DMatrix::zeros(n, n);
    left.columns_mut(0, r).copy_from(&split.u1);
    left.columns_mut(r, n - r).copy_from(&split.u2);
    right.columns_mut(0, r).copy_from(&split.v1);
    right.columns_mut(r, n - r).copy_from(&split.v2);
    let mut t = left.transpose() * a * right;
    for i in 0..r {
        let s = split.sigma[i];
        for j in 0..n {
            t[(i, j)] /= s;
        }
    }
    let a11 = t.view((0, 0), (r, r)).into_owned();
    let a12 = t.view((0, r), (r, n - r)).into_owned();
    let a21 = t.view((r, 0), (n - r, r)).into_owned();
    let a22 = t.view((r, r), (n - r, n - r)).into_owned();
    semi_explicit_finite_eigenvalues(&a11, &a12, &a21, &a22)
}

/// Minimum eigenvalue of the Hermitian part of a 2x2 complex matrix.
#[inline]
pub fn her_min_eig_2x2(m: &[[Complex64; 2]; 2]) -> f64 {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let b = (m[0][1] + m[1][0].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    mean - (half * half + b.norm_sqr()).sqrt()
}

/// Largest singular value of a 2x2 complex matrix together with the top
/// left/right singular vectors.
pub fn sigma_max_2x2(m: &[[Complex64; 2]; 2]) -> (f64, [Complex64; 2], [Complex64; 2]) {
    // M^H M
    let h00 = m[0][0].norm_sqr() + m[1][0].norm_sqr();
    let h11 = m[0][1].norm_sqr() + m[1][1].norm_sqr();
    let h01 = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
    let mean = 0.5 * (h00 + h11);
    let half = 0.5 * (h00 - h11);
    let rad = (half * half + h01.norm_sqr()).sqrt();
    let lmax = (mean + rad).max(0.0);
    let sigma = lmax.sqrt();
    // Eigenvector of [[h00, h01],[conj h01, h11]] for lmax.
    let v = if h01.norm() > 1e-300 {
        let x = [h01, Complex64::new(lmax - h00, 0.0)];
        let nrm = (x[0].norm_sqr() + x[1].norm_sqr()).sqrt();
        if nrm > 0.0 {
            [x[0] / nrm, x[1] / nrm]
        } else {
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        }
    } else if h00 >= h11 {
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
    } else {
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
    };
    let mv = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
    let u = if sigma > 1e-300 {
        [mv[0] / sigma, mv[1] / sigma]
    } else {
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
    };
    (sigma, u, v)
}

pub fn to_2x2(m: &CMatrix) -> [[Complex64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

#[inline]
pub fn mul_2x2(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

#[inline]
pub fn inv_2x2(a: &[[Complex64; 2]; 2]) -> Option<[[Complex64; 2]; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if det.norm() <= 1e-14 * scale * scale || det.norm() == 0.0 {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

#[inline]
pub fn det_2x2(a: &[[Complex64; 2]; 2]) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Complex LU with partial pivoting on a dense row-major buffer. Solves
/// `M X = B` in place (B is n x k, row-major). Returns the smallest pivot
/// magnitude relative to the largest, or `None` on an exactly zero pivot.
pub fn complex_lu_solve(m: &mut [Complex64], n: usize, b: &mut [Complex64], k: usize) -> Option<f64> {
    let mut max_piv: f64 = 0.0;
    let mut min_piv = f64::INFINITY;
    for col in 0..n {
        let mut p = col;
        let mut best = m[col * n + col].norm_sqr();
        for row in col + 1..n {
            let v = m[row * n + col].norm_sqr();
            if v > best {
                best = v;
                p = row;
            }
        }
        if best == 0.0 {
            return None;
        }
        if p != col {
            for j in 0..n {
                m.swap(col * n + j, p * n + j);
            }
            for j in 0..k {
                b.swap(col * k + j, p * k + j);
            }
        }
        let piv = m[col * n + col];
        let pn = piv.norm();
        max_piv = max_piv.max(pn);
        min_piv = min_piv.min(pn);
        let inv = piv.inv();
        for row in col + 1..n {
            let f = m[row * n + col] * inv;
            if f.norm_sqr() == 0.0 {
                continue;
            }
            m[row * n + col] = f;
            for j in col + 1..n {
                let t = m[col * n + j];
                m[row * n + j] -= f * t;
            }
            for j in 0..k {
                let t = b[col * k + j];
                b[row * k + j] -= f * t;
            }
        }
    }
    for col in (0..n).rev() {
        let inv = m[col * n + col].inv();
        for j in 0..k {
            let mut s = b[col * k + j];
            for c in col + 1..n {
                s -= m[col * n + c] * b[c * k + j];
            }
            b[col * k + j] = s * inv;
        }
    }
    Some(if max_piv > 0.0 { min_piv / max_piv } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn balancing_preserves_spectrum() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1e6, 0.0, 1e-6, 2.0, 1e4, 0.0, 1e-4, 3.0]);
        let mut e1 = eigenvalues(&a).unwrap();
        let mut e2: Vec<Complex64> = nalgebra::Schur::new(a.clone()).complex_eigenvalues().iter().copied().collect();
        sort_by_real_desc(&mut e1);
        sort_by_real_desc(&mut e2);
        for (x, y) in e1.iter().zip(&e2) {
            assert!((x - y).norm() < 1e-6 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn index_one_pencil_matches_schur_complement() {
        // x' = -x + v, 0 = x - 2 v  =>  v = x/2, x' = -x/2
        let ev = semi_explicit_finite_eigenvalues(
            &DMatrix::from_element(1, 1, -1.0),
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, -2.0),
        )
        .unwrap();
        assert_eq!(ev.len(), 1);
        assert!(close(ev[0].re, -0.5, 1e-12));
    }

    #[test]
    fn index_two_pencil_two_inductors_in_series() {
        // Two RL branches in series sharing a floating node v:
        // i1' = -i1 + (0 - v), i2' = -2 i2 + (v - 0); KCL i1 - i2 = 0.
        // Series combination: L=2, R=3 => single mode at -1.5.
        let a11 = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let a12 = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        let a21 = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let a22 = DMatrix::zeros(1, 1);
        let ev = semi_explicit_finite_eigenvalues(&a11, &a12, &a21, &a22).unwrap();
        assert_eq!(ev.len(), 1);
        assert!(close(ev[0].re, -1.5, 1e-12), "{ev:?}");
    }

    #[test]
    fn general_e_is_compressed() {
        // E = diag(2, 0), A = [[-4, 1], [1, -1]] => 2x' = -4x + v, v = x => x' = -1.5 x
        let e = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let a = DMatrix::from_row_slice(2, 2, &[-4.0, 1.0, 1.0, -1.0]);
        let ev = finite_generalized_eigenvalues(&e, &a).unwrap();
        assert_eq!(ev.len(), 1);
        assert!(close(ev[0].re, -1.5, 1e-12));
    }

    #[test]
    fn free_algebraic_variable_is_singular() {
        let a11 = DMatrix::from_element(1, 1, -1.0);
        let a12 = DMatrix::from_element(1, 1, 1.0);
        let a21 = DMatrix::zeros(0, 1);
        let a22 = DMatrix::zeros(0, 1);
        assert!(matches!(
            semi_explicit_finite_eigenvalues(&a11, &a12, &a21, &a22),
            Err(Error::SingularPencil(_))
        ));
    }

    #[test]
    fn two_by_two_closed_forms() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let m = [[c(1.0, 2.0), c(-0.5, 0.3)], [c(0.7, -1.0), c(2.0, 0.5)]];
        let dm = DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]);
        let her = (&dm + dm.adjoint()) * c(0.5, 0.0);
        let ev = her.symmetric_eigenvalues();
        let lmin = ev.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(close(her_min_eig_2x2(&m), lmin, 1e-12));
        let svals = dm.clone().svd(false, false).singular_values;
        let (s, u, v) = sigma_max_2x2(&m);
        assert!(close(s, svals.max(), 1e-12));
        let mv = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
        assert!((mv[0] - u[0] * s).norm() < 1e-12 && (mv[1] - u[1] * s).norm() < 1e-12);
    }

    #[test]
    fn lu_solves_complex_system() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let mut m = vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0), c(3.0, 0.5)];
        let mut b = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let orig = m.clone();
        complex_lu_solve(&mut m, 2, &mut b, 1).unwrap();
        let r0 = orig[0] * b[0] + orig[1] * b[1];
        let r1 = orig[2] * b[0] + orig[3] * b[1];
        assert!((r0 - c(1.0, 0.0)).norm() < 1e-14);
        assert!((r1 - c(0.0, 1.0)).norm() < 1e-14);
    }
}
