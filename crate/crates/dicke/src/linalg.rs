//! Thin wrappers over raw LAPACK calls.
//!
//! Each wrapper copies the input into a fresh column-major buffer, runs the
//! routine, and copies results back into row-major `ndarray` storage. The
//! matrices handled here top out at a few thousand rows, so the O(n^2)
//! copies are noise next to the O(n^3) factorizations. `zheevd` is used for
//! Hermitian problems (divide and conquer, much faster than the QR-based
//! `zheev` on large dense matrices), `zgeev` for general spectra and
//! `zgetrf`/`zgetri` for inverses.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::Error;
use crate::Result;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn to_col_major(a: &Array2<Complex64>) -> Vec<Complex64> {
    let n = a.nrows();
    let mut buf = vec![C_ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            buf[i + j * n] = a[(i, j)];
        }
    }
    buf
}

fn from_col_major(buf: &[Complex64], n: usize) -> Array2<Complex64> {
    Array2::from_shape_fn((n, n), |(i, j)| buf[i + j * n])
}

/// Conjugate transpose.
pub(crate) fn adjoint(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}

/// Largest absolute entry of `a`.
pub(crate) fn max_abs(a: &Array2<Complex64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn zheevd(a: &Array2<Complex64>, jobz: u8) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let ni = n as i32;
    let mut af = to_col_major(a);
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;

    // Workspace query, then the real call.
    let mut wq = [C_ZERO];
    let mut rq = [0.0f64];
    let mut iq = [0i32];
    unsafe {
        lapack::zheevd(
            jobz, b'L', ni, &mut af, ni, &mut w, &mut wq, -1, &mut rq, -1, &mut iq, -1, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    let lwork = wq[0].re as i32;
    let lrwork = rq[0] as i32;
    let liwork = iq[0];
    let mut work = vec![C_ZERO; lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack::zheevd(
            jobz, b'L', ni, &mut af, ni, &mut w, &mut work, lwork, &mut rwork, lrwork, &mut iwork,
            liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    Ok((w, af))
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues come back sorted
/// ascending, eigenvectors as the columns of the returned matrix.
pub(crate) fn eigh(a: &Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    let n = a.nrows();
    let (w, af) = zheevd(a, b'V')?;
    Ok((w, from_col_major(&af, n)))
}

/// Eigenvalues only, sorted ascending.
pub(crate) fn eigvalsh(a: &Array2<Complex64>) -> Result<Vec<f64>> {
    Ok(zheevd(a, b'N')?.0)
}

/// Eigendecomposition of a general complex matrix (right eigenvectors).
pub(crate) fn eig(a: &Array2<Complex64>) -> Result<(Vec<Complex64>, Array2<Complex64>)> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let ni = n as i32;
    let mut af = to_col_major(a);
    let mut vals = vec![C_ZERO; n];
    let mut vl = [C_ZERO];
    let mut vr = vec![C_ZERO; n * n];
    let mut rwork = vec![0.0f64; 2 * n];
    let mut info = 0i32;

    let mut wq = [C_ZERO];
    unsafe {
        lapack::zgeev(
            b'N', b'V', ni, &mut af, ni, &mut vals, &mut vl, 1, &mut vr, ni, &mut wq, -1,
            &mut rwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zgeev", info });
    }
    let lwork = wq[0].re as i32;
    let mut work = vec![C_ZERO; lwork.max(1) as usize];
    unsafe {
        lapack::zgeev(
            b'N', b'V', ni, &mut af, ni, &mut vals, &mut vl, 1, &mut vr, ni, &mut work, lwork,
            &mut rwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zgeev", info });
    }
    Ok((vals, from_col_major(&vr, n)))
}

/// Matrix inverse via LU factorization.
pub(crate) fn inv(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let ni = n as i32;
    let mut af = to_col_major(a);
    let mut ipiv = vec![0i32; n.max(1)];
    let mut info = 0i32;
    unsafe {
        lapack::zgetrf(ni, ni, &mut af, ni, &mut ipiv, &mut info);
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zgetrf", info });
    }
    let mut wq = [C_ZERO];
    unsafe {
        lapack::zgetri(ni, &mut af, ni, &ipiv, &mut wq, -1, &mut info);
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zgetri", info });
    }
    let lwork = wq[0].re as i32;
    let mut work = vec![C_ZERO; lwork.max(1) as usize];
    unsafe {
        lapack::zgetri(ni, &mut af, ni, &ipiv, &mut work, lwork, &mut info);
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zgetri", info });
    }
    Ok(from_col_major(&af, n))
}
