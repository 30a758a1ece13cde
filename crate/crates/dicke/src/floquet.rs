//! One-cycle propagators and quasienergy spectra.
//!
//! The square-wave cycle holds H + V for the first half period and H - V
//! for the second, so the one-cycle operator is
//!
//! ```text
//! U(T) = exp(-i (H - V) T / 2) exp(-i (H + V) T / 2)
//! ```
//!
//! (the earlier factor stands to the right). Quasienergies are the phases
//! of the eigenvalues of U divided by T, folded into the first Floquet zone
//! [-omega_d / 2, omega_d / 2).

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::Error;
use crate::hilbert::OperatorMatrix;
use crate::linalg;
use crate::Result;

/// Hermiticity tolerance for propagator generators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Unitarity tolerance for spectra of one-cycle operators.
pub const UNITARY_TOL: f64 = 1e-10;

/// Cached eigendecomposition of a Hermitian generator. One factorization
/// serves any number of exponentials at different times.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Array2<Complex64>,
}

impl HermitianEigen {
    pub fn decompose(h: &OperatorMatrix) -> Result<Self> {
        h.require_hermitian(HERMITIAN_TOL)?;
        let (values, vectors) = linalg::eigh(&h.data)?;
        Ok(HermitianEigen { values, vectors })
    }

    /// exp(-i H tau) = W diag(exp(-i lambda tau)) W^dag from the cached
    /// factors.
    pub fn expm(&self, tau: f64) -> OperatorMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &w) in self.values.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -w * tau);
            scaled.column_mut(k).mapv_inplace(|z| z * phase);
        }
        let u = scaled.dot(&linalg::adjoint(&self.vectors));
        OperatorMatrix::unitary(u)
    }
}

/// Unitary exponential exp(-i H tau) of a Hermitian generator.
pub fn expm_hermitian(h: &OperatorMatrix, tau: f64) -> Result<OperatorMatrix> {
    Ok(HermitianEigen::decompose(h)?.expm(tau))
}

/// One-cycle operator of the square-wave drive. `h_a` generates the first
/// half period, `h_b` the second.
pub fn floquet_operator(
    h_a: &OperatorMatrix,
    h_b: &OperatorMatrix,
    period: f64,
) -> Result<OperatorMatrix> {
    if h_a.dim() != h_b.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_a.dim(),
            got: h_b.dim(),
        });
    }
    let ua = expm_hermitian(h_a, period / 2.0)?;
    let ub = expm_hermitian(h_b, period / 2.0)?;
    Ok(OperatorMatrix::unitary(ub.data.dot(&ua.data)))
}

/// Fold a frequency-like value into the first Floquet zone
/// [-omega_d / 2, omega_d / 2). Idempotent.
pub fn fold_quasienergy(x: f64, omega_d: f64) -> f64 {
    let mut y = x - omega_d * (x / omega_d).round();
    if y >= omega_d / 2.0 {
        y -= omega_d;
    }
    y
}

/// Eigensystem of a one-cycle operator.
///
/// `phases[k]` is the phase phi in U psi = exp(-i phi) psi, in (-pi, pi];
/// `quasienergies[k] = fold(phases[k] / period)` sorted ascending, and the
/// columns of `modes` follow that order.
#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    pub phases: Vec<f64>,
    pub quasienergies: Vec<f64>,
    pub modes: Array2<Complex64>,
    pub period: f64,
}

impl FloquetSpectrum {
    pub fn frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }
}

/// Diagonalize a one-cycle operator. Fails if `u` is not unitary to
/// [`UNITARY_TOL`] (that check costs one matrix product). Eigenvalue moduli
/// are normalized away before taking phases, so mild roundoff drift in `u`
/// does not leak into the quasienergies.
pub fn floquet_spectrum(u: &OperatorMatrix, period: f64) -> Result<FloquetSpectrum> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "period must be positive, got {period}"
        )));
    }
    u.require_unitary(UNITARY_TOL)?;
    let (vals, vecs) = linalg::eig(&u.data)?;
    let omega_d = 2.0 * std::f64::consts::PI / period;
    let n = vals.len();

    let mut phases: Vec<f64> = vals
        .iter()
        .map(|lam| {
            // U psi = lam psi with lam = exp(-i phi)
            let mut phi = -(lam / lam.norm()).arg();
            if phi <= -std::f64::consts::PI {
                phi += 2.0 * std::f64::consts::PI;
            }
            phi
        })
        .collect();
    let mut quasi: Vec<f64> = phases
        .iter()
        .map(|&phi| fold_quasienergy(phi / period, omega_d))
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| quasi[i].total_cmp(&quasi[j]));
    phases = order.iter().map(|&i| phases[i]).collect();
    quasi = order.iter().map(|&i| quasi[i]).collect();
    let mut modes = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        modes.column_mut(dst).assign(&vecs.column(src));
    }

    Ok(FloquetSpectrum {
        phases,
        quasienergies: quasi,
        modes,
        period,
    })
}

/// Project a near-unitary matrix back onto the unitary group by Newton
/// iteration towards the polar factor: X <- (X + X^{-dag}) / 2. Converges
/// quadratically from small defects; `max_iter` of 4 is plenty for the
/// drift this crate ever accumulates. Stops early once successive iterates
/// agree to `target`.
pub fn reunitarize_polar(
    u: &Array2<Complex64>,
    target: f64,
    max_iter: usize,
) -> Result<Array2<Complex64>> {
    let mut x = u.clone();
    for _ in 0..max_iter {
        let xi_dag = linalg::adjoint(&linalg::inv(&x)?);
        let next = (&x + &xi_dag).mapv(|z| z * 0.5);
        let step = linalg::max_abs(&(&next - &x));
        x = next;
        if step < target {
            break;
        }
    }
    Ok(x)
}
