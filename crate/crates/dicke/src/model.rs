//! Hamiltonians of the anisotropic Dicke model and its square-wave drive.
//!
//! On the product basis the static Hamiltonian reads
//!
//! ```text
//! H = omega a^dag a + omega0 Jz
//!   + g1 / sqrt(N) (a^dag J- + a J+)
//!   + g2 / sqrt(N) (a^dag J+ + a J-)
//! ```
//!
//! with N the atom count (j = N / 2, so sqrt(N) = sqrt(2 j)). g1 weights the
//! co-rotating coupling, g2 the counter-rotating one; g1 = g2 recovers the
//! standard Dicke model. The square-wave drive toggles both couplings in
//! step, which amounts to adding or subtracting the drive operator
//! V = H(omega = 0, omega0 = 0, g1 = g2 = Omega) during alternate half
//! periods.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::Error;
use crate::hilbert::{
    accumulate_embedded, boson_operators, collective_spin_operators, OperatorMatrix, ProductBasis,
};
use crate::Result;

/// Static model parameters. Frequencies must be positive, couplings
/// non-negative; [`ModelParams::new`] enforces that.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub omega: f64,
    pub omega0: f64,
    pub g1: f64,
    pub g2: f64,
}

impl ModelParams {
    pub fn new(omega: f64, omega0: f64, g1: f64, g2: f64) -> Result<Self> {
        let p = ModelParams { omega, omega0, g1, g2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "omega must be positive and finite, got {}",
                self.omega
            )));
        }
        if !(self.omega0 > 0.0) || !self.omega0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "omega0 must be positive and finite, got {}",
                self.omega0
            )));
        }
        if self.g1 < 0.0 || !self.g1.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "g1 must be non-negative, got {}",
                self.g1
            )));
        }
        if self.g2 < 0.0 || !self.g2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "g2 must be non-negative, got {}",
                self.g2
            )));
        }
        Ok(())
    }
}

/// Square-wave drive: amplitude added to both couplings, full period of one
/// cycle. The angular drive frequency is derived, so
/// frequency() * period == 2 pi holds identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    pub amplitude: f64,
    pub period: f64,
}

impl DriveParams {
    pub fn new(amplitude: f64, period: f64) -> Result<Self> {
        if amplitude < 0.0 || !amplitude.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "drive amplitude must be non-negative, got {amplitude}"
            )));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "drive period must be positive, got {period}"
            )));
        }
        Ok(DriveParams { amplitude, period })
    }

    /// Drive with angular frequency `omega_d`, period 2 pi / omega_d.
    pub fn from_frequency(amplitude: f64, omega_d: f64) -> Result<Self> {
        if !(omega_d > 0.0) || !omega_d.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "drive frequency must be positive, got {omega_d}"
            )));
        }
        DriveParams::new(amplitude, 2.0 * std::f64::consts::PI / omega_d)
    }

    pub fn frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }
}

/// Dimensionless expansion parameter (T Omega)^2 of the second-order
/// effective Hamiltonian. Values of order one or larger mean the expansion
/// is outside its regime; callers emitting diagnostics should warn then.
pub fn magnus_parameter(drive: &DriveParams) -> f64 {
    (drive.period * drive.amplitude).powi(2)
}

fn build_hamiltonian(
    omega: f64,
    omega0: f64,
    g1: f64,
    g2: f64,
    basis: &ProductBasis,
) -> Array2<Complex64> {
    let (a, a_dag, number) = boson_operators(&basis.boson);
    let (jz, jp, jm, _, _) = collective_spin_operators(&basis.spin);
    let ib = Array2::eye(basis.boson.dim());
    let is = Array2::eye(basis.spin.dim());
    let root = (basis.spin.n_atoms as f64).sqrt();
    let re = |x: f64| Complex64::new(x, 0.0);

    let mut h = Array2::zeros((basis.dim(), basis.dim()));
    accumulate_embedded(&mut h, re(omega), &number, &is, basis);
    accumulate_embedded(&mut h, re(omega0), &ib, &jz, basis);
    accumulate_embedded(&mut h, re(g1 / root), &a_dag, &jm, basis);
    accumulate_embedded(&mut h, re(g1 / root), &a, &jp, basis);
    accumulate_embedded(&mut h, re(g2 / root), &a_dag, &jp, basis);
    accumulate_embedded(&mut h, re(g2 / root), &a, &jm, basis);
    h
}

/// Undriven Hamiltonian on the joint basis.
pub fn static_hamiltonian(params: &ModelParams, basis: &ProductBasis) -> OperatorMatrix {
    OperatorMatrix::hermitian(build_hamiltonian(
        params.omega,
        params.omega0,
        params.g1,
        params.g2,
        basis,
    ))
}

/// Drive operator: the coupling terms alone, both at strength `amplitude`.
pub fn drive_operator(amplitude: f64, basis: &ProductBasis) -> OperatorMatrix {
    OperatorMatrix::hermitian(build_hamiltonian(0.0, 0.0, amplitude, amplitude, basis))
}

/// The two half-period generators (H + V, H - V), in the order they act.
pub fn step_hamiltonians(
    params: &ModelParams,
    drive: &DriveParams,
    basis: &ProductBasis,
) -> (OperatorMatrix, OperatorMatrix) {
    let h = static_hamiltonian(params, basis);
    let v = drive_operator(drive.amplitude, basis);
    let plus = OperatorMatrix::hermitian(&h.data + &v.data);
    let minus = OperatorMatrix::hermitian(&h.data - &v.data);
    (plus, minus)
}

/// Second-order effective Hamiltonian assembled from explicit H and V
/// blocks. Exposed separately so sector-restricted blocks can reuse it.
///
/// With C = [H, V] the cycle average is
///
/// ```text
/// H_eff = H - T^2 / 24 * [C, V]
/// ```
///
/// computed directly from matrix products, which keeps the result Hermitian
/// to machine precision. The first-order term -i T / 4 [H, V] is a pure
/// gauge of the cycle origin (it changes quasimodes, not quasienergies at
/// this order) and is omitted.
pub fn effective_from_parts(
    h: &Array2<Complex64>,
    v: &Array2<Complex64>,
    period: f64,
) -> Array2<Complex64> {
    let c = h.dot(v) - v.dot(h);
    let bracket = c.dot(v) - v.dot(&c);
    let scale = Complex64::new(period * period / 24.0, 0.0);
    h - &bracket.mapv(|z| z * scale)
}

/// Second-order effective Hamiltonian for the square-wave cycle.
///
/// Callers should check [`magnus_parameter`] stays below one; the expansion
/// is uncontrolled otherwise.
pub fn effective_hamiltonian(
    params: &ModelParams,
    drive: &DriveParams,
    basis: &ProductBasis,
) -> OperatorMatrix {
    let h = static_hamiltonian(params, basis);
    let v = drive_operator(drive.amplitude, basis);
    OperatorMatrix::hermitian(effective_from_parts(&h.data, &v.data, drive.period))
}

/// Diagonal Hamiltonian with the couplings switched off:
/// E(n, m) = omega n + omega0 m. Its eigenstates are the product basis
/// states, which is what the initial-state picker works with.
pub fn decoupled_hamiltonian(params: &ModelParams, basis: &ProductBasis) -> OperatorMatrix {
    let dim = basis.dim();
    let mut h = Array2::zeros((dim, dim));
    for k in 0..dim {
        let (n, s) = basis.split(k);
        let e = params.omega * n as f64 + params.omega0 * basis.m_of(s);
        h[(k, k)] = Complex64::new(e, 0.0);
    }
    OperatorMatrix::hermitian(h)
}
