//! Product Hilbert space of a truncated boson mode and a collective spin.
//!
//! The boson mode keeps Fock states |0> .. |n_max> (hard cutoff, so the
//! raising operator annihilates |n_max>). N two-level atoms form a single
//! collective spin j = N/2 with Jz eigenstates enumerated bottom up by
//! s = m + j in 0..=N. The joint basis is boson-major:
//!
//! ```text
//! k = n * (N + 1) + s
//! ```
//!
//! which makes `reshape(psi, (n_max + 1, N + 1))` a (boson, spin) matrix in
//! row-major order. Everything downstream (embedding, parity sectors,
//! entropy) relies on that layout.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::Error;
use crate::linalg;
use crate::Result;

/// Truncated boson mode with Fock states 0..=n_max.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BosonSpace {
    pub n_max: usize,
}

impl BosonSpace {
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

/// Collective spin of `n_atoms` two-level atoms, j = n_atoms / 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinSpace {
    pub n_atoms: usize,
}

impl SpinSpace {
    pub fn dim(&self) -> usize {
        self.n_atoms + 1
    }

    pub fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }
}

/// Joint basis with boson-major index layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductBasis {
    pub boson: BosonSpace,
    pub spin: SpinSpace,
}

impl ProductBasis {
    pub fn dim(&self) -> usize {
        self.boson.dim() * self.spin.dim()
    }

    /// Joint index of the state |n> x |s>.
    pub fn index(&self, n: usize, s: usize) -> usize {
        debug_assert!(n < self.boson.dim() && s < self.spin.dim());
        n * self.spin.dim() + s
    }

    /// Inverse of [`index`](Self::index): joint index to (Fock level, spin row).
    pub fn split(&self, k: usize) -> (usize, usize) {
        debug_assert!(k < self.dim());
        (k / self.spin.dim(), k % self.spin.dim())
    }

    /// Jz eigenvalue of spin row `s`, in -j..=j.
    pub fn m_of(&self, s: usize) -> f64 {
        s as f64 - self.spin.j()
    }
}

/// Build the joint basis. Both sizes must be at least 1.
pub fn build_basis(n_atoms: usize, n_max: usize) -> Result<ProductBasis> {
    if n_atoms < 1 {
        return Err(Error::InvalidArgument(format!(
            "n_atoms must be at least 1, got {n_atoms}"
        )));
    }
    if n_max < 1 {
        return Err(Error::InvalidArgument(format!(
            "n_max must be at least 1, got {n_max}"
        )));
    }
    Ok(ProductBasis {
        boson: BosonSpace { n_max },
        spin: SpinSpace { n_atoms },
    })
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Annihilation, creation and number operators on the truncated mode,
/// in that order. The truncation is a hard cutoff: a_dag |n_max> = 0.
pub fn boson_operators(space: &BosonSpace) -> (Array2<Complex64>, Array2<Complex64>, Array2<Complex64>) {
    let d = space.dim();
    let mut a = Array2::zeros((d, d));
    let mut number = Array2::zeros((d, d));
    for n in 0..d {
        number[(n, n)] = re(n as f64);
        if n > 0 {
            a[(n - 1, n)] = re((n as f64).sqrt());
        }
    }
    let a_dag = linalg::adjoint(&a);
    (a, a_dag, number)
}

/// Collective spin operators (Jz, J+, J-, Jx, Jy) on the spin space.
pub fn collective_spin_operators(
    space: &SpinSpace,
) -> (
    Array2<Complex64>,
    Array2<Complex64>,
    Array2<Complex64>,
    Array2<Complex64>,
    Array2<Complex64>,
) {
    let d = space.dim();
    let j = space.j();
    let mut jz = Array2::zeros((d, d));
    let mut jp = Array2::zeros((d, d));
    for s in 0..d {
        let m = s as f64 - j;
        jz[(s, s)] = re(m);
        if s + 1 < d {
            // <m+1| J+ |m> = sqrt(j(j+1) - m(m+1))
            jp[(s + 1, s)] = re((j * (j + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let jm = linalg::adjoint(&jp);
    let jx = (&jp + &jm).mapv(|z| z * 0.5);
    let jy = (&jp - &jm).mapv(|z| z * Complex64::new(0.0, -0.5));
    (jz, jp, jm, jx, jy)
}

/// Kronecker product consistent with the boson-major layout:
/// out[(n s), (n' s')] = b[n, n'] * s_op[s, s'].
pub fn embed(
    boson_op: &Array2<Complex64>,
    spin_op: &Array2<Complex64>,
    basis: &ProductBasis,
) -> Result<Array2<Complex64>> {
    check_embed_dims(boson_op, spin_op, basis)?;
    let mut out = Array2::zeros((basis.dim(), basis.dim()));
    accumulate_embedded(&mut out, Complex64::new(1.0, 0.0), boson_op, spin_op, basis);
    Ok(out)
}

fn check_embed_dims(
    boson_op: &Array2<Complex64>,
    spin_op: &Array2<Complex64>,
    basis: &ProductBasis,
) -> Result<()> {
    if boson_op.nrows() != basis.boson.dim() || boson_op.ncols() != basis.boson.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.boson.dim(),
            got: boson_op.nrows(),
        });
    }
    if spin_op.nrows() != basis.spin.dim() || spin_op.ncols() != basis.spin.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.spin.dim(),
            got: spin_op.nrows(),
        });
    }
    Ok(())
}

/// out += coeff * (boson_op kron spin_op). Lets Hamiltonian builders sum
/// several embedded terms without allocating one full matrix per term.
pub(crate) fn accumulate_embedded(
    out: &mut Array2<Complex64>,
    coeff: Complex64,
    boson_op: &Array2<Complex64>,
    spin_op: &Array2<Complex64>,
    basis: &ProductBasis,
) {
    let bd = basis.boson.dim();
    let sd = basis.spin.dim();
    for n in 0..bd {
        for np in 0..bd {
            let w = coeff * boson_op[(n, np)];
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            for s in 0..sd {
                for sp in 0..sd {
                    out[(n * sd + s, np * sd + sp)] += w * spin_op[(s, sp)];
                }
            }
        }
    }
}

/// Joint indices of the even and odd parity sectors, in that order.
///
/// Parity is (n + m + j) mod 2 = (n + s) mod 2; the drive and the static
/// Hamiltonian both preserve it, so dense work can be done per sector.
pub fn parity_partition(basis: &ProductBasis) -> (Vec<usize>, Vec<usize>) {
    let mut even = Vec::new();
    let mut odd = Vec::new();
    for k in 0..basis.dim() {
        let (n, s) = basis.split(k);
        if (n + s) % 2 == 0 {
            even.push(k);
        } else {
            odd.push(k);
        }
    }
    (even, odd)
}

/// Restriction of `op` to the rows and columns listed in `idx`.
pub fn extract_block(op: &Array2<Complex64>, idx: &[usize]) -> Array2<Complex64> {
    let d = idx.len();
    Array2::from_shape_fn((d, d), |(i, j)| op[(idx[i], idx[j])])
}

/// Scatter a sector-local vector back into the full space.
pub fn scatter_state(block: &Array1<Complex64>, idx: &[usize], dim: usize) -> Array1<Complex64> {
    debug_assert_eq!(block.len(), idx.len());
    let mut full = Array1::zeros(dim);
    for (i, &k) in idx.iter().enumerate() {
        full[k] = block[i];
    }
    full
}

/// Gather the components of a full-space vector listed in `idx`.
pub fn gather_state(full: &Array1<Complex64>, idx: &[usize]) -> Array1<Complex64> {
    Array1::from_iter(idx.iter().map(|&k| full[k]))
}

/// Dense complex operator tagged with what it claims to be.
///
/// The flags are declarations made by whoever built the matrix; the
/// `*_defect` methods measure the actual deviation. Hermiticity is checked
/// eagerly in debug builds (it is O(n^2)), unitarity only on demand since
/// that costs a matrix product.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub data: Array2<Complex64>,
    pub hermitian: bool,
    pub unitary: bool,
}

impl OperatorMatrix {
    pub fn hermitian(data: Array2<Complex64>) -> Self {
        let op = OperatorMatrix {
            data,
            hermitian: true,
            unitary: false,
        };
        debug_assert!(
            op.hermiticity_defect() < 1e-12,
            "matrix declared Hermitian has defect {:.3e}",
            op.hermiticity_defect()
        );
        op
    }

    pub fn unitary(data: Array2<Complex64>) -> Self {
        OperatorMatrix {
            data,
            hermitian: false,
            unitary: true,
        }
    }

    pub fn general(data: Array2<Complex64>) -> Self {
        OperatorMatrix {
            data,
            hermitian: false,
            unitary: false,
        }
    }

    pub fn identity(dim: usize) -> Self {
        OperatorMatrix {
            data: Array2::eye(dim),
            hermitian: true,
            unitary: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn adjoint(&self) -> Array2<Complex64> {
        linalg::adjoint(&self.data)
    }

    /// max |A - A^dag|, entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        let a = &self.data;
        let n = a.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// max |U^dag U - 1|, entrywise. Costs one matrix product.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.adjoint().dot(&self.data);
        let n = prod.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst = worst.max((prod[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn require_hermitian(&self, tol: f64) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect < tol {
            Ok(())
        } else {
            Err(Error::NotHermitian { defect })
        }
    }

    pub fn require_unitary(&self, tol: f64) -> Result<()> {
        let defect = self.unitarity_defect();
        if defect < tol {
            Ok(())
        } else {
            Err(Error::NotUnitary { defect })
        }
    }
}
