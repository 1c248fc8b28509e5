//! n-qubit density operators tagged with the basis they are written in.
//!
//! Index convention: qubit 0 is the most significant bit of a basis index.
//! In the Z basis bit value 1 is `|1⟩`; in the X basis bit value 0 is `|+⟩`
//! (spin eigenvalue +1) and bit value 1 is `|−⟩`.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinDensity {
    n: usize,
    basis: Basis,
    matrix: DMatrix<Complex64>,
}

impl SpinDensity {
    /// Wraps and validates a density matrix.
    pub fn new(n: usize, basis: Basis, matrix: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(n, basis, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix after checking only its shape.
    pub fn from_matrix_unchecked(
        n: usize,
        basis: Basis,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self> {
        let dim = 1usize << n;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { n, basis, matrix })
    }

    /// `|ψ⟩⟨ψ|` from amplitudes, which must be normalized.
    pub fn from_pure(n: usize, basis: Basis, amps: &[Complex64]) -> Result<Self> {
        let dim = 1usize << n;
        if amps.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: amps.len(),
            });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!(
                "state norm {norm} is not 1"
            )));
        }
        let matrix = DMatrix::from_fn(dim, dim, |r, c| amps[r] * amps[c].conj());
        Ok(Self { n, basis, matrix })
    }

    /// Computational basis state `|z⟩⟨z|` with `z` given as a basis index.
    pub fn basis_state(n: usize, basis: Basis, index: usize) -> Result<Self> {
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range")));
        }
        let mut matrix = DMatrix::zeros(dim, dim);
        matrix[(index, index)] = Complex64::new(1.0, 0.0);
        Ok(Self { n, basis, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Largest entry of `ρ − ρ†`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks unit trace, Hermiticity and positivity.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let lmin = self.min_eigenvalue();
        if lmin < -PSD_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {lmin:e}"
            )));
        }
        Ok(())
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_rc|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Same operator written in `basis`.
    pub fn to_basis(&self, basis: Basis) -> SpinDensity {
        if basis == self.basis {
            return self.clone();
        }
        let mut m = self.matrix.clone();
        hadamard_conjugate(&mut m, self.n);
        SpinDensity {
            n: self.n,
            basis,
            matrix: m,
        }
    }

    /// Z-basis measurement distribution, indexed by bitstring.
    pub fn probabilities(&self) -> Vec<f64> {
        let z = self.to_basis(Basis::Z);
        (0..z.dim()).map(|k| z.matrix[(k, k)].re).collect()
    }

    /// `½·Σ|λ(ρ − σ)|`, comparing in a common basis.
    pub fn trace_distance(&self, other: &SpinDensity) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: other.n,
            });
        }
        let other = other.to_basis(self.basis);
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>())
    }

    /// Applies the same one-qubit unitary `u` (written in this operator's
    /// basis) to every qubit.
    pub fn apply_global_unitary(&self, u: &Matrix2<Complex64>) -> SpinDensity {
        let mut m = self.matrix.clone();
        for q in 0..self.n {
            apply_qubit_unitary(&mut m, self.n, q, u);
        }
        SpinDensity {
            n: self.n,
            basis: self.basis,
            matrix: m,
        }
    }
}

/// Eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let herm = (m + m.adjoint()).scale(0.5);
    SymmetricEigen::new(herm).eigenvalues.iter().copied().collect()
}

/// In-place `ρ → H^{⊗n} ρ H^{⊗n}` via fast Walsh–Hadamard transforms of rows
/// and columns.
fn hadamard_conjugate(m: &mut DMatrix<Complex64>, n: usize) {
    let dim = 1usize << n;
    let scale = 1.0 / dim as f64;
    for c in 0..dim {
        let mut col = m.column_mut(c);
        walsh_hadamard(col.as_mut_slice());
    }
    let mut row = vec![Complex64::new(0.0, 0.0); dim];
    for r in 0..dim {
        for c in 0..dim {
            row[c] = m[(r, c)];
        }
        walsh_hadamard(&mut row);
        for c in 0..dim {
            m[(r, c)] = row[c] * scale;
        }
    }
}

/// Unnormalized in-place Walsh–Hadamard transform.
pub fn walsh_hadamard(v: &mut [Complex64]) {
    let mut h = 1;
    while h < v.len() {
        for block in (0..v.len()).step_by(2 * h) {
            for k in block..block + h {
                let a = v[k];
                let b = v[k + h];
                v[k] = a + b;
                v[k + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// `ρ → U_q ρ U_q†` for qubit `q` (0 = most significant).
fn apply_qubit_unitary(m: &mut DMatrix<Complex64>, n: usize, q: usize, u: &Matrix2<Complex64>) {
    let dim = 1usize << n;
    let bit = 1usize << (n - 1 - q);
    for c in 0..dim {
        for r in 0..dim {
            if r & bit == 0 {
                let a = m[(r, c)];
                let b = m[(r | bit, c)];
                m[(r, c)] = u[(0, 0)] * a + u[(0, 1)] * b;
                m[(r | bit, c)] = u[(1, 0)] * a + u[(1, 1)] * b;
            }
        }
    }
    let ud = u.adjoint();
    for r in 0..dim {
        for c in 0..dim {
            if c & bit == 0 {
                let a = m[(r, c)];
                let b = m[(r, c | bit)];
                m[(r, c)] = a * ud[(0, 0)] + b * ud[(1, 0)];
                m[(r, c | bit)] = a * ud[(0, 1)] + b * ud[(1, 1)];
            }
        }
    }
}

/// Applies one-qubit `u` to every qubit of a statevector.
pub fn apply_global_unitary_to_state(psi: &mut [Complex64], n: usize, u: &Matrix2<Complex64>) {
    for q in 0..n {
        let bit = 1usize << (n - 1 - q);
        for k in 0..psi.len() {
            if k & bit == 0 {
                let a = psi[k];
                let b = psi[k | bit];
                psi[k] = u[(0, 0)] * a + u[(0, 1)] * b;
                psi[k | bit] = u[(1, 0)] * a + u[(1, 1)] * b;
            }
        }
    }
}

/// `R_Y(θ) = exp(−iθY/2)` in the Z basis.
pub fn ry(theta: f64) -> Matrix2<Complex64> {
    let (s, c) = (theta / 2.0).sin_cos();
    Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    )
}

/// `R_X(θ) = exp(−iθX/2)` in the Z basis.
pub fn rx(theta: f64) -> Matrix2<Complex64> {
    let (s, c) = (theta / 2.0).sin_cos();
    Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(0.0, -s),
        Complex64::new(0.0, -s),
        Complex64::new(c, 0.0),
    )
}

/// Spin values `x_i ∈ {+1, −1}` of a basis index, qubit 0 first.
pub fn spins(index: usize, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |q| if (index >> (n - 1 - q)) & 1 == 0 { 1.0 } else { -1.0 })
}

/// Bitstring label of a basis index, qubit 0 first.
pub fn bitstring(index: usize, n: usize) -> String {
    (0..n)
        .map(|q| if (index >> (n - 1 - q)) & 1 == 0 { '0' } else { '1' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn plus_state_is_uniform_in_z() {
        let rho = SpinDensity::basis_state(3, Basis::X, 0).unwrap();
        for p in rho.probabilities() {
            assert!((p - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_state_probabilities() {
        let rho = SpinDensity::basis_state(2, Basis::Z, 0).unwrap();
        assert_eq!(rho.probabilities(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn basis_round_trip() {
        let s = 0.5f64.sqrt();
        let amps = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -s)];
        let rho = SpinDensity::from_pure(2, Basis::Z, &amps).unwrap();
        let back = rho.to_basis(Basis::X).to_basis(Basis::Z);
        assert!((back.matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-15));
        assert_eq!(rho.to_basis(Basis::X).basis(), Basis::X);
    }

    #[test]
    fn rejects_unnormalized() {
        let amps = [c(1.0, 0.0), c(1.0, 0.0)];
        assert!(SpinDensity::from_pure(1, Basis::Z, &amps).is_err());
        let bad = DMatrix::from_element(2, 2, c(0.5, 0.0)) * c(3.0, 0.0);
        assert!(SpinDensity::new(1, Basis::Z, bad).is_err());
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.9, 0.0), c(0.9, 0.0), c(0.5, 0.0)]);
        let err = SpinDensity::new(1, Basis::Z, m).unwrap_err();
        assert!(matches!(err, Error::InvalidDensity(_)));
    }

    #[test]
    fn ry_half_pi_maps_zero_to_plus() {
        let rho = SpinDensity::basis_state(1, Basis::Z, 0)
            .unwrap()
            .apply_global_unitary(&ry(std::f64::consts::FRAC_PI_2));
        let x = rho.to_basis(Basis::X);
        assert!((x.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_distance_orthogonal() {
        let a = SpinDensity::basis_state(2, Basis::Z, 0).unwrap();
        let b = SpinDensity::basis_state(2, Basis::Z, 3).unwrap();
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-12);
        assert!(a.trace_distance(&a).unwrap() < 1e-15);
    }

    #[test]
    fn purity_of_mixture() {
        let m = DMatrix::identity(4, 4) * c(0.25, 0.0);
        let rho = SpinDensity::new(2, Basis::Z, m).unwrap();
        assert!((rho.purity() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn labels() {
        assert_eq!(bitstring(5, 3), "101");
        assert_eq!(spins(1, 2).collect::<Vec<_>>(), vec![1.0, -1.0]);
    }
}
