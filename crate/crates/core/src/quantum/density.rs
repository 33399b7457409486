use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{QuantumError, Result, STATE_TOL};

/// Density operator on `m` qubits, stored as a dense `2^m x 2^m` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (within 1e-9).
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        let d = m.nrows();
        if d != m.ncols() || !d.is_power_of_two() {
            return Err(QuantumError::DimensionMismatch(m.nrows(), m.ncols()));
        }
        let herm_err = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > STATE_TOL {
            return Err(QuantumError::InvalidDensity(format!(
                "not Hermitian (max deviation {herm_err:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(QuantumError::InvalidDensity(format!("trace {tr}")));
        }
        let min_eig = hermitian_eigenvalues(&m)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -STATE_TOL {
            return Err(QuantumError::InvalidDensity(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(DensityMatrix { m })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Self {
        DensityMatrix { m }
    }

    /// `|i><i|` on `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let d = 1 << num_qubits;
        let mut m = DMatrix::zeros(d, d);
        m[(index, index)] = Complex64::new(1.0, 0.0);
        DensityMatrix { m }
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let d = 1 << num_qubits;
        DensityMatrix {
            m: DMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    /// Convex combination `sum_i w_i rho_i`; weights must sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let d = parts
            .first()
            .map(|(_, r)| r.dim())
            .ok_or_else(|| QuantumError::InvalidDensity("empty mixture".into()))?;
        let mut m = DMatrix::zeros(d, d);
        for (w, r) in parts {
            if r.dim() != d {
                return Err(QuantumError::DimensionMismatch(d, r.dim()));
            }
            m += &r.m * Complex64::new(*w, 0.0);
        }
        Ok(DensityMatrix { m })
    }

    /// Block-diagonal classical-quantum state `sum_y |y><y| ⊗ blocks[y]`, where
    /// each block is an unnormalized (sub-)density matrix on the quantum part.
    /// The classical label occupies the low-order bits of the index.
    pub fn classical_quantum(blocks: &[DMatrix<Complex64>]) -> Result<Self> {
        let ny = blocks.len();
        let dq = blocks.first().map(|b| b.nrows()).unwrap_or(1);
        let d = ny * dq;
        let mut m = DMatrix::zeros(d, d);
        for (y, b) in blocks.iter().enumerate() {
            if b.nrows() != dq {
                return Err(QuantumError::DimensionMismatch(dq, b.nrows()));
            }
            for r in 0..dq {
                for c in 0..dq {
                    m[(r * ny + y, c * ny + y)] = b[(r, c)];
                }
            }
        }
        Ok(DensityMatrix { m })
    }
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    // symmetrize away rounding noise before the Hermitian solver
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().collect()
}

/// `½‖a − b‖₁`, from the eigenvalues of the Hermitian difference.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(QuantumError::DimensionMismatch(a.dim(), b.dim()));
    }
    let diff = &a.m - &b.m;
    let sum: f64 = hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum();
    Ok((0.5 * sum).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{GateOp, Statevector};
    use crate::rng::Seed;
    use rand::Rng;

    fn plus() -> DensityMatrix {
        let mut s = Statevector::new(1).unwrap();
        s.apply(&GateOp::H(0)).unwrap();
        s.density()
    }

    #[test]
    fn trace_distance_examples() {
        let zero = DensityMatrix::basis(1, 0);
        let one = DensityMatrix::basis(1, 1);
        assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-12);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        // Oracle: |0><0| - |+><+| = [[1/2, -1/2], [-1/2, -1/2]] has eigenvalues
        // ±1/√2, so the trace norm is √2 and the distance 1/√2.
        let d = trace_distance(&zero, &plus()).unwrap();
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(
            trace_distance(&zero, &DensityMatrix::basis(2, 0)),
            Err(QuantumError::DimensionMismatch(2, 4))
        );
    }

    #[test]
    fn trace_distance_is_symmetric() {
        let a = plus();
        let b = DensityMatrix::maximally_mixed(1);
        let ab = trace_distance(&a, &b).unwrap();
        let ba = trace_distance(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!((ab - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_reduced_states_are_valid_densities() {
        let mut rng = Seed::from_u64(11).rng();
        for _ in 0..20 {
            let amps: Vec<Complex64> = (0..16)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let mut s =
                Statevector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap();
            s.name_register("A", 0, 2).unwrap();
            let rho = s.density_of("A").unwrap();
            // direct computation oracle for the trace: sum of |amp|^2
            assert!((rho.trace().re - 1.0).abs() < 1e-9);
            assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn invalid_density_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(matches!(
            DensityMatrix::new(m),
            Err(QuantumError::InvalidDensity(_))
        ));
    }
}
