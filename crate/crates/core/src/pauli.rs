//! Single-qubit Pauli operators and small tensor-product helpers.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// The four single-qubit Pauli operators (identity included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    Identity,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::Identity, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> Matrix2<Complex64> {
        match self {
            Pauli::Identity => Matrix2::new(ONE, ZERO, ZERO, ONE),
            Pauli::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
            Pauli::Y => Matrix2::new(ZERO, -I, I, ZERO),
            Pauli::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::Identity => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl std::fmt::Display for Pauli {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A string of Paulis, one per party; party 0 is leftmost.
pub type PauliString<const N: usize> = [Pauli; N];

/// Label such as "XYZ" for a Pauli string.
pub fn string_label<const N: usize>(s: &PauliString<N>) -> String {
    s.iter().map(|p| p.symbol()).collect()
}

/// Kronecker product of single-qubit operators, party 0 as the most
/// significant factor.
pub fn tensor_product(ops: &[Matrix2<Complex64>]) -> DMatrix<Complex64> {
    assert!(!ops.is_empty());
    let mut out = DMatrix::from_fn(2, 2, |r, c| ops[0][(r, c)]);
    for op in &ops[1..] {
        let rhs = DMatrix::from_fn(2, 2, |r, c| op[(r, c)]);
        out = out.kronecker(&rhs);
    }
    out
}

/// Tensor product of a Pauli string as a dense matrix.
pub fn pauli_string_matrix<const N: usize>(s: &PauliString<N>) -> DMatrix<Complex64> {
    let ops: Vec<Matrix2<Complex64>> = s.iter().map(|p| p.matrix()).collect();
    tensor_product(&ops)
}
