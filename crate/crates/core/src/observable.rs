//! Dichotomic (±1-valued) observables and per-party measurement layouts.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, ONE, ZERO};
use crate::tol;

/// A 2×2 Hermitian observable with eigenvalues exactly {+1, −1}.
///
/// The ±1 spectrum is validated at construction; degenerate or scaled
/// matrices are rejected rather than repaired.
#[derive(Debug, Clone)]
pub struct DichotomicObservable {
    matrix: Matrix2<Complex64>,
    label: String,
}

impl DichotomicObservable {
    pub fn new(matrix: Matrix2<Complex64>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let herm_dev = (matrix - matrix.adjoint()).norm();
        if herm_dev > tol::HERMITIAN {
            return Err(Error::NotDichotomic(format!(
                "{label}: not Hermitian (deviation {herm_dev:.2e})"
            )));
        }
        // Hermitian 2×2 eigenvalues: mean ± sqrt(((a−d)/2)² + |b|²).
        let a = matrix[(0, 0)].re;
        let d = matrix[(1, 1)].re;
        let b = matrix[(0, 1)];
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        let (hi, lo) = (mean + radius, mean - radius);
        if (hi - 1.0).abs() > tol::DICHOTOMIC || (lo + 1.0).abs() > tol::DICHOTOMIC {
            return Err(Error::NotDichotomic(format!(
                "{label}: eigenvalues ({hi:.12}, {lo:.12}) are not ±1"
            )));
        }
        Ok(Self { matrix, label })
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Projector onto the +1 eigenspace, (I + O)/2.
    pub fn projector_plus(&self) -> Matrix2<Complex64> {
        (Matrix2::identity() + self.matrix) * Complex64::new(0.5, 0.0)
    }

    /// Projector onto the −1 eigenspace, (I − O)/2.
    pub fn projector_minus(&self) -> Matrix2<Complex64> {
        (Matrix2::identity() - self.matrix) * Complex64::new(0.5, 0.0)
    }

    /// Unitary V with O = V Z V†; column 0 is the +1 eigenvector.
    pub fn eigenbasis(&self) -> Matrix2<Complex64> {
        let plus = self.projector_plus();
        // The projector is rank one; take its larger column and normalize.
        let c0 = plus.column(0);
        let c1 = plus.column(1);
        let v_plus = if c0.norm() >= c1.norm() {
            c0.normalize()
        } else {
            c1.normalize()
        };
        // Orthonormal partner spans the −1 eigenspace.
        let v_minus =
            nalgebra::Vector2::new(-v_plus[1].conj(), v_plus[0].conj());
        Matrix2::from_columns(&[v_plus, v_minus])
    }

    pub fn pauli_z() -> Self {
        Self::new(Pauli::Z.matrix(), "Z").expect("Z is dichotomic")
    }

    pub fn pauli_x() -> Self {
        Self::new(Pauli::X.matrix(), "X").expect("X is dichotomic")
    }

    pub fn pauli_y() -> Self {
        Self::new(Pauli::Y.matrix(), "Y").expect("Y is dichotomic")
    }

    /// (Z + X)/√2.
    pub fn zx_sum() -> Self {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let m = (Pauli::Z.matrix() + Pauli::X.matrix()) * s;
        Self::new(m, "(Z+X)/\u{221a}2").expect("(Z+X)/\u{221a}2 is dichotomic")
    }

    /// (Z − X)/√2.
    pub fn zx_diff() -> Self {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let m = (Pauli::Z.matrix() - Pauli::X.matrix()) * s;
        Self::new(m, "(Z-X)/\u{221a}2").expect("(Z-X)/\u{221a}2 is dichotomic")
    }

    /// For a Pauli measurement axis (X, Y or Z).
    pub fn for_axis(p: Pauli) -> Result<Self> {
        match p {
            Pauli::Identity => Err(Error::NotDichotomic(
                "identity has a degenerate +1 spectrum".into(),
            )),
            Pauli::X => Ok(Self::pauli_x()),
            Pauli::Y => Ok(Self::pauli_y()),
            Pauli::Z => Ok(Self::pauli_z()),
        }
    }
}

/// Per-party lists of dichotomic observables; the choice index into a
/// party's list is that party's input.
#[derive(Debug, Clone)]
pub struct MeasurementLayout {
    parties: Vec<Vec<DichotomicObservable>>,
}

impl MeasurementLayout {
    pub fn new(parties: Vec<Vec<DichotomicObservable>>) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::Domain("layout needs at least one party".into()));
        }
        if parties.iter().any(|p| p.is_empty()) {
            return Err(Error::Domain(
                "every party needs at least one observable".into(),
            ));
        }
        Ok(Self { parties })
    }

    /// The measurement layout of the N-party GHZ game: Alice {Z, X},
    /// Bob {(Z+X)/√2, (Z−X)/√2, Z}, every remaining party {Z, X}.
    pub fn ghz_game(n_parties: usize) -> Result<Self> {
        if n_parties < 3 {
            return Err(Error::PartyCountOutOfRange {
                n: n_parties,
                min: 3,
                max: usize::MAX,
            });
        }
        let alice = vec![
            DichotomicObservable::pauli_z(),
            DichotomicObservable::pauli_x(),
        ];
        let bob = vec![
            DichotomicObservable::zx_sum(),
            DichotomicObservable::zx_diff(),
            DichotomicObservable::pauli_z(),
        ];
        let mut parties = vec![alice, bob];
        for _ in 2..n_parties {
            parties.push(vec![
                DichotomicObservable::pauli_z(),
                DichotomicObservable::pauli_x(),
            ]);
        }
        Self::new(parties)
    }

    pub fn n_parties(&self) -> usize {
        self.parties.len()
    }

    /// Number of inputs for one party.
    pub fn n_settings(&self, party: usize) -> usize {
        self.parties[party].len()
    }

    pub fn observable(&self, party: usize, setting: usize) -> Result<&DichotomicObservable> {
        self.parties
            .get(party)
            .and_then(|p| p.get(setting))
            .ok_or_else(|| {
                Error::DimensionMismatch(format!(
                    "no observable for party {party}, setting {setting}"
                ))
            })
    }

    /// All input tuples in lexicographic order.
    pub fn all_settings(&self) -> Vec<Vec<u8>> {
        let mut out = vec![vec![]];
        for party in &self.parties {
            let mut next = Vec::with_capacity(out.len() * party.len());
            for prefix in &out {
                for s in 0..party.len() {
                    let mut t = prefix.clone();
                    t.push(s as u8);
                    next.push(t);
                }
            }
            out = next;
        }
        out
    }
}

/// Identity Jones/qubit matrix helper used by a few modules.
pub fn identity2() -> Matrix2<Complex64> {
    Matrix2::new(ONE, ZERO, ZERO, ONE)
}
