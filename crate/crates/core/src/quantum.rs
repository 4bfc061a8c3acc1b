//! Exact finite-dimensional quantum mechanics on up to 16 qubits: states,
//! Born-rule outcome distributions, white-noise mixing and fidelities.
//!
//! Party 0 owns the most significant bit of a basis-state index, so the
//! basis label reads left to right like the outcome strings used
//! elsewhere. State vectors are promoted to density matrices lazily, only
//! when noise is mixed in.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::observable::{DichotomicObservable, MeasurementLayout};
use crate::table::ProbabilityTable;
use crate::tol;

/// Largest party count for pure states (vector length 2^N).
pub const MAX_PARTIES: usize = 16;
/// Largest party count for density matrices (memory bound).
pub const MAX_DENSITY_PARTIES: usize = 10;

#[derive(Debug, Clone)]
enum Repr {
    Pure(DVector<Complex64>),
    Density(DMatrix<Complex64>),
}

/// A pure state vector or density matrix on N qubits.
#[derive(Debug, Clone)]
pub struct QuantumState {
    n_parties: usize,
    repr: Repr,
}

impl QuantumState {
    /// Builds a pure state, validating unit norm.
    pub fn from_amplitudes(amplitudes: DVector<Complex64>) -> Result<Self> {
        let n = parties_for_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > tol::STATE_NORM {
            return Err(Error::InvalidState(format!(
                "vector norm {norm} deviates from 1 beyond tolerance"
            )));
        }
        Ok(Self {
            n_parties: n,
            repr: Repr::Pure(amplitudes),
        })
    }

    /// Builds a density-matrix state, validating Hermiticity, unit trace
    /// and positive semidefiniteness.
    pub fn from_density(rho: DMatrix<Complex64>) -> Result<Self> {
        if rho.nrows() != rho.ncols() {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        let n = parties_for_dim(rho.nrows())?;
        if n > MAX_DENSITY_PARTIES {
            return Err(Error::PartyCountOutOfRange {
                n,
                min: 1,
                max: MAX_DENSITY_PARTIES,
            });
        }
        let herm_dev = (&rho - rho.adjoint()).norm();
        if herm_dev > tol::HERMITIAN * (rho.nrows() as f64).sqrt() {
            return Err(Error::InvalidState(format!(
                "density matrix not Hermitian (deviation {herm_dev:.2e})"
            )));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > tol::UNIT_TRACE || trace.im.abs() > tol::UNIT_TRACE {
            return Err(Error::InvalidState(format!(
                "density matrix trace {trace} deviates from 1"
            )));
        }
        let min_eig = min_eigenvalue(&rho);
        if min_eig < tol::PSD_FLOOR {
            return Err(Error::InvalidState(format!(
                "density matrix has eigenvalue {min_eig:.3e} below the PSD floor"
            )));
        }
        Ok(Self {
            n_parties: n,
            repr: Repr::Density(rho),
        })
    }

    /// Density-matrix constructor for matrices already known to be valid
    /// (outputs of operations that preserve validity by construction).
    fn from_density_unchecked(n_parties: usize, rho: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(rho.nrows(), 1 << n_parties);
        Self {
            n_parties,
            repr: Repr::Density(rho),
        }
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn dim(&self) -> usize {
        1 << self.n_parties
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&DVector<Complex64>> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Density(_) => None,
        }
    }

    /// The density matrix, computed from the outer product for pure states.
    pub fn density_matrix(&self) -> DMatrix<Complex64> {
        match &self.repr {
            Repr::Pure(v) => {
                let row = v.adjoint();
                v * row
            }
            Repr::Density(rho) => rho.clone(),
        }
    }

    /// Diagonal entry of the density matrix (population of basis state i).
    pub fn population(&self, i: usize) -> f64 {
        match &self.repr {
            Repr::Pure(v) => v[i].norm_sqr(),
            Repr::Density(rho) => rho[(i, i)].re,
        }
    }
}

fn parties_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!(
            "dimension {dim} is not a power of two ≥ 2"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_PARTIES {
        return Err(Error::PartyCountOutOfRange {
            n,
            min: 1,
            max: MAX_PARTIES,
        });
    }
    Ok(n)
}

fn min_eigenvalue(rho: &DMatrix<Complex64>) -> f64 {
    let eig = rho.clone().symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// The N-qubit GHZ state (|0…0⟩ + |1…1⟩)/√2.
pub fn ghz_state(n_parties: usize) -> Result<QuantumState> {
    if !(2..=MAX_PARTIES).contains(&n_parties) {
        return Err(Error::PartyCountOutOfRange {
            n: n_parties,
            min: 2,
            max: MAX_PARTIES,
        });
    }
    let dim = 1usize << n_parties;
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut v = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    v[0] = amp;
    v[dim - 1] = amp;
    QuantumState::from_amplitudes(v)
}

/// ρ = p·ρ_in + (1 − p)·I/2^N. Always returns a density-matrix state.
pub fn mix_white_noise(state: &QuantumState, p: f64) -> Result<QuantumState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "white-noise weight {p} outside [0, 1]"
        )));
    }
    if state.n_parties() > MAX_DENSITY_PARTIES {
        return Err(Error::PartyCountOutOfRange {
            n: state.n_parties(),
            min: 1,
            max: MAX_DENSITY_PARTIES,
        });
    }
    let dim = state.dim();
    let mut rho = state.density_matrix() * Complex64::new(p, 0.0);
    let iso = (1.0 - p) / dim as f64;
    for i in 0..dim {
        rho[(i, i)] += Complex64::new(iso, 0.0);
    }
    Ok(QuantumState::from_density_unchecked(state.n_parties(), rho))
}

/// ⟨target|ρ|target⟩ for a pure target (|⟨target|ψ⟩|² for pure inputs).
pub fn fidelity_with_pure(state: &QuantumState, target: &QuantumState) -> Result<f64> {
    if state.n_parties() != target.n_parties() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} parties, target has {}",
            state.n_parties(),
            target.n_parties()
        )));
    }
    let t = target.amplitudes().ok_or_else(|| {
        Error::Domain("fidelity target must be a pure state".into())
    })?;
    let f = match &state.repr {
        Repr::Pure(v) => t.dotc(v).norm_sqr(),
        Repr::Density(rho) => {
            // ⟨t|ρ|t⟩
            let rt = rho * t;
            t.dotc(&rt).re
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Tr[ρ (O₁ ⊗ … ⊗ O_N)] for one dichotomic observable per party.
pub fn expectation(
    state: &QuantumState,
    observables: &[DichotomicObservable],
) -> Result<f64> {
    if observables.len() != state.n_parties() {
        return Err(Error::DimensionMismatch(format!(
            "{} observables for a {}-party state",
            observables.len(),
            state.n_parties()
        )));
    }
    let n = state.n_parties();
    match &state.repr {
        Repr::Pure(v) => {
            let mut w = v.clone();
            for (party, obs) in observables.iter().enumerate() {
                apply_to_vector(obs.matrix(), party, n, &mut w);
            }
            Ok(v.dotc(&w).re)
        }
        Repr::Density(rho) => {
            let mut m = rho.clone();
            for (party, obs) in observables.iter().enumerate() {
                apply_left(obs.matrix(), party, n, &mut m);
            }
            Ok(m.trace().re)
        }
    }
}

/// Tr[ρ (σ₀ ⊗ … ⊗ σ_{N−1})] for a Pauli string; identity factors are
/// allowed, so marginals like Z⊗Z⊗I are expressible.
pub fn pauli_string_expectation(
    state: &QuantumState,
    string: &[crate::pauli::Pauli],
) -> Result<f64> {
    if string.len() != state.n_parties() {
        return Err(Error::DimensionMismatch(format!(
            "Pauli string of length {} for a {}-party state",
            string.len(),
            state.n_parties()
        )));
    }
    let n = state.n_parties();
    match &state.repr {
        Repr::Pure(v) => {
            let mut w = v.clone();
            for (party, p) in string.iter().enumerate() {
                if *p != crate::pauli::Pauli::Identity {
                    apply_to_vector(&p.matrix(), party, n, &mut w);
                }
            }
            Ok(v.dotc(&w).re)
        }
        Repr::Density(rho) => {
            let mut m = rho.clone();
            for (party, p) in string.iter().enumerate() {
                if *p != crate::pauli::Pauli::Identity {
                    apply_left(&p.matrix(), party, n, &mut m);
                }
            }
            Ok(m.trace().re)
        }
    }
}

/// Born-rule outcome distributions for every input tuple of the layout.
pub fn outcome_probabilities(
    state: &QuantumState,
    layout: &MeasurementLayout,
) -> Result<ProbabilityTable> {
    let settings = layout.all_settings();
    outcome_probabilities_for(state, layout, &settings)
}

/// Born-rule outcome distributions restricted to the given input tuples.
pub fn outcome_probabilities_for(
    state: &QuantumState,
    layout: &MeasurementLayout,
    settings: &[Vec<u8>],
) -> Result<ProbabilityTable> {
    if layout.n_parties() != state.n_parties() {
        return Err(Error::DimensionMismatch(format!(
            "layout has {} parties, state has {}",
            layout.n_parties(),
            state.n_parties()
        )));
    }
    let n = state.n_parties();
    let mut table = ProbabilityTable::new(n);
    for setting in settings {
        if setting.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "setting tuple length {} does not match party count {n}",
                setting.len()
            )));
        }
        let probs = setting_distribution(state, layout, setting)?;
        table.insert_row(setting.clone(), probs, 1.0)?;
    }
    Ok(table)
}

/// Outcome distribution for a single input tuple.
pub fn setting_distribution(
    state: &QuantumState,
    layout: &MeasurementLayout,
    setting: &[u8],
) -> Result<Vec<f64>> {
    let n = state.n_parties();
    // Rotate every party into the eigenbasis of its chosen observable;
    // outcome probabilities are then the computational-basis populations.
    let mut basis = Vec::with_capacity(n);
    for (party, &s) in setting.iter().enumerate() {
        basis.push(layout.observable(party, s as usize)?.eigenbasis());
    }
    let probs = match &state.repr {
        Repr::Pure(v) => {
            let mut w = v.clone();
            for (party, b) in basis.iter().enumerate() {
                let b_dag = b.adjoint();
                apply_to_vector(&b_dag, party, n, &mut w);
            }
            w.iter().map(|a| a.norm_sqr()).collect::<Vec<f64>>()
        }
        Repr::Density(rho) => {
            let mut m = rho.clone();
            for (party, b) in basis.iter().enumerate() {
                let b_dag = b.adjoint();
                apply_left(&b_dag, party, n, &mut m);
                apply_right_adjoint(&b_dag, party, n, &mut m);
            }
            (0..m.nrows()).map(|i| m[(i, i)].re.max(0.0)).collect()
        }
    };
    Ok(probs)
}

// --- single-qubit tensor kernels -------------------------------------------

fn bit_mask(party: usize, n: usize) -> usize {
    1usize << (n - 1 - party)
}

/// v ← (I ⊗ … ⊗ op ⊗ … ⊗ I) v with op acting on `party`.
pub(crate) fn apply_to_vector(
    op: &Matrix2<Complex64>,
    party: usize,
    n: usize,
    v: &mut DVector<Complex64>,
) {
    let mask = bit_mask(party, n);
    let dim = 1usize << n;
    let (a, b, c, d) = (op[(0, 0)], op[(0, 1)], op[(1, 0)], op[(1, 1)]);
    let mut i = 0usize;
    while i < dim {
        if i & mask == 0 {
            let j = i | mask;
            let (v0, v1) = (v[i], v[j]);
            v[i] = a * v0 + b * v1;
            v[j] = c * v0 + d * v1;
        }
        i += 1;
    }
}

/// m ← (op on party) · m.
pub(crate) fn apply_left(
    op: &Matrix2<Complex64>,
    party: usize,
    n: usize,
    m: &mut DMatrix<Complex64>,
) {
    let mask = bit_mask(party, n);
    let dim = 1usize << n;
    let (a, b, c, d) = (op[(0, 0)], op[(0, 1)], op[(1, 0)], op[(1, 1)]);
    for col in 0..dim {
        for i in 0..dim {
            if i & mask == 0 {
                let j = i | mask;
                let (v0, v1) = (m[(i, col)], m[(j, col)]);
                m[(i, col)] = a * v0 + b * v1;
                m[(j, col)] = c * v0 + d * v1;
            }
        }
    }
}

/// m ← m · (op on party)†.
pub(crate) fn apply_right_adjoint(
    op: &Matrix2<Complex64>,
    party: usize,
    n: usize,
    m: &mut DMatrix<Complex64>,
) {
    let mask = bit_mask(party, n);
    let dim = 1usize << n;
    let (a, b, c, d) = (
        op[(0, 0)].conj(),
        op[(0, 1)].conj(),
        op[(1, 0)].conj(),
        op[(1, 1)].conj(),
    );
    for row in 0..dim {
        for i in 0..dim {
            if i & mask == 0 {
                let j = i | mask;
                let (v0, v1) = (m[(row, i)], m[(row, j)]);
                m[(row, i)] = v0 * a + v1 * b;
                m[(row, j)] = v0 * c + v1 * d;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::outcome_sign;
    use approx::assert_abs_diff_eq;

    fn z() -> DichotomicObservable {
        DichotomicObservable::pauli_z()
    }
    fn x() -> DichotomicObservable {
        DichotomicObservable::pauli_x()
    }

    #[test]
    fn ghz_amplitudes() {
        let s = ghz_state(3).unwrap();
        let v = s.amplitudes().unwrap();
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(v[0].re, amp, epsilon = 1e-15);
        assert_abs_diff_eq!(v[7].re, amp, epsilon = 1e-15);
        for i in 1..7 {
            assert_eq!(v[i], Complex64::new(0.0, 0.0));
        }

        let bell = ghz_state(2).unwrap();
        let b = bell.amplitudes().unwrap();
        assert_abs_diff_eq!(b[0].re, amp, epsilon = 1e-15);
        assert_abs_diff_eq!(b[3].re, amp, epsilon = 1e-15);
        assert_eq!(b[1], Complex64::new(0.0, 0.0));

        for n in 2..=10 {
            assert_abs_diff_eq!(ghz_state(n).unwrap().amplitudes().unwrap().norm(), 1.0);
        }
        assert!(ghz_state(1).is_err());
        assert!(ghz_state(17).is_err());
    }

    #[test]
    fn white_noise_limits() {
        let ghz = ghz_state(3).unwrap();
        let pure = mix_white_noise(&ghz, 1.0).unwrap();
        assert_abs_diff_eq!(fidelity_with_pure(&pure, &ghz).unwrap(), 1.0, epsilon = 1e-12);

        let mixed = mix_white_noise(&ghz, 0.0).unwrap();
        let rho = mixed.density_matrix();
        for i in 0..8 {
            assert_abs_diff_eq!(rho[(i, i)].re, 0.125, epsilon = 1e-15);
        }
        assert!(mix_white_noise(&ghz, 1.1).is_err());
        assert!(mix_white_noise(&ghz, -0.1).is_err());
    }

    #[test]
    fn white_noise_fidelity_evaluated_directly() {
        // Independent route: expand <GHZ|rho|GHZ> from the four corner
        // entries of the density matrix.
        let ghz = ghz_state(3).unwrap();
        let noisy = mix_white_noise(&ghz, 0.9).unwrap();
        let rho = noisy.density_matrix();
        let direct = 0.5 * (rho[(0, 0)] + rho[(0, 7)] + rho[(7, 0)] + rho[(7, 7)]).re;
        assert_abs_diff_eq!(direct, 0.9125, epsilon = 1e-12);
        assert_abs_diff_eq!(
            fidelity_with_pure(&noisy, &ghz).unwrap(),
            direct,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fidelity_closed_form_grid() {
        for n in 2..=6 {
            let ghz = ghz_state(n).unwrap();
            for p in [0.0, 0.1, 0.37, 0.5, 0.83, 1.0] {
                let noisy = mix_white_noise(&ghz, p).unwrap();
                let expected = p + (1.0 - p) / (1 << n) as f64;
                assert_abs_diff_eq!(
                    fidelity_with_pure(&noisy, &ghz).unwrap(),
                    expected,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn fidelity_rejects_mixed_target() {
        let ghz = ghz_state(3).unwrap();
        let mixed = mix_white_noise(&ghz, 0.5).unwrap();
        assert!(fidelity_with_pure(&ghz, &mixed).is_err());
    }

    #[test]
    fn maximally_mixed_fidelity() {
        let ghz = ghz_state(3).unwrap();
        let mixed = mix_white_noise(&ghz, 0.0).unwrap();
        assert_abs_diff_eq!(
            fidelity_with_pure(&mixed, &ghz).unwrap(),
            0.125,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ghz_stabilizer_expectations() {
        let ghz = ghz_state(3).unwrap();
        assert_abs_diff_eq!(
            expectation(&ghz, &[x(), x(), x()]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            expectation(&ghz, &[z(), z(), z()]).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        use crate::pauli::Pauli::{Identity, Z};
        assert_abs_diff_eq!(
            pauli_string_expectation(&ghz, &[Z, Z, Identity]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        // Cross-check the marginal against the full density-matrix trace.
        let rho = ghz.density_matrix();
        let zz_i = crate::pauli::pauli_string_matrix(&[Z, Z, Identity]);
        assert_abs_diff_eq!((&rho * zz_i).trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn noisy_stabilizer_scales_linearly() {
        let ghz = ghz_state(3).unwrap();
        for p in [0.0, 0.3, 0.77, 1.0] {
            let noisy = mix_white_noise(&ghz, p).unwrap();
            assert_abs_diff_eq!(
                expectation(&noisy, &[x(), x(), x()]).unwrap(),
                p,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn computational_basis_correlations() {
        let ghz = ghz_state(3).unwrap();
        let layout = MeasurementLayout::new(vec![vec![z()], vec![z()], vec![z()]]).unwrap();
        let table = outcome_probabilities(&ghz, &layout).unwrap();
        let row = table.row(&[0, 0, 0]).unwrap();
        assert_abs_diff_eq!(row.probs[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(row.probs[7], 0.5, epsilon = 1e-12);
        for i in 1..7 {
            assert_abs_diff_eq!(row.probs[i], 0.0, epsilon = 1e-12);
        }

        // Same outcome through the game layout's (0, 2, 0) = Z, Z, Z input.
        let game = MeasurementLayout::ghz_game(3).unwrap();
        let table = outcome_probabilities(&ghz, &game).unwrap();
        let row = table.row(&[0, 2, 0]).unwrap();
        assert_abs_diff_eq!(row.probs[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(row.probs[7], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn tables_are_normalized_and_non_signaling() {
        let game = MeasurementLayout::ghz_game(3).unwrap();
        for p in [1.0, 0.9, 0.4] {
            let state = mix_white_noise(&ghz_state(3).unwrap(), p).unwrap();
            let table = outcome_probabilities(&state, &game).unwrap();
            assert_eq!(table.n_rows(), 12);
            for (_, row) in table.rows() {
                let sum: f64 = row.probs.iter().sum();
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
            }
            assert!(table.is_non_signaling(1e-9));
        }
    }

    #[test]
    fn expectation_consistent_with_outcome_probabilities() {
        // Two-path oracle: the expectation must equal the signed sum of the
        // Born-rule distribution.
        let game = MeasurementLayout::ghz_game(3).unwrap();
        let state = mix_white_noise(&ghz_state(3).unwrap(), 0.87).unwrap();
        let table = outcome_probabilities(&state, &game).unwrap();
        for (setting, row) in table.rows() {
            let obs: Vec<DichotomicObservable> = setting
                .iter()
                .enumerate()
                .map(|(party, &s)| game.observable(party, s as usize).unwrap().clone())
                .collect();
            let direct = expectation(&state, &obs).unwrap();
            let from_table: f64 = row
                .probs
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let sign: f64 = (0..3).map(|k| outcome_sign(i, k, 3)).product();
                    p * sign
                })
                .sum();
            assert_abs_diff_eq!(direct, from_table, epsilon = 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let ghz = ghz_state(3).unwrap();
        let layout = MeasurementLayout::new(vec![vec![z()], vec![z()]]).unwrap();
        assert!(outcome_probabilities(&ghz, &layout).is_err());
        assert!(expectation(&ghz, &[z(), x()]).is_err());
    }

    #[test]
    fn invalid_states_rejected() {
        let v = DVector::from_vec(vec![Complex64::new(0.9, 0.0), Complex64::new(0.0, 0.0)]);
        assert!(QuantumState::from_amplitudes(v).is_err());

        // Trace 1, Hermitian, but not PSD.
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.5, 0.0),
            Complex64::new(-0.5, 0.0),
        ]));
        assert!(QuantumState::from_density(m).is_err());
    }
}
