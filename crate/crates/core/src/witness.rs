//! Fidelity witness for the three-qubit GHZ state: the projector expanded
//! into locally measurable terms,
//!
//!   |GHZ₃⟩⟨GHZ₃| = ½(|HHH⟩⟨HHH| + |VVV⟩⟨VVV|)
//!                 + ⅛(XXX − XYY − YXY − YYX),
//!
//! so the fidelity needs only the two computational-basis populations and
//! four X/Y triple products.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::observable::DichotomicObservable;
use crate::pauli::{pauli_string_matrix, Pauli};
use crate::quantum::{expectation, QuantumState};

/// The six measured quantities entering the witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum WitnessTerm {
    /// Population of |HHH⟩ (= |000⟩).
    PopulationHhh,
    /// Population of |VVV⟩ (= |111⟩).
    PopulationVvv,
    Xxx,
    Xyy,
    Yxy,
    Yyx,
}

impl WitnessTerm {
    pub const ALL: [WitnessTerm; 6] = [
        WitnessTerm::PopulationHhh,
        WitnessTerm::PopulationVvv,
        WitnessTerm::Xxx,
        WitnessTerm::Xyy,
        WitnessTerm::Yxy,
        WitnessTerm::Yyx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WitnessTerm::PopulationHhh => "PHHH",
            WitnessTerm::PopulationVvv => "PVVV",
            WitnessTerm::Xxx => "XXX",
            WitnessTerm::Xyy => "XYY",
            WitnessTerm::Yxy => "YXY",
            WitnessTerm::Yyx => "YYX",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        WitnessTerm::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(text))
            .ok_or_else(|| Error::MissingTerm(format!("unknown witness term `{text}`")))
    }

    fn is_population(self) -> bool {
        matches!(self, WitnessTerm::PopulationHhh | WitnessTerm::PopulationVvv)
    }
}

/// The witness operator as an explicit 8×8 matrix, built from the
/// stabilizer-style decomposition (not from the projector).
pub fn ghz3_witness_operator() -> DMatrix<Complex64> {
    let dim = 8;
    let mut w = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    w[(0, 0)] = Complex64::new(0.5, 0.0);
    w[(7, 7)] = Complex64::new(0.5, 0.0);
    let eighth = Complex64::new(0.125, 0.0);
    w += pauli_string_matrix(&[Pauli::X, Pauli::X, Pauli::X]) * eighth;
    w -= pauli_string_matrix(&[Pauli::X, Pauli::Y, Pauli::Y]) * eighth;
    w -= pauli_string_matrix(&[Pauli::Y, Pauli::X, Pauli::Y]) * eighth;
    w -= pauli_string_matrix(&[Pauli::Y, Pauli::Y, Pauli::X]) * eighth;
    w
}

/// Fidelity ½(P_HHH + P_VVV) + ⅛(⟨XXX⟩ − ⟨XYY⟩ − ⟨YXY⟩ − ⟨YYX⟩) from
/// measured term values.
pub fn witness_fidelity(values: &BTreeMap<WitnessTerm, f64>) -> Result<f64> {
    for term in WitnessTerm::ALL {
        let v = *values
            .get(&term)
            .ok_or_else(|| Error::MissingTerm(term.name().into()))?;
        let lo = if term.is_population() { 0.0 } else { -1.0 };
        // Slack absorbs roundoff on simulated inputs at the boundary.
        if v < lo - 1e-9 || v > 1.0 + 1e-9 {
            return Err(Error::Domain(format!(
                "witness term {} = {v} outside [{lo}, 1]",
                term.name()
            )));
        }
    }
    let g = |t: WitnessTerm| values[&t];
    Ok(0.5 * (g(WitnessTerm::PopulationHhh) + g(WitnessTerm::PopulationVvv))
        + 0.125
            * (g(WitnessTerm::Xxx) - g(WitnessTerm::Xyy) - g(WitnessTerm::Yxy)
                - g(WitnessTerm::Yyx)))
}

/// Evaluates the six witness terms on a state; useful for simulating what
/// the witness measurement would record.
pub fn witness_terms_from_state(state: &QuantumState) -> Result<BTreeMap<WitnessTerm, f64>> {
    if state.n_parties() != 3 {
        return Err(Error::DimensionMismatch(
            "witness terms are defined for three parties".into(),
        ));
    }
    let x = DichotomicObservable::pauli_x;
    let y = DichotomicObservable::pauli_y;
    let mut map = BTreeMap::new();
    map.insert(WitnessTerm::PopulationHhh, state.population(0));
    map.insert(WitnessTerm::PopulationVvv, state.population(7));
    map.insert(WitnessTerm::Xxx, expectation(state, &[x(), x(), x()])?);
    map.insert(WitnessTerm::Xyy, expectation(state, &[x(), y(), y()])?);
    map.insert(WitnessTerm::Yxy, expectation(state, &[y(), x(), y()])?);
    map.insert(WitnessTerm::Yyx, expectation(state, &[y(), y(), x()])?);
    Ok(map)
}
