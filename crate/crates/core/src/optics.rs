//! Jones-calculus model of the polarization modulation chain.
//!
//! The modulator is two fixed quarter-wave plates sandwiching an
//! electro-optic phase stage; the phase (set per trial by the random
//! number generator) selects the measurement basis. Analysis happens in
//! the H/V basis after the chain, with H mapped to the +1 eigenstate of Z.
//!
//! Waveplate convention: fast axis at angle θ from horizontal, retardance
//! π/2, matrix R(−θ)·diag(1, i)·R(θ) with R a real rotation. The 2 ns
//! intra-loop timing offset of the phase stage is modeled only by its
//! effect, an independent phase on one polarization component.

use nalgebra::Matrix2;
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::observable::DichotomicObservable;
use crate::pauli::{Pauli, ONE, ZERO};
use crate::tol;

/// A unitary 2×2 Jones matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(Matrix2<Complex64>);

impl JonesMatrix {
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let dev = (m.adjoint() * m - Matrix2::identity()).norm();
        if dev > tol::UNITARY {
            return Err(Error::NotUnitary(format!(
                "deviation from unitarity {dev:.2e}"
            )));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    /// True when self = e^{iα}·other for some real α.
    pub fn equal_up_to_phase(&self, other: &JonesMatrix, tolerance: f64) -> bool {
        // Phase-align on the largest entry of `other`, then compare.
        let (mut best, mut idx) = (0.0_f64, (0, 0));
        for r in 0..2 {
            for c in 0..2 {
                let n = other.0[(r, c)].norm();
                if n > best {
                    best = n;
                    idx = (r, c);
                }
            }
        }
        if best < tolerance {
            return self.0.norm() < tolerance;
        }
        let phase = self.0[idx] / other.0[idx];
        if (phase.norm() - 1.0).abs() > tolerance {
            return false;
        }
        (self.0 - other.0 * phase).norm() <= tolerance
    }
}

impl std::ops::Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        JonesMatrix(self.0 * rhs.0)
    }
}

fn rotation(theta: f64) -> Matrix2<Complex64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(c, 0.0),
    )
}

/// Quarter-wave plate with its fast axis at `theta` radians.
pub fn qwp(theta: f64) -> JonesMatrix {
    let retarder = Matrix2::new(ONE, ZERO, ZERO, Complex64::new(0.0, 1.0));
    JonesMatrix(rotation(-theta) * retarder * rotation(theta))
}

/// Electro-optic phase stage, diag(1, e^{iφ}).
pub fn eopm(phi: f64) -> JonesMatrix {
    JonesMatrix(Matrix2::new(ONE, ZERO, ZERO, Complex64::from_polar(1.0, phi)))
}

/// Full modulator chain, i·e^{iφ/2}·[[cos φ/2, sin φ/2], [−sin φ/2, cos φ/2]].
pub fn sppm(phi: f64) -> JonesMatrix {
    let half = 0.5 * phi;
    let pref = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, half);
    let (s, c) = half.sin_cos();
    JonesMatrix(Matrix2::new(
        pref * c,
        pref * s,
        pref * -s,
        pref * c,
    ))
}

/// One modulator configuration: two waveplate angles and the phase chosen
/// per trial. The deployed chain fixes the waveplates at ∓45°.
#[derive(Debug, Clone, Copy)]
pub struct SppmSetting {
    pub qwp1_angle: f64,
    pub phase: f64,
    pub qwp2_angle: f64,
}

impl SppmSetting {
    /// Standard chain: first waveplate at −45°, second at +45°.
    pub fn standard(phase: f64) -> Self {
        Self {
            qwp1_angle: -FRAC_PI_4,
            phase,
            qwp2_angle: FRAC_PI_4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.qwp1_angle.is_finite() && self.phase.is_finite() && self.qwp2_angle.is_finite())
        {
            return Err(Error::Domain("modulator angles must be finite".into()));
        }
        Ok(())
    }

    /// Chain matrix with the first waveplate applied first.
    pub fn chain_matrix(&self) -> Result<JonesMatrix> {
        self.validate()?;
        Ok(qwp(self.qwp2_angle) * eopm(self.phase) * qwp(self.qwp1_angle))
    }
}

type ObservableCtor = fn() -> DichotomicObservable;

/// Known basis labels used to name effective observables.
const KNOWN_OBSERVABLES: [(&str, ObservableCtor); 5] = [
    ("Z", DichotomicObservable::pauli_z),
    ("X", DichotomicObservable::pauli_x),
    ("Y", DichotomicObservable::pauli_y),
    ("(Z+X)/\u{221a}2", DichotomicObservable::zx_sum),
    ("(Z-X)/\u{221a}2", DichotomicObservable::zx_diff),
];

/// The dichotomic observable measured when the chain output is analyzed in
/// the H/V basis: O = U† Z U.
pub fn effective_observable(setting: &SppmSetting) -> Result<DichotomicObservable> {
    effective_observable_from_unitary(&setting.chain_matrix()?)
}

/// O = U† Z U for an arbitrary unitary chain; global phases drop out.
pub fn effective_observable_from_unitary(chain: &JonesMatrix) -> Result<DichotomicObservable> {
    let u = chain.matrix();
    let o = u.adjoint() * Pauli::Z.matrix() * u;
    // Strip the numerically irrelevant anti-Hermitian dust so the ±1
    // spectrum check sees a clean matrix.
    let o = (o + o.adjoint()) * Complex64::new(0.5, 0.0);
    let label = KNOWN_OBSERVABLES
        .iter()
        .find(|(_, f)| (o - f().matrix()).norm() <= 1e-9)
        .map(|(name, _)| (*name).to_string())
        .unwrap_or_else(|| {
            let z = 0.5 * (o[(0, 0)] - o[(1, 1)]).re;
            let x = o[(0, 1)].re;
            let y = -o[(0, 1)].im;
            format!("({z:.6})Z+({x:.6})X+({y:.6})Y")
        });
    DichotomicObservable::new(o, label)
}

/// Fraction of photons recorded by the intended detector,
/// C_right / (C_right + C_wrong).
pub fn basis_choice_fidelity(c_right: u64, c_wrong: u64) -> Result<f64> {
    if c_right + c_wrong == 0 {
        return Err(Error::UndefinedRatio(
            "basis-choice fidelity needs at least one recorded photon".into(),
        ));
    }
    Ok(c_right as f64 / (c_right + c_wrong) as f64)
}
