//! Three-qubit state tomography: Pauli expectations from 27 measurement
//! settings, linear inversion, projection to the nearest physical state
//! and Monte Carlo error bars on the extracted fidelity.

use std::collections::BTreeMap;
use std::io::BufRead;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::observable::{DichotomicObservable, MeasurementLayout};
use crate::pauli::{pauli_string_matrix, string_label, Pauli};
use crate::quantum::{fidelity_with_pure, setting_distribution, QuantumState};
use crate::stats;
use crate::table::outcome_sign;

/// Measurement axis of one party in one tomography setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }

    pub fn observable(self) -> DichotomicObservable {
        match self {
            Axis::X => DichotomicObservable::pauli_x(),
            Axis::Y => DichotomicObservable::pauli_y(),
            Axis::Z => DichotomicObservable::pauli_z(),
        }
    }

    fn from_char(c: char) -> Option<Axis> {
        match c.to_ascii_uppercase() {
            'X' => Some(Axis::X),
            'Y' => Some(Axis::Y),
            'Z' => Some(Axis::Z),
            _ => None,
        }
    }
}

pub type TomoSetting = [Axis; 3];

fn setting_name(s: &TomoSetting) -> String {
    s.iter()
        .map(|a| a.pauli().symbol())
        .collect()
}

/// All 27 axis combinations in lexicographic (X, Y, Z) order.
pub fn all_settings() -> Vec<TomoSetting> {
    let mut out = Vec::with_capacity(27);
    for a in Axis::ALL {
        for b in Axis::ALL {
            for c in Axis::ALL {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Outcome counts for each of the 27 settings. Counts are stored as reals
/// so exact outcome distributions can stand in for data; experimental
/// tables hold integers.
#[derive(Debug, Clone)]
pub struct TomographyDataset {
    rows: BTreeMap<TomoSetting, [f64; 8]>,
}

impl TomographyDataset {
    pub fn from_rows(rows: BTreeMap<TomoSetting, [f64; 8]>) -> Result<Self> {
        if rows.len() != 27 {
            return Err(Error::Domain(format!(
                "tomography needs exactly 27 settings, got {}",
                rows.len()
            )));
        }
        for (setting, counts) in &rows {
            if counts.iter().any(|&c| !c.is_finite() || c < 0.0) {
                return Err(Error::Domain(format!(
                    "setting {}: counts must be finite and nonnegative",
                    setting_name(setting)
                )));
            }
            if counts.iter().sum::<f64>() <= 0.0 {
                return Err(Error::Domain(format!(
                    "setting {}: zero total count",
                    setting_name(setting)
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn row(&self, setting: &TomoSetting) -> &[f64; 8] {
        &self.rows[setting]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&TomoSetting, &[f64; 8])> {
        self.rows.iter()
    }

    /// Parses the tomography CSV: same column layout as the counts CSV,
    /// with settings spelled as axis strings such as `XYZ`.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows = BTreeMap::new();
        let mut saw_header = false;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !saw_header {
                if trimmed != crate::counts::CSV_HEADER {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("expected header `{}`", crate::counts::CSV_HEADER),
                    });
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != 9 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 9 fields, got {}", fields.len()),
                });
            }
            let chars: Vec<char> = fields[0].chars().collect();
            if chars.len() != 3 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("setting `{}` is not three axis letters", fields[0]),
                });
            }
            let mut setting = [Axis::Z; 3];
            for (k, c) in chars.iter().enumerate() {
                setting[k] = Axis::from_char(*c).ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("unknown axis `{c}`"),
                })?;
            }
            let mut counts = [0.0f64; 8];
            for (k, field) in fields[1..].iter().enumerate() {
                counts[k] = field.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("count `{field}` is not a number"),
                })?;
            }
            if rows.insert(setting, counts).is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate setting {}", fields[0]),
                });
            }
        }
        Self::from_rows(rows)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(crate::counts::CSV_HEADER);
        out.push('\n');
        for (setting, counts) in &self.rows {
            out.push_str(&setting_name(setting));
            for c in counts {
                out.push(',');
                if c.fract() == 0.0 && c.abs() < 1e15 {
                    out.push_str(&format!("{}", *c as i64));
                } else {
                    out.push_str(&format!("{c}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// All 64 Pauli-string expectation values. Strings containing the
/// identity are marginals, averaged over every compatible setting;
/// ⟨III⟩ is exactly 1.
pub fn pauli_expectations(data: &TomographyDataset) -> BTreeMap<[Pauli; 3], f64> {
    let mut out = BTreeMap::new();
    for p0 in Pauli::ALL {
        for p1 in Pauli::ALL {
            for p2 in Pauli::ALL {
                let string = [p0, p1, p2];
                if string.iter().all(|p| *p == Pauli::Identity) {
                    out.insert(string, 1.0);
                    continue;
                }
                let mut acc = 0.0;
                let mut n_compatible = 0usize;
                for (setting, counts) in data.rows() {
                    let compatible = string.iter().zip(setting.iter()).all(|(p, a)| {
                        *p == Pauli::Identity || *p == a.pauli()
                    });
                    if !compatible {
                        continue;
                    }
                    let total: f64 = counts.iter().sum();
                    let signed: f64 = counts
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| {
                            let sign: f64 = (0..3)
                                .filter(|&k| string[k] != Pauli::Identity)
                                .map(|k| outcome_sign(i, k, 3))
                                .product();
                            c * sign
                        })
                        .sum();
                    acc += signed / total;
                    n_compatible += 1;
                }
                out.insert(string, acc / n_compatible as f64);
            }
        }
    }
    out
}

/// ρ_raw = ⅛ Σ ⟨σ₀σ₁σ₂⟩ σ₀⊗σ₁⊗σ₂. Hermitian with unit trace by
/// construction, but possibly not positive.
pub fn linear_inversion(expectations: &BTreeMap<[Pauli; 3], f64>) -> Result<DMatrix<Complex64>> {
    let mut rho = DMatrix::from_element(8, 8, Complex64::new(0.0, 0.0));
    for p0 in Pauli::ALL {
        for p1 in Pauli::ALL {
            for p2 in Pauli::ALL {
                let string = [p0, p1, p2];
                let value = expectations.get(&string).ok_or_else(|| {
                    Error::MissingTerm(format!("expectation {}", string_label(&string)))
                })?;
                rho += pauli_string_matrix(&string) * Complex64::new(value / 8.0, 0.0);
            }
        }
    }
    Ok(rho)
}

/// Nearest (Frobenius) positive semidefinite unit-trace matrix, by
/// eigenvalue truncation and redistribution: zero the negative
/// eigenvalues, subtract the resulting surplus equally from the remaining
/// positive ones, and repeat until the spectrum is clean.
pub fn project_to_physical(h: &DMatrix<Complex64>) -> Result<QuantumState> {
    if h.nrows() != h.ncols() {
        return Err(Error::Domain("projection input must be square".into()));
    }
    let herm_dev = (h - h.adjoint()).norm();
    if herm_dev > 1e-9 {
        return Err(Error::Domain(format!(
            "projection input not Hermitian (deviation {herm_dev:.2e})"
        )));
    }
    let trace = h.trace().re;
    if (trace - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "projection input has trace {trace}, expected 1"
        )));
    }
    let dim = h.nrows();
    let sym = h.clone().symmetric_eigen();
    let mut lambda: Vec<f64> = sym.eigenvalues.iter().cloned().collect();

    for _ in 0..=dim {
        let has_negative = lambda.iter().any(|&l| l < 0.0);
        for l in lambda.iter_mut() {
            if *l < 0.0 {
                *l = 0.0;
            }
        }
        let surplus: f64 = lambda.iter().sum::<f64>() - 1.0;
        if !has_negative && surplus.abs() < 1e-14 {
            break;
        }
        let positive = lambda.iter().filter(|&&l| l > 0.0).count();
        if positive == 0 {
            return Err(Error::Domain(
                "projection degenerated to the zero matrix".into(),
            ));
        }
        let shift = surplus / positive as f64;
        for l in lambda.iter_mut() {
            if *l > 0.0 {
                *l -= shift;
            }
        }
    }
    for l in lambda.iter_mut() {
        *l = l.max(0.0);
    }
    let total: f64 = lambda.iter().sum();
    for l in lambda.iter_mut() {
        *l /= total;
    }

    let v = &sym.eigenvectors;
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        lambda.iter().map(|&l| Complex64::new(l, 0.0)),
    ));
    let rho = v * diag * v.adjoint();
    // Scrub numerical dust before validation.
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    QuantumState::from_density(rho)
}

/// Point reconstruction: expectations → linear inversion → physical
/// projection. Returns the state and the raw pre-projection minimum
/// eigenvalue as a diagnostic.
pub fn reconstruct_state(data: &TomographyDataset) -> Result<(QuantumState, f64)> {
    let rho_raw = linear_inversion(&pauli_expectations(data))?;
    let min_eig = rho_raw
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let state = project_to_physical(&rho_raw)?;
    Ok((state, min_eig))
}

/// Reconstructed state together with the fidelity against a pure target
/// and its Monte Carlo standard deviation.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub rho: QuantumState,
    pub fidelity: f64,
    pub fidelity_sigma: f64,
    pub raw_min_eigenvalue: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

/// Full reconstruction with Monte Carlo error bars: the dataset is
/// resampled multinomially at the observed frequencies `mc_samples`
/// times; deterministic for a fixed seed.
pub fn reconstruct(
    data: &TomographyDataset,
    target: &QuantumState,
    mc_samples: usize,
    seed: u64,
) -> Result<ReconstructionResult> {
    if mc_samples < 50 {
        return Err(Error::Domain(format!(
            "need at least 50 Monte Carlo samples, got {mc_samples}"
        )));
    }
    let (state, raw_min) = reconstruct_state(data)?;
    let fidelity = fidelity_with_pure(&state, target)?;

    let rows: Vec<(TomoSetting, [f64; 8])> = data.rows().map(|(s, c)| (*s, *c)).collect();
    let fidelities: Vec<f64> = (0..mc_samples as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = stats::substream(seed, i);
            let mut resampled = BTreeMap::new();
            for (setting, counts) in &rows {
                let total: f64 = counts.iter().sum();
                let n = total.round().max(1.0) as u64;
                let draw = stats::multinomial(&mut rng, n, counts);
                let mut fixed = [0.0f64; 8];
                for (k, d) in draw.iter().enumerate() {
                    fixed[k] = *d as f64;
                }
                resampled.insert(*setting, fixed);
            }
            let dataset = TomographyDataset::from_rows(resampled)?;
            let (s, _) = reconstruct_state(&dataset)?;
            fidelity_with_pure(&s, target)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(ReconstructionResult {
        rho: state,
        fidelity,
        fidelity_sigma: stats::std_dev(&fidelities),
        raw_min_eigenvalue: raw_min,
        mc_samples,
        seed,
    })
}

fn single_setting_layout(setting: &TomoSetting) -> MeasurementLayout {
    MeasurementLayout::new(
        setting
            .iter()
            .map(|a| vec![a.observable()])
            .collect(),
    )
    .expect("non-empty layout")
}

/// Exact outcome distributions of a state as a dataset (unit "counts").
pub fn exact_dataset(state: &QuantumState) -> Result<TomographyDataset> {
    if state.n_parties() != 3 {
        return Err(Error::DimensionMismatch(
            "tomography datasets describe three parties".into(),
        ));
    }
    let mut rows = BTreeMap::new();
    for setting in all_settings() {
        let layout = single_setting_layout(&setting);
        let probs = setting_distribution(state, &layout, &[0, 0, 0])?;
        let mut fixed = [0.0f64; 8];
        fixed.copy_from_slice(&probs);
        rows.insert(setting, fixed);
    }
    TomographyDataset::from_rows(rows)
}

/// Multinomial sample of `shots` per setting from a state's exact
/// distributions.
pub fn sample_dataset(state: &QuantumState, shots: u64, seed: u64) -> Result<TomographyDataset> {
    let exact = exact_dataset(state)?;
    let mut rng = stats::substream(seed, 0);
    let mut rows = BTreeMap::new();
    for (setting, probs) in exact.rows() {
        let draw = stats::multinomial(&mut rng, shots, probs);
        let mut fixed = [0.0f64; 8];
        for (k, d) in draw.iter().enumerate() {
            fixed[k] = *d as f64;
        }
        rows.insert(*setting, fixed);
    }
    TomographyDataset::from_rows(rows)
}
